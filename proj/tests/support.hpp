#pragma once

#include "fista/problems.hpp"
#include "fista/rng.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace testing {

using fista::Index;
using fista::Matrix;
using fista::Vector;

/// Small seeded generator for property tests.
struct Gen {
    fista::CounterRng rng;

    explicit Gen(std::uint64_t seed) : rng(seed, 0xC0FFEE) {}

    double uniform(double lo, double hi) { return rng.uniform(lo, hi); }
    double normal() { return rng.normal(); }
    long integer(long lo, long hi) { return lo + long(rng.below(std::uint64_t(hi - lo + 1))); }

    /// Log-uniform magnitude, so thresholds cover several decades.
    double positive(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    Vector vec(Index n, double scale = 1.0) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v(i) = scale * normal();
        return v;
    }

    Matrix mat(Index r, Index c, double scale = 1.0) {
        Matrix m(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) m(i, j) = scale * normal();
        return m;
    }

    /// Vector with repeated and zero entries mixed in, to hit ties and kinks.
    Vector awkward_vec(Index n, double scale = 1.0) {
        Vector v = vec(n, scale);
        for (Index i = 0; i < n; ++i) {
            const long mode = integer(0, 5);
            if (mode == 0) v(i) = 0;
            else if (mode == 1 && i > 0) v(i) = v(i - 1);
            else if (mode == 2 && i > 0) v(i) = -v(i - 1);
        }
        return v;
    }
};

/// Minimises a convex function on a small box: dense grid, then compass
/// search over all {-1,0,1}^n directions plus random ones with shrinking steps.
inline Vector brute_force_min(const std::function<double(const Vector&)>& f, Index n, double bound,
                              std::uint64_t seed = 1) {
    const int per_dim = n == 1 ? 2001 : n == 2 ? 201 : 41;
    Vector best(n);
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    Vector probe(n);
    const double h = 2 * bound / (per_dim - 1);
    for (;;) {
        for (Index i = 0; i < n; ++i) probe(i) = -bound + h * idx[std::size_t(i)];
        const double v = f(probe);
        if (v < best_val) {
            best_val = v;
            best = probe;
        }
        Index d = 0;
        while (d < n && ++idx[std::size_t(d)] == per_dim) idx[std::size_t(d++)] = 0;
        if (d == n) break;
    }

    std::vector<Vector> dirs;
    std::vector<int> digits(static_cast<std::size_t>(n), -1);
    for (;;) {
        Vector dir(n);
        for (Index i = 0; i < n; ++i) dir(i) = digits[std::size_t(i)];
        if (dir.squaredNorm() > 0) dirs.push_back(dir.normalized());
        Index d = 0;
        while (d < n && ++digits[std::size_t(d)] == 2) digits[std::size_t(d++)] = -1;
        if (d == n) break;
    }
    const std::size_t fixed = dirs.size();
    Gen gen(seed);

    for (double step = h; step > 1e-12; step /= 2) {
        // fresh random directions at every scale escape kinks whose descent cone misses the fixed set
        dirs.resize(fixed);
        for (int i = 0; i < 32 * int(n); ++i) dirs.push_back(gen.vec(n).normalized());
        bool moved = true;
        while (moved) {
            moved = false;
            for (const auto& dir : dirs) {
                const Vector cand = best + step * dir;
                const double v = f(cand);
                if (v < best_val) {
                    best_val = v;
                    best = cand;
                    moved = true;
                }
            }
        }
    }
    return best;
}

/// 1-D total-variation prox by accelerated projected gradient on the dual
///   min_{|u|_inf <= lam} 1/2 ||z - D^T u||^2,  x = z - D^T u.
inline Vector tv_dual_oracle(const Vector& z, double lam, long iters = 200000) {
    const Index n = z.size();
    if (n < 2) return z;
    auto dt = [&](const Vector& u) {
        Vector out = Vector::Zero(n);
        for (Index i = 0; i + 1 < n; ++i) {
            out(i) -= u(i);
            out(i + 1) += u(i);
        }
        return out;
    };
    auto dx = [&](const Vector& x) {
        Vector out(n - 1);
        for (Index i = 0; i + 1 < n; ++i) out(i) = x(i + 1) - x(i);
        return out;
    };
    Vector u = Vector::Zero(n - 1);
    Vector u_prev = u;
    double t = 1;
    for (long k = 0; k < iters; ++k) {
        const double t_next = (1 + std::sqrt(1 + 4 * t * t)) / 2;
        const Vector w = u + ((t - 1) / t_next) * (u - u_prev);
        const Vector grad = -dx(z - dt(w));
        u_prev = u;
        u = (w - 0.25 * grad).cwiseMax(-lam).cwiseMin(lam);
        t = t_next;
    }
    return z - dt(u);
}

/// Convex quadratic F = 1/2 x^T Q x - b^T x with R = 0 built directly from Q.
inline fista::Problem<double> dense_quadratic(const Matrix& Q, const Vector& b) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    fista::Problem<double> p;
    p.gradient = [Q, b](const Vector& x) { return Vector(Q * x - b); };
    p.prox = [](const Vector& z, double) { return z; };
    p.smooth_value = [Q, b](const Vector& x) { return 0.5 * x.dot(Q * x) - b.dot(x); };
    p.nonsmooth_value = [](const Vector&) { return 0.0; };
    p.lipschitz = es.eigenvalues().maxCoeff();
    p.strong_convexity = std::max(0.0, es.eigenvalues().minCoeff());
    p.dimension = Q.rows();
    return p;
}

}  // namespace testing

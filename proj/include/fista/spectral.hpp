#pragma once

#include "fista/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fista {

/// Spectrum of the Hessian A^T A of a quadratic F = 1/2 ||Ax||^2 and the
/// quantities derived from its extreme eigenvalues.
template <typename Scalar = double>
struct SpectralModel {
    std::vector<Scalar> hessian_eigs;
    Scalar lipschitz = 0;
    Scalar alpha = 0;
    Scalar eta = 0;
    Scalar a_star = 0;
    Scalar rho_star = 0;
    Scalar condition = 0;

    static SpectralModel from_eigenvalues(std::vector<Scalar> eigs) {
        if (eigs.empty()) throw std::invalid_argument("spectral model: no eigenvalues");
        std::sort(eigs.begin(), eigs.end());
        if (!(eigs.front() > 0)) throw std::invalid_argument("spectral model: eigenvalues must be positive");
        SpectralModel m;
        m.hessian_eigs = std::move(eigs);
        m.lipschitz = m.hessian_eigs.back();
        m.alpha = m.hessian_eigs.front();
        const Scalar ratio = m.alpha / m.lipschitz;
        const Scalar s = std::sqrt(ratio);
        m.eta = 1 - ratio;
        m.a_star = (1 - s) / (1 + s);
        m.rho_star = 1 - s;
        m.condition = m.lipschitz / m.alpha;
        return m;
    }
};

/// Model of the n x n tridiagonal (-1, 2, -1) least-squares problem. The
/// eigenvalues of A are 2 - 2 cos(j pi / (n+1)); those of A^T A are their squares.
template <typename Scalar = double>
SpectralModel<Scalar> tridiag_spectrum(long n) {
    if (n < 1) throw std::invalid_argument("tridiag_spectrum: n must be >= 1");
    std::vector<Scalar> eigs(static_cast<std::size_t>(n));
    const Scalar pi = std::numbers::pi_v<Scalar>;
    for (long j = 1; j <= n; ++j) {
        // 2 - 2cos(x) = 4 sin^2(x/2) keeps the small eigenvalues accurate
        const Scalar half = std::sin(Scalar(j) * pi / Scalar(2 * (n + 1)));
        const Scalar lam = 4 * half * half;
        eigs[static_cast<std::size_t>(j - 1)] = lam * lam;
    }
    return SpectralModel<Scalar>::from_eigenvalues(std::move(eigs));
}

/// Magnitude of the leading eigenvalue of the 2x2 block
/// [[(1+a) eta, -a eta], [1, 0]].
template <typename Scalar>
Scalar rho_magnitude(Scalar eta, Scalar a, Scalar a_star) {
    if (!(eta >= 0 && eta < 1)) throw std::invalid_argument("rho_magnitude: eta must lie in [0,1[");
    if (!(a >= 0 && a <= 1)) throw std::invalid_argument("rho_magnitude: a must lie in [0,1]");
    if (a <= a_star) {
        const Scalar b = (1 + a) * eta;
        // zero at a*; evaluating it there only amplifies rounding to sqrt(eps)
        const Scalar disc = a == a_star ? Scalar(0) : std::max(Scalar(0), b * b - 4 * a * eta);
        return (b + std::sqrt(disc)) / 2;
    }
    return std::sqrt(a * eta);
}

template <typename Scalar>
Scalar cd_momentum(Scalar d, long i) {
    return Scalar(i - 1) / (Scalar(i) + d);
}

namespace detail {

/// Neumaier compensated accumulator.
template <typename Scalar>
struct CompensatedSum {
    Scalar sum = 0;
    Scalar carry = 0;

    void add(Scalar v) {
        const Scalar t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    Scalar value() const { return sum + carry; }
};

inline void check_d(double d) {
    if (!(d >= 2) || !std::isfinite(d)) throw std::invalid_argument("envelope: d must be >= 2");
}

}  // namespace detail

/// log E_{d,k} = sum_{i=1}^{k-1} log |rho(eta, a_i)| with a_i = (i-1)/(i+d)
/// and the envelope constant T = 1.
template <typename Scalar>
Scalar log_envelope(Scalar d, long k, const SpectralModel<Scalar>& model) {
    detail::check_d(static_cast<double>(d));
    if (k < 1) throw std::invalid_argument("envelope: k must be >= 1");
    detail::CompensatedSum<Scalar> acc;
    for (long i = 1; i < k; ++i)
        acc.add(std::log(rho_magnitude(model.eta, cd_momentum(d, i), model.a_star)));
    return acc.value();
}

template <typename Scalar>
Scalar envelope(Scalar d, long k, const SpectralModel<Scalar>& model) {
    return std::exp(log_envelope(d, k, model));
}

/// log E_{d,k} at every k in `ks` (ascending) in one pass.
template <typename Scalar>
std::vector<Scalar> log_envelope_path(Scalar d, const std::vector<long>& ks,
                                      const SpectralModel<Scalar>& model) {
    detail::check_d(static_cast<double>(d));
    std::vector<Scalar> out;
    out.reserve(ks.size());
    detail::CompensatedSum<Scalar> acc;
    long i = 1;
    for (long k : ks) {
        if (k < 1 || k < i) throw std::invalid_argument("log_envelope_path: ks must be ascending and >= 1");
        for (; i < k; ++i) acc.add(std::log(rho_magnitude(model.eta, cd_momentum(d, i), model.a_star)));
        out.push_back(acc.value());
    }
    return out;
}

/// First k with (k-1)/(k+d) >= a_star, floor((1 + d a*)/(1 - a*)) + 1.
template <typename Scalar>
long k_eq(Scalar d, Scalar a_star) {
    if (!(a_star >= 0 && a_star < 1)) throw std::invalid_argument("k_eq: a_star must lie in [0,1[");
    return static_cast<long>(std::floor((1 + d * a_star) / (1 - a_star))) + 1;
}

template <typename Scalar>
Scalar a_star_from_condition(Scalar condition) {
    if (!(condition >= 1)) throw std::invalid_argument("condition number must be >= 1");
    const Scalar s = std::sqrt(condition);
    return (s - 1) / (s + 1);
}

template <typename Scalar = double>
struct RatioEstimate {
    Scalar value;
    /// False when k < K_eq + 36, outside the range where the closed form applies.
    bool valid;
};

/// Closed-form R_k ~ ((k+d) 2 / ((d+1)(sqrt(C)+1)))^((d-2)/2) comparing
/// d_fast = 2 against d_slow = d; for d = 20 this is (2/(sqrt(C)+1))^9 ((k+20)/21)^9.
template <typename Scalar>
RatioEstimate<Scalar> ratio_approx(Scalar condition, long k, Scalar d_slow = 20) {
    detail::check_d(static_cast<double>(d_slow));
    const Scalar a = a_star_from_condition(condition);
    const long keq = k_eq(d_slow, a);
    const Scalar base = (Scalar(k) + d_slow) * 2 / ((d_slow + 1) * (std::sqrt(condition) + 1));
    return {std::pow(base, (d_slow - 2) / 2), k >= keq + 36};
}

/// prod_{i=K_eq}^{k} sqrt((i + d_slow)/(i + d_fast)), with K_eq taken for d_slow.
template <typename Scalar>
Scalar ratio_exact(Scalar condition, long k, Scalar d_slow = 20, Scalar d_fast = 2) {
    const Scalar a = a_star_from_condition(condition);
    const long keq = k_eq(d_slow, a);
    detail::CompensatedSum<Scalar> acc;
    for (long i = keq; i <= k; ++i)
        acc.add(std::log((Scalar(i) + d_slow) / (Scalar(i) + d_fast)) / 2);
    return std::exp(acc.value());
}

/// Fitted optimal d for a target envelope level 10^tol, with optional shift s.
template <typename Scalar>
Scalar optimal_d_fit(Scalar tol, Scalar shift = 0) {
    if (!(tol <= -2)) throw std::invalid_argument("optimal_d_fit: tol must be <= -2");
    if (!(shift >= 0)) throw std::invalid_argument("optimal_d_fit: shift must be >= 0");
    return Scalar(10.75) + Scalar(4.6) * (-tol - 2 - shift);
}

template <typename Scalar = double>
struct Damping {
    Scalar omega;
    Scalar d;
};

/// omega = -2 sqrt(lambda_1) log(eps) and the matching d = omega - 1.
template <typename Scalar>
Damping<Scalar> optimal_damping(Scalar lambda1, Scalar eps) {
    if (!(lambda1 > 0)) throw std::invalid_argument("optimal_damping: lambda1 must be positive");
    if (!(eps > 0 && eps < 1)) throw std::invalid_argument("optimal_damping: eps must lie in ]0,1[");
    const Scalar omega = -2 * std::sqrt(lambda1) * std::log(eps);
    return {omega, omega - 1};
}

/// Per-iteration geometric mean factor between two samples of a decaying
/// sequence observed at iterations k0 < k1.
template <typename Scalar>
Scalar geometric_factor(Scalar v0, long k0, Scalar v1, long k1) {
    if (!(k1 > k0)) throw std::invalid_argument("geometric_factor: iterations must increase");
    if (!(v0 > 0) || !(v1 >= 0)) throw std::invalid_argument("geometric_factor: values must be positive");
    if (v1 == 0) return 0;
    return std::exp((std::log(v1) - std::log(v0)) / Scalar(k1 - k0));
}

/// Observed contraction of ||x_k - x*|| over the last `window` recorded rows
/// that carry a distance to the reference.
template <typename Scalar>
Scalar empirical_contraction(const RunTrace<Scalar>& trace, long window) {
    if (window < 1) throw std::invalid_argument("empirical_contraction: window must be >= 1");
    std::vector<const TraceRow<Scalar>*> rows;
    for (const auto& row : trace.rows)
        if (row.dist_to_ref) rows.push_back(&row);
    if (static_cast<long>(rows.size()) < window + 1)
        throw std::invalid_argument("empirical_contraction: not enough rows with reference distances");
    const auto* last = rows.back();
    const auto* first = rows[rows.size() - 1 - static_cast<std::size_t>(window)];
    return geometric_factor(*first->dist_to_ref, first->k, *last->dist_to_ref, last->k);
}

}  // namespace fista

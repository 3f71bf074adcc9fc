#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fista {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Raised when an iterate or a parameter recursion leaves the finite range.
class NumericalFault : public std::runtime_error {
public:
    NumericalFault(const std::string& what, long iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

/// Composite problem  min_x F(x) + R(x)  described through oracles.
///
/// F is convex with an L-Lipschitz gradient; R is convex, proper and lsc and
/// is accessed only through its proximity operator prox_{gamma R}. The
/// oracles must be referentially transparent: they may capture read-only data
/// but never mutate it, so one problem can be shared by concurrent runs.
template <typename Scalar = double>
struct Problem {
    using Vector = Vec<Scalar>;

    std::function<Vector(const Vector&)> gradient;
    std::function<Vector(const Vector&, Scalar)> prox;
    std::function<Scalar(const Vector&)> smooth_value;
    std::function<Scalar(const Vector&)> nonsmooth_value;
    Scalar lipschitz = 0;
    Scalar strong_convexity = 0;
    Index dimension = 0;

    void validate() const {
        if (!gradient || !prox || !smooth_value || !nonsmooth_value)
            throw std::invalid_argument("problem: every oracle must be set");
        if (!(lipschitz > 0) || !std::isfinite(static_cast<double>(lipschitz)))
            throw std::invalid_argument("problem: Lipschitz constant must be positive and finite");
        if (strong_convexity < 0 || strong_convexity > lipschitz)
            throw std::invalid_argument("problem: strong convexity must lie in [0, L]");
        if (dimension <= 0)
            throw std::invalid_argument("problem: dimension must be positive");
    }
};

inline void require_dimension(Index got, Index expected, const char* what) {
    if (got != expected)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                    std::to_string(got) + ", expected " +
                                    std::to_string(expected) + ")");
}

/// Phi(x) = F(x) + R(x).
template <typename Scalar>
Scalar objective(const Problem<Scalar>& problem, const Vec<Scalar>& x) {
    require_dimension(x.size(), problem.dimension, "objective");
    return problem.smooth_value(x) + problem.nonsmooth_value(x);
}

/// <gF(x) - gF(y), x - y> - (1/L) ||gF(x) - gF(y)||^2; non-negative for a
/// convex F whose gradient is L-Lipschitz.
template <typename Scalar>
Scalar cocoercivity_gap(const Problem<Scalar>& problem, const Vec<Scalar>& x,
                        const Vec<Scalar>& y) {
    const Vec<Scalar> dg = problem.gradient(x) - problem.gradient(y);
    return dg.dot(x - y) - dg.squaredNorm() / problem.lipschitz;
}

/// F(y) + <gF(y), x - y> + (L/2)||x - y||^2 - F(x); non-negative by the
/// descent lemma.
template <typename Scalar>
Scalar descent_gap(const Problem<Scalar>& problem, const Vec<Scalar>& x, const Vec<Scalar>& y) {
    const Vec<Scalar> d = x - y;
    return problem.smooth_value(y) + problem.gradient(y).dot(d) +
           Scalar(0.5) * problem.lipschitz * d.squaredNorm() - problem.smooth_value(x);
}

/// Relative error between the analytic gradient and central differences of F.
template <typename Scalar>
Scalar gradient_fd_error(const Problem<Scalar>& problem, const Vec<Scalar>& x,
                         Scalar step = Scalar(1e-6)) {
    const Vec<Scalar> g = problem.gradient(x);
    Vec<Scalar> fd(x.size());
    Vec<Scalar> probe = x;
    for (Index i = 0; i < x.size(); ++i) {
        const Scalar h = step * std::max(Scalar(1), std::abs(x(i)));
        probe(i) = x(i) + h;
        const Scalar up = problem.smooth_value(probe);
        probe(i) = x(i) - h;
        const Scalar down = problem.smooth_value(probe);
        probe(i) = x(i);
        fd(i) = (up - down) / (2 * h);
    }
    const Scalar scale = std::max(g.norm(), std::numeric_limits<Scalar>::min());
    return (fd - g).norm() / scale;
}

template <typename Scalar = double>
struct SolverConfig {
    /// Step size; unset means 1/L.
    std::optional<Scalar> step;
    long max_iters = 1000;
    Scalar tol_residual = 0;
    /// Record every n-th iterate; 0 selects the default (every iterate up to
    /// 10^4, then every 100th).
    long trace_stride = 0;
    /// Starting point x_0; empty means the zero vector.
    Vec<Scalar> initial_point;
    /// Optional minimiser used to fill the distance column of the trace.
    std::optional<Vec<Scalar>> reference;
    /// Iteration period of the NaN/Inf guard.
    long nan_check_period = 100;

    Scalar resolved_step(Scalar lipschitz) const { return step ? *step : Scalar(1) / lipschitz; }

    bool records(long k) const {
        if (trace_stride > 0) return k % trace_stride == 0;
        return k <= 10000 || k % 100 == 0;
    }
};

template <typename Scalar = double>
struct TraceRow {
    long k = 0;
    Scalar residual = 0;
    Scalar objective = 0;
    Scalar a = 0;
    Scalar t = 0;
    Scalar gamma = 0;
    bool restarted = false;
    std::optional<Scalar> dist_to_ref;
    /// r of the modified rule after this step's policy update.
    std::optional<Scalar> r;
};

enum class StopReason { Converged, MaxIterations, NumericalFault };

inline const char* to_string(StopReason reason) {
    switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::NumericalFault: return "numerical_fault";
    }
    return "unknown";
}

template <typename Scalar = double>
struct RunTrace {
    std::vector<TraceRow<Scalar>> rows;
    Vec<Scalar> final_point;
    long iterations = 0;
    long restarts = 0;
    StopReason stop = StopReason::MaxIterations;
    Scalar final_residual = 0;
    Scalar final_gamma = 0;
    /// Set when the run ended with a step larger than 1/L (greedy scheme only).
    bool ended_above_inverse_lipschitz = false;
    std::string fault_message;
};

}  // namespace fista

#pragma once

#include "fista/core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace fista {

// Parameter sets of the inertial rules. Each produces the pair (t_k, a_k)
// with a_k = (t_{k-1} - 1) / t_k, except the Nesterov family which runs on
// theta_k = 1 / t_k and the constant rule.

/// t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2.
struct BeckTeboulle {};

/// t_k = (k + d) / d, i.e. a_k = (k - 1) / (k + d).
template <typename Scalar = double>
struct ChambolleDossal {
    Scalar d = 2;
};

/// t_k = (p + sqrt(q + r t_{k-1}^2)) / 2.
template <typename Scalar = double>
struct Modified {
    Scalar p = 1;
    Scalar q = 1;
    Scalar r = 4;
};

/// theta_k solves theta^2 = (1 - sigma theta) theta_{k-1}^2 + tau theta and
/// a_k = theta_{k-1}(1 - theta_{k-1}) / (theta_{k-1}^2 + theta_k).
template <typename Scalar = double>
struct Nesterov {
    Scalar sigma = 1;
    Scalar tau = 0;
};

/// a_k = a for every k (a = 1 is the greedy scheme).
template <typename Scalar = double>
struct ConstantMomentum {
    Scalar a = 1;
};

template <typename Scalar = double>
using RuleParameters = std::variant<BeckTeboulle, ChambolleDossal<Scalar>, Modified<Scalar>,
                                    Nesterov<Scalar>, ConstantMomentum<Scalar>>;

template <typename Scalar = double>
struct InertialStep {
    Scalar t;
    Scalar a;
};

template <typename Scalar = double>
struct ThetaStep {
    Scalar theta;
    Scalar a;
};

/// One step of the (modified) Nesterov theta recursion. The positive root is
/// taken in conjugate form whenever sigma theta^2 - tau > 0.
template <typename Scalar>
ThetaStep<Scalar> next_theta(Scalar sigma, Scalar tau, Scalar theta_prev) {
    if (!(sigma > 0 && sigma <= 1)) throw std::invalid_argument("next_theta: sigma must lie in ]0,1]");
    if (!(tau >= 0 && tau <= sigma)) throw std::invalid_argument("next_theta: tau must lie in [0,sigma]");
    if (!(theta_prev > 0 && theta_prev <= 1))
        throw std::invalid_argument("next_theta: theta_prev must lie in ]0,1]");
    const Scalar sq = theta_prev * theta_prev;
    const Scalar b = sigma * sq - tau;
    const Scalar disc = b * b + 4 * sq;
    if (!(disc >= 0)) throw NumericalFault("next_theta: negative discriminant", 0);
    const Scalar root = std::sqrt(disc);
    const Scalar theta = b > 0 ? 2 * sq / (b + root) : (-b + root) / 2;
    const Scalar a = theta_prev * (1 - theta_prev) / (sq + theta);
    return {theta, a};
}

/// Stateful momentum schedule. Holds the parameters and the recursion state
/// (t_{k-1} or theta_{k-1} and the counter k) of one run.
template <typename Scalar = double>
class InertialRule {
public:
    using Step = InertialStep<Scalar>;

    static InertialRule beck_teboulle(Scalar t0 = 1) {
        return InertialRule(BeckTeboulle{}, t0);
    }

    static InertialRule chambolle_dossal(Scalar d) {
        if (!(d >= 2) || !std::isfinite(static_cast<double>(d)))
            throw std::invalid_argument("chambolle_dossal: d must be >= 2");
        return InertialRule(ChambolleDossal<Scalar>{d}, 1);
    }

    static InertialRule modified(Scalar p, Scalar q, Scalar r, Scalar t0 = 1) {
        if (!(p > 0 && p <= 1)) throw std::invalid_argument("modified: p must lie in ]0,1]");
        if (!(q > 0)) throw std::invalid_argument("modified: q must be positive");
        if (!(r > 0 && r <= 4)) throw std::invalid_argument("modified: r must lie in ]0,4]");
        return InertialRule(Modified<Scalar>{p, q, r}, t0);
    }

    /// theta_0 defaults to 1 when tau = 0 and to sqrt(tau/sigma) otherwise.
    static InertialRule nesterov(Scalar sigma, Scalar tau, std::optional<Scalar> theta0 = {}) {
        if (!(sigma > 0 && sigma <= 1)) throw std::invalid_argument("nesterov: sigma must lie in ]0,1]");
        if (!(tau >= 0 && tau <= sigma)) throw std::invalid_argument("nesterov: tau must lie in [0,sigma]");
        const Scalar th = theta0 ? *theta0 : (tau > 0 ? std::sqrt(tau / sigma) : Scalar(1));
        if (!(th > 0 && th <= 1)) throw std::invalid_argument("nesterov: theta0 must lie in ]0,1]");
        return InertialRule(Nesterov<Scalar>{sigma, tau}, 1 / th);
    }

    static InertialRule constant(Scalar a) {
        if (!(a >= 0 && a <= 1)) throw std::invalid_argument("constant: a must lie in [0,1]");
        return InertialRule(ConstantMomentum<Scalar>{a}, 1);
    }

    /// Advances the recursion and returns (t_k, a_k).
    Step next() {
        ++k_;
        const Scalar prev = t_;
        Step step = std::visit([&](const auto& rule) { return advance(rule, prev); }, params_);
        if (!std::isfinite(static_cast<double>(step.a)) ||
            std::isnan(static_cast<double>(step.t)))
            throw NumericalFault("inertial rule produced a non-finite value", k_);
        t_ = step.t;
        return step;
    }

    /// Momentum restart: t back to 1 (theta back to theta_0, k back to 0 for
    /// the closed-form schedule).
    void reset() {
        k_ = 0;
        if (std::holds_alternative<Nesterov<Scalar>>(params_))
            t_ = initial_t_;
        else
            t_ = 1;
    }

    /// r <- xi r (modified rule only).
    void scale_r(Scalar xi) {
        auto* mod = std::get_if<Modified<Scalar>>(&params_);
        if (!mod) throw std::logic_error("scale_r: rule is not the modified rule");
        if (!(xi > 0 && xi < 1)) throw std::invalid_argument("scale_r: xi must lie in ]0,1[");
        mod->r *= xi;
    }

    const RuleParameters<Scalar>& parameters() const { return params_; }

    template <typename T>
    bool is() const { return std::holds_alternative<T>(params_); }

    /// Current t_{k} (1/theta_k for the Nesterov family).
    Scalar t() const { return t_; }
    long k() const { return k_; }

    std::optional<Scalar> r() const {
        if (auto* mod = std::get_if<Modified<Scalar>>(&params_)) return mod->r;
        return std::nullopt;
    }

private:
    InertialRule(RuleParameters<Scalar> params, Scalar t0)
        : params_(std::move(params)), t_(t0), initial_t_(t0) {
        if (!(t0 > 0)) throw std::invalid_argument("inertial rule: t0 must be positive");
    }

    Step advance(const BeckTeboulle&, Scalar prev) const {
        const Scalar t = (1.0 + std::sqrt(1.0 + 4.0 * prev * prev)) / 2.0;
        return {t, (prev - 1) / t};
    }

    Step advance(const ChambolleDossal<Scalar>& cd, Scalar prev) const {
        const Scalar t = (Scalar(k_) + cd.d) / cd.d;
        return {t, (prev - 1) / t};
    }

    Step advance(const Modified<Scalar>& mod, Scalar prev) const {
        const Scalar t = (mod.p + std::sqrt(mod.q + mod.r * prev * prev)) / 2;
        return {t, (prev - 1) / t};
    }

    Step advance(const Nesterov<Scalar>& nes, Scalar prev) const {
        const auto [theta, a] = next_theta(nes.sigma, nes.tau, Scalar(1) / prev);
        return {Scalar(1) / theta, a};
    }

    Step advance(const ConstantMomentum<Scalar>& c, Scalar) const {
        const Scalar t = c.a < 1 ? Scalar(1) / (1 - c.a) : std::numeric_limits<Scalar>::infinity();
        return {t, c.a};
    }

    RuleParameters<Scalar> params_;
    Scalar t_;
    Scalar initial_t_;
    long k_ = 0;
};

template <typename Scalar = double>
struct SequenceLimits {
    Scalar t_inf;
    Scalar a_inf;
    Scalar delta;
};

inline void check_pqr(double p, double q, double r, const char* who) {
    if (!(p > 0 && p <= 1)) throw std::invalid_argument(std::string(who) + ": p must lie in ]0,1]");
    if (!(q > 0)) throw std::invalid_argument(std::string(who) + ": q must be positive");
    if (!(r > 0 && r <= 4)) throw std::invalid_argument(std::string(who) + ": r must lie in ]0,4]");
}

/// Limits of t_k and a_k for the modified rule.
template <typename Scalar>
SequenceLimits<Scalar> limit_values(Scalar p, Scalar q, Scalar r) {
    check_pqr(static_cast<double>(p), static_cast<double>(q), static_cast<double>(r), "limit_values");
    const Scalar delta = std::sqrt(r * p * p + (4 - r) * q);
    if (r == 4) return {std::numeric_limits<Scalar>::infinity(), Scalar(1), delta};
    const Scalar s = 2 * p + delta;
    return {s / (4 - r), (s - (4 - r)) / s, delta};
}

template <typename Scalar = double>
struct TBounds {
    Scalar lower;
    Scalar upper;
};

/// Smallest truncation index for which the upper bound is guaranteed.
template <typename Scalar>
long default_truncation(Scalar p, Scalar q) {
    return static_cast<long>(std::ceil(q / (p * (2 - p))));
}

/// Linear sandwich (k+1)p/2 <= t_k <= 1 + S_l + (p/2 + q/(4p(l+1))) k of the
/// r = 4 modified rule started at t_0 = 1. The upper bound is guaranteed
/// only for ell >= ceil(q/(p(2-p))), the default; smaller ell is evaluated as is.
template <typename Scalar>
TBounds<Scalar> t_bounds(long k, Scalar p, Scalar q, std::optional<long> ell = std::nullopt) {
    if (k < 0) throw std::invalid_argument("t_bounds: k must be non-negative");
    check_pqr(static_cast<double>(p), static_cast<double>(q), 4.0, "t_bounds");
    const long l = ell.value_or(default_truncation(p, q));
    if (l < 0) throw std::invalid_argument("t_bounds: ell must be non-negative");
    Scalar harmonic = 0;
    for (long i = l; i >= 0; --i) harmonic += Scalar(1) / Scalar(1 + i);
    const Scalar s_ell = q / (4 * p) * harmonic;
    const Scalar lower = Scalar(k + 1) * p / 2;
    const Scalar upper = 1 + s_ell + (p / 2 + q / (4 * p * Scalar(l + 1))) * Scalar(k);
    return {lower, upper};
}

/// r such that the modified rule's a_k converges to
/// a* = (1 - sqrt(gamma alpha)) / (1 + sqrt(gamma alpha)).
template <typename Scalar>
Scalar optimal_r(Scalar alpha, Scalar gamma, Scalar p, Scalar q) {
    if (!(alpha >= 0)) throw std::invalid_argument("optimal_r: alpha must be non-negative");
    if (!(gamma > 0)) throw std::invalid_argument("optimal_r: gamma must be positive");
    const Scalar ga = gamma * alpha;
    if (ga > 1) throw std::invalid_argument("optimal_r: gamma*alpha must not exceed 1");
    const Scalar s = std::sqrt(ga);
    const Scalar a_star = (1 - s) / (1 + s);
    const Scalar gap = 1 - a_star;
    return 4 * (1 - p) + 4 * p * a_star + (p * p - q) * gap * gap;
}

/// a* = (1 - sqrt(gamma alpha)) / (1 + sqrt(gamma alpha)).
template <typename Scalar>
Scalar optimal_momentum(Scalar alpha, Scalar gamma) {
    const Scalar s = std::sqrt(gamma * alpha);
    return (1 - s) / (1 + s);
}

}  // namespace fista

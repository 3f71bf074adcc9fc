#pragma once

#include "fista/core.hpp"
#include "fista/sequences.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <variant>

namespace fista {

/// Plain inertial iteration, momentum never reset.
struct NoRestart {};

/// Gradient-mapping restart: t_k <- 1 (or theta_0) and y_k <- x_k.
struct MomentumRestart {};

/// Restart that also rescales r <- xi r. Option II additionally resets t_k.
template <typename Scalar = double>
struct AdaptiveRestart {
    Scalar xi = Scalar(0.96);
    bool reset_t = false;
    /// When set, xi is replaced by a_k^(1/m) at the first restart (m = root).
    bool auto_xi = false;
    int root = 50;
};

/// Constant a_k = 1 with restart and the step-size safeguard
/// gamma <- max(xi gamma, 1/L) whenever ||x_{k+1} - x_k|| >= S ||x_1 - x_0||.
/// The starting step is taken from SolverConfig::step.
template <typename Scalar = double>
struct GreedyRestart {
    Scalar wait = 1;
    Scalar xi = Scalar(0.96);
};

template <typename Scalar = double>
using RestartPolicy =
    std::variant<NoRestart, MomentumRestart, AdaptiveRestart<Scalar>, GreedyRestart<Scalar>>;

template <typename Scalar = double>
struct IterateState {
    Vec<Scalar> x;
    Vec<Scalar> x_prev;
    Vec<Scalar> y;
    Scalar gamma = 0;
    std::optional<Scalar> first_residual;
    long restart_count = 0;
};

/// prox_{gamma R}(y - gamma grad F(y)).
template <typename Scalar>
Vec<Scalar> fb_step(const Problem<Scalar>& problem, const Vec<Scalar>& y, Scalar gamma) {
    if (!(gamma > 0)) throw std::invalid_argument("fb_step: gamma must be positive");
    require_dimension(y.size(), problem.dimension, "fb_step");
    return problem.prox(y - gamma * problem.gradient(y), gamma);
}

/// True iff <y - x_next, x_next - x> >= 0.
template <typename DerivedY, typename DerivedN, typename DerivedX>
bool restart_test(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedN>& x_next,
                  const Eigen::MatrixBase<DerivedX>& x) {
    require_dimension(y.size(), x.size(), "restart_test");
    require_dimension(x_next.size(), x.size(), "restart_test");
    return (y - x_next).dot(x_next - x) >= 0;
}

/// Greedy step-size safeguard; returns the (possibly shrunk) gamma of state.
template <typename Scalar>
Scalar safeguard(IterateState<Scalar>& state, Scalar residual, Scalar wait, Scalar xi,
                 Scalar lipschitz) {
    if (!state.first_residual) throw std::logic_error("safeguard: first residual not set");
    if (residual >= wait * *state.first_residual)
        state.gamma = std::max(xi * state.gamma, Scalar(1) / lipschitz);
    return state.gamma;
}

namespace detail {

template <typename Scalar>
void check_step(const InertialRule<Scalar>& rule, const RestartPolicy<Scalar>& policy,
                Scalar gamma, Scalar lipschitz) {
    const Scalar inv_l = Scalar(1) / lipschitz;
    const Scalar slack = 1 + 64 * std::numeric_limits<Scalar>::epsilon();
    if (!(gamma > 0)) throw std::invalid_argument("run: step must be positive");
    if (std::holds_alternative<GreedyRestart<Scalar>>(policy)) {
        if (gamma * slack < inv_l || gamma >= 2 * inv_l)
            throw std::invalid_argument("run: greedy step must lie in [1/L, 2/L[");
    } else if (rule.template is<ConstantMomentum<Scalar>>()) {
        if (gamma > 2 * inv_l * slack) throw std::invalid_argument("run: step must not exceed 2/L");
    } else if (gamma > inv_l * slack) {
        throw std::invalid_argument("run: accelerated rules need step <= 1/L");
    }
}

template <typename Scalar>
void check_policy(const InertialRule<Scalar>& rule, const RestartPolicy<Scalar>& policy) {
    if (const auto* g = std::get_if<GreedyRestart<Scalar>>(&policy)) {
        const auto* c = std::get_if<ConstantMomentum<Scalar>>(&rule.parameters());
        if (!c || c->a != 1) throw std::invalid_argument("run: greedy policy needs the constant a = 1 rule");
        if (!(g->wait > 0)) throw std::invalid_argument("run: greedy S must be positive");
        if (!(g->xi > 0 && g->xi < 1)) throw std::invalid_argument("run: greedy xi must lie in ]0,1[");
    }
    if (const auto* r = std::get_if<AdaptiveRestart<Scalar>>(&policy)) {
        if (!rule.template is<Modified<Scalar>>())
            throw std::invalid_argument("run: adaptive restart needs the modified rule");
        if (!(r->xi > 0 && r->xi < 1)) throw std::invalid_argument("run: xi must lie in ]0,1[");
        if (r->auto_xi && r->root < 2) throw std::invalid_argument("run: auto xi root must be >= 2");
    }
}

}  // namespace detail

/// Inertial forward-backward loop
///   y_k = x_k + a_k (x_k - x_{k-1}),  x_{k+1} = prox_{gamma R}(y_k - gamma grad F(y_k))
/// with the momentum schedule `rule` and restart controller `policy`.
template <typename Scalar>
RunTrace<Scalar> run(const Problem<Scalar>& problem, InertialRule<Scalar> rule,
                     RestartPolicy<Scalar> policy, const SolverConfig<Scalar>& config) {
    problem.validate();
    if (config.max_iters < 1) throw std::invalid_argument("run: max_iters must be positive");
    if (config.tol_residual < 0) throw std::invalid_argument("run: tolerance must be non-negative");
    if (config.trace_stride < 0) throw std::invalid_argument("run: trace stride must be non-negative");
    detail::check_policy(rule, policy);

    IterateState<Scalar> state;
    state.gamma = config.resolved_step(problem.lipschitz);
    detail::check_step(rule, policy, state.gamma, problem.lipschitz);

    if (config.initial_point.size() == 0) {
        state.x = Vec<Scalar>::Zero(problem.dimension);
    } else {
        require_dimension(config.initial_point.size(), problem.dimension, "run: initial point");
        state.x = config.initial_point;
    }
    if (config.reference) require_dimension(config.reference->size(), problem.dimension, "run: reference");
    state.x_prev = state.x;

    RunTrace<Scalar> trace;
    const long period = std::max(1L, config.nan_check_period);
    Vec<Scalar> last_good = state.x;
    long last_good_k = 0;
    Scalar last_good_residual = 0;
    Scalar last_good_gamma = state.gamma;
    long last_good_restarts = 0;
    Scalar residual = 0;
    bool rada_xi_fixed = false;

    auto fault = [&](const std::string& message) {
        while (!trace.rows.empty() && trace.rows.back().k > last_good_k) trace.rows.pop_back();
        trace.final_point = last_good;
        trace.iterations = last_good_k;
        trace.restarts = last_good_restarts;
        trace.final_residual = last_good_residual;
        trace.final_gamma = last_good_gamma;
        trace.stop = StopReason::NumericalFault;
        trace.fault_message = message;
        trace.ended_above_inverse_lipschitz = last_good_gamma * problem.lipschitz > 1;
        return trace;
    };

    long k = 0;
    while (k < config.max_iters) {
        ++k;
        InertialStep<Scalar> step;
        try {
            step = rule.next();
        } catch (const NumericalFault& e) {
            return fault(e.what());
        }
        const Scalar step_gamma = state.gamma;
        state.y = state.x + step.a * (state.x - state.x_prev);
        Vec<Scalar> x_next = fb_step(problem, state.y, state.gamma);
        residual = (x_next - state.x).norm();

        bool restarted = false;
        std::visit(
            [&](auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, MomentumRestart>) {
                    if (restart_test(state.y, x_next, state.x)) {
                        rule.reset();
                        restarted = true;
                    }
                } else if constexpr (std::is_same_v<P, AdaptiveRestart<Scalar>>) {
                    if (restart_test(state.y, x_next, state.x)) {
                        if (p.auto_xi && !rada_xi_fixed) {
                            const Scalar candidate = std::pow(step.a, Scalar(1) / Scalar(p.root));
                            if (candidate > 0 && candidate < 1) p.xi = candidate;
                            rada_xi_fixed = true;
                        }
                        rule.scale_r(p.xi);
                        if (p.reset_t) rule.reset();
                        restarted = true;
                    }
                } else if constexpr (std::is_same_v<P, GreedyRestart<Scalar>>) {
                    if (restart_test(state.y, x_next, state.x)) restarted = true;
                    if (state.first_residual)
                        safeguard(state, residual, p.wait, p.xi, problem.lipschitz);
                }
            },
            policy);

        if (restarted) ++state.restart_count;
        if (!state.first_residual) state.first_residual = residual;
        state.x_prev = restarted ? x_next : state.x;
        state.x = std::move(x_next);

        const bool converged = residual <= config.tol_residual;
        const bool last = converged || k == config.max_iters;
        if (config.records(k) || last) {
            TraceRow<Scalar> row;
            row.k = k;
            row.residual = residual;
            row.objective = objective(problem, state.x);
            row.a = step.a;
            row.t = step.t;
            row.gamma = step_gamma;
            row.restarted = restarted;
            row.r = rule.r();
            if (config.reference) row.dist_to_ref = (state.x - *config.reference).norm();
            trace.rows.push_back(row);
        }

        if (k % period == 0 || last) {
            if (!state.x.allFinite() || !std::isfinite(static_cast<double>(residual)))
                return fault("non-finite iterate detected");
            last_good = state.x;
            last_good_k = k;
            last_good_residual = residual;
            last_good_gamma = state.gamma;
            last_good_restarts = state.restart_count;
        }
        if (converged) {
            trace.stop = StopReason::Converged;
            break;
        }
    }

    trace.final_point = state.x;
    trace.iterations = k;
    trace.restarts = state.restart_count;
    trace.final_residual = residual;
    trace.final_gamma = state.gamma;
    trace.ended_above_inverse_lipschitz =
        state.gamma * problem.lipschitz > 1 + 64 * std::numeric_limits<Scalar>::epsilon();
    return trace;
}

}  // namespace fista

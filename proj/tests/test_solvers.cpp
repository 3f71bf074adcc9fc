#include "support.hpp"

#include "fista/instance.hpp"
#include "fista/prox.hpp"
#include "fista/solvers.hpp"
#include "fista/spectral.hpp"

#include <doctest.h>

using namespace fista;
using testing::Gen;

using Rule = InertialRule<double>;

namespace {

Vector v(std::initializer_list<double> xs) {
    Vector out(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) out(i++) = x;
    return out;
}

Problem<double> lasso_1d() {
    Problem<double> p;
    p.gradient = [](const Vector& x) { return Vector(x.array() - 2.0); };
    p.smooth_value = [](const Vector& x) { return 0.5 * (x.array() - 2.0).square().sum(); };
    p.prox = [](const Vector& z, double g) { return prox_l1(z, g); };
    p.nonsmooth_value = [](const Vector& x) { return x.lpNorm<1>(); };
    p.lipschitz = 1;
    p.dimension = 1;
    return p;
}

Problem<double> small_lasso(std::uint64_t seed) {
    InstanceRecipe r;
    r.family = Family::Lasso;
    r.seed = seed;
    return build_problem(generate_instance(r));
}

/// Hand-written FISTA loop used as an oracle for the engine.
Vector manual_fista(const Problem<double>& p, Rule rule, long iters) {
    const double gamma = 1.0 / p.lipschitz;
    Vector x = Vector::Zero(p.dimension), x_prev = x;
    for (long k = 0; k < iters; ++k) {
        const double a = rule.next().a;
        const Vector y = x + a * (x - x_prev);
        x_prev = x;
        x = p.prox(y - gamma * p.gradient(y), gamma);
    }
    return x;
}

SolverConfig<double> every_row(long iters) {
    SolverConfig<double> c;
    c.max_iters = iters;
    c.trace_stride = 1;
    return c;
}

double optimum(const Problem<double>& p) {
    SolverConfig<double> c;
    c.max_iters = 200000;
    c.tol_residual = 1e-14;
    c.step = 1.3 / p.lipschitz;
    const auto tr = run(p, Rule::constant(1.0), RestartPolicy<double>{GreedyRestart<double>{}}, c);
    REQUIRE(tr.stop == StopReason::Converged);
    return objective(p, tr.final_point);
}

}  // namespace

TEST_CASE("forward-backward step examples") {
    Problem<double> id;
    id.gradient = [](const Vector& x) { return x; };
    id.prox = [](const Vector& z, double) { return z; };
    id.smooth_value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
    id.nonsmooth_value = [](const Vector&) { return 0.0; };
    id.lipschitz = 1;
    id.dimension = 3;
    Gen g(60);
    for (int i = 0; i < 10; ++i) {
        const Vector y = g.vec(3);
        CHECK(fb_step(id, y, 1.0).isZero(0));
        CHECK((fb_step(id, y, 0.25) - 0.75 * y).norm() <= 1e-15);
    }
    CHECK(fb_step(lasso_1d(), v({0}), 1.0)(0) == 1.0);
    CHECK_THROWS_AS(fb_step(id, Vector(v({1, 2})), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fb_step(id, Vector(v({1, 2, 3})), 0.0), std::invalid_argument);
}

TEST_CASE("forward-backward step satisfies the optimality inclusion") {
    const auto p = lasso_1d();
    Gen g(61);
    for (int i = 0; i < 100; ++i) {
        const Vector y = g.vec(1, 3);
        const double gamma = g.uniform(0.1, 1);
        const Vector yp = fb_step(p, y, gamma);
        // -(y+ - y)/gamma - grad F(y) must be a subgradient of |.| at y+
        const double s = -(yp(0) - y(0)) / gamma - p.gradient(y)(0);
        if (yp(0) != 0) CHECK(s == doctest::Approx(yp(0) > 0 ? 1.0 : -1.0).epsilon(1e-12));
        else CHECK(std::abs(s) <= 1 + 1e-12);
    }
}

TEST_CASE("restart test examples") {
    const Vector x = v({0, 0});
    CHECK(restart_test(v({1, 3}), x, x));
    CHECK(restart_test(v({0.5, 0}), v({0.5, 0}), x));
    CHECK(restart_test(v({1, 0}), v({0.5, 0}), x));
    CHECK_FALSE(restart_test(v({1, 0}), v({2, 0}), x));
    CHECK_THROWS_AS(restart_test(v({1}), v({2, 0}), x), std::invalid_argument);
}

TEST_CASE("safeguard shrinks towards 1/L and clamps") {
    const double L = 4;
    IterateState<double> s;
    s.gamma = 1.3 / L;
    CHECK_THROWS_AS(safeguard(s, 1.0, 1.0, 0.96, L), std::logic_error);
    s.first_residual = 1.0;
    CHECK(safeguard(s, 0.5, 1.0, 0.96, L) == 1.3 / L);
    double prev = s.gamma;
    for (int i = 0; i < 200; ++i) {
        const double g = safeguard(s, 2.0, 1.0, 0.96, L);
        CHECK(g <= prev);
        CHECK(g >= 1 / L);
        prev = g;
    }
    CHECK(s.gamma == 1 / L);
    CHECK(safeguard(s, 5.0, 1.0, 0.96, L) == 1 / L);
}

TEST_CASE("incompatible configurations are rejected before the first step") {
    const auto p = small_lasso(1);
    SolverConfig<double> c;
    CHECK_THROWS_AS(run(p, Rule::beck_teboulle(), RestartPolicy<double>{GreedyRestart<double>{}}, c),
                    std::invalid_argument);
    CHECK_THROWS_AS(run(p, Rule::beck_teboulle(), RestartPolicy<double>{AdaptiveRestart<double>{}}, c),
                    std::invalid_argument);
    c.step = 1.5 / p.lipschitz;
    CHECK_THROWS_AS(run(p, Rule::beck_teboulle(), RestartPolicy<double>{NoRestart{}}, c), std::invalid_argument);
    CHECK_NOTHROW(run(p, Rule::constant(0.0), RestartPolicy<double>{NoRestart{}}, c));
    c.step = 2.5 / p.lipschitz;
    CHECK_THROWS_AS(run(p, Rule::constant(0.0), RestartPolicy<double>{NoRestart{}}, c), std::invalid_argument);
    c.step = 0.9 / p.lipschitz;
    CHECK_THROWS_AS(run(p, Rule::constant(1.0), RestartPolicy<double>{GreedyRestart<double>{}}, c),
                    std::invalid_argument);
    c.step = 2.0 / p.lipschitz;
    CHECK_THROWS_AS(run(p, Rule::constant(1.0), RestartPolicy<double>{GreedyRestart<double>{}}, c),
                    std::invalid_argument);
    SolverConfig<double> bad;
    bad.max_iters = 0;
    CHECK_THROWS_AS(run(p, Rule::beck_teboulle(), RestartPolicy<double>{NoRestart{}}, bad), std::invalid_argument);
    bad = SolverConfig<double>{};
    bad.initial_point = Vector::Zero(3);
    CHECK_THROWS_AS(run(p, Rule::beck_teboulle(), RestartPolicy<double>{NoRestart{}}, bad), std::invalid_argument);
}

TEST_CASE("engine agrees with a hand-written loop") {
    const auto p = small_lasso(2);
    for (auto rule : {Rule::beck_teboulle(), Rule::chambolle_dossal(4), Rule::modified(0.05, 0.5, 4)}) {
        const auto tr = run(p, rule, RestartPolicy<double>{NoRestart{}}, every_row(300));
        CHECK((tr.final_point - manual_fista(p, rule, 300)).norm() <= 1e-12);
    }
}

TEST_CASE("trace rows are well formed") {
    const auto p = make_tridiag_lsq(201);
    for (RestartPolicy<double> policy : {RestartPolicy<double>{NoRestart{}}, RestartPolicy<double>{MomentumRestart{}}}) {
        SolverConfig<double> c;
        c.max_iters = 12345;
        c.initial_point = Vector::Ones(201);
        const auto tr = run(p, Rule::beck_teboulle(), policy, c);
        long prev = 0;
        for (const auto& r : tr.rows) {
            CHECK(r.k > prev);
            CHECK(r.residual >= 0);
            CHECK(r.gamma > 0);
            prev = r.k;
        }
        CHECK(tr.rows.back().k == 12345);
        CHECK(tr.rows.size() == 10000 + 23 + 1);
    }
}

TEST_CASE("energy inequality holds along the iterates") {
    Gen g(62);
    for (std::uint64_t seed : {4, 5}) {
        const auto p = small_lasso(seed);
        const double gamma = 1 / p.lipschitz;
        for (double q : {0.5, 1.0}) {
            auto rule = Rule::modified(q == 1.0 ? 1.0 : 0.05, q, 4);
            Vector x = Vector::Zero(p.dimension), x_prev = x;
            int bad = 0;
            for (int k = 0; k < 500; ++k) {
                const double a = rule.next().a;
                const Vector y = x + a * (x - x_prev);
                const Vector yp = fb_step(p, y, gamma);
                const double lhs = objective(p, yp) + (yp - x).squaredNorm() / (2 * gamma);
                const double rhs = objective(p, x) + (y - x).squaredNorm() / (2 * gamma);
                if (lhs > rhs + 1e-12 * (1 + std::abs(rhs))) ++bad;
                x_prev = x;
                x = yp;
            }
            CHECK(bad == 0);
        }
        int bad = 0;
        for (int i = 0; i < 500; ++i) {
            const Vector x = g.vec(p.dimension), y = g.vec(p.dimension);
            const Vector yp = fb_step(p, y, gamma);
            const double lhs = objective(p, yp) + (yp - x).squaredNorm() / (2 * gamma);
            const double rhs = objective(p, x) + (y - x).squaredNorm() / (2 * gamma);
            if (lhs > rhs + 1e-12 * (1 + std::abs(rhs))) ++bad;
        }
        CHECK(bad == 0);
    }
}

TEST_CASE("objective bound for the modified rule with r = 4") {
    const auto p = small_lasso(6);
    const double phi_star = optimum(p);
    SolverConfig<double> ref;
    ref.max_iters = 200000;
    ref.tol_residual = 1e-14;
    ref.step = 1.3 / p.lipschitz;
    const Vector x_star =
        run(p, Rule::constant(1.0), RestartPolicy<double>{GreedyRestart<double>{}}, ref).final_point;
    for (double pp : {1.0, 0.5, 0.05}) {
        for (double q : {pp * pp, 1.0, (2 - pp) * (2 - pp)}) {
            const auto tr = run(p, Rule::modified(pp, q, 4), RestartPolicy<double>{NoRestart{}}, every_row(3000));
            int bad = 0;
            for (const auto& r : tr.rows) {
                const double bound = 2 * p.lipschitz * x_star.squaredNorm() / (pp * pp * double(r.k + 1) * double(r.k + 1));
                if (r.objective - phi_star > bound + 1e-10) ++bad;
            }
            CAPTURE(pp);
            CAPTURE(q);
            CHECK(bad == 0);
        }
    }
}

TEST_CASE("k times residual stays bounded for the lazy-start rule") {
    const auto p = small_lasso(7);
    for (auto [pp, q] : {std::pair{0.05, 0.5}, std::pair{0.5, 1.0}, std::pair{0.9, 0.81}}) {
        const auto tr = run(p, Rule::modified(pp, q, 4), RestartPolicy<double>{NoRestart{}}, every_row(20000));
        double early = 0, late = 0;
        for (const auto& r : tr.rows) {
            const double kr = double(r.k) * r.residual;
            if (r.k <= 10000) early = std::max(early, kr);
            else late = std::max(late, kr);
        }
        CAPTURE(pp);
        CHECK(std::isfinite(early));
        CHECK(late <= early);
    }
}

TEST_CASE("identical inputs give identical traces") {
    const auto p = small_lasso(8);
    auto once = [&] {
        return run(p, Rule::modified(0.05, 0.5, 4),
                   RestartPolicy<double>{AdaptiveRestart<double>{0.96, false, true, 50}}, every_row(2000));
    };
    const auto a = once(), b = once();
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].residual == b.rows[i].residual);
        CHECK(a.rows[i].objective == b.rows[i].objective);
        CHECK(a.rows[i].a == b.rows[i].a);
    }
    CHECK(a.final_point == b.final_point);
}

TEST_CASE("Mod(1,1,4) and Beck-Teboulle produce the same trace") {
    const auto p = small_lasso(9);
    const auto a = run(p, Rule::modified(1, 1, 4), RestartPolicy<double>{NoRestart{}}, every_row(5000));
    const auto b = run(p, Rule::beck_teboulle(), RestartPolicy<double>{NoRestart{}}, every_row(5000));
    REQUIRE(a.rows.size() == b.rows.size());
    bool same = true;
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        same = same && a.rows[i].residual == b.rows[i].residual && a.rows[i].objective == b.rows[i].objective &&
               a.rows[i].a == b.rows[i].a && a.rows[i].t == b.rows[i].t;
    CHECK(same);
}

TEST_CASE("momentum restart zeroes the next momentum term") {
    const auto p = small_lasso(10);
    const auto tr = run(p, Rule::beck_teboulle(), RestartPolicy<double>{MomentumRestart{}}, every_row(2000));
    CHECK(tr.restarts > 0);
    for (std::size_t i = 0; i + 1 < tr.rows.size(); ++i)
        if (tr.rows[i].restarted) CHECK(tr.rows[i + 1].a == 0.0);
}

TEST_CASE("adaptive restart keeps r positive and non-increasing") {
    for (std::uint64_t seed : {11, 12}) {
        const auto p = small_lasso(seed);
        for (bool reset : {false, true}) {
            for (bool automatic : {false, true}) {
                const auto tr = run(p, Rule::modified(1, 1, 4),
                                    RestartPolicy<double>{AdaptiveRestart<double>{0.96, reset, automatic, 50}},
                                    every_row(3000));
                CHECK(tr.restarts > 0);
                double prev = 4;
                bool ok = true;
                for (const auto& r : tr.rows) {
                    ok = ok && r.r && *r.r > 0 && *r.r <= prev;
                    if (r.r) prev = *r.r;
                }
                CHECK(ok);
                CHECK(prev < 4);
            }
        }
    }
}

TEST_CASE("greedy keeps gamma at or above 1/L") {
    const auto p = small_lasso(13);
    SolverConfig<double> c = every_row(5000);
    c.step = 1.3 / p.lipschitz;
    c.tol_residual = 1e-12;
    const auto tr = run(p, Rule::constant(1.0), RestartPolicy<double>{GreedyRestart<double>{1, 0.96}}, c);
    CHECK(tr.stop == StopReason::Converged);
    for (const auto& r : tr.rows) {
        CHECK(r.gamma * p.lipschitz >= 1 - 1e-15);
        CHECK(r.gamma * p.lipschitz <= 1.3 + 1e-15);
    }
}

TEST_CASE("gamma is constant outside the greedy scheme") {
    const auto p = small_lasso(14);
    const auto tr = run(p, Rule::modified(1, 1, 4),
                        RestartPolicy<double>{AdaptiveRestart<double>{}}, every_row(1000));
    for (const auto& r : tr.rows) CHECK(r.gamma == 1 / p.lipschitz);
    CHECK_FALSE(tr.ended_above_inverse_lipschitz);
}

TEST_CASE("alpha-FISTA reaches the optimal momentum and rate") {
    Gen g(63);
    const Index n = 30;
    Vector eigs(n);
    for (Index i = 0; i < n; ++i) eigs(i) = std::pow(10.0, -2.0 * double(i) / double(n - 1));
    const auto p = make_quadratic(eigs, Vector::Zero(n), 5);
    SolverConfig<double> c = every_row(3000);
    c.initial_point = Vector::Ones(n) / std::sqrt(double(n));
    c.reference = Vector::Zero(n);
    const double gamma = 1 / p.lipschitz;
    const double r = optimal_r(p.strong_convexity, gamma, 1.0, 1.0);
    const auto tr = run(p, Rule::modified(1, 1, r), RestartPolicy<double>{NoRestart{}}, c);
    const double a_star = optimal_momentum(p.strong_convexity, gamma);
    CHECK(std::abs(tr.rows.back().a - a_star) <= 1e-6);
    // stop the window before the roundoff floor is reached
    RunTrace<double> head = tr;
    head.rows.resize(1500);
    CHECK(empirical_contraction(head, 500) <= 1 - std::sqrt(gamma * p.strong_convexity) + 0.01);
}

TEST_CASE("convergence stops at the tolerance") {
    const auto p = small_lasso(15);
    SolverConfig<double> c;
    c.max_iters = 100000;
    c.tol_residual = 1e-9;
    const auto tr = run(p, Rule::beck_teboulle(), RestartPolicy<double>{MomentumRestart{}}, c);
    CHECK(tr.stop == StopReason::Converged);
    CHECK(tr.final_residual <= 1e-9);
    CHECK(tr.rows.back().k == tr.iterations);
    CHECK(tr.iterations < 100000);
}

TEST_CASE("non-finite iterates abort with the last good trace") {
    auto p = small_lasso(16);
    auto counter = std::make_shared<long>(0);
    const auto prox = p.prox;
    p.prox = [prox, counter](const Vector& z, double gamma) {
        Vector x = prox(z, gamma);
        if (++*counter > 250) x(0) = std::numeric_limits<double>::quiet_NaN();
        return x;
    };
    SolverConfig<double> c;
    c.max_iters = 1000;
    const auto tr = run(p, Rule::beck_teboulle(), RestartPolicy<double>{NoRestart{}}, c);
    CHECK(tr.stop == StopReason::NumericalFault);
    CHECK(tr.iterations == 200);
    CHECK(tr.rows.back().k == 200);
    CHECK(tr.final_point.allFinite());
    CHECK_FALSE(tr.fault_message.empty());
}

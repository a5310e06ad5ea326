#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "wdn/stage_nlp.hpp"

using namespace wdn;

namespace {

struct StageSetup {
    Network net;
    Incidence inc;
    Scenario scen;
    Bounds bounds;
    Trajectory start;
    SccParams scc;

    StageProblem problem(int t, const Vec& h_bar, const Vec& z, const Vec& y, double rho) const {
        return make_stage_problem(net, inc, scen, bounds, scc, t, h_bar, z, y, rho);
    }
};

StageSetup setup(Network net, double demand_lps, int nt = 1) {
    StageSetup s{std::move(net), {}, {}, {}, {}, {}};
    s.inc = build_incidence(s.net);
    s.scen = fixtures::constant_scenario(s.net, nt, demand_lps);
    s.bounds = make_bounds(s.net, s.scen);
    s.start = feasible_start(s.net, s.inc, s.scen, s.bounds);
    return s;
}

double stage_feasibility(const StageSetup& s, const StageState& state, int t = 0) {
    const auto res = stage_constraint_residual(state.q, state.h, state.eta, state.alpha, s.net,
                                               s.inc, s.scen, s.bounds, t);
    return std::max({res.energy.lpNorm<Eigen::Infinity>(), res.mass.lpNorm<Eigen::Infinity>(),
                     res.bound_violation, res.direction_violation});
}

}  // namespace

TEST_CASE("stage Lagrangian reduces to the stage cost at consensus") {
    const StageSetup s = setup(fixtures::toy3(), 1.0);
    const StageState& st = s.start.stages[0];
    const Vec zero = Vec::Zero(3);
    const StageProblem prob = s.problem(0, st.h, zero, zero, 2.0);
    CHECK(stage_lagrangian(prob, st.q, st.h) ==
          doctest::Approx(prob.objective.value(st.q, st.h)).epsilon(1e-14));
}

TEST_CASE("stage Lagrangian matches an independent re-evaluation") {
    const StageSetup s = setup(fixtures::toy3(), 1.0);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> small(-0.5, 0.5), head(25.0, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vec q(4), h(3), h_bar(3), z(3), y(3);
        for (Index j = 0; j < 4; ++j) q[j] = 0.01 * small(rng);
        for (Index i = 0; i < 3; ++i) {
            h[i] = head(rng);
            h_bar[i] = head(rng);
            z[i] = small(rng);
            y[i] = small(rng);
        }
        const double rho = 1.7;
        const StageProblem prob = s.problem(0, h_bar, z, y, rho);

        double expect = prob.objective.value(q, h);
        for (Index i = 0; i < 3; ++i) {
            const double r = h[i] - h_bar[i] + z[i];
            expect += y[i] * r + 0.5 * rho * r * r;
        }
        CHECK(stage_lagrangian(prob, q, h) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("stage Lagrangian gradient matches central differences") {
    const StageSetup s = setup(fixtures::toy3(), 1.0, 4);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> small(-0.3, 0.3), head(25.0, 50.0);
    for (int t : {0, 2}) {
        for (int trial = 0; trial < 40; ++trial) {
            Vec q(4), h(3), h_bar(3), z(3), y(3);
            for (Index j = 0; j < 4; ++j) q[j] = small(rng) * s.net.cross_sections[j];
            for (Index i = 0; i < 3; ++i) {
                h[i] = head(rng);
                h_bar[i] = h[i] + small(rng);
                z[i] = small(rng);
                y[i] = small(rng);
            }
            const StageProblem prob = s.problem(t, h_bar, z, y, 2.3);
            const auto [gq, gh] = stage_lagrangian_grad(prob, q, h);
            for (Index j = 0; j < 4; ++j) {
                if (std::abs(gq[j]) < 0.2) continue;
                const double step = 1e-6 * s.net.cross_sections[j];
                Vec qp = q, qm = q;
                qp[j] += step;
                qm[j] -= step;
                const double fd =
                    (stage_lagrangian(prob, qp, h) - stage_lagrangian(prob, qm, h)) / (2.0 * step);
                CHECK(gq[j] == doctest::Approx(fd).epsilon(1e-6));
            }
            for (Index i = 0; i < 3; ++i) {
                if (std::abs(gh[i]) < 1e-3) continue;
                const double step = 1e-5;
                Vec hp = h, hm = h;
                hp[i] += step;
                hm[i] -= step;
                const double fd =
                    (stage_lagrangian(prob, q, hp) - stage_lagrangian(prob, q, hm)) / (2.0 * step);
                CHECK(gh[i] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("zero control freedom returns the warm start") {
    // A network with no actuators has a unique feasible point per step.
    const StageSetup s = setup(fixtures::single_pipe(), 5.0);
    const StageState& start = s.start.stages[0];
    const Vec zero = Vec::Zero(1);
    const StageProblem prob = s.problem(0, start.h, zero, zero, 0.0);
    const auto [out, report] = solve_stage(prob, start);
    CHECK(report.converged);
    CHECK((out.q - start.q).lpNorm<Eigen::Infinity>() <= 1e-5);
    CHECK((out.h - start.h).lpNorm<Eigen::Infinity>() <= 1e-5);
    CHECK(report.feasibility_norm <= 1e-6);
}

TEST_CASE("an unpenalized optimum is a fixed point for any rho") {
    const StageSetup s = setup(fixtures::single_pipe_pcv(), 8.0);
    const Vec zero = Vec::Zero(2);
    const StageProblem free_prob = s.problem(0, s.start.stages[0].h, zero, zero, 0.0);
    const auto [opt, rep0] = solve_stage(free_prob, s.start.stages[0]);
    REQUIRE(rep0.converged);

    // "same point" up to the feasibility slop amplified through the loss curve
    const StageProblem pinned = s.problem(0, opt.h, zero, zero, 4.0);
    const auto [again, rep1] = solve_stage(pinned, opt);
    CHECK(rep1.converged);
    CHECK((again.h - opt.h).lpNorm<Eigen::Infinity>() <= 1e-3);
    CHECK((again.eta - opt.eta).lpNorm<Eigen::Infinity>() <= 1e-3);
}

TEST_CASE("PCV settles the downstream head on the floor, matching a grid search") {
    const StageSetup s = setup(fixtures::single_pipe_pcv(), 8.0);
    const Vec zero = Vec::Zero(2);
    const StageProblem prob = s.problem(0, s.start.stages[0].h, zero, zero, 0.0);
    const auto [out, report] = solve_stage(prob, s.start.stages[0]);
    REQUIRE(report.converged);
    CHECK(out.h[1] == doctest::Approx(20.0).epsilon(1e-5));  // h_min

    auto steady_at = [&](double eta) {
        return solve_steady(s.net, s.inc, s.scen.demands.row(0).transpose(),
                            s.scen.source_heads.row(0).transpose(), Vec::Constant(1, eta),
                            Vec(0));
    };
    // refining grid search over the scalar control
    double lo = s.bounds.eta_lo(0, 0), hi = s.bounds.eta_up(0, 0);
    double best_eta = 0.0;
    for (int pass = 0; pass < 3; ++pass) {
        double best = std::numeric_limits<double>::infinity();
        const double step = (hi - lo) / 400.0;
        for (int k = 0; k <= 400; ++k) {
            const double eta = lo + k * step;
            const StageState st = steady_at(eta);
            if (st.h.minCoeff() < 20.0 - 1e-9) continue;
            const double val = prob.objective.value(st.q, st.h);
            if (val < best) {
                best = val;
                best_eta = eta;
            }
        }
        lo = best_eta - step;
        hi = best_eta + step;
    }
    CHECK(std::abs(out.eta[0] - best_eta) <= 1e-3);
}

TEST_CASE("solve_stage descends the stage Lagrangian from a feasible start") {
    const StageSetup s = setup(fixtures::toy3(), 1.2, 4);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> nudge(-1.0, 1.0);
    for (int t = 0; t < 4; ++t) {
        const StageState& start = s.start.stages[t];
        Vec h_bar = start.h, z(3), y(3);
        for (Index i = 0; i < 3; ++i) {
            h_bar[i] += nudge(rng);
            z[i] = 0.1 * nudge(rng);
            y[i] = 0.2 * nudge(rng);
        }
        const StageProblem prob = s.problem(t, h_bar, z, y, 2.0);
        const double l_start = stage_lagrangian(prob, start.q, start.h);
        const auto [out, report] = solve_stage(prob, start);
        CHECK(stage_lagrangian(prob, out.q, out.h) <= l_start + 1e-10);
        CHECK(stage_feasibility(s, out, t) <= 1e-6);
        CHECK(report.feasibility_norm <= 1e-6);
    }
}

TEST_CASE("kkt report is consistent with its convergence flag") {
    const StageSetup s = setup(fixtures::toy3(), 1.0);
    const Vec zero = Vec::Zero(3);
    const StageProblem prob = s.problem(0, s.start.stages[0].h, zero, zero, 1.0);
    const auto [out, report] = solve_stage(prob, s.start.stages[0]);
    if (report.converged) {
        CHECK(report.stationarity_norm <= 1e-6);
        CHECK(report.feasibility_norm <= 1e-6);
    }
    CHECK(report.iterations > 0);
}

TEST_CASE("crossed bounds raise a parameter error") {
    StageSetup s = setup(fixtures::single_pipe_pcv(), 8.0);
    StageProblem prob = s.problem(0, s.start.stages[0].h, Vec::Zero(2), Vec::Zero(2), 1.0);
    prob.eta_lo[0] = 5.0;
    prob.eta_up[0] = -5.0;
    CHECK_THROWS_AS(solve_stage(prob, s.start.stages[0]), ParameterError);
}

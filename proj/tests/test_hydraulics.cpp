#include <doctest.h>

#include "fixtures.hpp"
#include "wdn/hydraulics.hpp"

using namespace wdn;

namespace {

StageState steady_no_control(const Network& net, double demand_lps, double source_head) {
    const Incidence inc = build_incidence(net);
    const Vec d = Vec::Constant(net.junction_count, demand_lps * 1e-3);
    const Vec h0 = Vec::Constant(net.source_count, source_head);
    return solve_steady(net, inc, d, h0, Vec::Zero(net.pcv_count()), Vec::Zero(net.afv_count()));
}

double residual_inf(const Network& net, const StageState& s, const Vec& d, const Vec& h0) {
    const Incidence inc = build_incidence(net);
    const Vec energy =
        inc.A12 * s.h + inc.A10 * h0 + headloss(s.q, net) + inc.A13 * s.eta;
    const Vec mass = inc.A12.transpose() * s.q - d - inc.A14 * s.alpha;
    return std::max(energy.lpNorm<Eigen::Infinity>(), mass.lpNorm<Eigen::Infinity>());
}

}  // namespace

TEST_CASE("single pipe matches the closed-form head drop") {
    const Network net = fixtures::single_pipe();
    const double d = 5e-3;
    const StageState s = steady_no_control(net, 5.0, 50.0);
    CHECK(s.q[0] == doctest::Approx(d).epsilon(1e-10));
    const double expected = 50.0 - net.resistances[0] * std::pow(d, 1.852);
    CHECK(s.h[0] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("zero demand gives source heads and no flow") {
    for (const Network& net : {fixtures::triangle(), fixtures::ladder()}) {
        const StageState s = steady_no_control(net, 0.0, 47.0);
        CHECK(s.q.lpNorm<Eigen::Infinity>() <= 1e-6);
        CHECK((s.h.array() - 47.0).abs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("identical parallel pipes split the demand evenly") {
    const Network net = fixtures::parallel_pipes();
    const StageState s = steady_no_control(net, 6.0, 40.0);
    CHECK(s.q[0] == doctest::Approx(s.q[1]).epsilon(1e-10));
    CHECK(s.q[0] + s.q[1] == doctest::Approx(6e-3).epsilon(1e-10));
}

TEST_CASE("steady solve meets the residual tolerance on assorted networks") {
    const std::vector<Network> nets = {fixtures::single_pipe(), fixtures::single_pipe_pcv(),
                                       fixtures::triangle(), fixtures::parallel_pipes(),
                                       fixtures::ladder(), fixtures::toy3()};
    for (const Network& net : nets) {
        const Vec d = Vec::Constant(net.junction_count, 2.5e-3);
        const Vec h0 = Vec::Constant(net.source_count, 52.0);
        const Incidence inc = build_incidence(net);
        const StageState s = solve_steady(net, inc, d, h0, Vec::Zero(net.pcv_count()),
                                          Vec::Zero(net.afv_count()));
        CHECK(residual_inf(net, s, d, h0) <= 1e-8);
    }
}

TEST_CASE("steady solve honors nonzero controls") {
    const Network net = fixtures::toy3();
    const Incidence inc = build_incidence(net);
    const Vec d = Vec::Constant(3, 1e-3);
    const Vec h0 = Vec::Constant(1, 50.0);
    const Vec eta = Vec::Constant(1, 10.0);
    const Vec alpha = Vec::Constant(1, 0.02);
    const StageState s = solve_steady(net, inc, d, h0, eta, alpha);
    const Vec energy = inc.A12 * s.h + inc.A10 * h0 + headloss(s.q, net) + inc.A13 * eta;
    const Vec mass = inc.A12.transpose() * s.q - d - inc.A14 * alpha;
    CHECK(energy.lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(mass.lpNorm<Eigen::Infinity>() <= 1e-8);
    // the inlet valve eats 10 m on top of its own friction loss
    CHECK(s.h[0] < 40.0);
}

TEST_CASE("solve_steady is bit-deterministic") {
    const Network net = fixtures::triangle();
    const StageState a = steady_no_control(net, 3.0, 50.0);
    const StageState b = steady_no_control(net, 3.0, 50.0);
    CHECK(a.q == b.q);
    CHECK(a.h == b.h);
}

TEST_CASE("disconnected junction raises a structural error") {
    Network net = fixtures::triangle();
    ++net.junction_count;
    net.junction_names.push_back("island");
    net.elevation.conservativeResize(4);
    net.elevation[3] = 0.0;
    net.h_min_node.conservativeResize(4);
    net.h_min_node[3] = 15.0;
    net.azp_weights = Vec();
    net.scc_weights = Vec();
    net.finalize();
    const Incidence inc = build_incidence(net);
    CHECK_THROWS_AS(solve_steady(net, inc, Vec::Zero(4), Vec::Constant(1, 50.0), Vec(0), Vec(0)),
                    StructuralError);
}

TEST_CASE("feasible start is constant over constant scenarios") {
    const Network net = fixtures::triangle();
    const Incidence inc = build_incidence(net);
    const Scenario scen = fixtures::constant_scenario(net, 4, 2.0);
    const Bounds bounds = make_bounds(net, scen);
    const Trajectory traj = feasible_start(net, inc, scen, bounds);
    REQUIRE(traj.size() == 4);
    for (int t = 1; t < 4; ++t) {
        CHECK(traj.stages[t].q == traj.stages[0].q);
        CHECK(traj.stages[t].h == traj.stages[0].h);
    }
    for (int t = 0; t < 4; ++t) {
        CHECK(traj.stages[t].eta.size() == 0);
        const auto res = stage_constraint_residual(traj.stages[t].q, traj.stages[t].h,
                                                   traj.stages[t].eta, traj.stages[t].alpha, net,
                                                   inc, scen, bounds, t);
        CHECK(res.energy.lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK(res.mass.lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("feasible start rejects baselines breaching the head floor") {
    Network net = fixtures::single_pipe();
    net.h_min_node[0] = 49.9;  // the no-control head is ~49.14 m
    const Incidence inc = build_incidence(net);
    const Scenario scen = fixtures::constant_scenario(net, 1, 5.0);
    const Bounds bounds = make_bounds(net, scen);
    CHECK_THROWS_AS(feasible_start(net, inc, scen, bounds), InvariantError);
}

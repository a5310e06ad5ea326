#pragma once

// Small networks shared across the test suites. All units follow the library
// convention: flows m^3/s, heads m.

#include "wdn/hydraulics.hpp"
#include "wdn/network.hpp"

namespace fixtures {

using namespace wdn;

/// source(50 m) --pipe--> j0 with a single demand.
inline Network single_pipe() {
    Network net;
    net.name = "single-pipe";
    net.source_count = 1;
    net.source_names = {"src"};
    net.junction_count = 1;
    net.junction_names = {"j0"};
    net.elevation = Vec::Zero(1);
    net.h_min_node = Vec::Constant(1, 15.0);
    net.links.push_back({{true, 0}, {false, 0}, LinkKind::pipe, 100.0, 100.0, 0.1, 0.0});
    net.link_names = {"p0"};
    net.alpha_max = Vec(0);
    net.finalize();
    net.validate();
    return net;
}

/// source(50) --pipe--> j0 --PCV valve--> j1; demand at j1. Length weighting
/// would zero out j1 (it only touches the valve), so the weights are explicit.
inline Network single_pipe_pcv() {
    Network net;
    net.name = "pipe-pcv";
    net.source_count = 1;
    net.source_names = {"src"};
    net.junction_count = 2;
    net.junction_names = {"j0", "j1"};
    net.elevation = Vec::Zero(2);
    net.h_min_node = Vec::Constant(2, 20.0);
    net.links.push_back({{true, 0}, {false, 0}, LinkKind::pipe, 200.0, 120.0, 0.15, 0.0});
    net.links.push_back({{false, 0}, {false, 1}, LinkKind::valve, 0.0, 0.0, 0.1, 5.0});
    net.link_names = {"p0", "v0"};
    net.pcv_links = {1};
    net.alpha_max = Vec(0);
    net.azp_weights = Vec(2);
    net.azp_weights << 0.4, 0.6;
    net.finalize();
    net.validate();
    return net;
}

/// 1 source + 3 junctions + 4 pipes with a loop.
inline Network triangle() {
    Network net;
    net.name = "triangle";
    net.source_count = 1;
    net.source_names = {"src"};
    net.junction_count = 3;
    net.junction_names = {"j0", "j1", "j2"};
    net.elevation = Vec::Zero(3);
    net.h_min_node = Vec::Constant(3, 15.0);
    net.links.push_back({{true, 0}, {false, 0}, LinkKind::pipe, 150.0, 110.0, 0.2, 0.0});
    net.links.push_back({{false, 0}, {false, 1}, LinkKind::pipe, 120.0, 100.0, 0.15, 0.0});
    net.links.push_back({{false, 0}, {false, 2}, LinkKind::pipe, 180.0, 100.0, 0.15, 0.0});
    net.links.push_back({{false, 1}, {false, 2}, LinkKind::pipe, 100.0, 95.0, 0.1, 0.0});
    net.link_names = {"main", "b1", "b2", "b3"};
    net.alpha_max = Vec(0);
    net.finalize();
    net.validate();
    return net;
}

/// Two identical pipes feeding one demand node.
inline Network parallel_pipes() {
    Network net;
    net.name = "parallel";
    net.source_count = 1;
    net.source_names = {"src"};
    net.junction_count = 1;
    net.junction_names = {"j0"};
    net.elevation = Vec::Zero(1);
    net.h_min_node = Vec::Constant(1, 15.0);
    net.links.push_back({{true, 0}, {false, 0}, LinkKind::pipe, 100.0, 100.0, 0.1, 0.0});
    net.links.push_back({{true, 0}, {false, 0}, LinkKind::pipe, 100.0, 100.0, 0.1, 0.0});
    net.link_names = {"pA", "pB"};
    net.alpha_max = Vec(0);
    net.finalize();
    net.validate();
    return net;
}

/// Chain of 8 junctions off one source, light demands.
inline Network ladder() {
    Network net;
    net.name = "ladder";
    net.source_count = 1;
    net.source_names = {"src"};
    net.junction_count = 8;
    net.elevation = Vec::Zero(8);
    net.h_min_node = Vec::Constant(8, 10.0);
    for (int i = 0; i < 8; ++i) net.junction_names.push_back("j" + std::to_string(i));
    net.links.push_back({{true, 0}, {false, 0}, LinkKind::pipe, 80.0, 120.0, 0.25, 0.0});
    net.link_names = {"l0"};
    for (int i = 0; i + 1 < 8; ++i) {
        net.links.push_back(
            {{false, i}, {false, i + 1}, LinkKind::pipe, 60.0 + 5.0 * i, 110.0, 0.15, 0.0});
        net.link_names.push_back("l" + std::to_string(i + 1));
    }
    // one cross link making a loop
    net.links.push_back({{false, 2}, {false, 5}, LinkKind::pipe, 90.0, 100.0, 0.12, 0.0});
    net.link_names.push_back("cross");
    net.alpha_max = Vec(0);
    net.finalize();
    net.validate();
    return net;
}

/// Inlet PCV + downstream loop + AFV: the instance the solver suites share.
/// Pressure control wants low heads all day; the flushing step pushes several
/// meters of loss through the loop, so tight range tolerances couple the
/// steps.
inline Network toy3() {
    Network net;
    net.name = "toy3";
    net.source_count = 1;
    net.source_names = {"src"};
    net.junction_count = 3;
    net.junction_names = {"j0", "j1", "j2"};
    net.elevation = Vec(3);
    net.elevation << 2.0, 1.0, 0.0;
    net.h_min_node = Vec::Constant(3, 8.0);
    net.links.push_back({{true, 0}, {false, 0}, LinkKind::valve, 0.0, 0.0, 0.2, 10.0});
    net.links.push_back({{false, 0}, {false, 1}, LinkKind::pipe, 120.0, 100.0, 0.12, 0.0});
    net.links.push_back({{false, 0}, {false, 2}, LinkKind::pipe, 180.0, 100.0, 0.12, 0.0});
    net.links.push_back({{false, 1}, {false, 2}, LinkKind::pipe, 100.0, 100.0, 0.10, 0.0});
    net.link_names = {"inlet", "p1", "p2", "p3"};
    net.pcv_links = {0};
    net.afv_nodes = {2};
    net.alpha_max = Vec::Constant(1, 0.025);
    net.finalize();
    net.validate();
    return net;
}

inline Scenario constant_scenario(const Network& net, int nt, double demand_lps,
                                  double source_head = 50.0) {
    Scenario scen;
    scen.name = "constant";
    scen.horizon = nt;
    scen.step_minutes = 60.0;
    scen.demands = Mat::Constant(nt, net.junction_count, demand_lps * 1e-3);
    scen.source_heads = Mat::Constant(nt, net.source_count, source_head);
    scen.validate(net);
    return scen;
}

/// 4-step scenario for toy3 with a demand peak and an SCC step at t=3.
inline Scenario toy3_scenario() {
    Scenario scen;
    scen.name = "toy3-day";
    scen.horizon = 4;
    scen.step_minutes = 60.0;
    scen.demands.resize(4, 3);
    scen.demands << 1.0e-3, 0.8e-3, 0.6e-3,
                    1.2e-3, 1.0e-3, 0.8e-3,
                    1.5e-3, 1.3e-3, 1.1e-3,
                    1.1e-3, 0.9e-3, 0.7e-3;
    scen.source_heads = Mat::Constant(4, 1, 50.0);
    scen.scc_window = {3};
    return scen;
}

}  // namespace fixtures

#pragma once

#include <vector>

#include "wdn/network.hpp"

namespace wdn {

struct StageState {
    Vec q;      // n_p, m^3/s
    Vec h;      // n_n, m
    Vec eta;    // n_v, m
    Vec alpha;  // n_f, m^3/s
};

struct Trajectory {
    std::vector<StageState> stages;

    int size() const { return static_cast<int>(stages.size()); }
};

/// Stacks the per-stage heads into an n_t x n_n matrix.
Mat head_matrix(const Trajectory& traj);

struct SteadyOptions {
    double tol = 1e-8;
    int max_iter = 200;
    int max_halvings = 40;
};

/// Newton solve of the per-step energy/mass equations for fixed controls.
StageState solve_steady(const Network& net, const Incidence& inc, const Vec& demand,
                        const Vec& source_head, const Vec& eta, const Vec& alpha,
                        const SteadyOptions& opts = {});

/// No-control trajectory (eta = 0, alpha = 0) over the whole horizon; checks
/// each stage against the stage constraint set before returning.
Trajectory feasible_start(const Network& net, const Incidence& inc, const Scenario& scen,
                          const Bounds& bounds, const SteadyOptions& opts = {});

}  // namespace wdn

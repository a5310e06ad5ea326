#pragma once

#include <utility>

#include "wdn/hydraulics.hpp"
#include "wdn/nlp.hpp"
#include "wdn/objectives.hpp"

namespace wdn {

/// One time step's block problem: minimize the consensus-augmented stage cost
/// over (q, h, eta, alpha) subject to the hydraulic constraint set of step t.
struct StageProblem {
    const Network* net = nullptr;
    const Incidence* inc = nullptr;
    int t = 0;
    Vec demand;       // n_n
    Vec source_head;  // n_0
    Vec h_min, h_max; // n_n
    Vec eta_lo, eta_up;  // n_v
    Vec alpha_max;       // n_f
    StageObjective objective;
    Vec h_bar, z, y;  // n_n consensus data
    double rho = 0.0;
};

StageProblem make_stage_problem(const Network& net, const Incidence& inc, const Scenario& scen,
                                const Bounds& bounds, const SccParams& params, int t,
                                const Vec& h_bar, const Vec& z, const Vec& y, double rho);

/// f_t(q, h) + <y, h - h_bar + z> + (rho/2) ||h - h_bar + z||^2. Controls do
/// not enter the cost.
double stage_lagrangian(const StageProblem& prob, const Vec& q, const Vec& h);

/// (q, h) gradient blocks of stage_lagrangian.
std::pair<Vec, Vec> stage_lagrangian_grad(const StageProblem& prob, const Vec& q, const Vec& h);

struct KktReport {
    double stationarity_norm = 0.0;
    double feasibility_norm = 0.0;
    double complementarity_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Local solve of the stage problem from a warm start. The returned point
/// never has a worse stage Lagrangian than a feasible warm start.
std::pair<StageState, KktReport> solve_stage(const StageProblem& prob, const StageState& start,
                                             const AlmOptions& opts = {});

}  // namespace wdn

#pragma once

#include "wdn/admm.hpp"

namespace wdn {

/// Reference solve of the whole coupled horizon in one NLP, with the range
/// constraint expressed through per-node envelope variables.
struct CentralizedResult {
    Trajectory traj;
    Vec c_lower, c_upper;  // per-node envelope
    double objective = 0.0;
    RangeViolation violation;
    AlmReport report;
    bool converged = false;
    double wall_seconds = 0.0;
};

CentralizedResult solve_centralized(const ControlProblem& problem, const AlmOptions& opts = {});

}  // namespace wdn

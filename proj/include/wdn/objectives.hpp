#pragma once

#include "wdn/network.hpp"

namespace wdn {

struct SccParams {
    double threshold_velocity = 0.2;  // m/s
    double steepness = 50.0;

    void validate() const {
        if (threshold_velocity <= 0.0) throw ParameterError("threshold velocity must be positive");
        if (steepness <= 0.0) throw ParameterError("logistic steepness must be positive");
    }
};

/// Weighted mean pressure head over junctions, in meters.
double azp(const Vec& h, const Network& net);
Vec azp_grad(const Network& net);

/// Weighted fraction of the network carrying self-cleaning velocities,
/// smoothed by a pair of logistic switches per link.
double scc(const Vec& q, const Network& net, const SccParams& params);
Vec scc_grad(const Vec& q, const Network& net, const SccParams& params);

/// Stage cost: pressure surrogate normally, negated self-cleaning capacity
/// inside the SCC window.
struct StageObjective {
    const Network* net = nullptr;
    SccParams params;
    bool scc_mode = false;

    double value(const Vec& q, const Vec& h) const;
    /// Accumulates the (q, h) gradient blocks.
    void add_gradient(const Vec& q, const Vec& h, Vec& gq, Vec& gh) const;
};

StageObjective stage_objective(int t, const Scenario& scen, const Network& net,
                               const SccParams& params);

}  // namespace wdn

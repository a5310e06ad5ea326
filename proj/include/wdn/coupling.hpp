#pragma once

#include <limits>

#include "wdn/errors.hpp"
#include "wdn/types.hpp"

namespace wdn {

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct CouplingSpec {
    double delta = kUnbounded;  // m; +inf disables the range constraint

    bool active() const { return std::isfinite(delta); }
};

struct RangeViolation {
    double max_violation = 0.0;
    int violating_nodes = 0;
};

/// Per-node exceedance of the allowed head range over the horizon; h is
/// n_t x n_n.
RangeViolation range_violation(const Mat& h, double delta);

/// Euclidean projection of one node's head series onto
/// { x : max(x) - min(x) <= delta }.
Vec project_node_range(const Vec& v, double delta);

/// Coordination update: projects h + z + y/rho onto the range set, node by
/// node. Standard consensus form is the z = 0 special case.
Mat coordinate(const Mat& h, const Mat& z, const Mat& y, double rho, const CouplingSpec& spec);

struct DeltaCheck {
    bool feasible = true;
    int binding_node = -1;       // junction with the widest no-control range
    double baseline_range = 0.0; // that node's range, m
};

/// Rejects tolerances tighter than what the no-control hydraulics already
/// exhibit; such a delta leaves the problem without a known feasible point.
DeltaCheck validate_delta(const Mat& baseline_h, double delta, double tol = 1e-6);

}  // namespace wdn

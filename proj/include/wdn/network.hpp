#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wdn/errors.hpp"
#include "wdn/types.hpp"

namespace wdn {

enum class LinkKind { pipe, valve };

/// Endpoint of a link: either a junction (index into junction arrays) or a
/// source node (index into source arrays).
struct NodeRef {
    bool source = false;
    int idx = -1;

    bool operator==(const NodeRef&) const = default;
};

struct Link {
    NodeRef from;
    NodeRef to;
    LinkKind kind = LinkKind::pipe;
    double length = 0.0;     // m (pipes)
    double hw_coeff = 0.0;   // dimensionless (pipes)
    double diameter = 0.0;   // m
    double loss_coeff = 0.0; // dimensionless (valves)
};

inline double link_exponent(const Link& link) {
    return link.kind == LinkKind::pipe ? 1.852 : 2.0;
}

/// Head-loss resistance in SI units.
double link_resistance(const Link& link);

struct Network {
    std::string name;
    int junction_count = 0;
    int source_count = 0;
    std::vector<Link> links;
    std::vector<int> pcv_links;  // link indices carrying a PCV
    std::vector<int> afv_nodes;  // junction indices carrying an AFV

    Vec elevation;      // per junction, m
    Vec h_min_node;     // per junction regulatory minimum head, m
    Vec alpha_max;      // per AFV flushing cap, m^3/s
    Vec azp_weights;    // per junction, sums to 1
    Vec scc_weights;    // per link, sums to 1
    Vec cross_sections; // per link, m^2
    Vec resistances;    // per link, derived
    Vec exponents;      // per link, derived

    std::vector<std::string> junction_names;
    std::vector<std::string> source_names;
    std::vector<std::string> link_names;

    int link_count() const { return static_cast<int>(links.size()); }
    int pcv_count() const { return static_cast<int>(pcv_links.size()); }
    int afv_count() const { return static_cast<int>(afv_nodes.size()); }

    /// Fills derived per-link data and any weight vector left empty.
    void finalize();
    /// Throws InvariantError/StructuralError on the first violated invariant.
    void validate() const;
};

struct Incidence {
    SpMat A12;  // n_p x n_n, +1 where the link enters a junction
    SpMat A10;  // n_p x n_0, same convention for sources
    SpMat A13;  // n_p x n_v PCV placement
    SpMat A14;  // n_n x n_f AFV placement
};

Incidence build_incidence(const Network& net);

struct Scenario {
    std::string name;
    int horizon = 0;            // n_t
    double step_minutes = 60.0;
    Mat demands;                // n_t x n_n, m^3/s
    Mat source_heads;           // n_t x n_0, m
    std::vector<int> scc_window;  // 1-based time steps running in SCC mode

    bool is_scc_step(int t) const {  // t is 0-based
        for (int w : scc_window)
            if (w == t + 1) return true;
        return false;
    }
    void validate(const Network& net) const;
};

struct Bounds {
    Mat h_min, h_max;    // n_t x n_n
    Mat eta_lo, eta_up;  // n_t x n_v
    Vec alpha_max;       // n_f

    void validate() const;
};

/// Per-time bounds: h_max broadcasts the largest source head of each step,
/// eta bounds come from the admissible heads at each PCV's endpoints.
Bounds make_bounds(const Network& net, const Scenario& scen);

// ---------------------------------------------------------------------------
// Head loss
// ---------------------------------------------------------------------------

/// Below this flow the loss curve is replaced by an odd cubic with matching
/// value and slope at +-kFlowSmoothing, keeping Newton solvers away from the
/// unbounded curvature of |q|^(n-1) at the origin.
inline constexpr double kFlowSmoothing = 1e-4;  // m^3/s

template <typename T>
T headloss(T q, double r, double n) {
    using std::abs;
    const T aq = abs(q);
    if (aq >= T(kFlowSmoothing)) return r * std::pow(aq, n - 1.0) * q;
    const double en = std::pow(kFlowSmoothing, n - 1.0);
    const double a = r * en * (3.0 - n) / 2.0;
    const double b = r * en / (kFlowSmoothing * kFlowSmoothing) * (n - 1.0) / 2.0;
    return a * q + b * q * q * q;
}

template <typename T>
T headloss_grad(T q, double r, double n) {
    using std::abs;
    const T aq = abs(q);
    if (aq >= T(kFlowSmoothing)) return n * r * std::pow(aq, n - 1.0);
    const double en = std::pow(kFlowSmoothing, n - 1.0);
    const double a = r * en * (3.0 - n) / 2.0;
    const double b = r * en / (kFlowSmoothing * kFlowSmoothing) * (n - 1.0) / 2.0;
    return a + 3.0 * b * q * q;
}

/// Per-link loss phi(q) over the whole network.
Vec headloss(const Vec& q, const Network& net);
Vec headloss_grad(const Vec& q, const Network& net);

// ---------------------------------------------------------------------------
// Stage feasibility
// ---------------------------------------------------------------------------

struct StageResidual {
    Vec energy;                 // n_p, m
    Vec mass;                   // n_n, m^3/s
    double bound_violation = 0.0;      // largest positive bound exceedance
    double direction_violation = 0.0;  // largest PCV direction violation
};

StageResidual stage_constraint_residual(const Vec& q, const Vec& h, const Vec& eta,
                                        const Vec& alpha, const Network& net,
                                        const Incidence& inc, const Scenario& scen,
                                        const Bounds& bounds, int t);

}  // namespace wdn

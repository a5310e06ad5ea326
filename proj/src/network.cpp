#include "wdn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace wdn {

namespace {

std::string node_label(const Network& net, const NodeRef& ref) {
    const auto& names = ref.source ? net.source_names : net.junction_names;
    if (ref.idx >= 0 && ref.idx < static_cast<int>(names.size())) return names[ref.idx];
    return (ref.source ? "source#" : "junction#") + std::to_string(ref.idx);
}

bool valid_ref(const Network& net, const NodeRef& ref) {
    const int count = ref.source ? net.source_count : net.junction_count;
    return ref.idx >= 0 && ref.idx < count;
}

}  // namespace

double link_resistance(const Link& link) {
    if (link.diameter <= 0.0)
        throw ParameterError("link diameter must be positive");
    if (link.kind == LinkKind::valve) {
        if (link.loss_coeff < 0.0)
            throw ParameterError("valve loss coefficient must be nonnegative");
        const double d4 = std::pow(link.diameter, 4.0);
        return 8.0 * link.loss_coeff / (kGravity * std::numbers::pi * std::numbers::pi * d4);
    }
    if (link.hw_coeff <= 0.0)
        throw ParameterError("Hazen-Williams coefficient must be positive");
    if (link.length < 0.0)
        throw ParameterError("pipe length must be nonnegative");
    return 10.67 * link.length / (std::pow(link.hw_coeff, 1.852) * std::pow(link.diameter, 4.871));
}

void Network::finalize() {
    const int np = link_count();
    resistances.resize(np);
    exponents.resize(np);
    cross_sections.resize(np);
    for (int j = 0; j < np; ++j) {
        resistances[j] = link_resistance(links[j]);
        exponents[j] = link_exponent(links[j]);
        cross_sections[j] = std::numbers::pi * links[j].diameter * links[j].diameter / 4.0;
    }

    if (azp_weights.size() == 0) {
        // Length-weighting of a junction's connected links, renormalized.
        Vec w = Vec::Zero(junction_count);
        for (const Link& link : links) {
            if (link.kind != LinkKind::pipe) continue;
            if (!link.from.source) w[link.from.idx] += link.length;
            if (!link.to.source) w[link.to.idx] += link.length;
        }
        const double total = w.sum();
        azp_weights = total > 0.0 ? Vec(w / total)
                                  : Vec(Vec::Constant(junction_count, 1.0 / junction_count));
    }
    if (scc_weights.size() == 0) {
        Vec w = Vec::Zero(np);
        for (int j = 0; j < np; ++j)
            if (links[j].kind == LinkKind::pipe) w[j] = links[j].length;
        const double total = w.sum();
        scc_weights = total > 0.0 ? Vec(w / total) : Vec(Vec::Constant(np, 1.0 / np));
    }
}

void Network::validate() const {
    if (junction_count <= 0) throw InvariantError("network has no junctions");
    if (source_count <= 0) throw InvariantError("network has no source nodes");
    if (links.empty()) throw InvariantError("network has no links");

    for (size_t j = 0; j < links.size(); ++j) {
        const Link& link = links[j];
        if (!valid_ref(*this, link.from) || !valid_ref(*this, link.to))
            throw StructuralError("link " + std::to_string(j) + " references a missing node");
        if (link.from.source && link.to.source)
            throw StructuralError("link " + std::to_string(j) + " connects two sources");
        if (link.from == link.to)
            throw StructuralError("link " + std::to_string(j) + " is a self-loop");
        if (link.diameter <= 0.0)
            throw InvariantError("link " + std::to_string(j) + " has nonpositive diameter");
        if (link.kind == LinkKind::pipe && link.length < 0.0)
            throw InvariantError("link " + std::to_string(j) + " has negative length");
        if (link.kind == LinkKind::valve && link.loss_coeff < 0.0)
            throw InvariantError("link " + std::to_string(j) + " has negative loss coefficient");
    }

    std::set<int> seen;
    for (int j : pcv_links) {
        if (j < 0 || j >= link_count())
            throw InvariantError("pcv placement references missing link " + std::to_string(j));
        if (!seen.insert(j).second)
            throw InvariantError("duplicate PCV placement on link " + std::to_string(j));
    }
    seen.clear();
    for (int i : afv_nodes) {
        if (i < 0 || i >= junction_count)
            throw InvariantError("afv placement references missing junction " + std::to_string(i));
        if (!seen.insert(i).second)
            throw InvariantError("duplicate AFV placement on junction " + std::to_string(i));
    }

    auto check_weights = [](const Vec& w, int n, const std::string& what) {
        if (w.size() != n) throw InvariantError(what + " has wrong length");
        if ((w.array() < 0.0).any()) throw InvariantError(what + " has a negative entry");
        if (std::abs(w.sum() - 1.0) > 1e-9) throw InvariantError(what + " does not sum to 1");
    };
    check_weights(azp_weights, junction_count, "azp_weights");
    check_weights(scc_weights, link_count(), "scc_weights");

    if (elevation.size() != junction_count)
        throw InvariantError("elevation vector has wrong length");
    if (h_min_node.size() != junction_count)
        throw InvariantError("h_min vector has wrong length");
    if (alpha_max.size() != afv_count())
        throw InvariantError("alpha_max vector has wrong length");
    if ((alpha_max.array() < 0.0).any())
        throw InvariantError("alpha_max has a negative entry");
    if (cross_sections.size() != link_count() || (cross_sections.array() <= 0.0).any())
        throw InvariantError("cross_sections must be strictly positive");
}

Incidence build_incidence(const Network& net) {
    const int np = net.link_count();
    std::vector<Triplet> t12, t10, t13, t14;
    for (int j = 0; j < np; ++j) {
        const Link& link = net.links[j];
        if (!valid_ref(net, link.from) || !valid_ref(net, link.to))
            throw StructuralError("link " + std::to_string(j) + " references node " +
                                  node_label(net, !valid_ref(net, link.from) ? link.from : link.to));
        // -1 at the node the link leaves, +1 at the node it enters.
        if (link.from.source)
            t10.emplace_back(j, link.from.idx, -1.0);
        else
            t12.emplace_back(j, link.from.idx, -1.0);
        if (link.to.source)
            t10.emplace_back(j, link.to.idx, 1.0);
        else
            t12.emplace_back(j, link.to.idx, 1.0);
    }
    for (int v = 0; v < net.pcv_count(); ++v) t13.emplace_back(net.pcv_links[v], v, 1.0);
    for (int f = 0; f < net.afv_count(); ++f) t14.emplace_back(net.afv_nodes[f], f, 1.0);

    Incidence inc;
    inc.A12.resize(np, net.junction_count);
    inc.A10.resize(np, net.source_count);
    inc.A13.resize(np, net.pcv_count());
    inc.A14.resize(net.junction_count, net.afv_count());
    inc.A12.setFromTriplets(t12.begin(), t12.end());
    inc.A10.setFromTriplets(t10.begin(), t10.end());
    inc.A13.setFromTriplets(t13.begin(), t13.end());
    inc.A14.setFromTriplets(t14.begin(), t14.end());
    return inc;
}

void Scenario::validate(const Network& net) const {
    if (horizon <= 0) throw InvariantError("scenario horizon must be positive");
    if (step_minutes <= 0.0) throw InvariantError("scenario step must be positive");
    if (demands.rows() != horizon || demands.cols() != net.junction_count)
        throw InvariantError("demand table shape does not match horizon x junctions");
    if (source_heads.rows() != horizon || source_heads.cols() != net.source_count)
        throw InvariantError("source head table shape does not match horizon x sources");
    if ((demands.array() < 0.0).any())
        throw InvariantError("demands must be nonnegative");
    for (int w : scc_window)
        if (w < 1 || w > horizon)
            throw InvariantError("scc window step " + std::to_string(w) +
                                 " outside horizon 1.." + std::to_string(horizon));
}

void Bounds::validate() const {
    if ((h_min.array() > h_max.array()).any())
        throw InvariantError("h_min exceeds h_max at some node/time");
    if ((eta_lo.array() > eta_up.array()).any())
        throw InvariantError("eta lower bound exceeds upper bound");
    if ((alpha_max.array() < 0.0).any())
        throw InvariantError("alpha_max has a negative entry");
}

Bounds make_bounds(const Network& net, const Scenario& scen) {
    const int nt = scen.horizon;
    const int nn = net.junction_count;
    const int nv = net.pcv_count();

    Bounds b;
    b.h_min.resize(nt, nn);
    b.h_max.resize(nt, nn);
    b.eta_lo.resize(nt, nv);
    b.eta_up.resize(nt, nv);
    b.alpha_max = net.alpha_max;

    for (int t = 0; t < nt; ++t) {
        const double hmax_t = scen.source_heads.row(t).maxCoeff();
        b.h_min.row(t) = net.h_min_node.transpose();
        b.h_max.row(t).setConstant(hmax_t);

        for (int v = 0; v < nv; ++v) {
            const Link& link = net.links[net.pcv_links[v]];
            auto lo_of = [&](const NodeRef& n) {
                return n.source ? scen.source_heads(t, n.idx) : net.h_min_node[n.idx];
            };
            auto hi_of = [&](const NodeRef& n) {
                return n.source ? scen.source_heads(t, n.idx) : hmax_t;
            };
            b.eta_up(t, v) = std::max(0.0, hi_of(link.from) - lo_of(link.to));
            b.eta_lo(t, v) = -std::max(0.0, hi_of(link.to) - lo_of(link.from));
        }
    }
    b.validate();
    return b;
}

Vec headloss(const Vec& q, const Network& net) {
    Vec phi(q.size());
    for (Index j = 0; j < q.size(); ++j)
        phi[j] = headloss(q[j], net.resistances[j], net.exponents[j]);
    return phi;
}

Vec headloss_grad(const Vec& q, const Network& net) {
    Vec g(q.size());
    for (Index j = 0; j < q.size(); ++j)
        g[j] = headloss_grad(q[j], net.resistances[j], net.exponents[j]);
    return g;
}

StageResidual stage_constraint_residual(const Vec& q, const Vec& h, const Vec& eta,
                                        const Vec& alpha, const Network& net,
                                        const Incidence& inc, const Scenario& scen,
                                        const Bounds& bounds, int t) {
    StageResidual res;
    res.energy = inc.A12 * h + inc.A10 * scen.source_heads.row(t).transpose() +
                 headloss(q, net) + inc.A13 * eta;
    res.mass = inc.A12.transpose() * q - scen.demands.row(t).transpose() - inc.A14 * alpha;

    double bviol = 0.0;
    for (Index i = 0; i < h.size(); ++i) {
        bviol = std::max(bviol, bounds.h_min(t, i) - h[i]);
        bviol = std::max(bviol, h[i] - bounds.h_max(t, i));
    }
    for (Index v = 0; v < eta.size(); ++v) {
        bviol = std::max(bviol, bounds.eta_lo(t, v) - eta[v]);
        bviol = std::max(bviol, eta[v] - bounds.eta_up(t, v));
    }
    for (Index f = 0; f < alpha.size(); ++f) {
        bviol = std::max(bviol, -alpha[f]);
        bviol = std::max(bviol, alpha[f] - bounds.alpha_max[f]);
    }
    res.bound_violation = std::max(0.0, bviol);

    double dviol = 0.0;
    for (int v = 0; v < net.pcv_count(); ++v)
        dviol = std::max(dviol, -q[net.pcv_links[v]] * eta[v]);
    res.direction_violation = std::max(0.0, dviol);
    return res;
}

}  // namespace wdn

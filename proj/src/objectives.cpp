#include "wdn/objectives.hpp"

#include <cmath>

namespace wdn {

namespace {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double azp(const Vec& h, const Network& net) {
    return net.azp_weights.dot(h - net.elevation);
}

Vec azp_grad(const Network& net) { return net.azp_weights; }

double scc(const Vec& q, const Network& net, const SccParams& params) {
    const double k = params.steepness;
    const double vthr = params.threshold_velocity;
    double total = 0.0;
    for (Index j = 0; j < q.size(); ++j) {
        const double v = q[j] / net.cross_sections[j];
        total += net.scc_weights[j] * (logistic(k * (v - vthr)) + logistic(-k * (v + vthr)));
    }
    return total;
}

Vec scc_grad(const Vec& q, const Network& net, const SccParams& params) {
    const double k = params.steepness;
    const double vthr = params.threshold_velocity;
    Vec g(q.size());
    for (Index j = 0; j < q.size(); ++j) {
        const double s = net.cross_sections[j];
        const double v = q[j] / s;
        const double p = logistic(k * (v - vthr));
        const double m = logistic(-k * (v + vthr));
        g[j] = net.scc_weights[j] * k * (p * (1.0 - p) - m * (1.0 - m)) / s;
    }
    return g;
}

double StageObjective::value(const Vec& q, const Vec& h) const {
    return scc_mode ? -scc(q, *net, params) : azp(h, *net);
}

void StageObjective::add_gradient(const Vec& q, const Vec& h, Vec& gq, Vec& gh) const {
    (void)h;
    if (scc_mode)
        gq -= scc_grad(q, *net, params);
    else
        gh += azp_grad(*net);
}

StageObjective stage_objective(int t, const Scenario& scen, const Network& net,
                               const SccParams& params) {
    return {&net, params, scen.is_scc_step(t)};
}

}  // namespace wdn

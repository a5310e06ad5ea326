#include "wdn/centralized.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace wdn {

namespace {

struct HorizonLayout {
    int np, nn, nv, nf, nt;
    bool with_envelope;

    HorizonLayout(const Network& net, int horizon, bool envelope)
        : np(net.link_count()), nn(net.junction_count), nv(net.pcv_count()),
          nf(net.afv_count()), nt(horizon), with_envelope(envelope) {}

    int stage_size() const { return np + nn + nv + nf; }
    int total() const { return nt * stage_size() + (with_envelope ? 2 * nn : 0); }
    int q_at(int t) const { return t * stage_size(); }
    int h_at(int t) const { return t * stage_size() + np; }
    int eta_at(int t) const { return t * stage_size() + np + nn; }
    int alpha_at(int t) const { return t * stage_size() + np + nn + nv; }
    int c_upper_at() const { return nt * stage_size(); }
    int c_lower_at() const { return nt * stage_size() + nn; }

    int eq_count() const { return nt * (np + nn); }
    int ineq_count() const { return nt * nv + (with_envelope ? 2 * nt * nn + nn : 0); }
};

}  // namespace

CentralizedResult solve_centralized(const ControlProblem& problem, const AlmOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const Network& net = *problem.net;
    const Incidence& inc = *problem.inc;
    const Scenario& scen = *problem.scen;
    const Bounds& bounds = *problem.bounds;
    const double delta = problem.coupling.delta;
    const HorizonLayout lay(net, scen.horizon, problem.coupling.active());
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<StageObjective> objectives;
    objectives.reserve(lay.nt);
    for (int t = 0; t < lay.nt; ++t)
        objectives.push_back(stage_objective(t, scen, net, problem.scc));

    BoxNlp nlp;
    nlp.lower = Vec::Constant(lay.total(), -inf);
    nlp.upper = Vec::Constant(lay.total(), inf);
    for (int t = 0; t < lay.nt; ++t) {
        nlp.lower.segment(lay.h_at(t), lay.nn) = bounds.h_min.row(t).transpose();
        nlp.upper.segment(lay.h_at(t), lay.nn) = bounds.h_max.row(t).transpose();
        nlp.lower.segment(lay.eta_at(t), lay.nv) = bounds.eta_lo.row(t).transpose();
        nlp.upper.segment(lay.eta_at(t), lay.nv) = bounds.eta_up.row(t).transpose();
        nlp.lower.segment(lay.alpha_at(t), lay.nf).setZero();
        nlp.upper.segment(lay.alpha_at(t), lay.nf) = bounds.alpha_max;
    }

    nlp.objective = [&, lay](const Vec& x, Vec* grad) {
        double total = 0.0;
        for (int t = 0; t < lay.nt; ++t) {
            const Vec q = x.segment(lay.q_at(t), lay.np);
            const Vec h = x.segment(lay.h_at(t), lay.nn);
            total += objectives[t].value(q, h);
            if (grad) {
                Vec gq = Vec::Zero(lay.np);
                Vec gh = Vec::Zero(lay.nn);
                objectives[t].add_gradient(q, h, gq, gh);
                grad->segment(lay.q_at(t), lay.np) += gq;
                grad->segment(lay.h_at(t), lay.nn) += gh;
            }
        }
        return total;
    };

    nlp.eq_count = lay.eq_count();
    nlp.equalities = [&, lay](const Vec& x, Vec& c) {
        c.resize(lay.eq_count());
        for (int t = 0; t < lay.nt; ++t) {
            const Vec q = x.segment(lay.q_at(t), lay.np);
            const int base = t * (lay.np + lay.nn);
            c.segment(base, lay.np) = inc.A12 * x.segment(lay.h_at(t), lay.nn) +
                                      inc.A10 * scen.source_heads.row(t).transpose() +
                                      headloss(q, net) +
                                      inc.A13 * x.segment(lay.eta_at(t), lay.nv);
            c.segment(base + lay.np, lay.nn) = inc.A12.transpose() * q -
                                               scen.demands.row(t).transpose() -
                                               inc.A14 * x.segment(lay.alpha_at(t), lay.nf);
        }
    };
    nlp.eq_grad_accum = [&, lay](const Vec& x, const Vec& w, Vec& grad) {
        for (int t = 0; t < lay.nt; ++t) {
            const int base = t * (lay.np + lay.nn);
            const auto w_energy = w.segment(base, lay.np);
            const auto w_mass = w.segment(base + lay.np, lay.nn);
            const Vec dphi = headloss_grad(Vec(x.segment(lay.q_at(t), lay.np)), net);
            grad.segment(lay.q_at(t), lay.np) += dphi.cwiseProduct(w_energy) + inc.A12 * w_mass;
            grad.segment(lay.h_at(t), lay.nn) += inc.A12.transpose() * w_energy;
            grad.segment(lay.eta_at(t), lay.nv) += inc.A13.transpose() * w_energy;
            grad.segment(lay.alpha_at(t), lay.nf) -= inc.A14.transpose() * w_mass;
        }
    };

    nlp.ineq_count = lay.ineq_count();
    nlp.inequalities = [&, lay, delta](const Vec& x, Vec& g) {
        g.resize(lay.ineq_count());
        int row = 0;
        for (int t = 0; t < lay.nt; ++t)
            for (int v = 0; v < lay.nv; ++v)
                g[row++] = x[lay.q_at(t) + net.pcv_links[v]] * x[lay.eta_at(t) + v];
        if (lay.with_envelope) {
            for (int t = 0; t < lay.nt; ++t)
                for (int i = 0; i < lay.nn; ++i)
                    g[row++] = x[lay.c_upper_at() + i] - x[lay.h_at(t) + i];
            for (int t = 0; t < lay.nt; ++t)
                for (int i = 0; i < lay.nn; ++i)
                    g[row++] = x[lay.h_at(t) + i] - x[lay.c_lower_at() + i];
            for (int i = 0; i < lay.nn; ++i)
                g[row++] = delta - (x[lay.c_upper_at() + i] - x[lay.c_lower_at() + i]);
        }
    };
    nlp.ineq_grad_accum = [&, lay](const Vec& x, const Vec& w, Vec& grad) {
        int row = 0;
        for (int t = 0; t < lay.nt; ++t)
            for (int v = 0; v < lay.nv; ++v) {
                const int jq = lay.q_at(t) + net.pcv_links[v];
                const int je = lay.eta_at(t) + v;
                grad[jq] += w[row] * x[je];
                grad[je] += w[row] * x[jq];
                ++row;
            }
        if (lay.with_envelope) {
            for (int t = 0; t < lay.nt; ++t)
                for (int i = 0; i < lay.nn; ++i) {
                    grad[lay.c_upper_at() + i] += w[row];
                    grad[lay.h_at(t) + i] -= w[row];
                    ++row;
                }
            for (int t = 0; t < lay.nt; ++t)
                for (int i = 0; i < lay.nn; ++i) {
                    grad[lay.h_at(t) + i] += w[row];
                    grad[lay.c_lower_at() + i] -= w[row];
                    ++row;
                }
            for (int i = 0; i < lay.nn; ++i) {
                grad[lay.c_upper_at() + i] -= w[row];
                grad[lay.c_lower_at() + i] += w[row];
                ++row;
            }
        }
    };

    Vec x(lay.total());
    for (int t = 0; t < lay.nt; ++t) {
        const StageState& s = problem.start->stages[t];
        x.segment(lay.q_at(t), lay.np) = s.q;
        x.segment(lay.h_at(t), lay.nn) = s.h;
        x.segment(lay.eta_at(t), lay.nv) = s.eta;
        x.segment(lay.alpha_at(t), lay.nf) = s.alpha;
    }
    if (lay.with_envelope) {
        const Mat h0 = head_matrix(*problem.start);
        x.segment(lay.c_upper_at(), lay.nn) = h0.colwise().maxCoeff().transpose();
        x.segment(lay.c_lower_at(), lay.nn) = h0.colwise().minCoeff().transpose();
    }

    const AlmReport report = alm_solve(nlp, x, opts);

    CentralizedResult result;
    result.traj.stages.resize(lay.nt);
    for (int t = 0; t < lay.nt; ++t) {
        result.traj.stages[t] = {x.segment(lay.q_at(t), lay.np), x.segment(lay.h_at(t), lay.nn),
                                 x.segment(lay.eta_at(t), lay.nv),
                                 x.segment(lay.alpha_at(t), lay.nf)};
    }
    const Mat h = head_matrix(result.traj);
    if (lay.with_envelope) {
        result.c_upper = x.segment(lay.c_upper_at(), lay.nn);
        result.c_lower = x.segment(lay.c_lower_at(), lay.nn);
    } else {
        result.c_upper = h.colwise().maxCoeff().transpose();
        result.c_lower = h.colwise().minCoeff().transpose();
    }
    result.objective = total_objective(result.traj, scen, net, problem.scc);
    result.violation = range_violation(h, delta);
    result.report = report;
    result.converged = report.converged;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace wdn

#include "wdn/stage_nlp.hpp"

#include <cmath>
#include <limits>

namespace wdn {

namespace {

struct Layout {
    int np, nn, nv, nf;

    explicit Layout(const Network& net)
        : np(net.link_count()), nn(net.junction_count), nv(net.pcv_count()),
          nf(net.afv_count()) {}

    int total() const { return np + nn + nv + nf; }
    auto q(const Vec& x) const { return x.segment(0, np); }
    auto h(const Vec& x) const { return x.segment(np, nn); }
    auto eta(const Vec& x) const { return x.segment(np + nn, nv); }
    auto alpha(const Vec& x) const { return x.segment(np + nn + nv, nf); }
};

BoxNlp build_stage_nlp(const StageProblem& prob) {
    const Network& net = *prob.net;
    const Incidence& inc = *prob.inc;
    const Layout lay(net);
    const double inf = std::numeric_limits<double>::infinity();

    BoxNlp nlp;
    nlp.lower = Vec::Constant(lay.total(), -inf);
    nlp.upper = Vec::Constant(lay.total(), inf);
    nlp.lower.segment(lay.np, lay.nn) = prob.h_min;
    nlp.upper.segment(lay.np, lay.nn) = prob.h_max;
    nlp.lower.segment(lay.np + lay.nn, lay.nv) = prob.eta_lo;
    nlp.upper.segment(lay.np + lay.nn, lay.nv) = prob.eta_up;
    nlp.lower.segment(lay.np + lay.nn + lay.nv, lay.nf).setZero();
    nlp.upper.segment(lay.np + lay.nn + lay.nv, lay.nf) = prob.alpha_max;

    nlp.objective = [&prob, lay](const Vec& x, Vec* grad) {
        const Vec q = lay.q(x);
        const Vec h = lay.h(x);
        const Vec consensus = h - prob.h_bar + prob.z;
        double val = prob.objective.value(q, h) + prob.y.dot(consensus) +
                     0.5 * prob.rho * consensus.squaredNorm();
        if (grad) {
            Vec gq = Vec::Zero(lay.np);
            Vec gh = prob.y + prob.rho * consensus;
            prob.objective.add_gradient(q, h, gq, gh);
            grad->segment(0, lay.np) += gq;
            grad->segment(lay.np, lay.nn) += gh;
        }
        return val;
    };

    nlp.eq_count = lay.np + lay.nn;
    nlp.equalities = [&prob, &net, &inc, lay](const Vec& x, Vec& c) {
        c.resize(lay.np + lay.nn);
        c.head(lay.np) = inc.A12 * lay.h(x) + inc.A10 * prob.source_head +
                         headloss(Vec(lay.q(x)), net) + inc.A13 * lay.eta(x);
        c.tail(lay.nn) = inc.A12.transpose() * lay.q(x) - prob.demand - inc.A14 * lay.alpha(x);
    };
    nlp.eq_grad_accum = [&net, &inc, lay](const Vec& x, const Vec& w, Vec& grad) {
        const auto w_energy = w.head(lay.np);
        const auto w_mass = w.tail(lay.nn);
        const Vec dphi = headloss_grad(Vec(lay.q(x)), net);
        grad.segment(0, lay.np) += dphi.cwiseProduct(w_energy) + inc.A12 * w_mass;
        grad.segment(lay.np, lay.nn) += inc.A12.transpose() * w_energy;
        grad.segment(lay.np + lay.nn, lay.nv) += inc.A13.transpose() * w_energy;
        grad.segment(lay.np + lay.nn + lay.nv, lay.nf) -= inc.A14.transpose() * w_mass;
    };

    nlp.ineq_count = lay.nv;
    if (lay.nv > 0) {
        nlp.inequalities = [&net, lay](const Vec& x, Vec& g) {
            g.resize(lay.nv);
            for (int v = 0; v < lay.nv; ++v)
                g[v] = x[net.pcv_links[v]] * x[lay.np + lay.nn + v];
        };
        nlp.ineq_grad_accum = [&net, lay](const Vec& x, const Vec& w, Vec& grad) {
            for (int v = 0; v < lay.nv; ++v) {
                const int j = net.pcv_links[v];
                grad[j] += w[v] * x[lay.np + lay.nn + v];
                grad[lay.np + lay.nn + v] += w[v] * x[j];
            }
        };
    }
    return nlp;
}

Vec pack(const Layout& lay, const StageState& s) {
    Vec x(lay.total());
    x.segment(0, lay.np) = s.q;
    x.segment(lay.np, lay.nn) = s.h;
    x.segment(lay.np + lay.nn, lay.nv) = s.eta;
    x.segment(lay.np + lay.nn + lay.nv, lay.nf) = s.alpha;
    return x;
}

StageState unpack(const Layout& lay, const Vec& x) {
    return {lay.q(x), lay.h(x), lay.eta(x), lay.alpha(x)};
}

}  // namespace

StageProblem make_stage_problem(const Network& net, const Incidence& inc, const Scenario& scen,
                                const Bounds& bounds, const SccParams& params, int t,
                                const Vec& h_bar, const Vec& z, const Vec& y, double rho) {
    StageProblem prob;
    prob.net = &net;
    prob.inc = &inc;
    prob.t = t;
    prob.demand = scen.demands.row(t).transpose();
    prob.source_head = scen.source_heads.row(t).transpose();
    prob.h_min = bounds.h_min.row(t).transpose();
    prob.h_max = bounds.h_max.row(t).transpose();
    prob.eta_lo = bounds.eta_lo.row(t).transpose();
    prob.eta_up = bounds.eta_up.row(t).transpose();
    prob.alpha_max = bounds.alpha_max;
    prob.objective = stage_objective(t, scen, net, params);
    prob.h_bar = h_bar;
    prob.z = z;
    prob.y = y;
    prob.rho = rho;
    return prob;
}

double stage_lagrangian(const StageProblem& prob, const Vec& q, const Vec& h) {
    const Vec consensus = h - prob.h_bar + prob.z;
    return prob.objective.value(q, h) + prob.y.dot(consensus) +
           0.5 * prob.rho * consensus.squaredNorm();
}

std::pair<Vec, Vec> stage_lagrangian_grad(const StageProblem& prob, const Vec& q, const Vec& h) {
    Vec gq = Vec::Zero(q.size());
    Vec gh = prob.y + prob.rho * (h - prob.h_bar + prob.z);
    prob.objective.add_gradient(q, h, gq, gh);
    return {gq, gh};
}

std::pair<StageState, KktReport> solve_stage(const StageProblem& prob, const StageState& start,
                                             const AlmOptions& opts) {
    const Layout lay(*prob.net);
    const BoxNlp nlp = build_stage_nlp(prob);
    Vec x = pack(lay, start);

    auto lagrangian_of = [&](const Vec& xx) {
        return stage_lagrangian(prob, Vec(lay.q(xx)), Vec(lay.h(xx)));
    };
    auto violations_of = [&](const Vec& xx) {
        Vec c, g;
        nlp.equalities(xx, c);
        double eq = c.lpNorm<Eigen::Infinity>();
        double in = 0.0;
        if (nlp.ineq_count > 0) {
            nlp.inequalities(xx, g);
            in = std::max(0.0, -g.minCoeff());
        }
        return std::pair{eq, in};
    };

    const Vec x_start = x;
    const double start_l = lagrangian_of(x_start);
    const auto [start_eq, start_in] = violations_of(x_start);

    const AlmReport alm = alm_solve(nlp, x, opts);

    // A feasible warm start must never be made worse. If the solve ends above
    // the start's Lagrangian (it can drift by solver tolerance when the start
    // is already optimal), hand the start back instead.
    const bool final_acceptable = alm.feasibility <= opts.tol_feasibility &&
                                  alm.inequality_viol <= opts.tol_inequality &&
                                  lagrangian_of(x) <= start_l + 1e-10;
    const bool start_usable =
        start_eq <= opts.tol_feasibility && start_in <= opts.tol_inequality;
    if (start_usable && !final_acceptable) x = x_start;

    // KKT residual at the returned point with least-squares multipliers over
    // the free coordinates; bound multipliers enter through the projection.
    Vec grad = Vec::Zero(x.size());
    nlp.objective(x, &grad);
    const int mults = nlp.eq_count + nlp.ineq_count;
    if (mults > 0) {
        Mat jac_t = Mat::Zero(x.size(), mults);  // [J_E^T | J_I^T]
        Vec column(x.size());
        for (int k = 0; k < nlp.eq_count; ++k) {
            column.setZero();
            nlp.eq_grad_accum(x, Vec(Vec::Unit(nlp.eq_count, k)), column);
            jac_t.col(k) = column;
        }
        for (int k = 0; k < nlp.ineq_count; ++k) {
            column.setZero();
            nlp.ineq_grad_accum(x, Vec(Vec::Unit(nlp.ineq_count, k)), column);
            jac_t.col(nlp.eq_count + k) = column;
        }
        std::vector<Index> free_rows;
        for (Index i = 0; i < x.size(); ++i) {
            const double span = 1e-9 * (1.0 + std::abs(x[i]));
            if (x[i] - nlp.lower[i] > span && nlp.upper[i] - x[i] > span) free_rows.push_back(i);
        }
        if (!free_rows.empty()) {
            Mat jf(free_rows.size(), mults);
            Vec gf(free_rows.size());
            for (size_t a = 0; a < free_rows.size(); ++a) {
                jf.row(a) = jac_t.row(free_rows[a]);
                gf[a] = grad[free_rows[a]];
            }
            const Vec w = jf.colPivHouseholderQr().solve(-gf);
            grad += jac_t * w;
        }
    }

    const auto [eq_viol, in_viol] = violations_of(x);
    KktReport report;
    report.stationarity_norm =
        (x - (x - grad).cwiseMax(nlp.lower).cwiseMin(nlp.upper)).lpNorm<Eigen::Infinity>();
    report.feasibility_norm = std::max(eq_viol, in_viol);
    double comp = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double slack = std::min(x[i] - nlp.lower[i], nlp.upper[i] - x[i]);
        comp = std::max(comp, std::min(slack, std::abs(grad[i])));
    }
    report.complementarity_norm = comp;
    report.iterations = alm.inner_iterations;
    report.converged = report.stationarity_norm <= opts.tol_stationarity &&
                       eq_viol <= opts.tol_feasibility && in_viol <= opts.tol_inequality &&
                       lagrangian_of(x) <= start_l + 1e-10;
    return {unpack(lay, x), report};
}

}  // namespace wdn

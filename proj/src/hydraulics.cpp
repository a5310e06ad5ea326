#include "wdn/hydraulics.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace wdn {

namespace {

/// Hop distance from the nearest source, used only to orient the initial flow
/// guess; throws when some node cannot be reached from any source.
std::vector<int> source_distances(const Network& net) {
    const int nn = net.junction_count;
    std::vector<int> dist(nn, -1);
    std::deque<int> queue;

    std::vector<std::vector<int>> adjacent(nn);  // junction -> junction edges
    std::vector<int> seed(nn, 0);
    for (const Link& link : net.links) {
        if (link.from.source && !link.to.source) seed[link.to.idx] = 1;
        if (link.to.source && !link.from.source) seed[link.from.idx] = 1;
        if (!link.from.source && !link.to.source) {
            adjacent[link.from.idx].push_back(link.to.idx);
            adjacent[link.to.idx].push_back(link.from.idx);
        }
    }
    for (int i = 0; i < nn; ++i)
        if (seed[i]) {
            dist[i] = 1;
            queue.push_back(i);
        }
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        for (int k : adjacent[i])
            if (dist[k] < 0) {
                dist[k] = dist[i] + 1;
                queue.push_back(k);
            }
    }
    for (int i = 0; i < nn; ++i)
        if (dist[i] < 0) {
            const std::string label = i < static_cast<int>(net.junction_names.size())
                                          ? net.junction_names[i]
                                          : std::to_string(i);
            throw StructuralError("junction " + label + " is not connected to any source");
        }
    return dist;
}

Vec residual(const Network& net, const Incidence& inc, const Vec& demand,
             const Vec& source_head, const Vec& eta, const Vec& alpha, const Vec& q,
             const Vec& h) {
    const int np = net.link_count();
    const int nn = net.junction_count;
    Vec f(np + nn);
    f.head(np) = inc.A12 * h + inc.A10 * source_head + headloss(q, net) + inc.A13 * eta;
    f.tail(nn) = inc.A12.transpose() * q - demand - inc.A14 * alpha;
    return f;
}

SpMat jacobian(const Network& net, const Incidence& inc, const Vec& q, double reg) {
    const int np = net.link_count();
    const int nn = net.junction_count;
    const Vec dphi = headloss_grad(q, net);

    std::vector<Triplet> trip;
    trip.reserve(np + 4 * np + nn);
    for (int j = 0; j < np; ++j) trip.emplace_back(j, j, dphi[j] + reg);
    for (int c = 0; c < inc.A12.outerSize(); ++c)
        for (SpMat::InnerIterator it(inc.A12, c); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), np + static_cast<int>(it.col()),
                              it.value());
            trip.emplace_back(np + static_cast<int>(it.col()), static_cast<int>(it.row()),
                              it.value());
        }
    if (reg > 0.0)
        for (int i = 0; i < nn; ++i) trip.emplace_back(np + i, np + i, -reg);

    SpMat jac(np + nn, np + nn);
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
}

}  // namespace

Mat head_matrix(const Trajectory& traj) {
    if (traj.stages.empty()) return {};
    Mat h(traj.size(), traj.stages[0].h.size());
    for (int t = 0; t < traj.size(); ++t) h.row(t) = traj.stages[t].h.transpose();
    return h;
}

StageState solve_steady(const Network& net, const Incidence& inc, const Vec& demand,
                        const Vec& source_head, const Vec& eta, const Vec& alpha,
                        const SteadyOptions& opts) {
    const int np = net.link_count();
    const int nn = net.junction_count;
    const std::vector<int> dist = source_distances(net);

    Vec q(np);
    for (int j = 0; j < np; ++j) {
        const Link& link = net.links[j];
        const int dfrom = link.from.source ? 0 : dist[link.from.idx];
        const int dto = link.to.source ? 0 : dist[link.to.idx];
        q[j] = dfrom <= dto ? 1e-3 : -1e-3;
    }
    Vec h = Vec::Constant(nn, source_head.mean());

    Vec f = residual(net, inc, demand, source_head, eta, alpha, q, h);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (f.head(np).lpNorm<Eigen::Infinity>() <= opts.tol &&
            f.tail(nn).lpNorm<Eigen::Infinity>() <= opts.tol) {
            return {q, h, eta, alpha};
        }

        Eigen::SparseLU<SpMat> lu;
        lu.compute(jacobian(net, inc, q, 0.0));
        Vec step;
        if (lu.info() == Eigen::Success) step = lu.solve(-f);
        if (lu.info() != Eigen::Success || !step.allFinite()) {
            lu.compute(jacobian(net, inc, q, 1e-12));
            if (lu.info() != Eigen::Success)
                throw NonconvergenceError(
                    "steady-state Jacobian is singular after regularization; |energy|=" +
                    std::to_string(f.head(np).lpNorm<Eigen::Infinity>()) + " |mass|=" +
                    std::to_string(f.tail(nn).lpNorm<Eigen::Infinity>()));
            step = lu.solve(-f);
        }

        const double fnorm = f.norm();
        double scale = 1.0;
        Vec qn, hn, fn;
        for (int halvings = 0; halvings <= opts.max_halvings; ++halvings) {
            qn = q + scale * step.head(np);
            hn = h + scale * step.tail(nn);
            fn = residual(net, inc, demand, source_head, eta, alpha, qn, hn);
            if (fn.allFinite() && fn.norm() <= fnorm) break;
            scale *= 0.5;
        }
        q = qn;
        h = hn;
        f = fn;
    }

    std::ostringstream msg;
    msg << "steady-state solve did not converge in " << opts.max_iter
        << " iterations; |energy|=" << f.head(np).lpNorm<Eigen::Infinity>()
        << " |mass|=" << f.tail(nn).lpNorm<Eigen::Infinity>();
    throw NonconvergenceError(msg.str());
}

Trajectory feasible_start(const Network& net, const Incidence& inc, const Scenario& scen,
                          const Bounds& bounds, const SteadyOptions& opts) {
    Trajectory traj;
    traj.stages.reserve(scen.horizon);
    const Vec eta0 = Vec::Zero(net.pcv_count());
    const Vec alpha0 = Vec::Zero(net.afv_count());

    for (int t = 0; t < scen.horizon; ++t) {
        StageState stage;
        try {
            stage = solve_steady(net, inc, scen.demands.row(t).transpose(),
                                 scen.source_heads.row(t).transpose(), eta0, alpha0, opts);
        } catch (const Error& err) {
            throw NonconvergenceError("feasible start failed at step " + std::to_string(t + 1) +
                                      ": " + err.what());
        }
        const StageResidual res = stage_constraint_residual(stage.q, stage.h, stage.eta,
                                                            stage.alpha, net, inc, scen, bounds, t);
        if (res.bound_violation > 1e-6)
            throw InvariantError("no-control state violates variable bounds by " +
                                 std::to_string(res.bound_violation) + " at step " +
                                 std::to_string(t + 1));
        traj.stages.push_back(std::move(stage));
    }
    return traj;
}

}  // namespace wdn

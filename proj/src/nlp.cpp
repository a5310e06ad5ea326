#include "wdn/nlp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include "wdn/errors.hpp"

namespace wdn {

namespace {

Vec clamp_to_box(const Vec& x, const Vec& lo, const Vec& up) {
    return x.cwiseMax(lo).cwiseMin(up);
}

double projected_gradient_norm(const Vec& x, const Vec& g, const Vec& lo, const Vec& up) {
    return (x - clamp_to_box(x - g, lo, up)).lpNorm<Eigen::Infinity>();
}

}  // namespace

QnReport projected_quasi_newton(const std::function<double(const Vec&, Vec*)>& objective,
                                const Vec& lower, const Vec& upper, Vec& x, double tol,
                                int max_iter) {
    const Index n = x.size();
    x = clamp_to_box(x, lower, upper);

    Vec grad = Vec::Zero(n);
    double fval = objective(x, &grad);
    Mat hess_approx = Mat::Identity(n, n);

    QnReport report;
    std::vector<Index> free_set;
    free_set.reserve(n);

    for (int it = 0; it < max_iter; ++it) {
        report.iterations = it;
        report.pg_norm = projected_gradient_norm(x, grad, lower, upper);
        if (report.pg_norm <= tol) {
            report.converged = true;
            return report;
        }

        free_set.clear();
        for (Index i = 0; i < n; ++i) {
            const double span = 1e-9 * (1.0 + std::abs(x[i]));
            const bool at_lower = x[i] - lower[i] <= span && grad[i] > 0.0;
            const bool at_upper = upper[i] - x[i] <= span && grad[i] < 0.0;
            if (!at_lower && !at_upper) free_set.push_back(i);
        }

        Vec dir = Vec::Zero(n);
        bool have_qn_dir = false;
        if (!free_set.empty()) {
            const Index nf = static_cast<Index>(free_set.size());
            Mat bff(nf, nf);
            Vec gf(nf);
            for (Index a = 0; a < nf; ++a) {
                gf[a] = grad[free_set[a]];
                for (Index b = 0; b < nf; ++b) bff(a, b) = hess_approx(free_set[a], free_set[b]);
            }
            Eigen::LDLT<Mat> ldlt(bff);
            if (ldlt.info() == Eigen::Success) {
                const Vec df = ldlt.solve(-gf);
                if (df.allFinite() && df.dot(gf) < 0.0) {
                    for (Index a = 0; a < nf; ++a) dir[free_set[a]] = df[a];
                    have_qn_dir = true;
                }
            }
        }
        if (!have_qn_dir) dir = -grad;

        // Armijo backtracking along the projected arc, falling back to
        // steepest descent if the quasi-Newton direction stalls.
        Vec x_new, grad_new;
        double f_new = fval;
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double step = 1.0;
            for (int ls = 0; ls < 60; ++ls) {
                Vec cand = clamp_to_box(x + step * dir, lower, upper);
                const Vec move = cand - x;
                if (move.lpNorm<Eigen::Infinity>() <= 1e-16 * (1.0 + x.lpNorm<Eigen::Infinity>()))
                    break;
                const double slope = grad.dot(move);
                const double f_cand = objective(cand, nullptr);
                if (std::isfinite(f_cand) &&
                    f_cand <= fval + 1e-4 * std::min(slope, 0.0) + 1e-15 * std::abs(fval)) {
                    x_new = std::move(cand);
                    f_new = f_cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted && attempt == 0) dir = -grad;
        }
        if (!accepted) break;  // stalled; report the current projected gradient

        grad_new = Vec::Zero(n);
        objective(x_new, &grad_new);

        const Vec s = x_new - x;
        const Vec yv = grad_new - grad;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            const Vec bs = hess_approx * s;
            const double sbs = s.dot(bs);
            if (sbs > 0.0) hess_approx -= (bs * bs.transpose()) / sbs;
            hess_approx += (yv * yv.transpose()) / sy;
        }

        x = std::move(x_new);
        fval = f_new;
        grad = std::move(grad_new);
    }

    report.pg_norm = projected_gradient_norm(x, grad, lower, upper);
    report.converged = report.pg_norm <= tol;
    return report;
}

AlmReport alm_solve(const BoxNlp& nlp, Vec& x, const AlmOptions& opts,
                    const AlmObserver& observer) {
    const Index n = x.size();
    if (nlp.lower.size() != n || nlp.upper.size() != n)
        throw ParameterError("NLP bounds do not match the variable count");
    if ((nlp.lower.array() > nlp.upper.array()).any())
        throw ParameterError("NLP has an empty box (lower > upper)");

    Vec mult_eq = Vec::Zero(nlp.eq_count);
    Vec mult_in = Vec::Zero(nlp.ineq_count);
    double penalty = opts.penalty0;
    double inner_tol = opts.inner_tol0;
    double prev_feas = std::numeric_limits<double>::infinity();

    Vec c(nlp.eq_count), g(nlp.ineq_count);
    AlmReport report;

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        report.outer_iterations = outer + 1;

        auto composite = [&](const Vec& xx, Vec* grad) {
            double val = nlp.objective(xx, grad);
            if (nlp.eq_count > 0) {
                nlp.equalities(xx, c);
                val += mult_eq.dot(c) + 0.5 * penalty * c.squaredNorm();
                if (grad) nlp.eq_grad_accum(xx, mult_eq + penalty * c, *grad);
            }
            if (nlp.ineq_count > 0) {
                nlp.inequalities(xx, g);
                Vec shifted = (mult_in - penalty * g).cwiseMax(0.0);
                val += shifted.squaredNorm() / (2.0 * penalty);
                if (grad) nlp.ineq_grad_accum(xx, -shifted, *grad);
            }
            return val;
        };

        const QnReport qn =
            projected_quasi_newton(composite, nlp.lower, nlp.upper, x, inner_tol, opts.max_inner);
        report.inner_iterations += qn.iterations;
        report.stationarity = qn.pg_norm;
        if (std::getenv("WDN_ALM_TRACE"))
            std::fprintf(stderr, "alm pass %d: pg=%.3e tol=%.3e iters=%d penalty=%.1e\n",
                         outer + 1, qn.pg_norm, inner_tol, qn.iterations, penalty);

        double eq_viol = 0.0, ineq_viol = 0.0;
        if (nlp.eq_count > 0) {
            nlp.equalities(x, c);
            eq_viol = c.lpNorm<Eigen::Infinity>();
            mult_eq += penalty * c;
        }
        if (nlp.ineq_count > 0) {
            nlp.inequalities(x, g);
            ineq_viol = std::max(0.0, -g.minCoeff());
            mult_in = (mult_in - penalty * g).cwiseMax(0.0);
        }
        report.feasibility = eq_viol;
        report.inequality_viol = ineq_viol;
        if (observer) observer(x, eq_viol, ineq_viol);

        const bool feasible =
            eq_viol <= opts.tol_feasibility && ineq_viol <= opts.tol_inequality;
        if (feasible && qn.pg_norm <= opts.tol_stationarity) {
            report.converged = true;
            break;
        }

        const double feas = std::max(eq_viol, ineq_viol);
        if (feas > opts.feas_progress * prev_feas)
            penalty = std::min(opts.penalty_cap, penalty * opts.penalty_growth);
        prev_feas = feas;
        inner_tol = std::max(opts.tol_stationarity, inner_tol * opts.inner_tol_shrink);
    }

    Vec grad = Vec::Zero(n);
    nlp.objective(x, &grad);
    if (nlp.eq_count > 0) {
        nlp.equalities(x, c);
        nlp.eq_grad_accum(x, mult_eq, grad);
        report.feasibility = c.lpNorm<Eigen::Infinity>();
    }
    if (nlp.ineq_count > 0) {
        nlp.inequalities(x, g);
        nlp.ineq_grad_accum(x, -mult_in, grad);
        report.inequality_viol = std::max(0.0, -g.minCoeff());
    }
    double comp = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double slack = std::min(x[i] - nlp.lower[i], nlp.upper[i] - x[i]);
        comp = std::max(comp, std::min(slack, std::abs(grad[i])));
    }
    report.complementarity = comp;
    report.mult_eq = std::move(mult_eq);
    report.mult_in = std::move(mult_in);
    return report;
}

}  // namespace wdn

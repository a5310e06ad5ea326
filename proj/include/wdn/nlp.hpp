#pragma once

#include <functional>

#include "wdn/errors.hpp"
#include "wdn/types.hpp"

namespace wdn {

/// Smooth NLP over a box:
///   minimize f(x)  s.t.  c(x) = 0,  g(x) >= 0,  lower <= x <= upper.
/// Constraint Jacobians enter only through transpose products, so callers
/// never materialize them.
struct BoxNlp {
    Vec lower, upper;
    /// Returns f(x); adds the gradient into *grad when non-null.
    std::function<double(const Vec& x, Vec* grad)> objective;

    int eq_count = 0;
    std::function<void(const Vec& x, Vec& c)> equalities;
    /// grad += J_c(x)^T w
    std::function<void(const Vec& x, const Vec& w, Vec& grad)> eq_grad_accum;

    int ineq_count = 0;
    std::function<void(const Vec& x, Vec& g)> inequalities;
    /// grad += J_g(x)^T w
    std::function<void(const Vec& x, const Vec& w, Vec& grad)> ineq_grad_accum;
};

struct QnReport {
    double pg_norm = 0.0;  // infinity norm of the projected gradient step
    int iterations = 0;
    bool converged = false;
};

/// Projected quasi-Newton (dense BFGS on the free variables, Armijo
/// backtracking along the projected arc).
QnReport projected_quasi_newton(const std::function<double(const Vec&, Vec*)>& objective,
                                const Vec& lower, const Vec& upper, Vec& x, double tol,
                                int max_iter);

struct AlmOptions {
    double tol_stationarity = 1e-6;
    double tol_feasibility = 1e-6;  // equality residuals
    double tol_inequality = 1e-8;   // hinge violations
    double penalty0 = 10.0;
    double penalty_growth = 10.0;
    double penalty_cap = 1e8;
    double feas_progress = 0.25;    // required shrink factor per pass
    double inner_tol0 = 1e-2;
    double inner_tol_shrink = 0.2;
    int max_inner = 500;
    int max_outer = 30;
};

struct AlmReport {
    double stationarity = 0.0;
    double feasibility = 0.0;      // max equality residual
    double inequality_viol = 0.0;  // max hinge violation
    double complementarity = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    bool converged = false;
    Vec mult_eq, mult_in;  // final multiplier estimates
};

/// Called after each multiplier pass with the current iterate and its
/// constraint violations; lets callers track the best feasible point seen.
using AlmObserver = std::function<void(const Vec& x, double eq_viol, double ineq_viol)>;

AlmReport alm_solve(const BoxNlp& nlp, Vec& x, const AlmOptions& opts = {},
                    const AlmObserver& observer = nullptr);

}  // namespace wdn

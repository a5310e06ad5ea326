#pragma once

// Test-only reference implementations, kept deliberately independent of the
// library's solution paths.

#include <cmath>
#include <limits>
#include <vector>

#include "wdn/types.hpp"

namespace oracles {

using wdn::Index;
using wdn::Vec;

/// Euclidean projection onto { x : max x - min x <= delta } by brute force:
/// enumerates every assignment of coordinates to {free, at upper envelope,
/// at lower envelope} plus the range constraint's activity, solves each
/// equality-restricted least squares in closed form, and keeps the feasible
/// candidate with the smallest distance.
inline Vec project_range_enumeration(const Vec& v, double delta) {
    const int n = static_cast<int>(v.size());
    const double tol = 1e-9;
    Vec best = v;
    double best_dist = std::numeric_limits<double>::infinity();
    if (v.maxCoeff() - v.minCoeff() <= delta + tol) return v;

    std::vector<int> assign(n, 0);  // 0 free, 1 upper, 2 lower
    int combos = 1;
    for (int i = 0; i < n; ++i) combos *= 3;

    for (int code = 0; code < combos; ++code) {
        int rest = code;
        int n_up = 0, n_down = 0;
        double sum_up = 0.0, sum_down = 0.0;
        for (int i = 0; i < n; ++i) {
            assign[i] = rest % 3;
            rest /= 3;
            if (assign[i] == 1) {
                ++n_up;
                sum_up += v[i];
            } else if (assign[i] == 2) {
                ++n_down;
                sum_down += v[i];
            }
        }
        if (n_up + n_down == 0) continue;  // the unconstrained case was handled above

        for (int range_active = 0; range_active < 2; ++range_active) {
            double c_up = 0.0, c_down = 0.0;
            if (range_active) {
                c_down = (sum_down + sum_up - n_up * delta) / (n_up + n_down);
                c_up = c_down + delta;
            } else {
                if (n_up > 0) c_up = sum_up / n_up;
                if (n_down > 0) c_down = sum_down / n_down;
            }

            Vec x(n);
            for (int i = 0; i < n; ++i)
                x[i] = assign[i] == 0 ? v[i] : (assign[i] == 1 ? c_up : c_down);

            const double hi = x.maxCoeff();
            const double lo = x.minCoeff();
            const double env_up = n_up > 0 ? c_up : hi;
            const double env_down = n_down > 0 ? c_down : lo;
            if (env_up < hi - tol || env_down > lo + tol) continue;
            if (env_up - env_down > delta + tol) continue;

            const double dist = (x - v).squaredNorm();
            if (dist < best_dist) {
                best_dist = dist;
                best = x;
            }
        }
    }
    return best;
}

/// Numerical minimization of the slack terms
///   lambda * z + (beta/2) z^2 + y (r + z) + (rho/2)(r + z)^2
/// via bisection on the first-order condition. Function-value search methods
/// plateau near sqrt(machine eps), so the slope is evaluated term by term.
inline double minimize_slack_terms(double lambda, double y, double r, double beta, double rho,
                                   double bracket = 1e6) {
    const auto slope = [&](double z) { return lambda + beta * z + y + rho * (r + z); };
    double a = -bracket, b = bracket;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (slope(mid) > 0.0)
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

}  // namespace oracles

#include "wdn/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "wdn/errors.hpp"

namespace wdn {

RangeViolation range_violation(const Mat& h, double delta) {
    RangeViolation out;
    if (!std::isfinite(delta)) return out;
    for (Index i = 0; i < h.cols(); ++i) {
        const double range = h.col(i).maxCoeff() - h.col(i).minCoeff();
        const double viol = range - delta;
        if (viol > 0.0) {
            out.max_violation = std::max(out.max_violation, viol);
            ++out.violating_nodes;
        }
    }
    return out;
}

namespace {

/// Squared distance from v to the window [l, l + delta].
double window_distance(const Vec& v, double l, double delta) {
    double g = 0.0;
    for (Index t = 0; t < v.size(); ++t) {
        if (v[t] < l)
            g += (l - v[t]) * (l - v[t]);
        else if (v[t] > l + delta)
            g += (v[t] - l - delta) * (v[t] - l - delta);
    }
    return g;
}

}  // namespace

Vec project_node_range(const Vec& v, double delta) {
    if (!(delta > 0.0)) throw ParameterError("range tolerance must be positive");
    if (!std::isfinite(delta)) return v;
    const Index n = v.size();
    if (n == 0) return v;
    if (v.maxCoeff() - v.minCoeff() <= delta) return v;

    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end());
    std::vector<double> prefix(n + 1, 0.0);
    for (Index t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + u[t];
    const double total = prefix[n];

    // Candidate window starts l live between the breakpoints u_t and u_t -
    // delta, where the fit g(l) is a convex piecewise quadratic.
    std::vector<double> breaks;
    breaks.reserve(2 * n);
    for (double x : u) {
        breaks.push_back(x);
        breaks.push_back(x - delta);
    }
    std::sort(breaks.begin(), breaks.end());

    double best_l = breaks.front();
    double best_g = window_distance(v, best_l, delta);
    for (size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double lo = breaks[k];
        const double hi = breaks[k + 1];
        if (!(hi > lo)) continue;
        const double mid = 0.5 * (lo + hi);

        const auto below_end = std::lower_bound(u.begin(), u.end(), mid);
        const Index nb = below_end - u.begin();
        const double sb = prefix[nb];
        const auto above_begin = std::upper_bound(u.begin(), u.end(), mid + delta);
        const Index na = u.end() - above_begin;
        const double sa = total - prefix[n - na];

        double cand;
        if (nb + na == 0)
            cand = mid;  // flat segment: deterministic tie break
        else
            cand = std::clamp((sb + sa - static_cast<double>(na) * delta) /
                                  static_cast<double>(nb + na),
                              lo, hi);
        const double g = window_distance(v, cand, delta);
        if (g < best_g) {
            best_g = g;
            best_l = cand;
        }
    }

    Vec out(n);
    for (Index t = 0; t < n; ++t) out[t] = std::clamp(v[t], best_l, best_l + delta);
    return out;
}

Mat coordinate(const Mat& h, const Mat& z, const Mat& y, double rho, const CouplingSpec& spec) {
    if (!(rho > 0.0)) throw ParameterError("coordination requires rho > 0");
    Mat target = h + z + y / rho;
    if (!spec.active()) return target;
    Mat out(target.rows(), target.cols());
    for (Index i = 0; i < target.cols(); ++i)
        out.col(i) = project_node_range(target.col(i), spec.delta);
    return out;
}

DeltaCheck validate_delta(const Mat& baseline_h, double delta, double tol) {
    DeltaCheck check;
    for (Index i = 0; i < baseline_h.cols(); ++i) {
        const double range = baseline_h.col(i).maxCoeff() - baseline_h.col(i).minCoeff();
        if (range > check.baseline_range) {
            check.baseline_range = range;
            check.binding_node = static_cast<int>(i);
        }
    }
    check.feasible = delta >= check.baseline_range - tol;
    return check;
}

}  // namespace wdn

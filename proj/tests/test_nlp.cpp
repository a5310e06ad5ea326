#include <doctest.h>

#include <limits>

#include "wdn/nlp.hpp"

using namespace wdn;

namespace {
const double inf = std::numeric_limits<double>::infinity();
}

TEST_CASE("projected quasi-Newton solves a bound-constrained quadratic") {
    // min (x0-3)^2 + (x1+2)^2 with x in [0, 1]^2
    auto f = [](const Vec& x, Vec* g) {
        if (g) {
            (*g)[0] += 2.0 * (x[0] - 3.0);
            (*g)[1] += 2.0 * (x[1] + 2.0);
        }
        return (x[0] - 3.0) * (x[0] - 3.0) + (x[1] + 2.0) * (x[1] + 2.0);
    };
    Vec x = Vec::Constant(2, 0.5);
    const auto report = projected_quasi_newton(f, Vec::Zero(2), Vec::Ones(2), x, 1e-9, 200);
    CHECK(report.converged);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("projected quasi-Newton handles a curved valley") {
    auto rosen = [](const Vec& x, Vec* g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        if (g) {
            (*g)[0] += -2.0 * a - 400.0 * x[0] * b;
            (*g)[1] += 200.0 * b;
        }
        return a * a + 100.0 * b * b;
    };
    Vec x = Vec::Zero(2);
    const Vec lo = Vec::Constant(2, -inf), up = Vec::Constant(2, inf);
    const auto report = projected_quasi_newton(rosen, lo, up, x, 1e-8, 500);
    CHECK(report.converged);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("ALM solves an equality-constrained quadratic") {
    // min x^2 + y^2 s.t. x + y = 1 -> (0.5, 0.5)
    BoxNlp nlp;
    nlp.lower = Vec::Constant(2, -inf);
    nlp.upper = Vec::Constant(2, inf);
    nlp.objective = [](const Vec& x, Vec* g) {
        if (g) *g += 2.0 * x;
        return x.squaredNorm();
    };
    nlp.eq_count = 1;
    nlp.equalities = [](const Vec& x, Vec& c) {
        c.resize(1);
        c[0] = x[0] + x[1] - 1.0;
    };
    nlp.eq_grad_accum = [](const Vec&, const Vec& w, Vec& g) {
        g[0] += w[0];
        g[1] += w[0];
    };
    Vec x = Vec::Zero(2);
    const AlmReport report = alm_solve(nlp, x);
    CHECK(report.converged);
    CHECK(report.feasibility <= 1e-6);
    CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("ALM drives inequality violations below the hinge tolerance") {
    // min (x + 1)^2 s.t. x >= 0 -> x = 0 with an active multiplier
    BoxNlp nlp;
    nlp.lower = Vec::Constant(1, -inf);
    nlp.upper = Vec::Constant(1, inf);
    nlp.objective = [](const Vec& x, Vec* g) {
        if (g) (*g)[0] += 2.0 * (x[0] + 1.0);
        return (x[0] + 1.0) * (x[0] + 1.0);
    };
    nlp.ineq_count = 1;
    nlp.inequalities = [](const Vec& x, Vec& g) {
        g.resize(1);
        g[0] = x[0];
    };
    nlp.ineq_grad_accum = [](const Vec&, const Vec& w, Vec& g) { g[0] += w[0]; };
    Vec x = Vec::Constant(1, -0.8);
    const AlmReport report = alm_solve(nlp, x);
    CHECK(report.converged);
    CHECK(std::abs(x[0]) <= 1e-7);
    CHECK(report.inequality_viol <= 1e-8);
}

TEST_CASE("ALM respects bounds together with constraints") {
    // min -x - 2y s.t. x^2 + y^2 = 1, 0 <= x,y <= 1; optimum at the circle
    BoxNlp nlp;
    nlp.lower = Vec::Zero(2);
    nlp.upper = Vec::Ones(2);
    nlp.objective = [](const Vec& x, Vec* g) {
        if (g) {
            (*g)[0] += -1.0;
            (*g)[1] += -2.0;
        }
        return -x[0] - 2.0 * x[1];
    };
    nlp.eq_count = 1;
    nlp.equalities = [](const Vec& x, Vec& c) {
        c.resize(1);
        c[0] = x.squaredNorm() - 1.0;
    };
    nlp.eq_grad_accum = [](const Vec& x, const Vec& w, Vec& g) { g += 2.0 * w[0] * x; };
    Vec x = Vec::Constant(2, 0.6);
    const AlmReport report = alm_solve(nlp, x);
    CHECK(report.converged);
    CHECK(x[0] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-4));
    CHECK(x[1] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-4));
}

TEST_CASE("ALM rejects an empty box") {
    BoxNlp nlp;
    nlp.lower = Vec::Ones(1);
    nlp.upper = Vec::Zero(1);
    nlp.objective = [](const Vec&, Vec*) { return 0.0; };
    Vec x = Vec::Zero(1);
    CHECK_THROWS_AS(alm_solve(nlp, x), ParameterError);
}

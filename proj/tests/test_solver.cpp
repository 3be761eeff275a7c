#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <span>
#include <vector>

#include "support.hpp"
#include "vide/catalog.hpp"
#include "vide/solver.hpp"

using namespace vide;

namespace {

ProblemSpec constant_rhs_spec() {
    ProblemSpec s;
    s.f = {[](double, std::span<const double>) { return 1.0; }};
    s.kernel = {KernelYT{[](double, double) { return 0.0; }}};
    s.initial = {0.0};
    s.label = "y' = 1";
    return s;
}

}  // namespace

TEST_CASE("constant right-hand side reproduces the nodes exactly") {
    Trajectory t = solve_grid(constant_rhs_spec(), 10);
    for (long i = 0; i <= 10; ++i) CHECK(t.y[0][std::size_t(i)] == t.grid.node(i));
}

TEST_CASE("single hand-checked step of example 8") {
    Trajectory t = solve_grid(builtin(8), 10);
    CHECK(t.grid.h == doctest::Approx(0.1).epsilon(1e-16));
    CHECK(t.y[0][1] == 1.1);  // y0 + h*(f(0,1) + 0), empty integral
}

TEST_CASE("two hand-checked steps of example 7") {
    Trajectory t = solve_grid(builtin(7), 2);
    CHECK(t.y[0][1] == 0.0);  // f(0, 0) = 0 and the integral is empty
    // y2 = h*f(0.5, 0) + h * K1(0.5) * (h/2) * (K2(0) + K2(0.5))
    const double expected = 0.5 * (0.75 - 0.0625 / 3.0) + 0.5 * 0.5 * 0.25 * (0.0 + 0.25);
    CHECK(t.y[0][2] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(t.y[0][2] == doctest::Approx(0.3802083).epsilon(1e-6));
}

TEST_CASE("single step of the first system example") {
    Trajectory t = solve_grid(builtin(13), 1);
    CHECK(t.y[0][1] == 0.0);  // f1(0) = 0
    CHECK(t.y[1][1] == 0.0);  // f2(0) = 0
}

TEST_CASE("direct transcription of the stepping rule agrees") {
    // the reference recurrence recomputes the full trapezium sum each step
    for (int id : {1, 2, 3, 4, 5, 6, 7, 8, 9}) {
        const ProblemSpec spec = builtin(id);
        const long N = 16;
        Trajectory t = solve_grid(spec, N);
        testutil::ScalarKernelView view = testutil::scalar_kernel_view(spec);
        auto f = [&](double x, double y) {
            const double yv[1] = {y};
            return spec.f[0](x, std::span<const double>(yv, 1));
        };
        testutil::ReferenceRun ref = testutil::reference_first_order(
            spec.x_begin, t.grid.h, N, spec.initial[0], f, view.sample, view.k1);
        for (long i = 0; i <= N; ++i) {
            const double scale = std::max(1.0, std::abs(ref.y[std::size_t(i)]));
            CHECK_MESSAGE(std::abs(t.y[0][std::size_t(i)] - ref.y[std::size_t(i)]) <= 1e-13 * scale,
                          "example ", id, " node ", i);
        }
    }
}

TEST_CASE("zero kernel degenerates to the explicit Euler integrator") {
    // scalar: y' = cos(x)*y
    ProblemSpec s;
    s.f = {[](double x, std::span<const double> y) { return std::cos(x) * y[0]; }};
    s.kernel = {KernelYT{[](double, double) { return 0.0; }}};
    s.initial = {1.0};
    const long N = 50;
    Trajectory t = solve_grid(s, N);

    // inline Euler oracle with the same compensated accumulation
    CompensatedSum acc(1.0);
    const double h = t.grid.h;
    double yi = 1.0;
    for (long i = 0; i < N; ++i) {
        const double x = t.grid.node(i);
        acc.add(h * (std::cos(x) * yi + 0.0));
        yi = acc.value();
        CHECK(t.y[0][std::size_t(i) + 1] == yi);  // bit-identical
    }

    // system: two coupled equations
    ProblemSpec sys;
    sys.dim = 2;
    sys.f = {[](double, std::span<const double> y) { return y[1]; },
             [](double, std::span<const double> y) { return -y[0]; }};
    sys.kernel = {KernelSystem{[](std::span<const double>, double) { return 0.0; }},
                  KernelSystem{[](std::span<const double>, double) { return 0.0; }}};
    sys.initial = {1.0, 0.0};
    Trajectory ts = solve_grid(sys, N);
    CompensatedSum a0(1.0), a1(0.0);
    double u = 1.0, v = 0.0;
    for (long i = 0; i < N; ++i) {
        a0.add(h * v);
        a1.add(h * -u);
        u = a0.value();
        v = a1.value();
        CHECK(ts.y[0][std::size_t(i) + 1] == u);
        CHECK(ts.y[1][std::size_t(i) + 1] == v);
    }
}

TEST_CASE("running sums match fresh recomputation at every node") {
    for (int id = 1; id <= catalog::count; ++id) {
        const ProblemSpec spec = builtin(id);
        for (long N : {7L, 64L}) {
            Trajectory t = solve_grid(spec, N);
            for (int eq = 0; eq < spec.dim; ++eq) {
                for (long i = 0; i <= N; ++i) {
                    const double direct = kernel_integral(spec, t, eq, i);
                    const double stored = t.integral[std::size_t(eq)][std::size_t(i)];
                    CHECK_MESSAGE(std::abs(stored - direct) <= 1e-13 * (1.0 + std::abs(direct)),
                                  "example ", id, " eq ", eq, " node ", i);
                }
            }
        }
    }
}

TEST_CASE("quadrature edge values") {
    ProblemSpec s;
    s.f = {[](double, std::span<const double>) { return 0.0; }};
    s.kernel = {KernelYT{[](double, double t) { return t; }}};  // K = t, linear
    s.initial = {0.0};
    Trajectory t = solve_grid(s, 2);  // nodes 0, 0.5, 1
    CHECK(t.integral[0][0] == 0.0);
    CHECK(t.integral[0][2] == 0.5);  // trapezium is exact on degree-1 integrands

    ProblemSpec q;
    q.f = {[](double, std::span<const double>) { return 0.0; }};
    q.kernel = {KernelYT{[](double, double t) { return t * t; }}};
    q.initial = {0.0};
    Trajectory tq = solve_grid(q, 2);
    CHECK(tq.integral[0][2] == doctest::Approx(0.375).epsilon(1e-16));  // exact value 1/3
}

TEST_CASE("first-order convergence on example 8") {
    const ProblemSpec spec = builtin(8);
    std::vector<double> errs;
    for (long N : {16L, 32L, 64L, 128L, 256L}) {
        Trajectory t = solve_grid(spec, N);
        double worst = 0;
        for (long i = 0; i <= N; ++i)
            worst = std::max(worst, std::abs(t.y[0][std::size_t(i)] - spec.exact[0](t.grid.node(i))));
        errs.push_back(worst);
    }
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
        const double slope = std::log2(errs[k] / errs[k + 1]);
        CHECK(slope > 0.8);
        CHECK(slope < 1.2);
    }
}

TEST_CASE("swapping and negating the linear system yields the mirror trajectory") {
    const ProblemSpec a = builtin(14);
    ProblemSpec b;
    b.dim = 2;
    // with (u1, u2) = (-y2, -y1):
    //   u1' = 1 + x + u2 + I[u1 - u2],  u2' = -1 - x - x^2 - u1 - I[u1 + u2]
    b.f = {[](double x, std::span<const double> u) { return 1.0 + x + u[1]; },
           [](double x, std::span<const double> u) { return -1.0 - x - x * x - u[0]; }};
    b.kernel = {KernelSystem{[](std::span<const double> u, double) { return u[0] - u[1]; }},
                KernelSystem{[](std::span<const double> u, double) { return -(u[0] + u[1]); }}};
    b.initial = {1.0, -1.0};
    const long N = 64;
    Trajectory ta = solve_grid(a, N);
    Trajectory tb = solve_grid(b, N);
    for (long i = 0; i <= N; ++i) {
        CHECK(std::abs(tb.y[0][std::size_t(i)] + ta.y[1][std::size_t(i)]) <= 1e-13);
        CHECK(std::abs(tb.y[1][std::size_t(i)] + ta.y[0][std::size_t(i)]) <= 1e-13);
    }
}

TEST_CASE("second-order reduction is two chained Euler integrals") {
    ProblemSpec s;
    s.order = 2;
    s.f = {[](double x, std::span<const double>) { return std::cos(x); }};
    s.kernel = {KernelYT{[](double, double) { return 0.0; }}};
    s.initial = {0.3, 0.7};  // y0, w0
    const long N = 40;
    Trajectory t = solve_grid(s, N);
    const double h = t.grid.h;
    CompensatedSum aw(0.7), ay(0.3);
    double w = 0.7;
    for (long i = 0; i < N; ++i) {
        ay.add(h * w);  // y uses the old w
        aw.add(h * (std::cos(t.grid.node(i)) + 0.0));
        w = aw.value();
        CHECK(t.y[0][std::size_t(i) + 1] == ay.value());
        CHECK(t.aux[0][std::size_t(i) + 1] == w);
    }
}

TEST_CASE("discrete derivative values") {
    // fabricated three-node trajectory
    Trajectory t;
    t.grid = Grid{0.0, 0.5, 2};
    t.dim = 1;
    t.y = {{0.0, 0.5, 1.0}};
    t.dy = {{1.0, 1.0, 1.0}};
    CHECK(discrete_derivative(t, 2) == 1.0);
    CHECK((t.y[0][2] - t.y[0][1]) / t.grid.h == 1.0);

    // seed value at j = 0 equals the right-hand side at x0
    Trajectory t3 = solve_grid(builtin(3), 4);
    CHECK(discrete_derivative(t3, 0) == 1.0);  // cos 0 - 0 - 0

    // constant trajectory differences vanish
    ProblemSpec c;
    c.f = {[](double, std::span<const double>) { return 0.0; }};
    c.kernel = {KernelYT{[](double, double) { return 0.0; }}};
    c.initial = {2.5};
    Trajectory tc = solve_grid(c, 5);
    for (long j = 1; j <= 5; ++j) CHECK(discrete_derivative(tc, j) == 0.0);
}

TEST_CASE("errors carry the node and evaluator") {
    ProblemSpec s;
    s.f = {[](double x, std::span<const double>) {
        if (x == 0.5) throw EvalError("division by zero", "1/(0.5 - x)");
        return 1.0 / (0.5 - x);
    }};
    s.kernel = {KernelYT{[](double, double) { return 0.0; }}};
    s.initial = {0.0};
    try {
        solve_grid(s, 10);
        FAIL("expected a solve error");
    } catch (const SolveError& e) {
        CHECK(e.node() == 5);
        CHECK(e.role() == "f[1]");
    }

    // overflow is reported with the node index
    ProblemSpec blow;
    blow.f = {[](double, std::span<const double> y) { return y[0] * y[0]; }};
    blow.kernel = {KernelYT{[](double, double) { return 0.0; }}};
    blow.initial = {1e200};
    CHECK_THROWS_AS(solve_grid(blow, 4), SolveError);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(solve_grid(constant_rhs_spec(), 0), std::invalid_argument);
    CHECK_THROWS_AS(Grid::over(1.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("grids span their interval") {
    for (long n : {1L, 7L, 118L, 2570L}) {
        Grid g = Grid::over(2.0, 5.0, n);
        CHECK(std::abs(g.x0 + double(n) * g.h - 5.0) <= 1e-12 * 5.0);
        CHECK(g.node(0) == 2.0);
        CHECK(g.points() == n + 1);
    }
}

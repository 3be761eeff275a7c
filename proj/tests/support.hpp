#pragma once
// Shared test utilities: adaptive quadrature, exact rational arithmetic,
// a seeded RNG, and a direct transcription of the first-order stepping
// rule used as an independent oracle for the solver.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "vide/problem.hpp"
#include "vide/solver.hpp"

namespace testutil {

inline std::mt19937& rng() {
    static std::mt19937 gen(20250811u);
    return gen;
}

// ---- adaptive Simpson quadrature -------------------------------------

namespace detail {
inline double simpson_recurse(const std::function<double(double)>& f, double a, double b,
                              double fa, double fm, double fb, double whole, double tol,
                              int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 48);
}

// ---- exact rationals --------------------------------------------------

struct Rat {
    long long num = 0;
    long long den = 1;

    Rat() = default;
    Rat(long long n, long long d = 1) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    friend Rat operator+(Rat a, Rat b) { return Rat(a.num * b.den + b.num * a.den, a.den * b.den); }
    friend Rat operator-(Rat a, Rat b) { return Rat(a.num * b.den - b.num * a.den, a.den * b.den); }
    friend Rat operator*(Rat a, Rat b) { return Rat(a.num * b.num, a.den * b.den); }
    friend bool operator==(Rat a, Rat b) { return a.num == b.num && a.den == b.den; }
};

// ---- direct transcription of the first-order stepping rule ------------
//
//   y_{i+1} = y_i + h f(x_i, y_i) + h * K1(x_i) * (h/2) (sum 2K_j - K_0 - K_i)
//
// with K1 = 1 for non-separable kernels and the sum refreshed naively at
// every step. Kept intentionally naive and separate from the library.

struct ReferenceRun {
    std::vector<double> y;
    std::vector<double> dy;
};

inline ReferenceRun reference_first_order(
    double x0, double h, long steps, double y0,
    const std::function<double(double, double)>& f,                       // f(x, y)
    const std::function<double(double, double, double)>& sample,          // K(y_j, dy_j, t_j)
    const std::function<double(double)>& k1 = nullptr) {
    ReferenceRun run;
    run.y.assign(std::size_t(steps) + 1, 0.0);
    run.dy.assign(std::size_t(steps) + 1, 0.0);
    run.y[0] = y0;
    run.dy[0] = f(x0, y0);
    std::vector<double> K(std::size_t(steps) + 1, 0.0);
    for (long i = 0; i < steps; ++i) {
        const double xi = x0 + double(i) * h;
        K[std::size_t(i)] = sample(run.y[std::size_t(i)], run.dy[std::size_t(i)], xi);
        double sum = 0.0;
        for (long j = 0; j <= i; ++j) sum += 2.0 * K[std::size_t(j)];
        sum -= K[0] + K[std::size_t(i)];
        double integral = (h / 2.0) * sum;
        if (k1) integral = (i == 0) ? 0.0 : k1(xi) * integral;
        run.y[std::size_t(i) + 1] = run.y[std::size_t(i)] + h * f(xi, run.y[std::size_t(i)]) + h * integral;
        run.dy[std::size_t(i) + 1] = (run.y[std::size_t(i) + 1] - run.y[std::size_t(i)]) / h;
    }
    return run;
}

// Naive full trapezium value over [x0, x_i]: plain double summation over
// samples read straight from the trajectory rows. Mechanism-independent
// check for the compensated running sums kept by the solver.
inline double naive_kernel_integral(const vide::ProblemSpec& spec, const vide::Trajectory& t,
                                    int eq, long i) {
    if (i < 1) return 0.0;
    const double h = t.grid.h;
    const double xi = t.grid.node(i);
    const std::size_t e = std::size_t(eq);
    auto sample = [&](long j) -> double {
        const double tj = t.grid.node(j);
        const std::size_t js = std::size_t(j);
        return std::visit(
            vide::detail::overload{
                [&](const vide::KernelXT& k) { return k.K(xi, tj); },
                [&](const vide::KernelYT& k) { return k.K(t.y[e][js], tj); },
                [&](const vide::KernelDYT& k) { return k.K(t.y[e][js], t.dy[e][js], tj); },
                [&](const vide::KernelSeparable& k) {
                    return k.K2(t.y[e][js], t.dy[e][js], tj);
                },
                [&](const vide::KernelSystem& k) {
                    std::vector<double> yv(std::size_t(t.dim));
                    for (int c = 0; c < t.dim; ++c) yv[std::size_t(c)] = t.y[std::size_t(c)][js];
                    return k.K(yv, tj);
                },
            },
            spec.kernel[e]);
    };
    double sum = 0.0;
    for (long j = 0; j <= i; ++j) sum += 2.0 * sample(j);
    sum -= sample(0) + sample(i);
    double integral = (h / 2.0) * sum;
    if (const auto* sep = std::get_if<vide::KernelSeparable>(&spec.kernel[e]))
        integral *= sep->K1(xi);
    return integral;
}

// Builds the per-node sample and K1 callables for a scalar catalog entry
// so the reference recurrence can run any first-order kernel form.
struct ScalarKernelView {
    std::function<double(double y, double dy, double t)> sample;
    std::function<double(double x)> k1;  // null unless separable
};

inline ScalarKernelView scalar_kernel_view(const vide::ProblemSpec& spec) {
    ScalarKernelView view;
    std::visit(vide::detail::overload{
                   [&](const vide::KernelXT&) {
                       throw std::logic_error("x-dependent kernel has no node view");
                   },
                   [&](const vide::KernelYT& k) {
                       view.sample = [K = k.K](double y, double, double t) { return K(y, t); };
                   },
                   [&](const vide::KernelDYT& k) {
                       view.sample = [K = k.K](double y, double dy, double t) { return K(y, dy, t); };
                   },
                   [&](const vide::KernelSeparable& k) {
                       view.sample = [K = k.K2](double y, double dy, double t) { return K(y, dy, t); };
                       view.k1 = k.K1;
                   },
                   [&](const vide::KernelSystem& k) {
                       view.sample = [K = k.K](double y, double, double t) {
                           return K(std::span<const double>(&y, 1), t);
                       };
                   },
               },
               spec.kernel.at(0));
    return view;
}

}  // namespace testutil

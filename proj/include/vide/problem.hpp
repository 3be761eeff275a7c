#pragma once
// Problem model for Volterra integro-differential equations
//
//   y^(n)(x) = f(x, y) + integral from x0 to x of K dt,   n in {1,2,3}
//
// where the kernel takes one of the structures
//
//   (a) K = K(x, t)
//   (b) K = K(y(t), t)
//   (c) K = K(y'(t), t)
//   (d) K = K1(x) * K2(y(t), t)        (separable)
//
// plus a componentwise extension K = K(y-vector, t) for first-order
// systems. Forms (c) and the K2 factor of (d) receive both y(t) and
// y'(t) so mixed integrands such as y*y' or t^2*(y')^3 are expressible.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace vide {

using RhsFn = std::function<double(double x, std::span<const double> y)>;
using ExactFn = std::function<double(double x)>;

// form (a): K(x, t); the x argument is the outer variable
struct KernelXT {
    std::function<double(double x, double t)> K;
};

// form (b): K(y(t), t)
struct KernelYT {
    std::function<double(double y, double t)> K;
};

// form (c) and mixed integrands: K(y(t), y'(t), t)
struct KernelDYT {
    std::function<double(double y, double dy, double t)> K;
};

// form (d): K1(x) * K2(y(t), y'(t), t)
struct KernelSeparable {
    std::function<double(double x)> K1;
    std::function<double(double y, double dy, double t)> K2;
};

// systems: K(y-vector(t), t), one kernel per equation
struct KernelSystem {
    std::function<double(std::span<const double> y, double t)> K;
};

using KernelForm =
    std::variant<KernelXT, KernelYT, KernelDYT, KernelSeparable, KernelSystem>;

namespace detail {
template <class... Ts>
struct overload : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overload(Ts...) -> overload<Ts...>;
}  // namespace detail

// One IDE instance. `initial` holds y(x0) (dim entries), then y'(x0) and
// y''(x0) for higher-order scalar problems: order*dim entries in total.
// Higher order (n >= 2) requires dim == 1. Immutable after construction;
// shareable across threads.
struct ProblemSpec {
    int order = 1;
    int dim = 1;
    std::vector<RhsFn> f;            // dim entries, f_c(x, y-vector)
    std::vector<KernelForm> kernel;  // dim entries
    double x_begin = 0.0;
    double x_end = 1.0;
    std::vector<double> initial;     // order*dim entries
    std::vector<ExactFn> exact;      // empty, or dim entries
    bool exact_approximate = false;  // reference solution is only approximate
    std::string label;

    double length() const { return x_end - x_begin; }
    bool has_exact() const { return !exact.empty(); }
    std::span<const double> initial_state() const {
        return {initial.data(), std::size_t(dim)};
    }
};

struct Validation {
    std::vector<std::string> violations;  // structural errors
    std::vector<std::string> warnings;    // evaluator probe failures
    bool ok() const { return violations.empty(); }
};

namespace detail {

inline void probe(Validation& v, const std::string& role, const std::function<double()>& call) {
    try {
        double r = call();
        if (!std::isfinite(r))
            v.warnings.push_back(role + ": non-finite value");
    } catch (const std::exception& e) {
        v.warnings.push_back(role + ": " + e.what());
    }
}

}  // namespace detail

// Checks the structural invariants, then probes every evaluator at five
// sample points of the interval (with y taken from the initial values).
// Probe failures are warnings, not violations. The K1 factor of a
// separable kernel is probed away from the left endpoint, where the
// stepper never evaluates it.
inline Validation validate(const ProblemSpec& spec) {
    Validation v;
    auto bad = [&](std::string m) { v.violations.push_back(std::move(m)); };

    if (spec.order < 1 || spec.order > 3) bad("order: must be 1, 2 or 3");
    if (spec.dim < 1) bad("dim: must be >= 1");
    if (spec.order >= 2 && spec.dim != 1)
        bad("higher order requires a scalar problem (dim = 1)");
    if (!std::isfinite(spec.x_begin) || !std::isfinite(spec.x_end))
        bad("interval: endpoints must be finite");
    else if (!(spec.x_begin < spec.x_end))
        bad("interval: empty interval [" + std::to_string(spec.x_begin) + ", " +
            std::to_string(spec.x_end) + "]");
    const std::size_t want_init = std::size_t(spec.order) * std::size_t(std::max(spec.dim, 1));
    if (spec.initial.size() != want_init)
        bad("initial values: expected " + std::to_string(want_init) + ", got " +
            std::to_string(spec.initial.size()));
    if (spec.f.size() != std::size_t(spec.dim))
        bad("f: expected " + std::to_string(spec.dim) + " entries, got " +
            std::to_string(spec.f.size()));
    if (spec.kernel.size() != std::size_t(spec.dim))
        bad("kernel: expected " + std::to_string(spec.dim) + " entries, got " +
            std::to_string(spec.kernel.size()));
    if (!spec.exact.empty() && spec.exact.size() != std::size_t(spec.dim))
        bad("exact: expected " + std::to_string(spec.dim) + " entries, got " +
            std::to_string(spec.exact.size()));
    if (!v.violations.empty()) return v;

    const double L = spec.length();
    const std::span<const double> y0 = spec.initial_state();
    double dy0 = 0.0;
    if (spec.order >= 2) {
        dy0 = spec.initial[std::size_t(spec.dim)];
    } else {
        try {
            dy0 = spec.f[0](spec.x_begin, y0);
        } catch (...) {
            dy0 = 0.0;  // the f probe below reports the failure
        }
    }

    for (int c = 0; c < spec.dim; ++c) {
        const std::string eq = "[" + std::to_string(c + 1) + "]";
        for (int k = 0; k <= 4; ++k) {
            const double x = spec.x_begin + L * k / 4.0;
            detail::probe(v, "f" + eq + " at x = " + std::to_string(x),
                          [&] { return spec.f[c](x, y0); });
            std::visit(detail::overload{
                           [&](const KernelXT& kf) {
                               detail::probe(v, "kernel" + eq, [&] { return kf.K(x, x); });
                           },
                           [&](const KernelYT& kf) {
                               detail::probe(v, "kernel" + eq, [&] { return kf.K(y0[std::size_t(c)], x); });
                           },
                           [&](const KernelDYT& kf) {
                               detail::probe(v, "kernel" + eq,
                                             [&] { return kf.K(y0[std::size_t(c)], dy0, x); });
                           },
                           [&](const KernelSeparable& kf) {
                               detail::probe(v, "kernel" + eq + ".K2",
                                             [&] { return kf.K2(y0[std::size_t(c)], dy0, x); });
                           },
                           [&](const KernelSystem& kf) {
                               detail::probe(v, "kernel" + eq, [&] { return kf.K(y0, x); });
                           },
                       },
                       spec.kernel[std::size_t(c)]);
            if (spec.has_exact())
                detail::probe(v, "exact" + eq, [&] { return spec.exact[std::size_t(c)](x); });
        }
        if (const auto* sep = std::get_if<KernelSeparable>(&spec.kernel[std::size_t(c)])) {
            for (int k = 1; k <= 5; ++k) {
                const double x = spec.x_begin + L * k / 5.0;
                detail::probe(v, "kernel" + eq + ".K1 at x = " + std::to_string(x),
                              [&] { return sep->K1(x); });
            }
        }
    }
    return v;
}

}  // namespace vide

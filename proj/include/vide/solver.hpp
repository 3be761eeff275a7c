#pragma once
// Single-grid stepper: explicit first-order updates with the composite
// trapezium rule for the integral term.
//
//   y_{i+1} = y_i + h*f(x_i, y_i) + h*I_i,
//   I_i     = (h/2) * (sum_{j=0..i} 2K_j - (K_0 + K_i))      (I_0 = 0)
//
// Higher orders reduce to a first-order system in (y, w) or (y, w, z)
// with the integral appearing only in the highest-derivative row:
//
//   y_{i+1} = y_i + h*w_i
//   w_{i+1} = w_i + h*z_i                                    (order 3)
//   z_{i+1} = z_i + h*(f(x_i, y_i) + I_i)
//
// Kernels without outer-x dependence keep a running sample sum, so one
// solve costs O(N) kernel evaluations; x-dependent K(x,t) kernels refresh
// the whole sum every step (O(N^2) total). Discrete derivatives enter
// kernels as y'_j = (y_j - y_{j-1})/h, seeded at j = 0 with f(x_0, y_0)
// for first-order problems and with w_0 otherwise.
//
// Running sums and the per-row state updates use compensated (Kahan-
// Neumaier) accumulation: grids near the 1e-12 tolerance regime take on
// the order of 1e5 accumulation steps.

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "vide/problem.hpp"

namespace vide {

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& msg, long node, std::string role)
        : std::runtime_error(role + " at node " + std::to_string(node) + ": " + msg),
          node_(node),
          role_(std::move(role)) {}
    long node() const { return node_; }
    const std::string& role() const { return role_; }

private:
    long node_;
    std::string role_;
};

// component-major node values: field[c][i]
using NodeField = std::vector<std::vector<double>>;

// Equispaced nodes x_i = x0 + i*h, i = 0..n.
struct Grid {
    double x0 = 0;
    double h = 0;
    long n = 0;

    double node(long i) const { return x0 + double(i) * h; }
    long points() const { return n + 1; }

    static Grid over(double a, double b, long steps) {
        if (steps < 1) throw std::invalid_argument("grid needs at least one step");
        if (!(a < b)) throw std::invalid_argument("grid interval is empty");
        return Grid{a, (b - a) / double(steps), steps};
    }
};

// Kahan-Neumaier compensated accumulator.
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(double init) : sum_(init) {}

    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0;
    double comp_ = 0;
};

// Running trapezium sum over kernel samples pushed in node order. After
// samples 0..i, integral(h) = h * (sum - (K_0 + K_i)/2), the composite
// trapezium value over [x_0, x_i]; fewer than two samples integrate to 0.
class QuadratureState {
public:
    void push(double sample) {
        if (count_ == 0) first_ = sample;
        last_ = sample;
        sum_.add(sample);
        ++count_;
    }

    long count() const { return count_; }
    double last() const { return last_; }

    double integral(double h) const {
        if (count_ < 2) return 0.0;
        return h * (sum_.value() - 0.5 * (first_ + last_));
    }

private:
    CompensatedSum sum_;
    double first_ = 0;
    double last_ = 0;
    long count_ = 0;
};

// Solution values on one grid. y holds the state per component; aux the
// w (and z) rows of reduced higher-order problems; dy the discrete
// derivatives; integral the trapezium value of the kernel integral over
// [x_0, x_i] as used by the stepper (diagnostic, kept for every node).
struct Trajectory {
    Grid grid;
    int dim = 1;
    int order = 1;
    std::vector<std::vector<double>> y;
    std::vector<std::vector<double>> aux;
    std::vector<std::vector<double>> dy;
    std::vector<std::vector<double>> integral;
};

namespace detail {

inline double guarded(const char* role, int eq, long node, const std::function<double()>& call) {
    try {
        return call();
    } catch (const SolveError&) {
        throw;
    } catch (const std::exception& e) {
        throw SolveError(e.what(), node,
                         std::string(role) + "[" + std::to_string(eq + 1) + "]");
    }
}

// Kernel sample K_j for equation eq; `xk` is the frozen outer x of an
// x-dependent kernel (only form (a) uses it).
inline double kernel_sample(const ProblemSpec& spec, const Trajectory& traj, int eq, long j,
                            double xk) {
    const double t = traj.grid.node(j);
    const std::size_t e = std::size_t(eq);
    return std::visit(
        detail::overload{
            [&](const KernelXT& k) {
                return guarded("kernel", eq, j, [&] { return k.K(xk, t); });
            },
            [&](const KernelYT& k) {
                return guarded("kernel", eq, j, [&] { return k.K(traj.y[e][std::size_t(j)], t); });
            },
            [&](const KernelDYT& k) {
                return guarded("kernel", eq, j, [&] {
                    return k.K(traj.y[e][std::size_t(j)], traj.dy[e][std::size_t(j)], t);
                });
            },
            [&](const KernelSeparable& k) {
                return guarded("kernel", eq, j, [&] {
                    return k.K2(traj.y[e][std::size_t(j)], traj.dy[e][std::size_t(j)], t);
                });
            },
            [&](const KernelSystem& k) {
                return guarded("kernel", eq, j, [&] {
                    std::vector<double> yv(std::size_t(traj.dim));
                    for (int c = 0; c < traj.dim; ++c) yv[std::size_t(c)] = traj.y[std::size_t(c)][std::size_t(j)];
                    return k.K(yv, t);
                });
            },
        },
        spec.kernel[e]);
}

// Per-equation quadrature. Kernels sampled purely along t keep a running
// sum; the x-dependent form refreshes the full sum at every query.
class EquationQuadrature {
public:
    EquationQuadrature(const ProblemSpec& spec, int eq) : spec_(&spec), eq_(eq) {
        x_dependent_ = std::holds_alternative<KernelXT>(spec.kernel[std::size_t(eq)]);
    }

    void push(const Trajectory& traj, long j) {
        if (x_dependent_) return;
        state_.push(kernel_sample(*spec_, traj, eq_, j, 0.0));
    }

    // Composite trapezium over [x_0, x_i]; requires nodes 0..i pushed.
    double value(const Trajectory& traj, long i) const {
        const double h = traj.grid.h;
        if (x_dependent_) {
            if (i < 1) return 0.0;
            const double xi = traj.grid.node(i);
            QuadratureState fresh;
            for (long j = 0; j <= i; ++j)
                fresh.push(kernel_sample(*spec_, traj, eq_, j, xi));
            return fresh.integral(h);
        }
        if (const auto* sep = std::get_if<KernelSeparable>(&spec_->kernel[std::size_t(eq_)])) {
            if (i < 1) return 0.0;  // empty integral: K1 is not evaluated
            const double xi = traj.grid.node(i);
            const double k1 = guarded("kernel-K1", eq_, i, [&] { return sep->K1(xi); });
            return k1 * state_.integral(h);
        }
        return state_.integral(h);
    }

private:
    const ProblemSpec* spec_;
    int eq_;
    bool x_dependent_ = false;
    QuadratureState state_;
};

}  // namespace detail

// Fresh full-sum evaluation of the trapezium integral over [x_0, x_i] for
// one equation: recomputes every sample from the stored trajectory rows.
// This is the x-dependent kernel path and the cross-check for the running
// sums kept during a solve.
inline double kernel_integral(const ProblemSpec& spec, const Trajectory& traj, int eq, long i) {
    if (i < 0 || i > traj.grid.n) throw std::out_of_range("kernel_integral: node out of range");
    if (i < 1) return 0.0;
    const double h = traj.grid.h;
    const double xi = traj.grid.node(i);
    QuadratureState fresh;
    for (long j = 0; j <= i; ++j)
        fresh.push(detail::kernel_sample(spec, traj, eq, j, xi));
    if (const auto* sep = std::get_if<KernelSeparable>(&spec.kernel[std::size_t(eq)])) {
        const double k1 = detail::guarded("kernel-K1", eq, i, [&] { return sep->K1(xi); });
        return k1 * fresh.integral(h);
    }
    return fresh.integral(h);
}

// Discrete derivative (y_j - y_{j-1})/h; at j = 0 the seed value described
// in the header comment.
inline double discrete_derivative(const Trajectory& traj, long j, int component = 0) {
    if (j < 0 || j > traj.grid.n) throw std::out_of_range("discrete_derivative: node out of range");
    return traj.dy[std::size_t(component)][std::size_t(j)];
}

// Runs the stepper over `steps` equal steps of the problem's interval.
// Throws SolveError when an evaluator fails or a state value leaves the
// range of finite doubles; the error names the node and the evaluator.
inline Trajectory solve_grid(const ProblemSpec& spec, long steps) {
    if (steps < 1) throw std::invalid_argument("solve_grid: steps must be >= 1");
    const int d = spec.dim;
    const int n = spec.order;
    if (spec.f.size() != std::size_t(d) || spec.kernel.size() != std::size_t(d) ||
        spec.initial.size() != std::size_t(n) * std::size_t(d) || (n >= 2 && d != 1))
        throw std::invalid_argument("solve_grid: malformed problem (run validate)");

    Trajectory traj;
    traj.grid = Grid::over(spec.x_begin, spec.x_end, steps);
    traj.dim = d;
    traj.order = n;
    const std::size_t points = std::size_t(steps) + 1;
    traj.y.assign(std::size_t(d), std::vector<double>(points));
    traj.aux.assign(std::size_t(n - 1), std::vector<double>(points));
    traj.dy.assign(std::size_t(d), std::vector<double>(points));
    traj.integral.assign(std::size_t(d), std::vector<double>(points));

    const double h = traj.grid.h;
    std::vector<CompensatedSum> acc_y, acc_aux;
    for (int c = 0; c < d; ++c) {
        traj.y[std::size_t(c)][0] = spec.initial[std::size_t(c)];
        acc_y.emplace_back(spec.initial[std::size_t(c)]);
    }
    for (int r = 0; r < n - 1; ++r) {
        traj.aux[std::size_t(r)][0] = spec.initial[std::size_t(d + r)];
        acc_aux.emplace_back(spec.initial[std::size_t(d + r)]);
    }

    const std::size_t dsz = std::size_t(d);
    std::vector<double> ycur(dsz), fval(dsz), ival(dsz);
    for (int c = 0; c < d; ++c) ycur[std::size_t(c)] = traj.y[std::size_t(c)][0];

    // derivative seed at node 0
    for (int c = 0; c < d; ++c) {
        traj.dy[std::size_t(c)][0] =
            (n >= 2) ? spec.initial[1]
                     : detail::guarded("f", c, 0, [&] { return spec.f[std::size_t(c)](traj.grid.x0, ycur); });
    }

    std::vector<detail::EquationQuadrature> quad;
    quad.reserve(std::size_t(d));
    for (int c = 0; c < d; ++c) quad.emplace_back(spec, c);

    for (long i = 0; i < steps; ++i) {
        const double xi = traj.grid.node(i);
        for (int c = 0; c < d; ++c) ycur[std::size_t(c)] = traj.y[std::size_t(c)][std::size_t(i)];
        for (int c = 0; c < d; ++c) {
            quad[std::size_t(c)].push(traj, i);
            ival[std::size_t(c)] = quad[std::size_t(c)].value(traj, i);
            traj.integral[std::size_t(c)][std::size_t(i)] = ival[std::size_t(c)];
        }
        for (int c = 0; c < d; ++c)
            fval[std::size_t(c)] =
                detail::guarded("f", c, i, [&] { return spec.f[std::size_t(c)](xi, ycur); });

        if (n == 1) {
            for (int c = 0; c < d; ++c) {
                acc_y[std::size_t(c)].add(h * (fval[std::size_t(c)] + ival[std::size_t(c)]));
                traj.y[std::size_t(c)][std::size_t(i) + 1] = acc_y[std::size_t(c)].value();
            }
        } else {
            const double wi = traj.aux[0][std::size_t(i)];
            acc_y[0].add(h * wi);
            traj.y[0][std::size_t(i) + 1] = acc_y[0].value();
            if (n == 2) {
                acc_aux[0].add(h * (fval[0] + ival[0]));
                traj.aux[0][std::size_t(i) + 1] = acc_aux[0].value();
            } else {
                const double zi = traj.aux[1][std::size_t(i)];
                acc_aux[0].add(h * zi);
                traj.aux[0][std::size_t(i) + 1] = acc_aux[0].value();
                acc_aux[1].add(h * (fval[0] + ival[0]));
                traj.aux[1][std::size_t(i) + 1] = acc_aux[1].value();
            }
        }

        for (int c = 0; c < d; ++c) {
            traj.dy[std::size_t(c)][std::size_t(i) + 1] =
                (traj.y[std::size_t(c)][std::size_t(i) + 1] - traj.y[std::size_t(c)][std::size_t(i)]) / h;
            if (!std::isfinite(traj.y[std::size_t(c)][std::size_t(i) + 1]))
                throw SolveError("non-finite state value (overflow)", i + 1,
                                 "state[" + std::to_string(c + 1) + "]");
        }
        for (int r = 0; r < n - 1; ++r)
            if (!std::isfinite(traj.aux[std::size_t(r)][std::size_t(i) + 1]))
                throw SolveError("non-finite state value (overflow)", i + 1,
                                 "state[" + std::to_string(r + 2) + "]");
    }

    // complete the diagnostic integral row at the final node
    for (int c = 0; c < d; ++c) {
        quad[std::size_t(c)].push(traj, steps);
        traj.integral[std::size_t(c)][std::size_t(steps)] = quad[std::size_t(c)].value(traj, steps);
    }
    return traj;
}

}  // namespace vide

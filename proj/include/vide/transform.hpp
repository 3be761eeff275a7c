#pragma once
// Affine map between a first-order problem on [x0, xN] and the unit
// interval. With m = xN - x0 and x = m*u + x0,
//
//   du y~(u) = m f(m u + x0, y~) + integral_0^u  m^2 K(...) ds,
//
// so the wrapped right-hand side picks up a factor m and the kernel m^2
// (split m * m over K1 and K2 for separable kernels, preserving the
// form). Discrete derivatives on the unit grid approximate m * y'(x), so
// kernels that consume y' receive dy/m. Initial values carry over
// unchanged: y~(0) = y(x0).
//
// The derivation is first-order; to_unit rejects higher-order problems
// rather than guess the scaling of the reduced rows.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vide/problem.hpp"
#include "vide/solver.hpp"

namespace vide {

struct IntervalMap {
    double scale = 1;   // m = xN - x0
    double offset = 0;  // x0

    double forward(double u) const { return scale * u + offset; }
    double inverse(double x) const { return (x - offset) / scale; }
    bool identity() const { return scale == 1.0 && offset == 0.0; }
};

struct UnitProblem {
    ProblemSpec spec;  // posed on [0, 1]
    IntervalMap map;
};

// Re-poses a first-order problem on the unit interval by wrapping its
// evaluators. An already-unit problem passes through untouched.
inline UnitProblem to_unit(const ProblemSpec& orig) {
    if (orig.order != 1)
        throw std::invalid_argument("to_unit: only first-order problems are supported");
    if (!(orig.x_begin < orig.x_end))
        throw std::invalid_argument("to_unit: empty interval");
    if (orig.x_begin == 0.0 && orig.x_end == 1.0)
        return UnitProblem{orig, IntervalMap{1.0, 0.0}};

    const double m = orig.x_end - orig.x_begin;
    const double x0 = orig.x_begin;
    IntervalMap map{m, x0};

    ProblemSpec unit;
    unit.order = orig.order;
    unit.dim = orig.dim;
    unit.x_begin = 0.0;
    unit.x_end = 1.0;
    unit.initial = orig.initial;
    unit.exact_approximate = orig.exact_approximate;
    unit.label = orig.label.empty() ? "transformed" : orig.label + " (unit interval)";

    for (const RhsFn& f : orig.f)
        unit.f.push_back([f, m, x0](double u, std::span<const double> y) {
            return m * f(m * u + x0, y);
        });

    const double m2 = m * m;
    for (const KernelForm& kf : orig.kernel) {
        unit.kernel.push_back(std::visit(
            detail::overload{
                [&](const KernelXT& k) -> KernelForm {
                    auto K = k.K;
                    return KernelXT{[K, m, m2, x0](double u, double s) {
                        return m2 * K(m * u + x0, m * s + x0);
                    }};
                },
                [&](const KernelYT& k) -> KernelForm {
                    auto K = k.K;
                    return KernelYT{[K, m, m2, x0](double y, double s) {
                        return m2 * K(y, m * s + x0);
                    }};
                },
                [&](const KernelDYT& k) -> KernelForm {
                    auto K = k.K;
                    return KernelDYT{[K, m, m2, x0](double y, double dy, double s) {
                        return m2 * K(y, dy / m, m * s + x0);
                    }};
                },
                [&](const KernelSeparable& k) -> KernelForm {
                    auto K1 = k.K1;
                    auto K2 = k.K2;
                    return KernelSeparable{
                        [K1, m, x0](double u) { return m * K1(m * u + x0); },
                        [K2, m, x0](double y, double dy, double s) {
                            return m * K2(y, dy / m, m * s + x0);
                        }};
                },
                [&](const KernelSystem& k) -> KernelForm {
                    auto K = k.K;
                    return KernelSystem{[K, m, m2, x0](std::span<const double> y, double s) {
                        return m2 * K(y, m * s + x0);
                    }};
                },
            },
            kf));
    }

    for (const ExactFn& e : orig.exact)
        unit.exact.push_back([e, m, x0](double u) { return e(m * u + x0); });

    return UnitProblem{std::move(unit), map};
}

// Solution values on the unit grid exposed as a function of the physical
// variable. Off-node queries interpolate linearly between the adjacent
// coarse nodes, which is adequate down to tolerances of order h^2|y''|/8;
// node queries return the stored values unchanged.
class MappedSolution {
public:
    MappedSolution(Grid unit_grid, NodeField values, IntervalMap map)
        : grid_(unit_grid), values_(std::move(values)), map_(map) {
        if (values_.empty() || values_[0].size() != std::size_t(grid_.points()))
            throw std::invalid_argument("mapped solution: field does not match grid");
    }

    int dim() const { return int(values_.size()); }
    const IntervalMap& map() const { return map_; }

    double at(double x, int component = 0) const {
        const std::vector<double>& row = values_.at(std::size_t(component));
        double u = map_.inverse(x);
        constexpr double slack = 1e-12;
        if (u < -slack || u > 1.0 + slack)
            throw std::out_of_range("x outside the solution interval");
        u = std::min(1.0, std::max(0.0, u));
        double pos = u / grid_.h;
        long j = std::min((long)pos, grid_.n - 1);
        double frac = pos - double(j);
        if (frac == 0.0) return row[std::size_t(j)];
        return (1.0 - frac) * row[std::size_t(j)] + frac * row[std::size_t(j) + 1];
    }

    std::vector<double> operator()(double x) const {
        std::vector<double> out(values_.size());
        for (std::size_t c = 0; c < values_.size(); ++c) out[c] = at(x, int(c));
        return out;
    }

private:
    Grid grid_;
    NodeField values_;
    IntervalMap map_;
};

inline MappedSolution map_back(const Grid& unit_grid, NodeField values, const IntervalMap& map) {
    return MappedSolution(unit_grid, std::move(values), map);
}

}  // namespace vide

#pragma once
// Error control by Richardson extrapolation over five nested grids.
//
// With y_i(h) the node-i solution at stepsize h, the tower holds levels
// h/2^k, k = 0..4, and forms the combinations
//
//   Y2 = -y(h) + 2 y(h/2)
//   Y3 =  y(h)/3 - 2 y(h/2) + (8/3) y(h/4)
//   Y4 = -y(h)/21 + (2/3) y(h/2) - (8/3) y(h/4) + (64/21) y(h/8)
//   Y5 =  y(h)/315 - (2/21) y(h/2) + (8/9) y(h/4) - (64/21) y(h/8)
//        + (1024/315) y(h/16)
//
// at the coarse nodes, giving 2nd- through 5th-order values. Y3 is the
// delivered solution. Its leading error coefficient is estimated per node
// as K3_i = (Y3_i - Y5_i)/h^3, and the stepsize for a target tolerance
// follows h_i = sigma * (eps / |K3_i|)^(1/3) (relative mode scales eps by
// max(1, |y_i|)); the smallest h_i over the nodes wins. The full tower is
// rerun at the chosen stepsize and the result re-checked, with a bounded
// number of further halvings as a safeguard.
//
// The combinations are evaluated in the algebraically identical form
// Y = y_finest + sum_k c_k (y_k - y_finest), which reproduces constants
// (and node 0, where every level holds the initial value) exactly.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vide/expr.hpp"  // detail::format_real
#include "vide/solver.hpp"

namespace vide {

enum class ErrorMode { absolute, relative };

inline const char* to_string(ErrorMode m) {
    return m == ErrorMode::absolute ? "absolute" : "relative";
}

struct ExtrapolationCoeff {
    long long num;
    long long den;
};

// Row p-2 holds the level weights of the order-p combination; each row
// sums to 1 and annihilates the error monomials h^q, q = 1..p-1.
inline constexpr std::array<std::array<ExtrapolationCoeff, 5>, 4> extrapolation_rows = {{
    {{{-1, 1}, {2, 1}, {0, 1}, {0, 1}, {0, 1}}},
    {{{1, 3}, {-2, 1}, {8, 3}, {0, 1}, {0, 1}}},
    {{{-1, 21}, {2, 3}, {-8, 3}, {64, 21}, {0, 1}}},
    {{{1, 315}, {-2, 21}, {8, 9}, {-64, 21}, {1024, 315}}},
}};

inline constexpr int tower_levels = 5;

struct RichardsonTower {
    std::vector<Trajectory> levels;  // tower_levels entries, level k at h/2^k
    NodeField Y2, Y3, Y4, Y5;
    bool extrapolated = false;

    const Grid& coarse_grid() const { return levels.front().grid; }
    int dim() const { return levels.front().dim; }

    const NodeField& extrapolant(int order) const {
        switch (order) {
            case 2: return Y2;
            case 3: return Y3;
            case 4: return Y4;
            case 5: return Y5;
        }
        throw std::out_of_range("extrapolant order must be 2..5");
    }
};

// Solves the problem on grids of steps, 2*steps, ..., 16*steps.
inline RichardsonTower build_tower(const ProblemSpec& spec, long steps) {
    if (steps < 1) throw std::invalid_argument("build_tower: steps must be >= 1");
    RichardsonTower tower;
    tower.levels.reserve(tower_levels);
    for (int k = 0; k < tower_levels; ++k) {
        try {
            tower.levels.push_back(solve_grid(spec, steps << k));
        } catch (const SolveError& e) {
            throw SolveError(std::string(e.what()) + " (tower level " + std::to_string(k) + ")",
                             e.node(), e.role());
        }
    }
    return tower;
}

// Forms Y2..Y5 at the coarse nodes, componentwise.
inline void extrapolate(RichardsonTower& tower) {
    if (tower.levels.size() != tower_levels)
        throw std::invalid_argument("extrapolate: tower is missing levels");
    const long npts = tower.coarse_grid().points();
    const int d = tower.dim();
    NodeField* fields[4] = {&tower.Y2, &tower.Y3, &tower.Y4, &tower.Y5};
    for (int p = 0; p < 4; ++p)
        fields[p]->assign(std::size_t(d), std::vector<double>(std::size_t(npts)));

    for (int p = 0; p < 4; ++p) {
        const int finest = p + 1;  // order p+2 uses levels 0..p+1
        std::array<double, 5> c{};
        for (int k = 0; k <= finest; ++k)
            c[std::size_t(k)] = double(extrapolation_rows[std::size_t(p)][std::size_t(k)].num) /
                                double(extrapolation_rows[std::size_t(p)][std::size_t(k)].den);
        for (int comp = 0; comp < d; ++comp) {
            const std::vector<double>& yf = tower.levels[std::size_t(finest)].y[std::size_t(comp)];
            std::vector<double>& out = (*fields[std::size_t(p)])[std::size_t(comp)];
            for (long i = 0; i < npts; ++i) {
                const double base = yf[std::size_t(i << finest)];
                double corr = 0;
                for (int k = 0; k < finest; ++k)
                    corr += c[std::size_t(k)] *
                            (tower.levels[std::size_t(k)].y[std::size_t(comp)][std::size_t(i << k)] - base);
                out[std::size_t(i)] = base + corr;
            }
        }
    }
    tower.extrapolated = true;
}

// Per-node error-coefficient estimates K3_i = |Y3_i - Y5_i| / h^3; for
// systems the componentwise maximum magnitude. Node 0 is exactly 0.
inline std::vector<double> estimate_k3(const RichardsonTower& tower) {
    if (!tower.extrapolated) throw std::logic_error("estimate_k3: tower not extrapolated");
    const double h = tower.coarse_grid().h;
    const double h3 = h * h * h;
    const long npts = tower.coarse_grid().points();
    std::vector<double> k3(std::size_t(npts), 0.0);
    for (long i = 0; i < npts; ++i) {
        double worst = 0;
        for (int c = 0; c < tower.dim(); ++c)
            worst = std::max(worst, std::abs(tower.Y3[std::size_t(c)][std::size_t(i)] -
                                             tower.Y5[std::size_t(c)][std::size_t(i)]));
        k3[std::size_t(i)] = worst / h3;
    }
    return k3;
}

struct ToleranceOptions {
    // 16 pilot steps keep the K3 estimates of derivative-coupled kernels
    // accurate enough that one rerun reaches tolerances down to 1e-12
    long pilot_steps = 16;
    double sigma = 0.85;              // safety factor
    long min_steps = 4;               // grid when every K3 estimate is negligible
    long level_step_cap = 10'000'000; // finest-level step budget
    int max_reruns = 3;               // extra halvings after the selected run
    double k3_floor = 1e-14;          // estimates below this are ignored
};

struct StepsizeChoice {
    double h = 0;
    long steps = 0;
    bool degenerate = false;  // every node fell below the K3 floor
};

// Applies the stepsize rule per node and keeps the smallest value.
// `yscale[i]` carries |y_i| for relative mode (per node; for systems the
// smallest component magnitude, which keeps the choice conservative).
inline StepsizeChoice select_stepsize(std::span<const double> k3, double epsilon, ErrorMode mode,
                                      std::span<const double> yscale, double interval_length,
                                      const ToleranceOptions& opt = {}) {
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    if (!(opt.sigma > 0 && opt.sigma < 1))
        throw std::invalid_argument("safety factor must lie in (0, 1)");
    double hmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k3.size(); ++i) {
        if (!(k3[i] >= opt.k3_floor)) continue;
        double eps = epsilon;
        if (mode == ErrorMode::relative) {
            const double s = i < yscale.size() ? std::abs(yscale[i]) : 0.0;
            eps *= std::max(1.0, s);
        }
        hmin = std::min(hmin, opt.sigma * std::cbrt(eps / k3[i]));
    }
    StepsizeChoice choice;
    if (!std::isfinite(hmin)) {
        choice.degenerate = true;
        choice.steps = opt.min_steps;
    } else {
        choice.steps = std::max<long>(1, (long)std::ceil(interval_length / hmin));
    }
    choice.h = interval_length / double(choice.steps);
    return choice;
}

struct ToleranceReport {
    double epsilon = 0;
    ErrorMode mode = ErrorMode::absolute;
    double sigma = 0;
    std::vector<double> k3;      // pilot estimates, one per pilot node
    double h_selected = 0;       // grid actually delivered
    long n_selected = 0;
    double error_estimate = 0;   // max-node |Y3 - Y5| measure of the final tower
    int reruns = 0;              // towers built after the pilot
};

class ToleranceError : public std::runtime_error {
public:
    ToleranceError(const std::string& msg, ToleranceReport report)
        : std::runtime_error(msg), report_(std::move(report)) {}
    const ToleranceReport& report() const { return report_; }

private:
    ToleranceReport report_;
};

struct ToleranceResult {
    RichardsonTower tower;  // final tower; Y3 is the delivered solution
    ToleranceReport report;

    const Grid& grid() const { return tower.coarse_grid(); }
    const NodeField& solution() const { return tower.Y3; }
};

namespace detail {

inline double tolerance_estimate(const RichardsonTower& tower, ErrorMode mode) {
    double worst = 0;
    const long npts = tower.coarse_grid().points();
    for (int c = 0; c < tower.dim(); ++c) {
        for (long i = 0; i < npts; ++i) {
            double e = std::abs(tower.Y3[std::size_t(c)][std::size_t(i)] -
                                tower.Y5[std::size_t(c)][std::size_t(i)]);
            if (mode == ErrorMode::relative)
                e /= std::max(1.0, std::abs(tower.Y3[std::size_t(c)][std::size_t(i)]));
            worst = std::max(worst, e);
        }
    }
    return worst;
}

inline std::vector<double> node_scale(const NodeField& field) {
    const std::size_t npts = field.empty() ? 0 : field[0].size();
    std::vector<double> scale(npts, 0.0);
    for (std::size_t i = 0; i < npts; ++i) {
        double smallest = std::numeric_limits<double>::infinity();
        for (const std::vector<double>& row : field)
            smallest = std::min(smallest, std::abs(row[i]));
        scale[i] = smallest;
    }
    return scale;
}

}  // namespace detail

// Pilot tower -> K3 estimates -> stepsize -> full rerun, re-checked
// against the internal |Y3 - Y5| estimate with up to max_reruns further
// halvings. Throws ToleranceError (with the best report) when the
// tolerance is not attained within the rerun and step budgets.
inline ToleranceResult solve_tolerance(const ProblemSpec& spec, double epsilon,
                                       ErrorMode mode = ErrorMode::absolute,
                                       const ToleranceOptions& opt = {}) {
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    if (!(opt.sigma > 0 && opt.sigma < 1))
        throw std::invalid_argument("safety factor must lie in (0, 1)");

    RichardsonTower pilot = build_tower(spec, opt.pilot_steps);
    extrapolate(pilot);
    std::vector<double> k3 = estimate_k3(pilot);
    std::vector<double> yscale = detail::node_scale(pilot.Y3);
    StepsizeChoice choice = select_stepsize(k3, epsilon, mode, yscale, spec.length(), opt);

    ToleranceReport report;
    report.epsilon = epsilon;
    report.mode = mode;
    report.sigma = opt.sigma;
    report.k3 = std::move(k3);

    const long cap = std::max(opt.min_steps, opt.level_step_cap / 16);
    long steps = std::max<long>(1, choice.steps);
    double best = std::numeric_limits<double>::infinity();
    for (int attempt = 0;; ++attempt) {
        const bool capped = steps >= cap;
        if (capped) steps = cap;
        RichardsonTower tower = build_tower(spec, steps);
        extrapolate(tower);
        report.reruns = attempt + 1;
        report.n_selected = steps;
        report.h_selected = tower.coarse_grid().h;
        report.error_estimate = detail::tolerance_estimate(tower, mode);
        if (report.error_estimate <= epsilon)
            return ToleranceResult{std::move(tower), std::move(report)};
        best = std::min(best, report.error_estimate);
        if (capped || attempt >= opt.max_reruns) {
            report.error_estimate = best;
            throw ToleranceError(
                "tolerance " + detail::format_real(epsilon) + " not attained for " +
                    (spec.label.empty() ? "problem" : spec.label) + "; best estimate " +
                    detail::format_real(best) +
                    (capped ? " (step cap reached)" : " (rerun budget exhausted)"),
                report);
        }
        steps *= 2;
    }
}

// Largest |value - exact| over the coarse nodes and components.
inline double max_error_vs_exact(const Grid& grid, const NodeField& field,
                                 const ProblemSpec& spec) {
    if (!spec.has_exact()) throw std::logic_error("problem has no reference solution");
    double worst = 0;
    for (std::size_t c = 0; c < field.size(); ++c)
        for (long i = 0; i <= grid.n; ++i)
            worst = std::max(worst, std::abs(field[c][std::size_t(i)] - spec.exact[c](grid.node(i))));
    return worst;
}

}  // namespace vide

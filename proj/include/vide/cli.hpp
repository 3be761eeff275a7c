#pragma once
// Command-line front end.
//
//   vide solve        run one problem to tolerance
//   vide tables       run the whole catalog at 1e-6 and 1e-12
//   vide convergence  empirical order-of-convergence study
//
// Exit codes: 0 success, 1 bad arguments / invalid problem,
// 2 tolerance not attainable, 3 evaluator domain error or overflow.

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vide/catalog.hpp"
#include "vide/problem_io.hpp"
#include "vide/richardson.hpp"
#include "vide/transform.hpp"

namespace vide::cli {

inline std::string fmt17(double v) { return detail::format_real(v); }

inline std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct RunRecord {
    std::string problem;
    double epsilon = 0;
    std::string mode;  // "abs" | "rel"
    long n = 0;
    double h = 0;
    double estimate = 0;
    std::optional<double> error_vs_exact;  // absent when the reference is approximate
    double ms = 0;

    static constexpr const char* csv_header = "problem,epsilon,mode,N,h,estimate,error_vs_exact,ms";

    std::string csv_row() const {
        std::ostringstream out;
        out << problem << ',' << fmt17(epsilon) << ',' << mode << ',' << n << ',' << fmt17(h)
            << ',' << fmt17(estimate) << ','
            << (error_vs_exact ? fmt17(*error_vs_exact) : std::string()) << ',' << fmt17(ms);
        return out.str();
    }

    static RunRecord from_csv_row(const std::string& row) {
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = row.find(',', pos);
            cells.push_back(row.substr(pos, comma == std::string::npos ? std::string::npos
                                                                       : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cells.size() != 8) throw std::invalid_argument("run record: expected 8 CSV cells");
        RunRecord r;
        r.problem = cells[0];
        r.epsilon = std::stod(cells[1]);
        r.mode = cells[2];
        r.n = std::stol(cells[3]);
        r.h = std::stod(cells[4]);
        r.estimate = std::stod(cells[5]);
        if (!cells[6].empty()) r.error_vs_exact = std::stod(cells[6]);
        r.ms = std::stod(cells[7]);
        return r;
    }
};

namespace detail_cli {

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProblemError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct SolveArgs {
    int example = 0;
    std::string file;
    double tol = 1e-6;
    std::string mode = "abs";
    std::vector<double> interval;
    std::string dump_nodes;
    std::string csv;
    long pilot = 16;
    double sigma = 0.85;
    long max_steps = 10'000'000;
    int reruns = 3;
    bool verbose = false;
};

struct SolveOutcome {
    RunRecord record;
    ToleranceResult result;
    IntervalMap map;  // identity for unit-interval runs
};

inline bool has_x_dependent_kernel(const ProblemSpec& spec) {
    for (const KernelForm& k : spec.kernel)
        if (std::holds_alternative<KernelXT>(k)) return true;
    return false;
}

inline SolveOutcome run_solve(const SolveArgs& a, std::ostream& err) {
    ProblemSpec spec;
    std::vector<std::string> warnings;
    if (a.example > 0 && !a.file.empty())
        throw ProblemError("give either --example or --file, not both");
    if (a.example > 0) {
        spec = builtin(a.example);
    } else if (!a.file.empty()) {
        spec = load_problem(read_file(a.file), a.file, &warnings);
    } else {
        throw ProblemError("one of --example or --file is required");
    }
    if (a.verbose)
        for (const std::string& w : warnings) err << "warning: " << w << "\n";

    if (!a.interval.empty()) {
        if (a.interval.size() != 2) throw ProblemError("--interval needs two values");
        if (a.interval[0] != spec.x_begin || a.interval[1] != spec.x_end) {
            spec.x_begin = a.interval[0];
            spec.x_end = a.interval[1];
            spec.exact.clear();  // the reference solution belongs to the original interval
            spec.label += " on [" + fmt6(spec.x_begin) + ", " + fmt6(spec.x_end) + "]";
            Validation v = validate(spec);
            if (!v.ok()) {
                std::string msg = "invalid problem";
                for (const std::string& s : v.violations) msg += "\n  - " + s;
                throw ProblemError(msg);
            }
        }
    }

    if (a.verbose && has_x_dependent_kernel(spec))
        err << "note: x-dependent kernel; quadrature cost grows quadratically with nodes\n";

    IntervalMap map;  // identity
    const bool off_unit = !(spec.x_begin == 0.0 && spec.x_end == 1.0);
    ProblemSpec solve_spec = spec;
    if (off_unit && spec.order == 1) {
        UnitProblem unit = to_unit(spec);
        solve_spec = std::move(unit.spec);
        map = unit.map;
        if (a.verbose)
            err << "note: solving on [0, 1] via the affine transform, scale " << fmt6(map.scale)
                << "\n";
    }
    // higher-order problems run on their native interval; the transform
    // is derived for first order only

    ToleranceOptions opt;
    opt.pilot_steps = a.pilot;
    opt.sigma = a.sigma;
    opt.level_step_cap = a.max_steps;
    opt.max_reruns = a.reruns;
    const ErrorMode mode = (a.mode == "rel") ? ErrorMode::relative : ErrorMode::absolute;

    const auto t0 = std::chrono::steady_clock::now();
    ToleranceResult res = solve_tolerance(solve_spec, a.tol, mode, opt);
    const double ms = elapsed_ms(t0);

    RunRecord rec;
    rec.problem = spec.label.empty() ? std::string("problem") : spec.label;
    rec.epsilon = a.tol;
    rec.mode = a.mode;
    rec.n = res.report.n_selected;
    rec.h = res.report.h_selected * map.scale;  // physical stepsize
    rec.estimate = res.report.error_estimate;
    rec.ms = ms;
    if (solve_spec.has_exact() && !solve_spec.exact_approximate)
        rec.error_vs_exact = max_error_vs_exact(res.grid(), res.solution(), solve_spec);
    return SolveOutcome{std::move(rec), std::move(res), map};
}

inline void print_record(const RunRecord& rec, int reruns, std::ostream& out) {
    out << "problem:         " << rec.problem << "\n";
    out << "epsilon:         " << fmt6(rec.epsilon) << "\n";
    out << "mode:            " << (rec.mode == "rel" ? "relative" : "absolute") << "\n";
    out << "N-selected:      " << rec.n << "\n";
    out << "h-selected:      " << fmt6(rec.h) << "\n";
    out << "estimate:        " << fmt6(rec.estimate) << "\n";
    if (rec.error_vs_exact)
        out << "error-vs-exact:  " << fmt6(*rec.error_vs_exact) << "\n";
    out << "reruns:          " << reruns << "\n";
    out << "time-ms:         " << fmt6(rec.ms) << "\n";
}

inline void append_csv(const std::string& path, const RunRecord& rec) {
    const bool fresh = !std::ifstream(path).good();
    std::ofstream out(path, std::ios::app);
    if (!out) throw ProblemError("cannot write '" + path + "'");
    if (fresh) out << RunRecord::csv_header << "\n";
    out << rec.csv_row() << "\n";
}

inline void dump_nodes(const std::string& path, const SolveOutcome& oc) {
    std::ofstream out(path);
    if (!out) throw ProblemError("cannot write '" + path + "'");
    const Grid& g = oc.result.grid();
    const NodeField& y = oc.result.solution();
    for (long i = 0; i <= g.n; ++i) {
        out << fmt17(oc.map.forward(g.node(i)));
        for (const std::vector<double>& row : y) out << ' ' << fmt17(row[std::size_t(i)]);
        out << '\n';
    }
}

struct TableArgs {
    std::vector<int> subset;
    std::string csv;
    bool serial = false;
};

struct TableRow {
    int id = 0;
    long n1 = 0, n2 = 0;
    double err1 = 0, err2 = 0, ms1 = 0, ms2 = 0;
    std::string failure;
};

inline TableRow run_table_row(int id) {
    TableRow row;
    row.id = id;
    try {
        const ProblemSpec spec = builtin(id);
        auto one = [&](double eps, long& n, double& errv, double& msv) {
            const auto t0 = std::chrono::steady_clock::now();
            ToleranceResult res = solve_tolerance(spec, eps);
            msv = elapsed_ms(t0);
            n = res.report.n_selected;
            errv = (spec.has_exact() && !spec.exact_approximate)
                       ? max_error_vs_exact(res.grid(), res.solution(), spec)
                       : res.report.error_estimate;
        };
        one(1e-6, row.n1, row.err1, row.ms1);
        one(1e-12, row.n2, row.err2, row.ms2);
    } catch (const std::exception& e) {
        row.failure = e.what();
    }
    return row;
}

inline int cmd_tables(const TableArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<int> ids = a.subset;
    if (ids.empty())
        for (int id = 1; id <= catalog::count; ++id) ids.push_back(id);
    for (int id : ids) catalog::info(id);  // range check before spawning work

    std::vector<TableRow> rows(ids.size());
    if (a.serial) {
        for (std::size_t i = 0; i < ids.size(); ++i) rows[i] = run_table_row(ids[i]);
    } else {
        std::vector<std::future<TableRow>> jobs;
        jobs.reserve(ids.size());
        for (int id : ids)
            jobs.push_back(std::async(std::launch::async, run_table_row, id));
        for (std::size_t i = 0; i < jobs.size(); ++i) rows[i] = jobs[i].get();
    }

    out << "  ex     N1  refN1       N2  refN2        err1        err2      ms1      ms2\n";
    for (const TableRow& r : rows) {
        const catalog::Entry& e = catalog::info(r.id);
        if (!r.failure.empty()) {
            err << "example " << r.id << " failed: " << r.failure << "\n";
            char line[128];
            std::snprintf(line, sizeof line, "%4d %s\n", r.id, "(failed)");
            out << line;
            continue;
        }
        char line[160];
        std::snprintf(line, sizeof line, "%4d %6ld %6d %8ld %6d %11.3g %11.3g %8.1f %8.1f\n",
                      r.id, r.n1, e.ref_n1, r.n2, e.ref_n2, r.err1, r.err2, r.ms1, r.ms2);
        out << line;
    }

    if (!a.csv.empty()) {
        std::ofstream csv(a.csv);
        if (!csv) throw ProblemError("cannot write '" + a.csv + "'");
        csv << "example,N1,N2,err1,err2,ms1,ms2\n";
        for (const TableRow& r : rows) {
            if (!r.failure.empty()) {
                csv << r.id << ",,,,,,\n";
                continue;
            }
            csv << r.id << ',' << r.n1 << ',' << r.n2 << ',' << fmt17(r.err1) << ','
                << fmt17(r.err2) << ',' << fmt17(r.ms1) << ',' << fmt17(r.ms2) << "\n";
        }
    }
    return 0;
}

struct ConvergenceArgs {
    int example = 0;
    std::vector<int> orders = {1, 2, 3, 4, 5};
    int levels = 5;
    long base = 8;
};

inline int cmd_convergence(const ConvergenceArgs& a, std::ostream& out) {
    for (int p : a.orders)
        if (p < 1 || p > 5)
            throw ProblemError("unsupported order " + std::to_string(p) + " (valid: 1..5)");
    if (a.levels < 2) throw ProblemError("--levels must be at least 2");
    const ProblemSpec spec = builtin(a.example);
    if (!spec.has_exact() || spec.exact_approximate)
        throw ProblemError("convergence study needs an exact reference solution (example " +
                           std::to_string(a.example) + " has none)");

    bool want_tower = false;
    for (int p : a.orders) want_tower |= (p >= 2);

    // errors[level][order-slot]
    std::vector<std::vector<double>> errors(std::size_t(a.levels),
                                            std::vector<double>(a.orders.size(), 0.0));
    std::vector<long> ns(std::size_t(a.levels));
    for (int l = 0; l < a.levels; ++l) {
        const long steps = a.base << l;
        ns[std::size_t(l)] = steps;
        RichardsonTower tower;
        if (want_tower) {
            tower = build_tower(spec, steps);
            extrapolate(tower);
        }
        for (std::size_t s = 0; s < a.orders.size(); ++s) {
            const int p = a.orders[s];
            if (p == 1) {
                const Trajectory traj = want_tower ? tower.levels.front() : solve_grid(spec, steps);
                errors[std::size_t(l)][s] = max_error_vs_exact(traj.grid, traj.y, spec);
            } else {
                errors[std::size_t(l)][s] =
                    max_error_vs_exact(tower.coarse_grid(), tower.extrapolant(p), spec);
            }
        }
    }

    out << "# example " << a.example << ", max-node error vs exact per order\n";
    out << "       N";
    for (int p : a.orders) out << "      err(p=" << p << ")     slope";
    out << "\n";
    for (int l = 0; l < a.levels; ++l) {
        char cell[64];
        std::snprintf(cell, sizeof cell, "%8ld", ns[std::size_t(l)]);
        out << cell;
        for (std::size_t s = 0; s < a.orders.size(); ++s) {
            std::snprintf(cell, sizeof cell, "  %12.4e", errors[std::size_t(l)][s]);
            out << cell;
            if (l == 0) {
                out << "        --";
            } else {
                const double ratio = errors[std::size_t(l) - 1][s] / errors[std::size_t(l)][s];
                std::snprintf(cell, sizeof cell, "  %8.3f", std::log2(ratio));
                out << cell;
            }
        }
        out << "\n";
    }
    return 0;
}

}  // namespace detail_cli

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Volterra integro-differential equation solver"};
    app.require_subcommand(1);

    detail_cli::SolveArgs sa;
    CLI::App* solve = app.add_subcommand("solve", "solve one problem to a tolerance");
    solve->add_option("--example", sa.example, "catalog example id (1..14)");
    solve->add_option("--file", sa.file, "problem-definition file (text or JSON)");
    solve->add_option("--tol", sa.tol, "target tolerance")->default_val(1e-6);
    solve->add_option("--mode", sa.mode, "error mode")
        ->check(CLI::IsMember({"abs", "rel"}))
        ->default_val("abs");
    solve->add_option("--interval", sa.interval, "re-pose the problem on [a, b]")->expected(2);
    solve->add_option("--dump-nodes", sa.dump_nodes, "write x and solution values per node");
    solve->add_option("--csv", sa.csv, "append the run record to a CSV file");
    solve->add_option("--pilot", sa.pilot, "pilot grid steps")->default_val(16);
    solve->add_option("--sigma", sa.sigma, "safety factor")->default_val(0.85);
    solve->add_option("--max-steps", sa.max_steps, "finest-level step budget")
        ->default_val(10'000'000);
    solve->add_option("--reruns", sa.reruns, "extra halvings allowed")->default_val(3);
    solve->add_flag("--verbose", sa.verbose, "print notes and probe warnings");

    detail_cli::TableArgs ta;
    CLI::App* tables = app.add_subcommand("tables", "catalog runs at 1e-6 and 1e-12");
    tables->add_option("--subset", ta.subset, "comma-separated example ids")->delimiter(',');
    tables->add_option("--csv", ta.csv, "write results as CSV");
    tables->add_flag("--serial", ta.serial, "run examples one at a time");

    detail_cli::ConvergenceArgs ca;
    CLI::App* conv = app.add_subcommand("convergence", "order-of-convergence study");
    conv->add_option("--example", ca.example, "catalog example id")->required();
    conv->add_option("--orders", ca.orders, "orders to study (subset of 1..5)")->delimiter(',');
    conv->add_option("--levels", ca.levels, "number of grid doublings")->default_val(5);
    conv->add_option("--base", ca.base, "coarsest step count")->default_val(8);

    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.push_back("vide");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const std::string& s : full) argv.push_back(s.c_str());

    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (solve->parsed()) {
            detail_cli::SolveOutcome oc = detail_cli::run_solve(sa, err);
            detail_cli::print_record(oc.record, oc.result.report.reruns, out);
            if (!sa.csv.empty()) detail_cli::append_csv(sa.csv, oc.record);
            if (!sa.dump_nodes.empty()) detail_cli::dump_nodes(sa.dump_nodes, oc);
            return 0;
        }
        if (tables->parsed()) return detail_cli::cmd_tables(ta, out, err);
        if (conv->parsed()) return detail_cli::cmd_convergence(ca, out);
        err << "error: no command\n";
        return 1;
    } catch (const ToleranceError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const SolveError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const EvalError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace vide::cli

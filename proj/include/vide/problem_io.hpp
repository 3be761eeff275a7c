#pragma once
// Problem-definition files: a flat UTF-8 key/value format plus an
// equivalent JSON representation.
//
//   # comment
//   order = 1
//   dim = 1
//   interval = 0 1
//   initial = 0
//   f.1 = 3*x^2 - x^4/3
//   kernel.1.form = separable          # xt | yt | dyt | separable | system
//   kernel.1.K1 = x
//   kernel.1.K2 = t^2
//   exact.1 = x^3
//   exact_kind = exact                 # exact | approximate
//
// Keys may drop the ".1" equation index when dim = 1. A JSON object with
// the same keys is accepted equivalently (interval/initial may be arrays).
//
// Expression variable sets by role:
//   f:            x, y            (systems: x, y1..yd)
//   kernel xt:    x, t
//   kernel yt:    y, t
//   kernel dyt:   y, dy, t
//   separable:    K1: x    K2: y, dy, t
//   system:       y1..yd, t
//   exact:        x
// Here y is the state, dy the discrete derivative, t the integration
// variable. In a system, a yt/dyt kernel's y refers to its own equation's
// component.

#include <array>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vide/expr.hpp"
#include "vide/problem.hpp"

namespace vide {

class ProblemError : public std::runtime_error {
public:
    explicit ProblemError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct KernelDef {
    std::string form;  // xt | yt | dyt | separable | system
    std::string K;     // single-expression forms
    std::string K1, K2;
};

// The syntactic form of a problem: everything still as text. compile()
// turns it into a ProblemSpec; to_text() serializes it back.
struct ProblemDefinition {
    int order = 1;
    int dim = 1;
    double x_begin = 0.0;
    double x_end = 1.0;
    std::vector<double> initial;
    std::vector<std::string> f;
    std::vector<KernelDef> kernel;
    std::vector<std::string> exact;
    bool exact_approximate = false;
    std::string label;
    std::map<std::string, int> key_lines;  // key -> source line, for diagnostics

    int line_of(const std::string& key) const {
        auto it = key_lines.find(key);
        return it == key_lines.end() ? 0 : it->second;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string_view::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(a, b - a + 1));
}

inline std::vector<double> parse_reals(const std::string& value, const std::string& key, int line) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < value.size()) {
        while (i < value.size() && (value[i] == ' ' || value[i] == '\t' || value[i] == ','))
            ++i;
        if (i >= value.size()) break;
        double v = 0;
        auto [ptr, ec] = std::from_chars(value.data() + i, value.data() + value.size(), v);
        if (ec != std::errc{})
            throw ProblemError(key + ": malformed number in '" + value + "'", line);
        i = std::size_t(ptr - value.data());
        out.push_back(v);
    }
    return out;
}

inline long parse_int(const std::string& value, const std::string& key, int line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ProblemError(key + ": expected an integer, got '" + value + "'", line);
    return v;
}

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

using RawMap = std::map<std::string, RawEntry>;

inline ProblemDefinition assemble(RawMap& raw, std::string label) {
    ProblemDefinition def;
    def.label = std::move(label);

    auto take = [&](const std::string& key) -> RawEntry* {
        auto it = raw.find(key);
        if (it == raw.end()) return nullptr;
        it->second.used = true;
        def.key_lines[key] = it->second.line;
        return &it->second;
    };

    if (RawEntry* e = take("order")) def.order = int(parse_int(e->value, "order", e->line));
    if (RawEntry* e = take("dim")) def.dim = int(parse_int(e->value, "dim", e->line));
    if (def.order < 1 || def.order > 3)
        throw ProblemError("order: must be 1, 2 or 3", def.line_of("order"));
    if (def.dim < 1)
        throw ProblemError("dim: must be >= 1", def.line_of("dim"));

    if (RawEntry* e = take("interval")) {
        std::vector<double> iv = parse_reals(e->value, "interval", e->line);
        if (iv.size() != 2)
            throw ProblemError("interval: expected two reals", e->line);
        def.x_begin = iv[0];
        def.x_end = iv[1];
    }
    if (RawEntry* e = take("initial"))
        def.initial = parse_reals(e->value, "initial", e->line);
    else
        throw ProblemError("missing key 'initial'");

    auto take_indexed = [&](const std::string& stem, int i) -> RawEntry* {
        const std::string canonical = stem + "." + std::to_string(i);
        if (RawEntry* e = take(canonical)) return e;
        if (def.dim == 1 && i == 1) {
            if (RawEntry* e = take(stem)) {
                def.key_lines[canonical] = e->line;  // diagnostics use canonical keys
                return e;
            }
        }
        return nullptr;
    };

    for (int i = 1; i <= def.dim; ++i) {
        RawEntry* e = take_indexed("f", i);
        if (!e) throw ProblemError("missing key 'f." + std::to_string(i) + "'");
        def.f.push_back(e->value);
    }

    for (int i = 1; i <= def.dim; ++i) {
        const std::string stem = "kernel." + std::to_string(i);
        KernelDef kd;
        RawEntry* form = take(stem + ".form");
        if (!form && def.dim == 1) form = take("kernel.form");
        if (!form) throw ProblemError("missing key '" + stem + ".form'");
        kd.form = trim(form->value);
        auto sub = [&](const char* part) -> RawEntry* {
            const std::string canonical = stem + "." + part;
            if (RawEntry* e = take(canonical)) return e;
            if (def.dim == 1) {
                if (RawEntry* e = take(std::string("kernel.") + part)) {
                    def.key_lines[canonical] = e->line;
                    return e;
                }
            }
            return nullptr;
        };
        if (kd.form == "separable") {
            RawEntry* k1 = sub("K1");
            RawEntry* k2 = sub("K2");
            if (!k1 || !k2)
                throw ProblemError(stem + ": separable kernels need K1 and K2", form->line);
            kd.K1 = k1->value;
            kd.K2 = k2->value;
        } else if (kd.form == "xt" || kd.form == "yt" || kd.form == "dyt" || kd.form == "system") {
            RawEntry* k = sub("K");
            if (!k) throw ProblemError("missing key '" + stem + ".K'", form->line);
            kd.K = k->value;
        } else {
            throw ProblemError(stem + ".form: unknown kernel form '" + kd.form +
                                   "' (expected xt, yt, dyt, separable or system)",
                               form->line);
        }
        def.kernel.push_back(std::move(kd));
    }

    bool any_exact = false;
    for (int i = 1; i <= def.dim; ++i)
        if (raw.count("exact." + std::to_string(i)) || (def.dim == 1 && raw.count("exact")))
            any_exact = true;
    if (any_exact) {
        for (int i = 1; i <= def.dim; ++i) {
            RawEntry* e = take_indexed("exact", i);
            if (!e)
                throw ProblemError("exact: all " + std::to_string(def.dim) +
                                   " components must be given");
            def.exact.push_back(e->value);
        }
    }
    if (RawEntry* e = take("exact_kind")) {
        std::string kind = trim(e->value);
        if (kind == "approximate")
            def.exact_approximate = true;
        else if (kind != "exact")
            throw ProblemError("exact_kind: expected 'exact' or 'approximate'", e->line);
    }
    if (RawEntry* e = take("label")) def.label = trim(e->value);

    for (const auto& [key, entry] : raw)
        if (!entry.used)
            throw ProblemError("unknown key '" + key + "'", entry.line);
    return def;
}

inline ProblemDefinition parse_problem_json(std::string_view text, std::string label) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ProblemError(std::string("JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProblemError("JSON: top-level value must be an object");
    RawMap raw;
    auto scalar_to_string = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number_float()) return format_real(v.get<double>());
        if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
        throw ProblemError("JSON: unsupported value type");
    };
    for (const auto& [key, value] : j.items()) {
        std::string flat;
        if (value.is_array()) {
            for (const auto& item : value) {
                if (!flat.empty()) flat += ' ';
                flat += scalar_to_string(item);
            }
        } else {
            flat = scalar_to_string(value);
        }
        raw[key] = RawEntry{flat, 0, false};
    }
    return assemble(raw, std::move(label));
}

}  // namespace detail

// Parses the key/value text form; a leading '{' switches to JSON.
inline ProblemDefinition parse_problem_text(std::string_view text, std::string label = "") {
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{')
        return detail::parse_problem_json(text, std::move(label));

    detail::RawMap raw;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        ++line_no;
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ProblemError("expected 'key = value'", line_no);
        std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
        std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty()) throw ProblemError("empty key", line_no);
        if (raw.count(key)) throw ProblemError("duplicate key '" + key + "'", line_no);
        raw[key] = detail::RawEntry{value, line_no, false};
    }
    return detail::assemble(raw, std::move(label));
}

// Canonical key/value serialization; parse_problem_text round-trips it.
inline std::string to_text(const ProblemDefinition& def) {
    std::ostringstream out;
    out << "order = " << def.order << "\n";
    out << "dim = " << def.dim << "\n";
    out << "interval = " << detail::format_real(def.x_begin) << " "
        << detail::format_real(def.x_end) << "\n";
    out << "initial =";
    for (double v : def.initial) out << " " << detail::format_real(v);
    out << "\n";
    for (std::size_t i = 0; i < def.f.size(); ++i)
        out << "f." << i + 1 << " = " << def.f[i] << "\n";
    for (std::size_t i = 0; i < def.kernel.size(); ++i) {
        const KernelDef& kd = def.kernel[i];
        out << "kernel." << i + 1 << ".form = " << kd.form << "\n";
        if (kd.form == "separable") {
            out << "kernel." << i + 1 << ".K1 = " << kd.K1 << "\n";
            out << "kernel." << i + 1 << ".K2 = " << kd.K2 << "\n";
        } else {
            out << "kernel." << i + 1 << ".K = " << kd.K << "\n";
        }
    }
    for (std::size_t i = 0; i < def.exact.size(); ++i)
        out << "exact." << i + 1 << " = " << def.exact[i] << "\n";
    if (!def.exact.empty())
        out << "exact_kind = " << (def.exact_approximate ? "approximate" : "exact") << "\n";
    return out.str();
}

namespace detail {

constexpr std::size_t kInlineSlots = 16;

template <std::size_t Fixed>
inline double eval_slots(const Expr& e, const std::array<double, Fixed>& slots) {
    return e.eval(std::span<const double>(slots.data(), slots.size()));
}

inline std::vector<std::string> state_vars(int dim) {
    if (dim == 1) return {"y"};
    std::vector<std::string> v;
    for (int i = 1; i <= dim; ++i) v.push_back("y" + std::to_string(i));
    return v;
}

inline Expr parse_field(const ProblemDefinition& def, const std::string& key,
                        const std::string& source, const std::vector<std::string>& vars) {
    try {
        return Expr::parse(source, vars);
    } catch (const ParseError& e) {
        throw ProblemError(key + ": " + e.what(), def.line_of(key));
    }
}

inline RhsFn wrap_rhs(Expr e, int dim) {
    return [e = std::move(e), dim](double x, std::span<const double> y) {
        if (std::size_t(dim) + 1 <= kInlineSlots) {
            std::array<double, kInlineSlots> buf;
            buf[0] = x;
            for (int c = 0; c < dim; ++c) buf[std::size_t(c) + 1] = y[std::size_t(c)];
            return e.eval(std::span<const double>(buf.data(), std::size_t(dim) + 1));
        }
        std::vector<double> buf;
        buf.reserve(std::size_t(dim) + 1);
        buf.push_back(x);
        buf.insert(buf.end(), y.begin(), y.end());
        return e.eval(buf);
    };
}

inline KernelForm compile_kernel(const ProblemDefinition& def, int i) {
    const KernelDef& kd = def.kernel[std::size_t(i)];
    const std::string stem = "kernel." + std::to_string(i + 1);
    if (kd.form == "xt") {
        Expr e = parse_field(def, stem + ".K", kd.K, {"x", "t"});
        return KernelXT{[e](double x, double t) {
            return eval_slots(e, std::array<double, 2>{x, t});
        }};
    }
    if (kd.form == "yt") {
        Expr e = parse_field(def, stem + ".K", kd.K, {"y", "t"});
        return KernelYT{[e](double y, double t) {
            return eval_slots(e, std::array<double, 2>{y, t});
        }};
    }
    if (kd.form == "dyt") {
        Expr e = parse_field(def, stem + ".K", kd.K, {"y", "dy", "t"});
        return KernelDYT{[e](double y, double dy, double t) {
            return eval_slots(e, std::array<double, 3>{y, dy, t});
        }};
    }
    if (kd.form == "separable") {
        Expr e1 = parse_field(def, stem + ".K1", kd.K1, {"x"});
        Expr e2 = parse_field(def, stem + ".K2", kd.K2, {"y", "dy", "t"});
        return KernelSeparable{
            [e1](double x) { return eval_slots(e1, std::array<double, 1>{x}); },
            [e2](double y, double dy, double t) {
                return eval_slots(e2, std::array<double, 3>{y, dy, t});
            }};
    }
    if (kd.form == "system") {
        std::vector<std::string> vars = state_vars(def.dim);
        vars.push_back("t");
        Expr e = parse_field(def, stem + ".K", kd.K, vars);
        const int dim = def.dim;
        return KernelSystem{[e, dim](std::span<const double> y, double t) {
            if (std::size_t(dim) + 1 <= kInlineSlots) {
                std::array<double, kInlineSlots> buf;
                for (int c = 0; c < dim; ++c) buf[std::size_t(c)] = y[std::size_t(c)];
                buf[std::size_t(dim)] = t;
                return e.eval(std::span<const double>(buf.data(), std::size_t(dim) + 1));
            }
            std::vector<double> buf(y.begin(), y.end());
            buf.push_back(t);
            return e.eval(buf);
        }};
    }
    throw ProblemError(stem + ".form: unknown kernel form '" + kd.form + "'");
}

}  // namespace detail

// Parses every expression and builds the evaluator-backed spec. Structural
// validation is left to validate(); this reports schema and expression
// errors with the source line where available.
inline ProblemSpec compile(const ProblemDefinition& def) {
    if (def.order < 1 || def.order > 3) throw ProblemError("order: must be 1, 2 or 3");
    if (def.dim < 1) throw ProblemError("dim: must be >= 1");
    if (def.order >= 2 && def.dim != 1)
        throw ProblemError("higher order requires a scalar problem (dim = 1)");
    if (def.f.size() != std::size_t(def.dim) || def.kernel.size() != std::size_t(def.dim))
        throw ProblemError("f/kernel: expected " + std::to_string(def.dim) + " entries");

    ProblemSpec spec;
    spec.order = def.order;
    spec.dim = def.dim;
    spec.x_begin = def.x_begin;
    spec.x_end = def.x_end;
    spec.initial = def.initial;
    spec.exact_approximate = def.exact_approximate;
    spec.label = def.label;

    std::vector<std::string> fvars = {"x"};
    for (const std::string& s : detail::state_vars(def.dim)) fvars.push_back(s);
    for (int i = 0; i < def.dim; ++i) {
        Expr e = detail::parse_field(def, "f." + std::to_string(i + 1), def.f[std::size_t(i)], fvars);
        spec.f.push_back(detail::wrap_rhs(std::move(e), def.dim));
    }
    for (int i = 0; i < def.dim; ++i)
        spec.kernel.push_back(detail::compile_kernel(def, i));
    for (std::size_t i = 0; i < def.exact.size(); ++i) {
        Expr e = detail::parse_field(def, "exact." + std::to_string(i + 1), def.exact[i], {"x"});
        spec.exact.push_back([e](double x) {
            return detail::eval_slots(e, std::array<double, 1>{x});
        });
    }
    return spec;
}

// parse + compile + validate in one step; throws ProblemError listing any
// violations. Probe warnings are returned through `warnings` when given.
inline ProblemSpec load_problem(std::string_view text, std::string label = "",
                                std::vector<std::string>* warnings = nullptr) {
    ProblemDefinition def = parse_problem_text(text, std::move(label));
    ProblemSpec spec = compile(def);
    Validation v = validate(spec);
    if (!v.ok()) {
        std::string msg = "invalid problem";
        for (const std::string& s : v.violations) msg += "\n  - " + s;
        throw ProblemError(msg);
    }
    if (warnings) *warnings = v.warnings;
    return spec;
}

}  // namespace vide

#pragma once
// Recursive-descent parser and stack evaluator for the scalar math
// expressions used in problem definitions (right-hand sides, kernels,
// exact solutions).
//
// Grammar (conventional infix):
//   expression := term { ('+'|'-') term }
//   term       := unary { ('*'|'/') unary }
//   unary      := '-' unary | power
//   power      := atom [ '^' unary ]            (right-associative)
//   atom       := number | name | name '(' expression ')' | '(' expression ')'
//
// Supported functions (all arity 1): sin cos tan sinh cosh tanh exp ln
// sqrt abs. There is no implicit multiplication: "2x" is a syntax error.
//
// Power evaluates by repeated multiplication when the exponent is an
// integer literal with |e| <= 16 (keeps polynomials exact to machine
// precision), otherwise as exp(e*ln(base)) with the matching domain
// restriction on the base.

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vide {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& msg, std::string subexpr)
        : std::runtime_error(msg + " in '" + subexpr + "'"),
          subexpr_(std::move(subexpr)) {}
    const std::string& subexpr() const { return subexpr_; }

private:
    std::string subexpr_;
};

namespace detail {

enum class Fn : std::uint8_t { sin, cos, tan, sinh, cosh, tanh, exp, ln, sqrt, abs };

inline constexpr std::array<std::pair<std::string_view, Fn>, 10> kFunctions = {{
    {"sin", Fn::sin}, {"cos", Fn::cos}, {"tan", Fn::tan},
    {"sinh", Fn::sinh}, {"cosh", Fn::cosh}, {"tanh", Fn::tanh},
    {"exp", Fn::exp}, {"ln", Fn::ln}, {"sqrt", Fn::sqrt}, {"abs", Fn::abs},
}};

inline std::string_view fn_name(Fn f) {
    for (const auto& [name, fn] : kFunctions)
        if (fn == f) return name;
    return "?";
}

struct ExprNode {
    enum class Kind : std::uint8_t { number, variable, negate, binary, call };
    Kind kind;
    double value = 0;                    // number
    std::string name;                    // variable name
    int slot = -1;                       // variable slot in the declared set
    char op = 0;                         // '+' '-' '*' '/' '^'
    Fn fn = Fn::sin;                     // call
    std::shared_ptr<const ExprNode> a, b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// precedence: '+','-' = 1; '*','/' = 2; unary minus = 3; '^' = 4; atoms = 5
inline int precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprNode::Kind::binary:
            return (n.op == '^') ? 4 : (n.op == '*' || n.op == '/') ? 2 : 1;
        case ExprNode::Kind::negate: return 3;
        case ExprNode::Kind::number: return std::signbit(n.value) ? 3 : 5;
        default: return 5;
    }
}

inline void print_node(std::string& out, const ExprNode& n, int required) {
    const int prec = precedence(n);
    const bool parens = prec < required;
    if (parens) out += '(';
    switch (n.kind) {
        case ExprNode::Kind::number:
            out += format_real(n.value);
            break;
        case ExprNode::Kind::variable:
            out += n.name;
            break;
        case ExprNode::Kind::negate:
            out += '-';
            print_node(out, *n.a, 3);
            break;
        case ExprNode::Kind::binary: {
            // left-associative ops need the right operand parenthesized at
            // equal precedence so the reparsed tree is identical; '^' is the
            // mirror case (right-associative, exponent parses as a unary)
            const int lreq = (n.op == '^') ? 5 : prec;
            const int rreq = (n.op == '^') ? 3 : prec + 1;
            print_node(out, *n.a, lreq);
            out += ' ';
            out += n.op;
            out += ' ';
            print_node(out, *n.b, rreq);
            break;
        }
        case ExprNode::Kind::call:
            out += fn_name(n.fn);
            out += '(';
            print_node(out, *n.a, 0);
            out += ')';
            break;
    }
    if (parens) out += ')';
}

inline std::string print_node(const ExprNode& n) {
    std::string out;
    print_node(out, n, 0);
    return out;
}

enum class OpCode : std::uint8_t {
    push_const, push_var, neg, add, sub, mul, div, pow_int, pow_gen, call
};

struct Instr {
    OpCode op;
    std::int32_t a = 0;   // variable slot, integer exponent, or Fn index
    double c = 0;         // constant
    const ExprNode* src = nullptr;
};

class ExprParser {
public:
    ExprParser(std::string_view src, const std::vector<std::string>& vars)
        : src_(src), vars_(vars) {}

    NodePtr run() {
        skip_ws();
        if (pos_ >= src_.size()) fail("empty expression", pos_);
        NodePtr root = expression();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected input", pos_);
        return root;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    const std::vector<std::string>& vars_;

    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        throw ParseError(msg, at);
    }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    static NodePtr number(double v) {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::number;
        n->value = v;
        return n;
    }

    static NodePtr negate(NodePtr a) {
        if (a->kind == ExprNode::Kind::number) return number(-a->value);
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::negate;
        n->a = std::move(a);
        return n;
    }

    static NodePtr binary(char op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::binary;
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            char c = peek();
            if (c != '+' && c != '-') return lhs;
            ++pos_;
            lhs = binary(c, std::move(lhs), term());
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            char c = peek();
            if (c != '*' && c != '/') return lhs;
            ++pos_;
            lhs = binary(c, std::move(lhs), unary());
        }
    }

    NodePtr unary() {
        if (peek() == '-') {
            ++pos_;
            return negate(unary());
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (peek() == '^') {
            ++pos_;
            return binary('^', std::move(base), unary());
        }
        return base;
    }

    NodePtr atom() {
        char c = peek();
        std::size_t start = pos_;
        if (c == '(') {
            ++pos_;
            NodePtr inner = expression();
            if (peek() != ')') fail("expected ')'", pos_);
            ++pos_;
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_')
            return parse_name();
        fail(c == '\0' ? "unexpected end of expression" : "unexpected character", start);
    }

    NodePtr parse_number() {
        skip_ws();
        std::size_t start = pos_;
        double v = 0;
        auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
        if (ec != std::errc{}) fail("malformed number", start);
        pos_ = std::size_t(ptr - src_.data());
        return number(v);
    }

    NodePtr parse_name() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        if (peek() == '(') {
            const Fn* fn = nullptr;
            for (const auto& [fname, f] : kFunctions)
                if (fname == name) { fn = &f; break; }
            if (!fn) fail("unknown function '" + name + "'", start);
            ++pos_;  // '('
            NodePtr arg = expression();
            if (peek() == ',')
                fail("function '" + name + "' takes exactly one argument", pos_);
            if (peek() != ')') fail("expected ')'", pos_);
            ++pos_;
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprNode::Kind::call;
            n->fn = *fn;
            n->a = std::move(arg);
            return n;
        }
        for (std::size_t s = 0; s < vars_.size(); ++s) {
            if (vars_[s] == name) {
                auto n = std::make_shared<ExprNode>();
                n->kind = ExprNode::Kind::variable;
                n->name = name;
                n->slot = int(s);
                return n;
            }
        }
        fail("unknown variable '" + name + "'", start);
    }
};

inline void compile_node(const ExprNode& n, std::vector<Instr>& out, int& depth, int& max_depth) {
    auto grew = [&] {
        if (++depth > max_depth) max_depth = depth;
    };
    switch (n.kind) {
        case ExprNode::Kind::number:
            out.push_back({OpCode::push_const, 0, n.value, &n});
            grew();
            break;
        case ExprNode::Kind::variable:
            out.push_back({OpCode::push_var, n.slot, 0, &n});
            grew();
            break;
        case ExprNode::Kind::negate:
            compile_node(*n.a, out, depth, max_depth);
            out.push_back({OpCode::neg, 0, 0, &n});
            break;
        case ExprNode::Kind::binary: {
            if (n.op == '^' && n.b->kind == ExprNode::Kind::number) {
                double e = n.b->value;
                if (e == std::floor(e) && std::fabs(e) <= 16) {
                    compile_node(*n.a, out, depth, max_depth);
                    out.push_back({OpCode::pow_int, std::int32_t(e), 0, &n});
                    break;
                }
            }
            compile_node(*n.a, out, depth, max_depth);
            compile_node(*n.b, out, depth, max_depth);
            static constexpr std::pair<char, OpCode> ops[] = {
                {'+', OpCode::add}, {'-', OpCode::sub}, {'*', OpCode::mul},
                {'/', OpCode::div}, {'^', OpCode::pow_gen}};
            for (auto [c, op] : ops)
                if (c == n.op) { out.push_back({op, 0, 0, &n}); break; }
            --depth;
            break;
        }
        case ExprNode::Kind::call:
            compile_node(*n.a, out, depth, max_depth);
            out.push_back({OpCode::call, std::int32_t(n.fn), 0, &n});
            break;
    }
}

inline double eval_pow_int(double base, int e, const ExprNode* src) {
    int k = e < 0 ? -e : e;
    double p = 1;
    for (; k > 0; --k) p *= base;
    if (e < 0) {
        if (p == 0.0) throw EvalError("division by zero", print_node(*src));
        p = 1.0 / p;
    }
    return p;
}

inline double eval_pow_gen(double base, double e, const ExprNode* src) {
    if (base > 0) return std::exp(e * std::log(base));
    if (base == 0) {
        if (e > 0) return 0.0;
        if (e == 0) return 1.0;
        throw EvalError("zero raised to a negative power", print_node(*src));
    }
    throw EvalError("power of a negative base", print_node(*src));
}

inline double eval_call(Fn f, double x, const ExprNode* src) {
    switch (f) {
        case Fn::sin: return std::sin(x);
        case Fn::cos: return std::cos(x);
        case Fn::tan: return std::tan(x);
        case Fn::sinh: return std::sinh(x);
        case Fn::cosh: return std::cosh(x);
        case Fn::tanh: return std::tanh(x);
        case Fn::exp: return std::exp(x);
        case Fn::ln:
            if (!(x > 0)) throw EvalError("logarithm of a non-positive value", print_node(*src));
            return std::log(x);
        case Fn::sqrt:
            if (x < 0) throw EvalError("square root of a negative value", print_node(*src));
            return std::sqrt(x);
        case Fn::abs: return std::fabs(x);
    }
    return 0;  // unreachable
}

}  // namespace detail

// An immutable parsed expression. Evaluation is pure: equal inputs produce
// bit-identical results, and concurrent evaluation needs no synchronization.
class Expr {
public:
    Expr() = default;

    // Parses `source` against the declared variable set. The order of
    // `variables` fixes the slot order expected by the span overload of
    // eval(). Throws ParseError.
    static Expr parse(std::string_view source, const std::vector<std::string>& variables) {
        Expr e;
        e.vars_ = variables;
        e.root_ = detail::ExprParser(source, e.vars_).run();
        int depth = 0;
        detail::compile_node(*e.root_, e.program_, depth, e.max_depth_);
        return e;
    }

    bool empty() const { return root_ == nullptr; }

    // `values[i]` binds variables()[i]. Throws EvalError on domain errors.
    double eval(std::span<const double> values) const {
        if (!root_) throw std::logic_error("eval of empty expression");
        if (values.size() != vars_.size())
            throw std::logic_error("eval: binding count mismatch");
        double small[kInlineStack]{};
        std::vector<double> big;
        double* st = small;
        if (max_depth_ > kInlineStack) {
            big.resize(std::size_t(max_depth_));
            st = big.data();
        }
        int sp = 0;
        using detail::OpCode;
        for (const detail::Instr& ins : program_) {
            switch (ins.op) {
                case OpCode::push_const: st[sp++] = ins.c; break;
                case OpCode::push_var: st[sp++] = values[std::size_t(ins.a)]; break;
                case OpCode::neg: st[sp - 1] = -st[sp - 1]; break;
                case OpCode::add: --sp; st[sp - 1] += st[sp]; break;
                case OpCode::sub: --sp; st[sp - 1] -= st[sp]; break;
                case OpCode::mul: --sp; st[sp - 1] *= st[sp]; break;
                case OpCode::div: {
                    --sp;
                    if (st[sp] == 0.0)
                        throw EvalError("division by zero", detail::print_node(*ins.src));
                    st[sp - 1] /= st[sp];
                    break;
                }
                case OpCode::pow_int:
                    st[sp - 1] = detail::eval_pow_int(st[sp - 1], ins.a, ins.src);
                    break;
                case OpCode::pow_gen:
                    --sp;
                    st[sp - 1] = detail::eval_pow_gen(st[sp - 1], st[sp], ins.src);
                    break;
                case OpCode::call:
                    st[sp - 1] = detail::eval_call(detail::Fn(ins.a), st[sp - 1], ins.src);
                    break;
            }
        }
        return st[0];
    }

    // Convenience overload; every variable must be bound.
    double eval(const std::map<std::string, double>& bindings) const {
        std::vector<double> values(vars_.size());
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            auto it = bindings.find(vars_[i]);
            if (it == bindings.end()) {
                if (references(vars_[i]))
                    throw EvalError("missing binding for '" + vars_[i] + "'", str());
                values[i] = 0;
                continue;
            }
            values[i] = it->second;
        }
        return eval(values);
    }

    const std::vector<std::string>& variables() const { return vars_; }

    bool references(std::string_view var) const {
        for (const detail::Instr& ins : program_)
            if (ins.op == detail::OpCode::push_var &&
                vars_[std::size_t(ins.a)] == var)
                return true;
        return false;
    }

    // Printable form; reparsing it yields an identical tree.
    std::string str() const {
        if (!root_) return "";
        return detail::print_node(*root_);
    }

private:
    static constexpr int kInlineStack = 64;

    detail::NodePtr root_;
    std::vector<std::string> vars_;
    std::vector<detail::Instr> program_;
    int max_depth_ = 0;
};

}  // namespace vide

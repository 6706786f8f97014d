#pragma once

// Closed-form expression language for the coefficient laws and initial data.
// One free variable, a fixed set of functions, numeric literals. The grammar
// is deliberately small: determinism matters more than expressiveness here.
//
//   expr   := term  { ('+'|'-') term }          left associative
//   term   := factor { ('*'|'/') factor }       left associative
//   factor := '-' factor | power
//   power  := atom [ '^' factor ]               right associative, binds tightest
//   atom   := number | variable | name '(' expr {',' expr} ')' | '(' expr ')'

#include <charconv>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kvlab {

class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class eval_error : public std::runtime_error {
public:
    explicit eval_error(const std::string& what) : std::runtime_error(what) {}
};

enum class ExprFunc { tanh_fn, exp_fn, ln_fn, sqrt_fn, sin_fn, cos_fn, abs_fn, pow_fn };

inline const char* func_name(ExprFunc f) {
    switch (f) {
        case ExprFunc::tanh_fn: return "tanh";
        case ExprFunc::exp_fn: return "exp";
        case ExprFunc::ln_fn: return "ln";
        case ExprFunc::sqrt_fn: return "sqrt";
        case ExprFunc::sin_fn: return "sin";
        case ExprFunc::cos_fn: return "cos";
        case ExprFunc::abs_fn: return "abs";
        case ExprFunc::pow_fn: return "pow";
    }
    return "?";
}

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { number, variable, negate, binary, call };
    Kind kind;
    double value = 0.0; // number
    char op = 0;        // binary: + - * / ^
    ExprFunc func = ExprFunc::tanh_fn;
    ExprPtr a, b; // negate: a; call: a (and b for pow); binary: a, b
};

inline ExprPtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::number;
    n->value = v;
    return n;
}

inline ExprPtr make_variable() {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::variable;
    return n;
}

inline ExprPtr make_negate(ExprPtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::negate;
    n->a = std::move(a);
    return n;
}

inline ExprPtr make_binary(char op, ExprPtr a, ExprPtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::binary;
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline ExprPtr make_call(ExprFunc f, ExprPtr a, ExprPtr b = nullptr) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::call;
    n->func = f;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

namespace detail {

inline double eval_node(const ExprNode& n, double s) {
    switch (n.kind) {
        case ExprNode::Kind::number: return n.value;
        case ExprNode::Kind::variable: return s;
        case ExprNode::Kind::negate: return -eval_node(*n.a, s);
        case ExprNode::Kind::binary: {
            const double x = eval_node(*n.a, s);
            const double y = eval_node(*n.b, s);
            switch (n.op) {
                case '+': return x + y;
                case '-': return x - y;
                case '*': return x * y;
                case '/':
                    if (y == 0.0) throw eval_error("division by zero");
                    return x / y;
                case '^': return std::pow(x, y);
            }
            throw eval_error("corrupt expression node");
        }
        case ExprNode::Kind::call: {
            const double x = eval_node(*n.a, s);
            switch (n.func) {
                case ExprFunc::tanh_fn: return std::tanh(x);
                case ExprFunc::exp_fn: return std::exp(x);
                case ExprFunc::ln_fn:
                    if (x <= 0.0) throw eval_error("ln of nonpositive argument");
                    return std::log(x);
                case ExprFunc::sqrt_fn:
                    if (x < 0.0) throw eval_error("sqrt of negative argument");
                    return std::sqrt(x);
                case ExprFunc::sin_fn: return std::sin(x);
                case ExprFunc::cos_fn: return std::cos(x);
                case ExprFunc::abs_fn: return std::fabs(x);
                case ExprFunc::pow_fn: return std::pow(x, eval_node(*n.b, s));
            }
            throw eval_error("corrupt expression node");
        }
    }
    throw eval_error("corrupt expression node");
}

inline bool node_equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprNode::Kind::number: return a->value == b->value;
        case ExprNode::Kind::variable: return true;
        case ExprNode::Kind::negate: return node_equal(a->a, b->a);
        case ExprNode::Kind::binary: return a->op == b->op && node_equal(a->a, b->a) && node_equal(a->b, b->b);
        case ExprNode::Kind::call: return a->func == b->func && node_equal(a->a, b->a) && node_equal(a->b, b->b);
    }
    return false;
}

inline bool node_uses_variable(const ExprNode& n) {
    switch (n.kind) {
        case ExprNode::Kind::number: return false;
        case ExprNode::Kind::variable: return true;
        case ExprNode::Kind::negate: return node_uses_variable(*n.a);
        case ExprNode::Kind::binary: return node_uses_variable(*n.a) || node_uses_variable(*n.b);
        case ExprNode::Kind::call:
            return node_uses_variable(*n.a) || (n.b && node_uses_variable(*n.b));
    }
    return false;
}

inline std::string format_double(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

// Precedence levels for printing: '+-' 1, '*/' 2, negate 3, '^' 4, atom 5.
inline int node_prec(const ExprNode& n) {
    switch (n.kind) {
        case ExprNode::Kind::binary:
            if (n.op == '+' || n.op == '-') return 1;
            if (n.op == '*' || n.op == '/') return 2;
            return 4;
        case ExprNode::Kind::negate: return 3;
        default: return 5;
    }
}

inline void print_node(const ExprNode& n, std::string& out, const std::string& var);

inline void print_child(const ExprNode& child, std::string& out, const std::string& var, bool parens) {
    if (parens) out += '(';
    print_node(child, out, var);
    if (parens) out += ')';
}

inline void print_node(const ExprNode& n, std::string& out, const std::string& var) {
    switch (n.kind) {
        case ExprNode::Kind::number: out += format_double(n.value); return;
        case ExprNode::Kind::variable: out += var; return;
        case ExprNode::Kind::negate:
            out += '-';
            print_child(*n.a, out, var, node_prec(*n.a) < 3);
            return;
        case ExprNode::Kind::binary: {
            const int p = node_prec(n);
            if (n.op == '^') {
                // right associative: parenthesize a left child of equal precedence
                print_child(*n.a, out, var, node_prec(*n.a) <= p);
                out += '^';
                print_child(*n.b, out, var, node_prec(*n.b) < p);
            } else {
                print_child(*n.a, out, var, node_prec(*n.a) < p);
                out += n.op;
                // preserve tree shape: right child at equal precedence keeps parens
                print_child(*n.b, out, var, node_prec(*n.b) <= p);
            }
            return;
        }
        case ExprNode::Kind::call:
            out += func_name(n.func);
            out += '(';
            print_node(*n.a, out, var);
            if (n.b) {
                out += ',';
                print_node(*n.b, out, var);
            }
            out += ')';
            return;
    }
}

class Parser {
public:
    Parser(std::string_view text, std::string var) : text_(text), var_(std::move(var)) {}

    ExprPtr parse() {
        skip_ws();
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw parse_error("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view text_;
    std::string var_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (peek_is(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw parse_error(std::string("expected ") + what, pos_);
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            if (accept('+'))
                e = make_binary('+', e, parse_term());
            else if (accept('-'))
                e = make_binary('-', e, parse_term());
            else
                return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            if (accept('*'))
                e = make_binary('*', e, parse_factor());
            else if (accept('/'))
                e = make_binary('/', e, parse_factor());
            else
                return e;
        }
    }

    ExprPtr parse_factor() {
        if (accept('-')) return make_negate(parse_factor());
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (accept('^')) return make_binary('^', base, parse_factor());
        return base;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw parse_error("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_expr();
            expect(')', "')'");
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw parse_error(std::string("unexpected character '") + c + "'", pos_);
    }

    ExprPtr parse_number() {
        double v = 0.0;
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        auto [p, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc()) throw parse_error("malformed number", pos_);
        pos_ += static_cast<std::size_t>(p - begin);
        return make_number(v);
    }

    ExprPtr parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        if (name == var_) return make_variable();
        ExprFunc f;
        int arity = 1;
        if (name == "tanh") f = ExprFunc::tanh_fn;
        else if (name == "exp") f = ExprFunc::exp_fn;
        else if (name == "ln") f = ExprFunc::ln_fn;
        else if (name == "sqrt") f = ExprFunc::sqrt_fn;
        else if (name == "sin") f = ExprFunc::sin_fn;
        else if (name == "cos") f = ExprFunc::cos_fn;
        else if (name == "abs") f = ExprFunc::abs_fn;
        else if (name == "pow") { f = ExprFunc::pow_fn; arity = 2; }
        else throw parse_error("unknown identifier '" + name + "'", start);

        expect('(', "'('");
        std::vector<ExprPtr> args;
        args.push_back(parse_expr());
        while (accept(',')) args.push_back(parse_expr());
        expect(')', "')'");
        if (static_cast<int>(args.size()) != arity)
            throw parse_error("arity mismatch for '" + name + "': expected " + std::to_string(arity) +
                                  " argument(s), got " + std::to_string(args.size()),
                              start);
        return arity == 2 ? make_call(f, args[0], args[1]) : make_call(f, args[0]);
    }
};

} // namespace detail

/// A parsed closed-form law in one variable. Immutable and reentrant.
class LawExpr {
public:
    LawExpr() = default;
    LawExpr(ExprPtr root, std::string var) : root_(std::move(root)), var_(std::move(var)) {
        if (!detail::node_uses_variable(*root_)) {
            // fold constants; evaluation errors surface at eval() time instead
            try {
                const double v = detail::eval_node(*root_, 0.0);
                if (std::isfinite(v)) {
                    constant_ = true;
                    cached_ = v;
                }
            } catch (const eval_error&) {
            }
        }
    }

    double eval(double s) const {
        if (constant_) return cached_;
        if (!root_) return 0.0; // default-constructed law is the zero law
        const double v = detail::eval_node(*root_, s);
        if (!std::isfinite(v)) throw eval_error("expression evaluated to a non-finite value");
        return v;
    }

    std::string to_string() const {
        if (!root_) return "0";
        std::string out;
        detail::print_node(*root_, out, var_);
        return out;
    }

    bool is_constant() const { return constant_; }
    const std::string& variable() const { return var_; }
    const ExprPtr& root() const { return root_; }

private:
    ExprPtr root_;
    std::string var_ = "s";
    bool constant_ = false;
    double cached_ = 0.0;
};

inline LawExpr parse_law(std::string_view text, std::string var = "s") {
    detail::Parser p(text, var);
    return LawExpr(p.parse(), std::move(var));
}

inline double eval_law(const LawExpr& law, double s) { return law.eval(s); }

inline bool structurally_equal(const LawExpr& a, const LawExpr& b) {
    return detail::node_equal(a.root(), b.root());
}

/// Derivative of a law by finite differences, staying inside [0, inf).
inline double law_derivative(const LawExpr& law, double s, double h_scale = 1e-6) {
    const double h = h_scale * (1.0 + std::fabs(s));
    if (s - h >= 0.0) return (law.eval(s + h) - law.eval(s - h)) / (2.0 * h);
    return (-3.0 * law.eval(s) + 4.0 * law.eval(s + h) - law.eval(s + 2.0 * h)) / (2.0 * h);
}

} // namespace kvlab

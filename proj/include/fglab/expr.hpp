#pragma once

#include "fglab/rational.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fglab {

enum class Kind : uint8_t { Num, Var, Add, Mul, Pow, Div, Func };

enum class Fn : uint8_t { Sin, Cos, Tan, Exp, Log, Sqrt, Sinh, Cosh, Tanh };

inline const char* fn_name(Fn f) {
    switch (f) {
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Tan: return "tan";
        case Fn::Exp: return "exp";
        case Fn::Log: return "log";
        case Fn::Sqrt: return "sqrt";
        case Fn::Sinh: return "sinh";
        case Fn::Cosh: return "cosh";
        case Fn::Tanh: return "tanh";
    }
    return "?";
}

inline std::optional<Fn> fn_from_name(const std::string& s) {
    static const std::map<std::string, Fn> table = {
        {"sin", Fn::Sin},   {"cos", Fn::Cos},   {"tan", Fn::Tan},
        {"exp", Fn::Exp},   {"log", Fn::Log},   {"sqrt", Fn::Sqrt},
        {"sinh", Fn::Sinh}, {"cosh", Fn::Cosh}, {"tanh", Fn::Tanh},
    };
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

class Expr;
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    Kind kind;
    Rational value;         // Num
    std::string name;       // Var
    Fn fn = Fn::Sin;        // Func
    long long expo = 0;     // Pow
    std::vector<Expr> kid;  // children
    std::size_t hash = 0;
};

/// Immutable scalar expression; value-semantic handle over a shared tree.
class Expr {
public:
    Expr() = default;

    static Expr num(Rational v);
    static Expr num(long long v) { return num(Rational(v)); }
    static Expr var(std::string name);
    static Expr add(Expr a, Expr b);
    static Expr mul(Expr a, Expr b);
    static Expr pow(Expr base, long long e);
    static Expr div(Expr a, Expr b);
    static Expr apply(Fn f, Expr arg);

    bool empty() const { return !p_; }
    Kind kind() const { return p_->kind; }
    const Rational& value() const { return p_->value; }
    const std::string& name() const { return p_->name; }
    Fn fn() const { return p_->fn; }
    long long expo() const { return p_->expo; }
    const std::vector<Expr>& kids() const { return p_->kid; }
    const Expr& kid(size_t i) const { return p_->kid[i]; }
    std::size_t hash() const { return p_->hash; }
    const ExprNode* raw() const { return p_.get(); }

    bool is_num() const { return p_ && p_->kind == Kind::Num; }
    bool is_num(const Rational& v) const { return is_num() && p_->value == v; }
    bool is_zero_literal() const { return is_num() && p_->value == 0; }
    bool is_one_literal() const { return is_num() && p_->value == 1; }

private:
    NodePtr p_;
    static Expr make(ExprNode n);
};

inline std::size_t hash_mix(std::size_t a, std::size_t b) {
    return a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
}

inline Expr Expr::make(ExprNode n) {
    std::size_t h = std::hash<int>{}((int)n.kind);
    switch (n.kind) {
        case Kind::Num: h = hash_mix(h, rational_hash(n.value)); break;
        case Kind::Var: h = hash_mix(h, std::hash<std::string>{}(n.name)); break;
        case Kind::Func: h = hash_mix(h, std::hash<int>{}((int)n.fn)); break;
        case Kind::Pow: h = hash_mix(h, std::hash<long long>{}(n.expo)); break;
        default: break;
    }
    for (const Expr& k : n.kid) h = hash_mix(h, k.hash());
    n.hash = h;
    Expr e;
    e.p_ = std::make_shared<const ExprNode>(std::move(n));
    return e;
}

inline Expr Expr::num(Rational v) {
    ExprNode n;
    n.kind = Kind::Num;
    n.value = std::move(v);
    return make(std::move(n));
}

inline Expr Expr::var(std::string name) {
    ExprNode n;
    n.kind = Kind::Var;
    n.name = std::move(name);
    return make(std::move(n));
}

inline Expr Expr::add(Expr a, Expr b) {
    ExprNode n;
    n.kind = Kind::Add;
    n.kid = {std::move(a), std::move(b)};
    return make(std::move(n));
}

inline Expr Expr::mul(Expr a, Expr b) {
    ExprNode n;
    n.kind = Kind::Mul;
    n.kid = {std::move(a), std::move(b)};
    return make(std::move(n));
}

inline Expr Expr::pow(Expr base, long long e) {
    ExprNode n;
    n.kind = Kind::Pow;
    n.expo = e;
    n.kid = {std::move(base)};
    return make(std::move(n));
}

inline Expr Expr::div(Expr a, Expr b) {
    ExprNode n;
    n.kind = Kind::Div;
    n.kid = {std::move(a), std::move(b)};
    return make(std::move(n));
}

inline Expr Expr::apply(Fn f, Expr arg) {
    ExprNode n;
    n.kind = Kind::Func;
    n.fn = f;
    n.kid = {std::move(arg)};
    return make(std::move(n));
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.raw() == b.raw()) return true;
    if (a.empty() || b.empty()) return a.empty() == b.empty();
    if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case Kind::Num: return a.value() == b.value();
        case Kind::Var: return a.name() == b.name();
        case Kind::Func:
            if (a.fn() != b.fn()) return false;
            break;
        case Kind::Pow:
            if (a.expo() != b.expo()) return false;
            break;
        default: break;
    }
    if (a.kids().size() != b.kids().size()) return false;
    for (size_t i = 0; i < a.kids().size(); ++i)
        if (!structurally_equal(a.kid(i), b.kid(i))) return false;
    return true;
}

// negate with constant-pushing; printer and parser share this shape so that
// "a - b" round-trips structurally
inline Expr negate(const Expr& e) {
    if (e.is_num()) return Expr::num(-e.value());
    if (e.kind() == Kind::Mul && e.kid(0).is_num())
        return Expr::mul(Expr::num(-e.kid(0).value()), e.kid(1));
    if (e.kind() == Kind::Div) return Expr::div(negate(e.kid(0)), e.kid(1));
    return Expr::mul(Expr::num(-1), e);
}

// ---- light-folding arithmetic for computed expressions ----
// These keep intermediate trees small; canonical form is normalize()'s job.

inline Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero_literal()) return b;
    if (b.is_zero_literal()) return a;
    if (a.is_num() && b.is_num()) return Expr::num(a.value() + b.value());
    return Expr::add(a, b);
}

inline Expr operator-(const Expr& a) { return negate(a); }

inline Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero_literal()) return a;
    if (a.is_num() && b.is_num()) return Expr::num(a.value() - b.value());
    if (a.is_zero_literal()) return negate(b);
    return Expr::add(a, negate(b));
}

inline Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero_literal() || b.is_zero_literal()) return Expr::num(0);
    if (a.is_one_literal()) return b;
    if (b.is_one_literal()) return a;
    if (a.is_num() && b.is_num()) return Expr::num(a.value() * b.value());
    return Expr::mul(a, b);
}

inline Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_one_literal()) return a;
    if (a.is_zero_literal() && !b.is_zero_literal()) return Expr::num(0);
    if (a.is_num() && b.is_num() && b.value() != 0) return Expr::num(a.value() / b.value());
    return Expr::div(a, b);
}

inline Expr pow_int(const Expr& a, long long e) {
    if (e == 1) return a;
    if (e == 0) return Expr::num(1);
    if (a.is_one_literal()) return a;
    if (a.is_num() && (a.value() != 0 || e > 0)) return Expr::num(rational_pow(a.value(), e));
    return Expr::pow(a, e);
}

// ---- printing ----
// Precedence: sum 1, product/quotient 2, power 3, atoms 4.

namespace detail {

inline int precedence(const Expr& e) {
    switch (e.kind()) {
        case Kind::Add: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Pow: return 3;
        case Kind::Num:
            if (e.value() < 0) return 1;                  // leading minus binds like a sum
            if (denominator(e.value()) != 1) return 2;    // p/q prints as a quotient
            return 4;
        default: return 4;
    }
}

inline bool prints_negated(const Expr& e) {
    if (e.is_num()) return e.value() < 0;
    if (e.kind() == Kind::Mul && e.kid(0).is_num()) return e.kid(0).value() < 0;
    if (e.kind() == Kind::Div) return prints_negated(e.kid(0));
    return false;
}

// exact inverse of negate() on negated shapes
inline Expr strip_negation(const Expr& e) {
    if (e.is_num()) return Expr::num(-e.value());
    if (e.kind() == Kind::Mul && e.kid(0).is_num()) {
        if (e.kid(0).value() == -1 && e.kids().size() == 2) return e.kid(1);
        return Expr::mul(Expr::num(-e.kid(0).value()), e.kid(1));
    }
    if (e.kind() == Kind::Div) return Expr::div(strip_negation(e.kid(0)), e.kid(1));
    return e;
}

void print_to(std::ostream& os, const Expr& e, int parent_prec, bool right_operand);

inline void print_child(std::ostream& os, const Expr& e, int parent_prec, bool right_operand) {
    int p = precedence(e);
    bool parens = p < parent_prec || (p == parent_prec && right_operand);
    if (parens) os << '(';
    print_to(os, e, 0, false);
    if (parens) os << ')';
}

inline void print_to(std::ostream& os, const Expr& e, int, bool) {
    switch (e.kind()) {
        case Kind::Num: {
            const Rational& q = e.value();
            if (denominator(q) == 1) os << numerator(q).str();
            else os << numerator(q).str() << '/' << denominator(q).str();
            break;
        }
        case Kind::Var: os << e.name(); break;
        case Kind::Add: {
            print_child(os, e.kid(0), 1, false);
            const Expr& b = e.kid(1);
            if (prints_negated(b)) {
                os << " - ";
                print_child(os, strip_negation(b), 1, true);
            } else {
                os << " + ";
                print_child(os, b, 1, true);
            }
            break;
        }
        case Kind::Mul:
            if (e.kid(0).is_num() && e.kid(0).value() < 0) {
                // "-2*x" and "-x" reparse to this exact shape via negate()
                os << '-';
                Expr s = strip_negation(e);
                if (s.kind() == Kind::Mul) {
                    print_child(os, s.kid(0), 2, false);
                    os << '*';
                    print_child(os, s.kid(1), 2, true);
                } else {
                    // '-' binds before '^', so anything at power precedence or
                    // below needs parens to reparse identically
                    print_child(os, s, 4, false);
                }
                break;
            }
            print_child(os, e.kid(0), 2, false);
            os << '*';
            print_child(os, e.kid(1), 2, true);
            break;
        case Kind::Div:
            print_child(os, e.kid(0), 2, false);
            os << '/';
            print_child(os, e.kid(1), 2, true);
            break;
        case Kind::Pow: {
            const Expr& b = e.kid(0);
            bool parens = !(b.kind() == Kind::Var || b.kind() == Kind::Func ||
                            (b.is_num() && b.value() >= 0 && denominator(b.value()) == 1));
            if (parens) os << '(';
            print_to(os, b, 0, false);
            if (parens) os << ')';
            os << '^' << e.expo();
            break;
        }
        case Kind::Func:
            os << fn_name(e.fn()) << '(';
            print_to(os, e.kid(0), 0, false);
            os << ')';
            break;
    }
}

} // namespace detail

inline std::string to_string(const Expr& e) {
    std::ostringstream os;
    detail::print_to(os, e, 0, false);
    return os.str();
}

// ---- evaluation ----

struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& m) : std::runtime_error(m) {}
};

inline double eval_fn(Fn f, double a) {
    switch (f) {
        case Fn::Sin: return std::sin(a);
        case Fn::Cos: return std::cos(a);
        case Fn::Tan: {
            double c = std::cos(a);
            if (c == 0.0) throw EvalError("tan at a pole");
            return std::sin(a) / c;
        }
        case Fn::Exp: return std::exp(a);
        case Fn::Log:
            if (a <= 0.0) throw EvalError("log of non-positive argument");
            return std::log(a);
        case Fn::Sqrt:
            if (a < 0.0) throw EvalError("sqrt of negative argument");
            return std::sqrt(a);
        case Fn::Sinh: return std::sinh(a);
        case Fn::Cosh: return std::cosh(a);
        case Fn::Tanh: return std::tanh(a);
    }
    throw EvalError("unknown function");
}

inline double evaluate(const Expr& e, const std::map<std::string, double>& point) {
    switch (e.kind()) {
        case Kind::Num: return rational_to_double(e.value());
        case Kind::Var: {
            auto it = point.find(e.name());
            if (it == point.end()) throw EvalError("unbound variable: " + e.name());
            return it->second;
        }
        case Kind::Add: return evaluate(e.kid(0), point) + evaluate(e.kid(1), point);
        case Kind::Mul: return evaluate(e.kid(0), point) * evaluate(e.kid(1), point);
        case Kind::Div: {
            double d = evaluate(e.kid(1), point);
            if (d == 0.0) throw EvalError("division by zero at evaluation point");
            return evaluate(e.kid(0), point) / d;
        }
        case Kind::Pow: {
            double b = evaluate(e.kid(0), point);
            if (b == 0.0 && e.expo() < 0) throw EvalError("zero base with negative exponent");
            return std::pow(b, (double)e.expo());
        }
        case Kind::Func: return eval_fn(e.fn(), evaluate(e.kid(0), point));
    }
    throw EvalError("malformed expression");
}

// ---- differentiation ----

inline Expr differentiate(const Expr& e, const std::string& v) {
    switch (e.kind()) {
        case Kind::Num: return Expr::num(0);
        case Kind::Var: return Expr::num(e.name() == v ? 1 : 0);
        case Kind::Add: return differentiate(e.kid(0), v) + differentiate(e.kid(1), v);
        case Kind::Mul: {
            const Expr &a = e.kid(0), &b = e.kid(1);
            return differentiate(a, v) * b + a * differentiate(b, v);
        }
        case Kind::Div: {
            const Expr &a = e.kid(0), &b = e.kid(1);
            return (differentiate(a, v) * b - a * differentiate(b, v)) / pow_int(b, 2);
        }
        case Kind::Pow: {
            const Expr& b = e.kid(0);
            return Expr::num(e.expo()) * pow_int(b, e.expo() - 1) * differentiate(b, v);
        }
        case Kind::Func: {
            const Expr& u = e.kid(0);
            Expr du = differentiate(u, v);
            Expr outer;
            switch (e.fn()) {
                case Fn::Sin: outer = Expr::apply(Fn::Cos, u); break;
                case Fn::Cos: outer = negate(Expr::apply(Fn::Sin, u)); break;
                case Fn::Tan: outer = Expr::num(1) + pow_int(Expr::apply(Fn::Tan, u), 2); break;
                case Fn::Exp: outer = e; break;
                case Fn::Log: outer = Expr::num(1) / u; break;
                case Fn::Sqrt: outer = Expr::num(Rational(1, 2)) / e; break;
                case Fn::Sinh: outer = Expr::apply(Fn::Cosh, u); break;
                case Fn::Cosh: outer = Expr::apply(Fn::Sinh, u); break;
                case Fn::Tanh: outer = Expr::num(1) - pow_int(Expr::apply(Fn::Tanh, u), 2); break;
            }
            return outer * du;
        }
    }
    return Expr::num(0);
}

inline void collect_variables(const Expr& e, std::set<std::string>& out) {
    if (e.kind() == Kind::Var) out.insert(e.name());
    for (const Expr& k : e.kids()) collect_variables(k, out);
}

inline std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> s;
    collect_variables(e, s);
    return s;
}

/// Replace every occurrence of variable `v` by `repl`.
inline Expr substitute(const Expr& e, const std::string& v, const Expr& repl) {
    switch (e.kind()) {
        case Kind::Num: return e;
        case Kind::Var: return e.name() == v ? repl : e;
        case Kind::Add: return substitute(e.kid(0), v, repl) + substitute(e.kid(1), v, repl);
        case Kind::Mul: return substitute(e.kid(0), v, repl) * substitute(e.kid(1), v, repl);
        case Kind::Div: return substitute(e.kid(0), v, repl) / substitute(e.kid(1), v, repl);
        case Kind::Pow: return pow_int(substitute(e.kid(0), v, repl), e.expo());
        case Kind::Func: return Expr::apply(e.fn(), substitute(e.kid(0), v, repl));
    }
    return e;
}

} // namespace fglab

#pragma once
// Rational-function normal form over "atoms": coordinate names plus opaque
// function applications.  Two expressions that agree as rational functions
// of their atoms reduce to the same (num, den) pair; transcendental
// identities (sin^2 + cos^2 = 1 and friends) are deliberately outside the
// form and are left to numeric probing.

#include <cstdint>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "expr.hpp"
#include "poly.hpp"

namespace fglab {

struct ZeroDenominator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invariant once reduced: gcd(num, den) is constant, den is
// integer-primitive with positive leading coefficient, zero is 0/1.
struct RatFun {
    Poly num;
    Poly den = Poly::constant(1);

    static RatFun of(Poly p) { return {std::move(p), Poly::constant(1)}; }
    static RatFun constant(const Rational& c) { return of(Poly::constant(c)); }
    static RatFun atom(int id) { return of(Poly::variable(id)); }

    bool is_zero_form() const { return num.is_zero(); }
    bool is_constant_form() const { return num.is_constant() && den.is_constant(); }
    Rational constant_value() const { return num.constant_value() / den.constant_value(); }
    bool operator==(const RatFun& o) const { return num == o.num && den == o.den; }
    bool operator!=(const RatFun& o) const { return !(*this == o); }
};

namespace detail {

// freed collects cancelled factors that no longer divide the denominator:
// the reduced function is defined at points the original was not.
inline void reduce(RatFun& f, std::vector<Poly>* freed = nullptr) {
    if (f.den.is_zero()) throw ZeroDenominator("denominator is identically zero");
    if (f.num.is_zero()) {
        f.den = Poly::constant(1);
        return;
    }
    Poly g = Poly::gcd(f.num, f.den);
    if (!g.is_constant()) {
        f.num = *Poly::divide(f.num, g);
        f.den = *Poly::divide(f.den, g);
        if (freed && !Poly::divide(f.den, g)) freed->push_back(g);
    }
    Rational c = f.den.content();
    f.den = f.den.primitive();
    f.num = f.num.scaled(Rational(1) / c);
}

// num and den already coprime: only normalize the denominator's content.
inline RatFun finish(Poly num, Poly den) {
    if (num.is_zero()) return RatFun::constant(0);
    Rational c = den.content();
    return {num.scaled(Rational(1) / c), den.primitive()};
}

}  // namespace detail

// The operators below assume (and preserve) the reduced invariant; the
// cross-cancellation identities then keep every gcd call on small inputs.

inline RatFun operator+(const RatFun& a, const RatFun& b) {
    if (a.num.is_zero()) return b;
    if (b.num.is_zero()) return a;
    if (a.den == b.den) {
        RatFun r{a.num + b.num, a.den};
        detail::reduce(r);
        return r;
    }
    Poly d = Poly::gcd(a.den, b.den);
    if (d.is_constant())  // coprime denominators: already reduced
        return detail::finish(a.num * b.den + b.num * a.den, a.den * b.den);
    Poly ap = *Poly::divide(a.den, d), bp = *Poly::divide(b.den, d);
    Poly t = a.num * bp + b.num * ap;
    if (t.is_zero()) return RatFun::constant(0);
    // any common factor of t and a.den*bp divides d
    Poly g2 = Poly::gcd(t, d);
    if (g2.is_constant()) return detail::finish(std::move(t), a.den * bp);
    return detail::finish(*Poly::divide(t, g2), *Poly::divide(a.den, g2) * bp);
}
inline RatFun operator-(const RatFun& a) { return {-a.num, a.den}; }
inline RatFun operator-(const RatFun& a, const RatFun& b) { return a + (-b); }

inline RatFun operator*(const RatFun& a, const RatFun& b) {
    if (a.num.is_zero() || b.num.is_zero()) return RatFun::constant(0);
    Poly g1 = Poly::gcd(a.num, b.den), g2 = Poly::gcd(b.num, a.den);
    return detail::finish(*Poly::divide(a.num, g1) * *Poly::divide(b.num, g2),
                          *Poly::divide(a.den, g2) * *Poly::divide(b.den, g1));
}

inline RatFun rf_div(const RatFun& a, const RatFun& b, std::vector<Poly>* freed = nullptr) {
    if (b.num.is_zero()) throw ZeroDenominator("division by an identically zero expression");
    if (a.num.is_zero()) return RatFun::constant(0);
    Poly g1 = Poly::gcd(a.num, b.num), g2 = Poly::gcd(a.den, b.den);
    Poly new_den = *Poly::divide(a.den, g2) * *Poly::divide(b.num, g1);
    if (freed && !g1.is_constant() && !Poly::divide(new_den, g1))
        freed->push_back(g1);  // the domain grew: this factor left the denominator
    return detail::finish(*Poly::divide(a.num, g1) * *Poly::divide(b.den, g2), std::move(new_den));
}
inline RatFun operator/(const RatFun& a, const RatFun& b) { return rf_div(a, b); }

inline RatFun rf_pow(const RatFun& f, long long k, std::vector<Poly>* freed = nullptr) {
    if (k < 0) return rf_div(RatFun::constant(1), rf_pow(f, -k), freed);
    // reduced input stays reduced under powers: coprimality and the
    // primitive positive-lead denominator are preserved
    return {f.num.pow(static_cast<int>(k)), f.den.pow(static_cast<int>(k))};
}

// ---- atoms ----

class AtomTable {
  public:
    struct Atom {
        bool is_func = false;
        std::string name;  // coordinate atoms
        Fn fn = Fn::Sin;   // function atoms; arg is reduced
        RatFun arg;
    };

    int var(const std::string& name) {
        for (int i = 0; i < size(); ++i)
            if (!atoms_[i].is_func && atoms_[i].name == name) return i;
        atoms_.push_back({false, name, Fn::Sin, {}});
        return size() - 1;
    }
    int func(Fn fn, const RatFun& arg) {
        for (int i = 0; i < size(); ++i)
            if (atoms_[i].is_func && atoms_[i].fn == fn && atoms_[i].arg == arg) return i;
        atoms_.push_back({true, "", fn, arg});
        return size() - 1;
    }
    int find_var(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (!atoms_[i].is_func && atoms_[i].name == name) return i;
        return -1;
    }

    const Atom& at(int id) const { return atoms_.at(static_cast<size_t>(id)); }
    int size() const { return static_cast<int>(atoms_.size()); }

    static AtomTable from_atoms(std::vector<Atom> a) {
        AtomTable t;
        t.atoms_ = std::move(a);
        return t;
    }

  private:
    std::vector<Atom> atoms_;
};

// ---- expression <-> normal form ----

struct NormalizeTrace {
    std::vector<Poly> freed;
};

namespace detail {

inline RatFun convert(const Expr& e, AtomTable& tab, NormalizeTrace* trace,
                      std::map<const void*, RatFun>& memo) {
    auto it = memo.find(e.raw());
    if (it != memo.end()) return it->second;
    RatFun r;
    switch (e.kind()) {
        case Kind::Num: r = RatFun::constant(e.value()); break;
        case Kind::Var: r = RatFun::atom(tab.var(e.name())); break;
        case Kind::Add: r = convert(e.kid(0), tab, trace, memo) + convert(e.kid(1), tab, trace, memo); break;
        case Kind::Mul: r = convert(e.kid(0), tab, trace, memo) * convert(e.kid(1), tab, trace, memo); break;
        case Kind::Div:
            r = rf_div(convert(e.kid(0), tab, trace, memo), convert(e.kid(1), tab, trace, memo),
                       trace ? &trace->freed : nullptr);
            break;
        case Kind::Pow:
            r = rf_pow(convert(e.kid(0), tab, trace, memo), e.expo(), trace ? &trace->freed : nullptr);
            break;
        case Kind::Func:
            r = RatFun::atom(tab.func(e.fn(), convert(e.kid(0), tab, trace, memo)));
            break;
    }
    memo.emplace(e.raw(), r);
    return r;
}

}  // namespace detail

inline RatFun from_expr(const Expr& e, AtomTable& tab, NormalizeTrace* trace = nullptr) {
    std::map<const void*, RatFun> memo;
    return detail::convert(e, tab, trace, memo);
}

inline Expr to_expr(const RatFun& f, const AtomTable& tab);

inline Expr atom_to_expr(int id, const AtomTable& tab) {
    const auto& a = tab.at(id);
    if (!a.is_func) return Expr::var(a.name);
    return Expr::apply(a.fn, to_expr(a.arg, tab));
}

inline Expr poly_to_expr(const Poly& p, const AtomTable& tab) {
    if (p.is_zero()) return Expr::num(0);
    Expr acc = Expr::num(0);
    bool first = true;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        Expr t = Expr::num(it->second);
        for (const auto& [id, k] : it->first.e) t = t * pow_int(atom_to_expr(id, tab), k);
        acc = first ? t : acc + t;
        first = false;
    }
    return acc;
}

inline Expr to_expr(const RatFun& f, const AtomTable& tab) {
    Expr n = poly_to_expr(f.num, tab);
    if (f.den.is_constant() && f.den.constant_value() == 1) return n;
    return Expr::div(n, poly_to_expr(f.den, tab));
}

// ---- canonical atom order ----
//
// Atom ids reflect discovery order, which depends on how the input tree
// happened to be written.  Relabeling by a content-derived key makes the
// printed normal form canonical: equal rational functions print as
// identical trees no matter how they arrived.

namespace detail {

inline std::string poly_key(const Poly& p, const std::vector<std::string>& key) {
    std::vector<std::string> terms;
    for (const auto& [m, c] : p.terms()) {
        std::string t = rational_str(c);
        std::vector<std::string> factors;
        for (const auto& [id, k] : m.e)
            factors.push_back("[" + key[static_cast<size_t>(id)] + "]^" + std::to_string(k));
        std::sort(factors.begin(), factors.end());
        for (const auto& f : factors) t += f;
        terms.push_back(t);
    }
    std::sort(terms.begin(), terms.end());
    std::string out;
    for (const auto& t : terms) out += t + "+";
    return out;
}

inline std::string ratfun_key(const RatFun& f, const std::vector<std::string>& key) {
    return poly_key(f.num, key) + "/" + poly_key(f.den, key);
}

inline Poly remap_poly(const Poly& p, const std::vector<int>& idmap) {
    Poly out;
    for (const auto& [m, c] : p.terms()) {
        Poly t = Poly::constant(c);
        for (const auto& [id, k] : m.e) t *= Poly::variable(idmap[static_cast<size_t>(id)], k);
        out += t;
    }
    return out;
}

inline RatFun remap_ratfun(const RatFun& f, const std::vector<int>& idmap) {
    return {remap_poly(f.num, idmap), remap_poly(f.den, idmap)};
}

}  // namespace detail

inline std::pair<RatFun, AtomTable> canonicalize(const RatFun& f, const AtomTable& tab) {
    int n = tab.size();
    std::vector<std::string> key(static_cast<size_t>(n));
    // a function atom is interned after its argument's atoms, so keys are
    // complete by the time they are needed
    for (int i = 0; i < n; ++i) {
        const auto& a = tab.at(i);
        key[static_cast<size_t>(i)] =
            a.is_func ? "f|" + std::string(fn_name(a.fn)) + "|" + detail::ratfun_key(a.arg, key)
                      : "v|" + a.name;
    }
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return key[static_cast<size_t>(a)] < key[static_cast<size_t>(b)]; });
    std::vector<int> idmap(static_cast<size_t>(n));
    for (int pos = 0; pos < n; ++pos) idmap[static_cast<size_t>(order[static_cast<size_t>(pos)])] = pos;
    std::vector<AtomTable::Atom> atoms(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        AtomTable::Atom a = tab.at(i);
        if (a.is_func) a.arg = detail::remap_ratfun(a.arg, idmap);
        atoms[static_cast<size_t>(idmap[static_cast<size_t>(i)])] = std::move(a);
    }
    return {detail::remap_ratfun(f, idmap), AtomTable::from_atoms(std::move(atoms))};
}

// ---- normalize ----

struct Normalized {
    Expr expr;
    std::vector<std::string> caveats;  // cancelled denominator factors, e.g. "x != 0"
};

inline Normalized normalize_report(const Expr& e) {
    AtomTable tab;
    NormalizeTrace tr;
    RatFun f = from_expr(e, tab, &tr);
    auto [cf, ctab] = canonicalize(f, tab);
    Normalized out{to_expr(cf, ctab), {}};
    std::set<std::string> seen;
    for (const auto& g : tr.freed) {
        std::string s = to_string(poly_to_expr(g, tab)) + " != 0";
        if (seen.insert(s).second) out.caveats.push_back(s);
    }
    return out;
}

inline Expr normalize(const Expr& e) { return normalize_report(e).expr; }

// ---- numeric evaluation of the normal form ----

inline double eval_ratfun(const RatFun& f, const AtomTable& tab,
                          const std::map<std::string, double>& point);

namespace detail {

inline double eval_atom(int id, const AtomTable& tab, const std::map<std::string, double>& point,
                        std::vector<double>& memo, std::vector<char>& have) {
    if (have[static_cast<size_t>(id)]) return memo[static_cast<size_t>(id)];
    const auto& a = tab.at(id);
    double v;
    if (!a.is_func) {
        auto it = point.find(a.name);
        if (it == point.end()) throw EvalError("unbound variable: " + a.name);
        v = it->second;
    } else {
        v = eval_fn(a.fn, eval_ratfun(a.arg, tab, point));
    }
    memo[static_cast<size_t>(id)] = v;
    have[static_cast<size_t>(id)] = 1;
    return v;
}

}  // namespace detail

inline double eval_ratfun(const RatFun& f, const AtomTable& tab,
                          const std::map<std::string, double>& point) {
    std::vector<double> memo(static_cast<size_t>(tab.size()), 0.0);
    std::vector<char> have(static_cast<size_t>(tab.size()), 0);
    auto at = [&](int id) { return detail::eval_atom(id, tab, point, memo, have); };
    double den = f.den.evaluate<double>(at);
    if (den == 0.0) throw EvalError("division by zero at evaluation point");
    return f.num.evaluate<double>(at) / den;
}

// Coordinate names a normal form depends on, looking through function
// arguments.
inline void collect_vars(const RatFun& f, const AtomTable& tab, std::set<std::string>& out) {
    auto walk = [&](const Poly& p) {
        for (int id : p.variables()) {
            const auto& a = tab.at(id);
            if (!a.is_func)
                out.insert(a.name);
            else
                collect_vars(a.arg, tab, out);
        }
    };
    walk(f.num);
    walk(f.den);
}

// ---- differentiation on the normal form ----

namespace detail {

inline RatFun ratfun_diff(const RatFun& f, int var_id, AtomTable& tab);

// d atom / d var as a normal form; interns whatever new atoms the chain
// rule produces (cos for sin, and so on).
inline RatFun atom_diff(int id, int var_id, AtomTable& tab) {
    AtomTable::Atom a = tab.at(id);  // copy: interning may invalidate refs
    if (!a.is_func) return RatFun::constant(id == var_id ? 1 : 0);
    RatFun du = ratfun_diff(a.arg, var_id, tab);
    if (du.is_zero_form()) return RatFun::constant(0);
    RatFun self = RatFun::atom(id);
    switch (a.fn) {
        case Fn::Sin: return RatFun::atom(tab.func(Fn::Cos, a.arg)) * du;
        case Fn::Cos: return -(RatFun::atom(tab.func(Fn::Sin, a.arg)) * du);
        case Fn::Tan: return (RatFun::constant(1) + self * self) * du;
        case Fn::Exp: return self * du;
        case Fn::Log: return du / a.arg;
        case Fn::Sqrt: return du / (RatFun::constant(2) * self);
        case Fn::Sinh: return RatFun::atom(tab.func(Fn::Cosh, a.arg)) * du;
        case Fn::Cosh: return RatFun::atom(tab.func(Fn::Sinh, a.arg)) * du;
        case Fn::Tanh: return (RatFun::constant(1) - self * self) * du;
    }
    throw std::logic_error("atom_diff: unknown function");
}

inline RatFun poly_diff_total(const Poly& p, int var_id, AtomTable& tab) {
    RatFun acc = RatFun::of(p.diff(var_id));
    for (int id : p.variables()) {
        if (id == var_id || !tab.at(id).is_func) continue;
        Poly partial = p.diff(id);
        if (partial.is_zero()) continue;
        RatFun da = atom_diff(id, var_id, tab);
        if (da.is_zero_form()) continue;
        acc = acc + RatFun::of(partial) * da;
    }
    return acc;
}

inline RatFun ratfun_diff(const RatFun& f, int var_id, AtomTable& tab) {
    RatFun dn = poly_diff_total(f.num, var_id, tab);
    if (f.den.is_constant())
        return dn * RatFun::constant(Rational(1) / f.den.constant_value());
    RatFun dd = poly_diff_total(f.den, var_id, tab);
    RatFun den = RatFun::of(f.den);
    return (dn * den - RatFun::of(f.num) * dd) / (den * den);
}

}  // namespace detail

inline RatFun ratfun_diff(const RatFun& f, const std::string& var, AtomTable& tab) {
    return detail::ratfun_diff(f, tab.var(var), tab);
}

// ---- three-valued zero test ----

enum class ZeroVerdict { CertainlyZero, NumericallyZero, ProbablyNonzero };

inline const char* to_string(ZeroVerdict v) {
    switch (v) {
        case ZeroVerdict::CertainlyZero: return "certainly-zero";
        case ZeroVerdict::NumericallyZero: return "numerically-zero";
        case ZeroVerdict::ProbablyNonzero: return "probably-nonzero";
    }
    return "?";
}

inline std::uint64_t default_probe_seed() {
    if (const char* s = std::getenv("FGLAB_SEED")) return std::strtoull(s, nullptr, 10);
    return 0;
}

struct ZeroOptions {
    int probes = 8;
    std::uint64_t seed = default_probe_seed();
    double tolerance = 1e-9;
    int retry_budget = 64;  // extra draws allowed when probes hit domain errors
};

struct ZeroResult {
    ZeroVerdict verdict = ZeroVerdict::ProbablyNonzero;
    std::uint64_t seed = 0;
    int probes_run = 0;
    std::string witness;  // nonzero probe point, or a note when probing degenerates
};

namespace detail {

// Random rational points keep probes reproducible across platforms.
inline double draw_probe(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num_d(-12, 12);
    std::uniform_int_distribution<int> den_d(1, 8);
    return static_cast<double>(num_d(rng)) / static_cast<double>(den_d(rng));
}

template <class EvalFn>
ZeroResult probe_zero(const std::set<std::string>& vars, EvalFn&& eval, const ZeroOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    ZeroResult res{ZeroVerdict::NumericallyZero, opt.seed, 0, ""};
    int budget = opt.retry_budget;
    while (res.probes_run < opt.probes) {
        std::map<std::string, double> pt;
        for (const auto& v : vars) pt[v] = draw_probe(rng);
        double val;
        try {
            val = eval(pt);
        } catch (const EvalError&) {
            if (--budget < 0) break;
            continue;
        }
        if (!std::isfinite(val) || std::abs(val) > opt.tolerance) {
            std::string w;
            for (const auto& [k, x] : pt) w += k + "=" + std::to_string(x) + " ";
            res.verdict = ZeroVerdict::ProbablyNonzero;
            res.witness = w + "-> " + std::to_string(val);
            ++res.probes_run;
            return res;
        }
        ++res.probes_run;
    }
    if (res.probes_run == 0) {
        // nothing evaluable: stay honest and refuse the zero claim
        res.verdict = ZeroVerdict::ProbablyNonzero;
        res.witness = "no valid probe points found within retry budget";
    } else if (res.probes_run < opt.probes) {
        res.witness = "only " + std::to_string(res.probes_run) + " probes evaluable";
    }
    return res;
}

}  // namespace detail

inline ZeroResult is_zero(const RatFun& f, const AtomTable& tab, const ZeroOptions& opt = {}) {
    if (f.num.is_zero()) return {ZeroVerdict::CertainlyZero, opt.seed, 0, ""};
    std::set<std::string> vars;
    collect_vars(f, tab, vars);
    return detail::probe_zero(vars, [&](const std::map<std::string, double>& pt) {
        return eval_ratfun(f, tab, pt);
    }, opt);
}

inline ZeroResult is_zero(const Expr& e, const ZeroOptions& opt = {}) {
    AtomTable tab;
    RatFun f = from_expr(e, tab);
    if (f.num.is_zero()) return {ZeroVerdict::CertainlyZero, opt.seed, 0, ""};
    // probe the original tree: reduction can erase poles the input had
    return detail::probe_zero(free_variables(e), [&](const std::map<std::string, double>& pt) {
        return evaluate(e, pt);
    }, opt);
}

}  // namespace fglab

#pragma once
// Sparse multivariate polynomials over exact rationals.  These are the
// workhorse behind rational-function normalization: variables are small
// integer ids handed out by the atom table, and a monomial stores only
// its nonzero exponents, sorted by id.

#include <algorithm>
#include <climits>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rational.hpp"

namespace fglab {

struct Mono {
    // (id, exponent) pairs; ids strictly increasing, exponents > 0.
    std::vector<std::pair<int, int>> e;

    int degree() const {
        int d = 0;
        for (const auto& p : e) d += p.second;
        return d;
    }
    int degree_in(int v) const {
        for (const auto& p : e)
            if (p.first == v) return p.second;
        return 0;
    }
    bool operator==(const Mono& o) const { return e == o.e; }
};

// Graded lex order with lower ids ranking higher.  Admissible (compatible
// with monomial multiplication), which long division relies on.
inline int mono_compare(const Mono& a, const Mono& b) {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db ? -1 : 1;
    size_t i = 0, j = 0;
    while (i < a.e.size() || j < b.e.size()) {
        int ida = i < a.e.size() ? a.e[i].first : INT_MAX;
        int idb = j < b.e.size() ? b.e[j].first : INT_MAX;
        if (ida < idb) return 1;   // a carries a smaller id that b lacks
        if (idb < ida) return -1;
        int ea = a.e[i].second, eb = b.e[j].second;
        if (ea != eb) return ea > eb ? 1 : -1;
        ++i, ++j;
    }
    return 0;
}

struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const { return mono_compare(a, b) < 0; }
};

inline Mono mono_mul(const Mono& a, const Mono& b) {
    Mono m;
    size_t i = 0, j = 0;
    while (i < a.e.size() || j < b.e.size()) {
        int ida = i < a.e.size() ? a.e[i].first : INT_MAX;
        int idb = j < b.e.size() ? b.e[j].first : INT_MAX;
        if (ida < idb)
            m.e.push_back(a.e[i++]);
        else if (idb < ida)
            m.e.push_back(b.e[j++]);
        else {
            m.e.emplace_back(ida, a.e[i].second + b.e[j].second);
            ++i, ++j;
        }
    }
    return m;
}

// a / b when every exponent of b is covered; nullopt otherwise.
inline std::optional<Mono> mono_div(const Mono& a, const Mono& b) {
    Mono m;
    size_t i = 0, j = 0;
    while (j < b.e.size()) {
        if (i == a.e.size()) return std::nullopt;
        if (a.e[i].first < b.e[j].first) {
            m.e.push_back(a.e[i++]);
        } else if (a.e[i].first > b.e[j].first) {
            return std::nullopt;
        } else {
            int d = a.e[i].second - b.e[j].second;
            if (d < 0) return std::nullopt;
            if (d > 0) m.e.emplace_back(a.e[i].first, d);
            ++i, ++j;
        }
    }
    while (i < a.e.size()) m.e.push_back(a.e[i++]);
    return m;
}

class Poly {
  public:
    using Terms = std::map<Mono, Rational, MonoLess>;

    Poly() = default;

    static Poly constant(const Rational& c) {
        Poly p;
        if (c != 0) p.t_[Mono{}] = c;
        return p;
    }
    static Poly variable(int id, int expo = 1) {
        if (expo < 0) throw std::invalid_argument("Poly::variable: negative exponent");
        if (expo == 0) return constant(1);
        Poly p;
        Mono m;
        m.e.emplace_back(id, expo);
        p.t_[m] = 1;
        return p;
    }

    bool is_zero() const { return t_.empty(); }
    bool is_constant() const {
        return t_.empty() || (t_.size() == 1 && t_.begin()->first.e.empty());
    }
    // Zero polynomial reports 0.
    Rational constant_value() const {
        if (t_.empty()) return 0;
        if (!is_constant()) throw std::logic_error("Poly::constant_value: not constant");
        return t_.begin()->second;
    }

    const Terms& terms() const { return t_; }
    size_t term_count() const { return t_.size(); }

    bool operator==(const Poly& o) const { return t_ == o.t_; }
    bool operator!=(const Poly& o) const { return !(*this == o); }

    // Leading term under graded lex.
    const std::pair<const Mono, Rational>& leading() const {
        if (t_.empty()) throw std::logic_error("Poly::leading: zero polynomial");
        return *t_.rbegin();
    }

    Poly& operator+=(const Poly& o) {
        for (const auto& [m, c] : o.t_) add_term(m, c);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (const auto& [m, c] : o.t_) add_term(m, -c);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    Poly operator-() const {
        Poly p = *this;
        for (auto& [m, c] : p.t_) c = -c;
        return p;
    }

    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly p;
        for (const auto& [ma, ca] : a.t_)
            for (const auto& [mb, cb] : b.t_) p.add_term(mono_mul(ma, mb), ca * cb);
        return p;
    }
    Poly& operator*=(const Poly& o) { return *this = *this * o; }

    Poly scaled(const Rational& c) const {
        if (c == 0) return {};
        Poly p = *this;
        for (auto& [m, v] : p.t_) v *= c;
        return p;
    }

    Poly pow(int k) const {
        if (k < 0) throw std::invalid_argument("Poly::pow: negative exponent");
        Poly r = constant(1), b = *this;
        while (k) {
            if (k & 1) r *= b;
            b = (k >>= 1) ? b * b : b;
        }
        return r;
    }

    int total_degree() const {
        if (t_.empty()) return -1;
        return t_.rbegin()->first.degree();
    }
    int degree_in(int v) const {
        int d = t_.empty() ? -1 : 0;
        for (const auto& [m, c] : t_) d = std::max(d, m.degree_in(v));
        return d;
    }
    bool depends_on(int v) const { return degree_in(v) > 0; }

    std::vector<int> variables() const {
        std::vector<int> out;
        for (const auto& [m, c] : t_)
            for (const auto& p : m.e)
                if (std::find(out.begin(), out.end(), p.first) == out.end())
                    out.push_back(p.first);
        std::sort(out.begin(), out.end());
        return out;
    }

    Poly diff(int v) const {
        Poly p;
        for (const auto& [m, c] : t_) {
            for (size_t i = 0; i < m.e.size(); ++i) {
                if (m.e[i].first != v) continue;
                Mono d = m;
                int k = d.e[i].second;
                if (k == 1)
                    d.e.erase(d.e.begin() + static_cast<long>(i));
                else
                    d.e[i].second = k - 1;
                p.add_term(d, c * k);
            }
        }
        return p;
    }

    // F maps a variable id to a value; V needs *, +, and construction
    // from Rational (double and Rational both qualify).
    template <class V, class F>
    V evaluate(F&& at) const {
        V acc = V(0);
        for (const auto& [m, c] : t_) {
            V term = value_of<V>(c);
            for (const auto& [id, k] : m.e) {
                V base = at(id);
                for (int i = 0; i < k; ++i) term = term * base;
            }
            acc = acc + term;
        }
        return acc;
    }

    // Rational content together with the sign of the leading coefficient,
    // so primitive() has integer coefficients and a positive lead.
    Rational content() const {
        if (t_.empty()) return 0;
        Integer num_gcd = 0, den_lcm = 1;
        for (const auto& [m, c] : t_) {
            num_gcd = boost::multiprecision::gcd(num_gcd, boost::multiprecision::numerator(c));
            den_lcm = boost::multiprecision::lcm(den_lcm, boost::multiprecision::denominator(c));
        }
        Rational r(num_gcd, den_lcm);
        if (t_.rbegin()->second < 0) r = -r;
        return r;
    }
    Poly primitive() const {
        if (t_.empty()) return {};
        Rational c = content();
        Poly p = *this;
        for (auto& [m, v] : p.t_) v /= c;
        return p;
    }

    // Coefficients as a univariate polynomial in v; key is the power of v.
    std::map<int, Poly> coefficients_in(int v) const {
        std::map<int, Poly> out;
        for (const auto& [m, c] : t_) {
            Mono rest;
            int k = 0;
            for (const auto& p : m.e) {
                if (p.first == v)
                    k = p.second;
                else
                    rest.e.push_back(p);
            }
            out[k].add_term(rest, c);
        }
        return out;
    }
    static Poly from_coefficients(int v, const std::map<int, Poly>& co) {
        Poly p;
        for (const auto& [k, q] : co) p += q * variable(v, k);
        return p;
    }
    Poly coefficient_in(int v, int k) const {
        Poly out;
        for (const auto& [m, c] : t_) {
            if (m.degree_in(v) != k) continue;
            Mono rest;
            for (const auto& p : m.e)
                if (p.first != v) rest.e.push_back(p);
            out.add_term(rest, c);
        }
        return out;
    }

    // Exact quotient, or nullopt when b does not divide a.
    static std::optional<Poly> divide(const Poly& a, const Poly& b) {
        if (b.is_zero()) throw std::invalid_argument("Poly::divide: division by zero");
        Poly rem = a, q;
        const auto& [lm, lc] = b.leading();
        while (!rem.is_zero()) {
            auto m = mono_div(rem.leading().first, lm);
            if (!m) return std::nullopt;
            Rational c = rem.leading().second / lc;
            Poly t;
            t.t_[*m] = c;
            q += t;
            rem -= t * b;
        }
        return q;
    }

    // Integer-primitive gcd with positive leading coefficient (rational
    // contents of the inputs are ignored; callers re-scale as they like).
    static Poly gcd(const Poly& a, const Poly& b) {
        if (a.is_zero() && b.is_zero()) return {};
        if (a.is_zero()) return b.primitive();
        if (b.is_zero()) return a.primitive();
        if (a.is_constant() || b.is_constant()) return constant(1);
        if (a == b) return a.primitive();
        // single-monomial inputs and variable-disjoint inputs are the
        // common cases in fraction arithmetic; skip the PRS for them
        if (a.term_count() == 1 || b.term_count() == 1) return mono_gcd(a, b);
        auto va = a.variables(), vb = b.variables();
        bool share = false;
        for (int x : va)
            if (std::binary_search(vb.begin(), vb.end(), x)) {
                share = true;
                break;
            }
        if (!share) return constant(1);
        Poly ap = a.primitive(), bp = b.primitive();
        if (ap == bp) return ap;
        if (auto h = gcd_heuristic(ap, bp)) return h->primitive();
        int v = std::max(va.back(), vb.back());
        return gcd_in(a, b, v);
    }

    std::string to_string(const std::function<std::string(int)>& name = {}) const {
        if (t_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
            Rational c = it->second;
            if (!first) os << (c < 0 ? " - " : " + ");
            else if (c < 0) os << "-";
            first = false;
            Rational ac = c < 0 ? -c : c;
            bool have_mono = !it->first.e.empty();
            if (ac != 1 || !have_mono) os << rational_str(ac);
            bool need_star = ac != 1 && have_mono;
            for (const auto& [id, k] : it->first.e) {
                if (need_star) os << "*";
                need_star = true;
                os << (name ? name(id) : "#" + std::to_string(id));
                if (k != 1) os << "^" << k;
            }
        }
        return os.str();
    }

  private:
    template <class V>
    static V value_of(const Rational& c) {
        if constexpr (std::is_same_v<V, double>)
            return rational_to_double(c);
        else
            return V(c);
    }

    void add_term(const Mono& m, const Rational& c) {
        if (c == 0) return;
        auto [it, fresh] = t_.try_emplace(m, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) t_.erase(it);
        }
    }

    // gcd when one side is a single monomial: the common monomial part.
    static Poly mono_gcd(const Poly& a, const Poly& b) {
        const Poly& mono = a.term_count() == 1 ? a : b;
        const Poly& other = a.term_count() == 1 ? b : a;
        Mono g = mono.t_.begin()->first;
        for (const auto& [m, c] : other.t_) {
            Mono r;
            size_t i = 0;
            for (const auto& [id, k] : g.e) {
                while (i < m.e.size() && m.e[i].first < id) ++i;
                if (i < m.e.size() && m.e[i].first == id)
                    r.e.emplace_back(id, std::min(k, m.e[i].second));
            }
            g = r;
            if (g.e.empty()) break;
        }
        Poly out;
        out.t_[g] = 1;
        return out;
    }

    // gcd of the integer numerators; equals the integer content once the
    // coefficients are integers, as they are after primitive().
    Integer icontent() const {
        Integer g = 0;
        for (const auto& [m, c] : t_)
            g = boost::multiprecision::gcd(g, boost::multiprecision::numerator(c));
        return g;
    }

    Integer inf_norm_int() const {
        Integer n = 0;
        for (const auto& [m, c] : t_) {
            Integer a = boost::multiprecision::abs(boost::multiprecision::numerator(c));
            if (a > n) n = a;
        }
        return n;
    }

    // Substitute v = xi (an integer), dropping v from every monomial.
    Poly eval_var_int(int v, const Integer& xi) const {
        Poly out;
        for (const auto& [m, c] : t_) {
            Mono rest;
            int k = 0;
            for (const auto& p : m.e) {
                if (p.first == v)
                    k = p.second;
                else
                    rest.e.push_back(p);
            }
            Rational cc = c;
            if (k) cc *= Rational(boost::multiprecision::pow(xi, static_cast<unsigned>(k)));
            out.add_term(rest, cc);
        }
        return out;
    }

    // Read gamma as a base-xi integer whose digits are polynomials in the
    // remaining variables: digit i becomes the coefficient of v^i.  Digits
    // use balanced residues so negative coefficients survive the round
    // trip.  Fails when more than max_digits+1 digits appear.
    static std::optional<Poly> genpoly(Poly gamma, const Integer& xi, int v, int max_digits) {
        Poly g;
        Integer half = xi / 2;
        for (int i = 0; !gamma.is_zero(); ++i) {
            if (i > max_digits) return std::nullopt;
            Poly digit, next;
            for (const auto& [m, c] : gamma.t_) {
                Integer n = boost::multiprecision::numerator(c);
                Integer r = n % xi;
                if (r > half)
                    r -= xi;
                else if (r < -half)
                    r += xi;
                if (r != 0) digit.add_term(m, Rational(r));
                Integer q = (n - r) / xi;
                if (q != 0) next.add_term(m, Rational(q));
            }
            if (!digit.is_zero()) g += digit * variable(v, i);
            gamma = std::move(next);
        }
        return g;
    }

    // Heuristic gcd over the integers (contents included): evaluate one
    // variable at a large integer, recurse on the images, lift the result
    // back with genpoly, and accept only after exact trial division.  A
    // miss retries with a bigger point; persistent failure falls back to
    // the pseudo-remainder path in the caller.
    static std::optional<Poly> gcd_heuristic(const Poly& a, const Poly& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a == b) return a;
        if (a.is_constant() || b.is_constant())
            return constant(Rational(boost::multiprecision::gcd(a.icontent(), b.icontent())));
        int v = -1;
        auto va = a.variables(), vb = b.variables();
        for (auto it = va.rbegin(); it != va.rend() && v < 0; ++it)
            if (std::binary_search(vb.begin(), vb.end(), *it)) v = *it;
        if (v < 0)
            return constant(Rational(boost::multiprecision::gcd(a.icontent(), b.icontent())));
        int dmax = std::min(a.degree_in(v), b.degree_in(v));
        Integer na = a.inf_norm_int(), nb = b.inf_norm_int();
        Integer xi = 2 * (na < nb ? na : nb) + 2;
        for (int attempt = 0; attempt < 6; ++attempt) {
            if (boost::multiprecision::msb(xi) > 100000u) break;
            auto gam = gcd_heuristic(a.eval_var_int(v, xi), b.eval_var_int(v, xi));
            if (gam) {
                auto g = genpoly(std::move(*gam), xi, v, dmax);
                if (g && !g->is_zero() && divide(a, *g) && divide(b, *g)) return g;
            }
            // grow by an irrational-looking ratio so a retry never lands
            // on a previously unlucky point
            xi = xi * 73794 / 27011;
        }
        return std::nullopt;
    }

    // Primitive pseudo-remainder sequence in the main variable v; the
    // contents with respect to v recurse into fewer variables.
    static Poly gcd_in(const Poly& a0, const Poly& b0, int v) {
        auto content_in = [v](const Poly& p) {
            Poly g;
            for (const auto& [k, q] : p.coefficients_in(v)) g = gcd(g, q);
            return g;
        };
        Poly ca = content_in(a0), cb = content_in(b0);
        Poly cont = gcd(ca, cb);
        Poly a = *divide(a0, ca), b = *divide(b0, cb);
        if (a.degree_in(v) < b.degree_in(v)) std::swap(a, b);
        while (true) {
            if (b.is_zero()) break;
            if (b.degree_in(v) == 0) {
                // primitive parts share no content in v, so a nonzero
                // constant remainder means the gcd is trivial in v
                a = constant(1);
                b = {};
                break;
            }
            Poly r = prem(a, b, v);
            a = b;
            if (r.is_zero()) {
                b = {};
                break;
            }
            Poly cr = content_in(r);
            b = *divide(r, cr);
        }
        Poly g = a.primitive();
        return (cont * g).primitive();
    }

    // Pseudo-remainder of a by b in v, up to a unit content (each PRS
    // step re-primitivizes, so the lc(b)^k bookkeeping is dropped; the
    // same stripping inside the loop is what keeps coefficients from
    // exploding exponentially with the degree gap).
    static Poly prem(Poly a, const Poly& b, int v) {
        int db = b.degree_in(v);
        Poly lb = b.coefficient_in(v, db);
        int da;
        while (!a.is_zero() && (da = a.degree_in(v)) >= db) {
            Poly la = a.coefficient_in(v, da);
            a = a * lb - la * b * variable(v, da - db);
            a = a.primitive();
        }
        return a;
    }

    Terms t_;
};

}  // namespace fglab

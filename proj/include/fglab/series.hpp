#pragma once
// Truncated radial series with a log ledger: finite sums of c * r^k * log(r)^l
// whose coefficients are exact rational-function scalars on a boundary chart.
// Elements carry their truncation order, so arithmetic can stay honest about
// how far a result is trustworthy (products and sums keep the smaller order,
// a radial derivative loses one).  The ring-member contract matches what the
// curvature templates expect, which lets the same geometry code run on whole
// expansions instead of single scalars.

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "geometry.hpp"

namespace fglab {

class LogSeries {
  public:
    // (power of r, power of log r) -> coefficient
    using Key = std::pair<int, int>;
    using Terms = std::map<Key, Sx>;

    LogSeries() = default;

    static LogSeries zero(int order, AtomTable* tab) {
        LogSeries s;
        s.kmax_ = order;
        s.tab_ = tab;
        return s;
    }
    static LogSeries of(const Sx& c, int order) {
        return monomial(c, 0, 0, order);
    }
    static LogSeries monomial(const Sx& c, int k, int l, int order) {
        if (k < 0 || l < 0) throw std::invalid_argument("LogSeries: negative power");
        LogSeries s = zero(order, c.tab);
        if (k <= order && !c.exact_zero()) s.t_[{k, l}] = c;
        return s;
    }

    int order() const { return kmax_; }
    const Terms& terms() const { return t_; }
    AtomTable* table() const { return tab_; }

    // Coefficient of r^k log(r)^l; exact zero when absent.
    Sx coefficient(int k, int l) const {
        auto it = t_.find({k, l});
        if (it != t_.end()) return it->second;
        return Sx{RatFun::constant(0), tab_};
    }
    bool has_log() const {
        for (const auto& [key, c] : t_)
            if (key.second > 0) return true;
        return false;
    }
    // Smallest power of r carrying a nonzero coefficient; order+1 when zero.
    int valuation() const {
        int v = kmax_ + 1;
        for (const auto& [key, c] : t_) v = std::min(v, key.first);
        return v;
    }

    // ---- ring-member contract ----
    LogSeries ring_zero() const { return zero(kmax_, tab_); }
    LogSeries ring_one() const { return ring_from(1); }
    LogSeries ring_from(const Rational& c) const {
        return monomial(Sx{RatFun::constant(c), tab_}, 0, 0, kmax_);
    }
    bool exact_zero() const { return t_.empty(); }
    // Boundary-coordinate derivative, coefficient by coefficient; the
    // truncation order is unaffected.
    LogSeries diff(const std::string& var) const {
        LogSeries out = zero(kmax_, tab_);
        for (const auto& [key, c] : t_) out.add(key.first, key.second, c.diff(var));
        return out;
    }

    // d/dr: r^k log^l -> k r^{k-1} log^l + l r^{k-1} log^{l-1}.  One order
    // of accuracy is spent.  A bare log (k = 0, l > 0) would leave the
    // ring, and the expansion never produces one.
    LogSeries radial_derivative() const {
        LogSeries out = zero(kmax_ - 1, tab_);
        for (const auto& [key, c] : t_) {
            auto [k, l] = key;
            if (k == 0) {
                if (l > 0)
                    throw std::domain_error("LogSeries: derivative of a bare log term");
                continue;
            }
            if (k != 0) out.add(k - 1, l, c * ring_const(k));
            if (l > 0) out.add(k - 1, l - 1, c * ring_const(l));
        }
        return out;
    }

    // Multiply by r^m exactly: radial powers and the trust order both rise.
    LogSeries times_r(int m = 1) const {
        if (m < 0) throw std::invalid_argument("LogSeries: times_r needs m >= 0");
        return shifted(m, kmax_ + m);
    }

    // Copy with coefficients beyond the new order dropped.
    LogSeries truncated(int order) const {
        LogSeries out = zero(std::min(order, kmax_), tab_);
        for (const auto& [key, c] : t_)
            if (key.first <= out.kmax_) out.t_[key] = c;
        return out;
    }

    LogSeries operator-() const {
        LogSeries out = *this;
        for (auto& [key, c] : out.t_) c = -c;
        return out;
    }

    friend LogSeries operator+(const LogSeries& a, const LogSeries& b) {
        LogSeries out = zero(std::min(a.kmax_, b.kmax_), a.tab_ ? a.tab_ : b.tab_);
        for (const auto& [key, c] : a.t_)
            if (key.first <= out.kmax_) out.add(key.first, key.second, c);
        for (const auto& [key, c] : b.t_)
            if (key.first <= out.kmax_) out.add(key.first, key.second, c);
        return out;
    }
    friend LogSeries operator-(const LogSeries& a, const LogSeries& b) { return a + (-b); }

    friend LogSeries operator*(const LogSeries& a, const LogSeries& b) {
        LogSeries out = zero(std::min(a.kmax_, b.kmax_), a.tab_ ? a.tab_ : b.tab_);
        for (const auto& [ka, ca] : a.t_)
            for (const auto& [kb, cb] : b.t_) {
                int k = ka.first + kb.first;
                if (k > out.kmax_) continue;
                out.add(k, ka.second + kb.second, ca * cb);
            }
        return out;
    }

    // Series division.  The divisor is factored as r^v * (unit + nilpotent):
    // its bottom coefficient must be log-free and nonzero, and the dividend
    // must vanish to at least the same radial order.
    friend LogSeries operator/(const LogSeries& a, const LogSeries& b) {
        if (b.t_.empty()) throw ZeroDenominator("LogSeries: division by zero series");
        int v = b.valuation();
        Sx bottom = b.coefficient(v, 0);
        if (bottom.exact_zero())
            throw ZeroDenominator("LogSeries: divisor bottom order carries only log terms");
        for (const auto& [key, c] : b.t_)
            if (key.first == v && key.second > 0)
                throw ZeroDenominator("LogSeries: divisor bottom order mixes in a log term");
        if (!a.t_.empty() && a.valuation() < v)
            throw ZeroDenominator("LogSeries: division would create a pole in r");
        // shift both down by r^v, then multiply by the unit inverse
        LogSeries an = a.shifted(-v, a.kmax_ - v);
        LogSeries bn = b.shifted(-v, b.kmax_ - v);
        int ord = std::min(an.kmax_, bn.kmax_);
        // w = 1 - bn/bottom has positive valuation (or a log at level 0),
        // so the geometric series for the inverse terminates
        LogSeries w = bn.ring_one().truncated(ord);
        for (const auto& [key, c] : bn.t_)
            if (key.first <= ord) w.add(key.first, key.second, -(c / bottom));
        LogSeries inv = bn.ring_one().truncated(ord), pw = w;
        for (int i = 0; i < ord + 1 && !pw.exact_zero(); ++i) {
            inv = inv + pw;
            pw = (pw * w).truncated(ord);
        }
        LogSeries res = an.truncated(ord) * inv;
        for (auto& [key, c] : res.t_) c = c / bottom;
        return res;
    }

    bool operator==(const LogSeries& o) const {
        LogSeries d = *this - o;
        return d.t_.empty();
    }
    bool operator!=(const LogSeries& o) const { return !(*this == o); }

    std::string to_string() const {
        if (t_.empty()) return "0";
        std::string out;
        for (const auto& [key, c] : t_) {
            if (!out.empty()) out += " + ";
            out += "(" + fglab::to_string(to_expr(c.f, *c.tab)) + ")";
            if (key.first) out += "*r^" + std::to_string(key.first);
            if (key.second == 1) out += "*log(r)";
            if (key.second > 1) out += "*log(r)^" + std::to_string(key.second);
        }
        return out;
    }

  private:
    Sx ring_const(int k) const { return Sx{RatFun::constant(k), tab_}; }

    void add(int k, int l, const Sx& c) {
        if (k > kmax_ || c.exact_zero()) return;
        auto [it, fresh] = t_.try_emplace(Key{k, l}, c);
        if (!fresh) {
            it->second = it->second + c;
            if (it->second.exact_zero()) t_.erase(it);
        }
    }

    // Multiply by r^shift (shift may be negative when every term allows it).
    LogSeries shifted(int shift, int order) const {
        LogSeries out = zero(order, tab_);
        for (const auto& [key, c] : t_) {
            int k = key.first + shift;
            if (k < 0) throw std::logic_error("LogSeries: negative power after shift");
            if (k <= order) out.t_[{k, key.second}] = c;
        }
        return out;
    }

    Terms t_;
    int kmax_ = 0;
    AtomTable* tab_ = nullptr;
};

// Matrix-of-series helpers used by the radial expansion.

inline SqMat<LogSeries> series_matrix(int n, int order, AtomTable* tab) {
    return SqMat<LogSeries>(n, LogSeries::zero(order, tab));
}

// Entry-wise radial derivative.
inline SqMat<LogSeries> radial_derivative(const SqMat<LogSeries>& m) {
    SqMat<LogSeries> out(m.dim(), m.at(0, 0).radial_derivative().ring_zero());
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) out.at(i, j) = m.at(i, j).radial_derivative();
    return out;
}

inline SqMat<LogSeries> truncated(const SqMat<LogSeries>& m, int order) {
    SqMat<LogSeries> out(m.dim(), m.at(0, 0).truncated(order));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) out.at(i, j) = m.at(i, j).truncated(order);
    return out;
}

}  // namespace fglab

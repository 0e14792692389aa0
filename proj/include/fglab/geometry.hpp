#pragma once
// Chart-level tensor calculus, templated over an exact coefficient ring.
// A ring element manufactures its own zero/one (it knows its context) and
// differentiates by coordinate name; the same formulas then serve plain
// symbolic scalars and radial series alike.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ratfun.hpp"
#include "report.hpp"

namespace fglab {

struct SingularMetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- exact scalar ring ----

struct SxContext {
    AtomTable table;
};

struct Sx {
    RatFun f;
    AtomTable* tab = nullptr;

    Sx ring_zero() const { return {RatFun::constant(0), tab}; }
    Sx ring_one() const { return {RatFun::constant(1), tab}; }
    Sx ring_from(const Rational& c) const { return {RatFun::constant(c), tab}; }
    bool exact_zero() const { return f.is_zero_form(); }
    Sx diff(const std::string& v) const {
        if (!tab) return {RatFun::constant(0), nullptr};
        return {ratfun_diff(f, v, *tab), tab};
    }
};

namespace detail {
inline AtomTable* sx_tab(const Sx& a, const Sx& b) { return a.tab ? a.tab : b.tab; }
}  // namespace detail

inline Sx operator+(const Sx& a, const Sx& b) { return {a.f + b.f, detail::sx_tab(a, b)}; }
inline Sx operator-(const Sx& a, const Sx& b) { return {a.f - b.f, detail::sx_tab(a, b)}; }
inline Sx operator-(const Sx& a) { return {-a.f, a.tab}; }
inline Sx operator*(const Sx& a, const Sx& b) { return {a.f * b.f, detail::sx_tab(a, b)}; }
inline Sx operator/(const Sx& a, const Sx& b) { return {a.f / b.f, detail::sx_tab(a, b)}; }

inline Sx sx_of(const Expr& e, SxContext& ctx) { return {from_expr(e, ctx.table), &ctx.table}; }

inline Expr sx_out(const Sx& s) {
    static const AtomTable empty;
    return to_expr(s.f, s.tab ? *s.tab : empty);
}

inline ZeroResult sx_is_zero(const Sx& s, const ZeroOptions& opt = {}) {
    static const AtomTable empty;
    return is_zero(s.f, s.tab ? *s.tab : empty, opt);
}

// ---- dense containers (dims are tiny, 5 at most) ----

template <class S>
class SqMat {
  public:
    SqMat(int n, const S& fill) : n_(n), a_(static_cast<size_t>(n) * n, fill) {}
    S& at(int i, int j) { return a_[static_cast<size_t>(i * n_ + j)]; }
    const S& at(int i, int j) const { return a_[static_cast<size_t>(i * n_ + j)]; }
    int dim() const { return n_; }

  private:
    int n_;
    std::vector<S> a_;
};

template <class S>
class Ten3 {
  public:
    Ten3(int n, const S& fill) : n_(n), a_(static_cast<size_t>(n) * n * n, fill) {}
    S& at(int i, int j, int k) { return a_[static_cast<size_t>((i * n_ + j) * n_ + k)]; }
    const S& at(int i, int j, int k) const {
        return a_[static_cast<size_t>((i * n_ + j) * n_ + k)];
    }
    int dim() const { return n_; }

  private:
    int n_;
    std::vector<S> a_;
};

template <class S>
class Ten4 {
  public:
    Ten4(int n, const S& fill) : n_(n), a_(static_cast<size_t>(n) * n * n * n, fill) {}
    S& at(int i, int j, int k, int l) {
        return a_[static_cast<size_t>(((i * n_ + j) * n_ + k) * n_ + l)];
    }
    const S& at(int i, int j, int k, int l) const {
        return a_[static_cast<size_t>(((i * n_ + j) * n_ + k) * n_ + l)];
    }
    int dim() const { return n_; }

  private:
    int n_;
    std::vector<S> a_;
};

template <class S>
class Ten5 {
  public:
    Ten5(int n, const S& fill) : n_(n), a_(static_cast<size_t>(n) * n * n * n * n, fill) {}
    S& at(int i, int j, int k, int l, int m) {
        return a_[static_cast<size_t>((((i * n_ + j) * n_ + k) * n_ + l) * n_ + m)];
    }
    const S& at(int i, int j, int k, int l, int m) const {
        return a_[static_cast<size_t>((((i * n_ + j) * n_ + k) * n_ + l) * n_ + m)];
    }
    int dim() const { return n_; }

  private:
    int n_;
    std::vector<S> a_;
};

// ---- core operations over a ring ----

template <class S>
SqMat<S> mat_add(const SqMat<S>& a, const SqMat<S>& b) {
    SqMat<S> out = a;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) out.at(i, j) = a.at(i, j) + b.at(i, j);
    return out;
}

template <class S>
SqMat<S> mat_sub(const SqMat<S>& a, const SqMat<S>& b) {
    SqMat<S> out = a;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) out.at(i, j) = a.at(i, j) - b.at(i, j);
    return out;
}

template <class S>
SqMat<S> mat_mul(const SqMat<S>& a, const SqMat<S>& b) {
    int n = a.dim();
    SqMat<S> out(n, a.at(0, 0).ring_zero());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            S acc = out.at(i, j);
            for (int k = 0; k < n; ++k) acc = acc + a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

template <class S>
SqMat<S> mat_smul(const S& s, const SqMat<S>& m) {
    SqMat<S> out = m;
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) out.at(i, j) = s * m.at(i, j);
    return out;
}

template <class S>
S det(const SqMat<S>& m) {
    int n = m.dim();
    if (n == 1) return m.at(0, 0);
    S acc = m.at(0, 0).ring_zero();
    // Laplace expansion along the first row
    for (int j = 0; j < n; ++j) {
        SqMat<S> sub(n - 1, acc);
        for (int r = 1; r < n; ++r) {
            int cc = 0;
            for (int c = 0; c < n; ++c) {
                if (c == j) continue;
                sub.at(r - 1, cc++) = m.at(r, c);
            }
        }
        S term = m.at(0, j) * det(sub);
        acc = (j % 2 == 0) ? acc + term : acc - term;
    }
    return acc;
}

template <class S>
SqMat<S> adjugate(const SqMat<S>& m) {
    int n = m.dim();
    S zero = m.at(0, 0).ring_zero();
    SqMat<S> adj(n, zero);
    if (n == 1) {
        adj.at(0, 0) = m.at(0, 0).ring_one();
        return adj;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            SqMat<S> sub(n - 1, zero);
            int rr = 0;
            for (int r = 0; r < n; ++r) {
                if (r == j) continue;  // adj(i,j) = cofactor(j,i)
                int cc = 0;
                for (int c = 0; c < n; ++c) {
                    if (c == i) continue;
                    sub.at(rr, cc++) = m.at(r, c);
                }
                ++rr;
            }
            S d = det(sub);
            adj.at(i, j) = ((i + j) % 2 == 0) ? d : -d;
        }
    }
    return adj;
}

template <class S>
SqMat<S> inverse(const SqMat<S>& m) {
    S d = det(m);
    SqMat<S> adj = adjugate(m);
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) adj.at(i, j) = adj.at(i, j) / d;
    return adj;
}

// Gamma^k_ij, symmetric in (i, j); index order at(k, i, j).
template <class S>
Ten3<S> christoffel(const SqMat<S>& g, const SqMat<S>& gi, const std::vector<std::string>& xs) {
    int n = g.dim();
    S zero = g.at(0, 0).ring_zero();
    S half = zero.ring_from(Rational(1, 2));
    Ten3<S> dg(n, zero);  // dg.at(a, i, j) = d_a g_ij
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                S v = g.at(i, j).diff(xs[static_cast<size_t>(a)]);
                dg.at(a, i, j) = v;
                if (i != j) dg.at(a, j, i) = v;
            }
    Ten3<S> G(n, zero);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                S acc = zero;
                for (int l = 0; l < n; ++l)
                    acc = acc + gi.at(k, l) * (dg.at(i, j, l) + dg.at(j, i, l) - dg.at(l, i, j));
                acc = half * acc;
                G.at(k, i, j) = acc;
                if (i != j) G.at(k, j, i) = acc;
            }
    return G;
}

// R^t_{s a b} = d_a G^t_bs - d_b G^t_as + G^t_ak G^k_bs - G^t_bk G^k_as;
// index order at(t, s, a, b), antisymmetric in (a, b).
template <class S>
Ten4<S> riemann_up(const Ten3<S>& G, const std::vector<std::string>& xs) {
    int n = G.dim();
    S zero = G.at(0, 0, 0).ring_zero();
    Ten4<S> dG(n, zero);  // dG.at(a, t, b, s) = d_a G^t_bs
    for (int a = 0; a < n; ++a)
        for (int t = 0; t < n; ++t)
            for (int b = 0; b < n; ++b)
                for (int s = b; s < n; ++s) {
                    S v = G.at(t, b, s).diff(xs[static_cast<size_t>(a)]);
                    dG.at(a, t, b, s) = v;
                    if (s != b) dG.at(a, t, s, b) = v;
                }
    Ten4<S> R(n, zero);
    for (int t = 0; t < n; ++t)
        for (int s = 0; s < n; ++s)
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) {
                    S acc = dG.at(a, t, b, s) - dG.at(b, t, a, s);
                    for (int k = 0; k < n; ++k)
                        acc = acc + G.at(t, a, k) * G.at(k, b, s) - G.at(t, b, k) * G.at(k, a, s);
                    R.at(t, s, a, b) = acc;
                    R.at(t, s, b, a) = -acc;
                }
    return R;
}

// R_{i j a b} = g_{i t} R^t_{j a b}.
template <class S>
Ten4<S> lower_riemann(const SqMat<S>& g, const Ten4<S>& Rup) {
    int n = g.dim();
    S zero = g.at(0, 0).ring_zero();
    Ten4<S> R(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) {
                    S acc = zero;
                    for (int t = 0; t < n; ++t) acc = acc + g.at(i, t) * Rup.at(t, j, a, b);
                    R.at(i, j, a, b) = acc;
                    R.at(i, j, b, a) = -acc;
                }
    return R;
}

// Ric_{s b} = R^a_{s a b}; with this convention the round 2-sphere has S = +2.
template <class S>
SqMat<S> ricci_from_up(const Ten4<S>& Rup) {
    int n = Rup.dim();
    S zero = Rup.at(0, 0, 0, 0).ring_zero();
    SqMat<S> ric(n, zero);
    for (int s = 0; s < n; ++s)
        for (int b = 0; b < n; ++b) {
            S acc = zero;
            for (int a = 0; a < n; ++a) acc = acc + Rup.at(a, s, a, b);
            ric.at(s, b) = acc;
        }
    return ric;
}

// Ricci straight from the connection, same contraction as ricci_from_up of
// riemann_up but without materializing the full curvature tensor.  Worth it
// when the entries are expensive (series coefficients, large fractions).
template <class S>
SqMat<S> ricci_direct(const Ten3<S>& G, const std::vector<std::string>& xs) {
    int n = G.dim();
    S zero = G.at(0, 0, 0).ring_zero();
    std::vector<S> tr(static_cast<size_t>(n), zero);  // tr[k] = G^a_{a k}
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) tr[static_cast<size_t>(k)] = tr[static_cast<size_t>(k)] + G.at(a, a, k);
    SqMat<S> ric(n, zero);
    for (int s = 0; s < n; ++s)
        for (int b = s; b < n; ++b) {
            S acc = -tr[static_cast<size_t>(s)].diff(xs[static_cast<size_t>(b)]);
            for (int a = 0; a < n; ++a) acc = acc + G.at(a, b, s).diff(xs[static_cast<size_t>(a)]);
            for (int k = 0; k < n; ++k) {
                acc = acc + tr[static_cast<size_t>(k)] * G.at(k, b, s);
                for (int a = 0; a < n; ++a) acc = acc - G.at(a, b, k) * G.at(k, a, s);
            }
            ric.at(s, b) = acc;
            ric.at(b, s) = acc;
        }
    return ric;
}

template <class S>
S trace(const SqMat<S>& gi, const SqMat<S>& T) {
    int n = gi.dim();
    S acc = gi.at(0, 0).ring_zero();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc = acc + gi.at(i, j) * T.at(i, j);
    return acc;
}

// W_ijkl = R_ijkl - (P_ik g_jl - P_il g_jk + P_jl g_ik - P_jk g_il) with the
// Schouten tensor P = (Ric - S g / (2(N-1))) / (N-2); N = dim >= 4, and in
// dim 3 the same formula must come out identically zero.
template <class S>
Ten4<S> weyl_from(const SqMat<S>& g, const Ten4<S>& Rlow, const SqMat<S>& ric, const S& scal) {
    int n = g.dim();
    if (n < 3) throw std::invalid_argument("weyl: dimension must be at least 3");
    S zero = g.at(0, 0).ring_zero();
    S cN2 = zero.ring_from(Rational(1, n - 2));
    S cS = zero.ring_from(Rational(1, 2 * (n - 1) * (n - 2)));
    SqMat<S> P(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P.at(i, j) = cN2 * ric.at(i, j) - cS * scal * g.at(i, j);
    Ten4<S> W(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = k + 1; l < n; ++l) {
                    S acc = Rlow.at(i, j, k, l) - (P.at(i, k) * g.at(j, l) - P.at(i, l) * g.at(j, k) +
                                                   P.at(j, l) * g.at(i, k) - P.at(j, k) * g.at(i, l));
                    W.at(i, j, k, l) = acc;
                    W.at(i, j, l, k) = -acc;
                }
    return W;
}

// nabla_k applied to lowered tensors; the new index comes FIRST.
template <class S>
SqMat<S> cov_deriv(const std::vector<S>& T, const Ten3<S>& G, const std::vector<std::string>& xs) {
    int n = G.dim();
    S zero = G.at(0, 0, 0).ring_zero();
    SqMat<S> out(n, zero);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            S acc = T[static_cast<size_t>(i)].diff(xs[static_cast<size_t>(k)]);
            for (int l = 0; l < n; ++l) acc = acc - G.at(l, k, i) * T[static_cast<size_t>(l)];
            out.at(k, i) = acc;
        }
    return out;
}

template <class S>
Ten3<S> cov_deriv(const SqMat<S>& T, const Ten3<S>& G, const std::vector<std::string>& xs) {
    int n = T.dim();
    S zero = T.at(0, 0).ring_zero();
    Ten3<S> out(n, zero);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                S acc = T.at(i, j).diff(xs[static_cast<size_t>(k)]);
                for (int l = 0; l < n; ++l)
                    acc = acc - G.at(l, k, i) * T.at(l, j) - G.at(l, k, j) * T.at(i, l);
                out.at(k, i, j) = acc;
            }
    return out;
}

template <class S>
Ten4<S> cov_deriv(const Ten3<S>& T, const Ten3<S>& G, const std::vector<std::string>& xs) {
    int n = T.dim();
    S zero = T.at(0, 0, 0).ring_zero();
    Ten4<S> out(n, zero);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int m = 0; m < n; ++m) {
                    S acc = T.at(i, j, m).diff(xs[static_cast<size_t>(k)]);
                    for (int l = 0; l < n; ++l)
                        acc = acc - G.at(l, k, i) * T.at(l, j, m) - G.at(l, k, j) * T.at(i, l, m) -
                              G.at(l, k, m) * T.at(i, j, l);
                    out.at(k, i, j, m) = acc;
                }
    return out;
}

template <class S>
Ten5<S> cov_deriv(const Ten4<S>& T, const Ten3<S>& G, const std::vector<std::string>& xs) {
    int n = T.dim();
    S zero = T.at(0, 0, 0, 0).ring_zero();
    Ten5<S> out(n, zero);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        S acc = T.at(i, j, a, b).diff(xs[static_cast<size_t>(k)]);
                        for (int l = 0; l < n; ++l)
                            acc = acc - G.at(l, k, i) * T.at(l, j, a, b) -
                                  G.at(l, k, j) * T.at(i, l, a, b) -
                                  G.at(l, k, a) * T.at(i, j, l, b) -
                                  G.at(l, k, b) * T.at(i, j, a, l);
                        out.at(k, i, j, a, b) = acc;
                    }
    return out;
}

template <class S>
S laplace(const S& f, const SqMat<S>& gi, const Ten3<S>& G, const std::vector<std::string>& xs) {
    int n = gi.dim();
    S acc = f.ring_zero();
    std::vector<S> df(static_cast<size_t>(n), acc);
    for (int a = 0; a < n; ++a) df[static_cast<size_t>(a)] = f.diff(xs[static_cast<size_t>(a)]);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            S second = df[static_cast<size_t>(a)].diff(xs[static_cast<size_t>(b)]);
            for (int k = 0; k < n; ++k)
                second = second - G.at(k, a, b) * df[static_cast<size_t>(k)];
            acc = acc + gi.at(a, b) * second;
        }
    return acc;
}

// ---- chart-facing field types ----

struct Chart {
    std::vector<std::string> coords;

    int dim() const { return static_cast<int>(coords.size()); }
    void validate() const {
        if (dim() < 2) throw std::invalid_argument("chart: dimension must be at least 2");
        for (size_t i = 0; i < coords.size(); ++i)
            for (size_t j = i + 1; j < coords.size(); ++j)
                if (coords[i] == coords[j])
                    throw std::invalid_argument("chart: duplicate coordinate " + coords[i]);
    }
};

// Symmetric by construction: only the lower triangle is stored.
struct MetricField {
    Chart chart;

    static MetricField diagonal(Chart c, std::vector<Expr> diag) {
        c.validate();
        if (static_cast<int>(diag.size()) != c.dim())
            throw std::invalid_argument("metric: diagonal length must match dimension");
        MetricField m;
        m.chart = std::move(c);
        int n = m.chart.dim();
        m.lower_.assign(static_cast<size_t>(n * (n + 1) / 2), Expr::num(0));
        for (int i = 0; i < n; ++i) m.set(i, i, diag[static_cast<size_t>(i)]);
        return m;
    }
    static MetricField zero(Chart c) {
        c.validate();
        MetricField m;
        m.chart = std::move(c);
        int n = m.chart.dim();
        m.lower_.assign(static_cast<size_t>(n * (n + 1) / 2), Expr::num(0));
        return m;
    }

    const Expr& at(int i, int j) const { return lower_[idx(i, j)]; }
    void set(int i, int j, Expr e) { lower_[idx(i, j)] = std::move(e); }

  private:
    size_t idx(int i, int j) const {
        if (i < j) std::swap(i, j);
        return static_cast<size_t>(i * (i + 1) / 2 + j);
    }
    std::vector<Expr> lower_;
};

enum class Sym { None, LastPair, Riemann };

// Lowered components plus an optional symmetry tag; a minimal component
// set is stored and expanded on read.
struct TensorField {
    Chart chart;
    int upper = 0, lower = 0;
    Sym sym = Sym::None;
    std::map<std::vector<int>, Expr> comp;

    // Returns (canonical key, sign); sign 0 means identically zero slot.
    static std::pair<std::vector<int>, int> canonical(std::vector<int> idx, Sym sym) {
        int sign = 1;
        if (sym == Sym::LastPair && idx.size() >= 2) {
            size_t a = idx.size() - 2, b = idx.size() - 1;
            if (idx[a] > idx[b]) std::swap(idx[a], idx[b]);
        } else if (sym == Sym::Riemann && idx.size() == 4) {
            if (idx[0] == idx[1] || idx[2] == idx[3]) return {idx, 0};
            if (idx[0] > idx[1]) { std::swap(idx[0], idx[1]); sign = -sign; }
            if (idx[2] > idx[3]) { std::swap(idx[2], idx[3]); sign = -sign; }
            if (std::make_pair(idx[0], idx[1]) > std::make_pair(idx[2], idx[3])) {
                std::swap(idx[0], idx[2]);
                std::swap(idx[1], idx[3]);
            }
        }
        return {idx, sign};
    }

    void set(std::vector<int> idx, Expr e) {
        auto [key, sign] = canonical(std::move(idx), sym);
        if (sign == 0) return;
        comp[key] = sign == 1 ? std::move(e) : negate(e);
    }
    Expr at(std::vector<int> idx) const {
        auto [key, sign] = canonical(std::move(idx), sym);
        if (sign == 0) return Expr::num(0);
        auto it = comp.find(key);
        if (it == comp.end()) return Expr::num(0);
        return sign == 1 ? it->second : negate(it->second);
    }
};

// ---- curvature bundle ----
//
// One shared symbolic context per metric: everything downstream (Weyl,
// residual identities, boundary work) reads from here.

struct Curvature {
    std::vector<std::string> xs;
    std::shared_ptr<SxContext> ctx;
    SqMat<Sx> g, gi;
    Ten3<Sx> Gamma;
    Ten4<Sx> Rup, Rlow;
    SqMat<Sx> ric;
    Sx scal;
};

inline Curvature compute_curvature(const MetricField& m) {
    m.chart.validate();
    int n = m.chart.dim();
    auto ctx = std::make_shared<SxContext>();
    Sx zero{RatFun::constant(0), &ctx->table};
    SqMat<Sx> g(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.at(i, j) = sx_of(m.at(i, j), *ctx);
    Sx d = det(g);
    if (d.exact_zero()) throw SingularMetric("metric determinant is identically zero");
    SqMat<Sx> adj = adjugate(g);
    SqMat<Sx> gi(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gi.at(i, j) = adj.at(i, j) / d;
    Ten3<Sx> G = christoffel(g, gi, m.chart.coords);
    Ten4<Sx> Rup = riemann_up(G, m.chart.coords);
    Ten4<Sx> Rlow = lower_riemann(g, Rup);
    SqMat<Sx> ric = ricci_from_up(Rup);
    Sx scal = trace(gi, ric);
    return Curvature{m.chart.coords, ctx, std::move(g), std::move(gi), std::move(G),
                     std::move(Rup), std::move(Rlow), std::move(ric), std::move(scal)};
}

// ---- public operations ----

inline TensorField inverse_metric(const MetricField& m) {
    Curvature c = compute_curvature(m);
    TensorField t;
    t.chart = m.chart;
    t.upper = 2;
    t.sym = Sym::LastPair;
    int n = m.chart.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) t.set({i, j}, sx_out(c.gi.at(i, j)));
    return t;
}

inline TensorField christoffel(const MetricField& m) {
    Curvature c = compute_curvature(m);
    TensorField t;
    t.chart = m.chart;
    t.upper = 1;
    t.lower = 2;
    t.sym = Sym::LastPair;
    int n = m.chart.dim();
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) t.set({k, i, j}, sx_out(c.Gamma.at(k, i, j)));
    return t;
}

inline TensorField riemann(const MetricField& m) {
    Curvature c = compute_curvature(m);
    TensorField t;
    t.chart = m.chart;
    t.lower = 4;
    t.sym = Sym::Riemann;
    int n = m.chart.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = k + 1; l < n; ++l) {
                    if (std::make_pair(i, j) > std::make_pair(k, l)) continue;
                    t.set({i, j, k, l}, sx_out(c.Rlow.at(i, j, k, l)));
                }
    return t;
}

inline TensorField ricci(const MetricField& m) {
    Curvature c = compute_curvature(m);
    TensorField t;
    t.chart = m.chart;
    t.lower = 2;
    t.sym = Sym::LastPair;
    int n = m.chart.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) t.set({i, j}, sx_out(c.ric.at(i, j)));
    return t;
}

inline Expr scalar_curvature(const MetricField& m) {
    return sx_out(compute_curvature(m).scal);
}

inline TensorField weyl(const MetricField& m) {
    Curvature c = compute_curvature(m);
    Ten4<Sx> W = weyl_from(c.g, c.Rlow, c.ric, c.scal);
    TensorField t;
    t.chart = m.chart;
    t.lower = 4;
    t.sym = Sym::Riemann;
    int n = m.chart.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = k + 1; l < n; ++l) {
                    if (std::make_pair(i, j) > std::make_pair(k, l)) continue;
                    t.set({i, j, k, l}, sx_out(W.at(i, j, k, l)));
                }
    return t;
}

inline TensorField covariant_derivative(const TensorField& T, const MetricField& m) {
    if (T.upper != 0) throw std::invalid_argument("covariant_derivative: lowered tensors only");
    if (T.lower > 4) throw std::invalid_argument("covariant_derivative: valence above 4");
    Curvature c = compute_curvature(m);
    int n = m.chart.dim();
    TensorField out;
    out.chart = m.chart;
    out.lower = T.lower + 1;
    out.sym = Sym::None;

    // expand to dense, differentiate, store with the new index first
    auto for_each_index = [&](auto&& fn) {
        std::vector<int> v(static_cast<size_t>(T.lower), 0);
        while (true) {
            fn(v);
            int p = T.lower - 1;
            while (p >= 0 && ++v[static_cast<size_t>(p)] == n) {
                v[static_cast<size_t>(p)] = 0;
                --p;
            }
            if (p < 0) break;
        }
    };
    if (T.lower == 0) {
        Sx f = sx_of(T.at({}), *c.ctx);
        for (int k = 0; k < n; ++k)
            out.set({k}, sx_out(f.diff(m.chart.coords[static_cast<size_t>(k)])));
        return out;
    }
    // dense copy in the shared context
    std::map<std::vector<int>, Sx> dense;
    for_each_index([&](const std::vector<int>& v) { dense.emplace(v, sx_of(T.at(v), *c.ctx)); });
    for (int k = 0; k < n; ++k) {
        for_each_index([&](const std::vector<int>& v) {
            Sx acc = dense.at(v).diff(m.chart.coords[static_cast<size_t>(k)]);
            for (size_t slot = 0; slot < v.size(); ++slot) {
                std::vector<int> w = v;
                for (int l = 0; l < n; ++l) {
                    w[slot] = l;
                    acc = acc - c.Gamma.at(l, k, v[slot]) * dense.at(w);
                }
            }
            std::vector<int> key;
            key.push_back(k);
            key.insert(key.end(), v.begin(), v.end());
            out.set(key, sx_out(acc));
        });
    }
    return out;
}

inline Expr laplace_beltrami(const Expr& f, const MetricField& m) {
    Curvature c = compute_curvature(m);
    Sx fs = sx_of(f, *c.ctx);
    return sx_out(laplace(fs, c.gi, c.Gamma, m.chart.coords));
}

// ---- residual reports ----

struct ResidualItem {
    std::string label;
    ZeroResult zero;
};

struct ResidualReport {
    std::string name;
    bool hypothesis_met = true;
    std::string note;
    std::vector<ResidualItem> items;

    bool all_certainly_zero() const {
        for (const auto& it : items)
            if (it.zero.verdict != ZeroVerdict::CertainlyZero) return false;
        return true;
    }
    bool all_zeroish() const {
        for (const auto& it : items)
            if (it.zero.verdict == ZeroVerdict::ProbablyNonzero) return false;
        return true;
    }
    Report to_report() const {
        Report r;
        for (const auto& it : items) {
            bool ok = it.zero.verdict != ZeroVerdict::ProbablyNonzero;
            std::string d = std::string(to_string(it.zero.verdict)) +
                            (it.zero.witness.empty() ? "" : " " + it.zero.witness);
            r.add(name + "." + it.label, ok, d);
        }
        return r;
    }
};

// g^{jh} nabla_h Ric_jk - (1/2) d_k S must vanish identically; the
// divergence alone vanishes exactly when S is constant.
inline ResidualReport contracted_bianchi_residual(const MetricField& m,
                                                  const ZeroOptions& opt = {}) {
    Curvature c = compute_curvature(m);
    int n = m.chart.dim();
    Ten3<Sx> dric = cov_deriv(c.ric, c.Gamma, m.chart.coords);
    ResidualReport rep;
    rep.name = "contracted-bianchi";
    Sx half = c.scal.ring_from(Rational(1, 2));
    bool s_const = true;
    for (int k = 0; k < n; ++k) {
        Sx div = c.scal.ring_zero();
        for (int j = 0; j < n; ++j)
            for (int h = 0; h < n; ++h) div = div + c.gi.at(j, h) * dric.at(h, j, k);
        Sx ds = c.scal.diff(m.chart.coords[static_cast<size_t>(k)]);
        if (!ds.exact_zero()) s_const = false;
        rep.items.push_back({"full.k" + std::to_string(k), sx_is_zero(div - half * ds, opt)});
        rep.items.push_back({"divergence-only.k" + std::to_string(k), sx_is_zero(div, opt)});
    }
    rep.hypothesis_met = true;
    rep.note = s_const ? "scalar curvature constant: divergence-only rows are binding"
                       : "scalar curvature not constant: divergence-only rows informational";
    if (!s_const) {
        // keep only the full-identity rows binding
        std::vector<ResidualItem> keep;
        for (auto& it : rep.items)
            if (it.label.rfind("full.", 0) == 0) keep.push_back(std::move(it));
        rep.items = std::move(keep);
    }
    return rep;
}

// nabla_l Ric_ik - nabla_k Ric_il = ((N-2)/(N-3)) g^{jh} nabla_h W_ijkl for
// constant scalar curvature, dim >= 4.
inline ResidualReport weyl_divergence_identity_residual(const MetricField& m,
                                                        const ZeroOptions& opt = {}) {
    int n = m.chart.dim();
    ResidualReport rep;
    rep.name = "weyl-divergence-identity";
    if (n < 4) {
        rep.hypothesis_met = false;
        rep.note = "identity requires dimension at least 4";
        return rep;
    }
    Curvature c = compute_curvature(m);
    bool s_const = true;
    for (const auto& x : m.chart.coords)
        if (!c.scal.diff(x).exact_zero()) s_const = false;
    rep.hypothesis_met = s_const;
    if (!s_const) rep.note = "hypothesis unmet: scalar curvature is not constant";
    Ten4<Sx> W = weyl_from(c.g, c.Rlow, c.ric, c.scal);
    Ten3<Sx> dric = cov_deriv(c.ric, c.Gamma, m.chart.coords);
    Ten5<Sx> dW = cov_deriv(W, c.Gamma, m.chart.coords);
    Sx coef = c.scal.ring_from(Rational(n - 2, n - 3));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int l = k + 1; l < n; ++l) {
                Sx lhs = dric.at(l, i, k) - dric.at(k, i, l);
                Sx rhs = c.scal.ring_zero();
                for (int j = 0; j < n; ++j)
                    for (int h = 0; h < n; ++h) rhs = rhs + c.gi.at(j, h) * dW.at(h, i, j, k, l);
                rhs = coef * rhs;
                std::string lbl = "i" + std::to_string(i) + ".k" + std::to_string(k) + ".l" +
                                  std::to_string(l);
                rep.items.push_back({lbl, sx_is_zero(lhs - rhs, opt)});
            }
    return rep;
}

inline ResidualReport harmonicity_residual(const std::vector<Expr>& fns, const MetricField& m,
                                           const ZeroOptions& opt = {}) {
    Curvature c = compute_curvature(m);
    ResidualReport rep;
    rep.name = "harmonicity";
    for (size_t i = 0; i < fns.size(); ++i) {
        Sx fs = sx_of(fns[i], *c.ctx);
        Sx lap = laplace(fs, c.gi, c.Gamma, m.chart.coords);
        rep.items.push_back({"fn" + std::to_string(i), sx_is_zero(lap, opt)});
    }
    return rep;
}

}  // namespace fglab

#pragma once

// Radial expansion of an asymptotically hyperbolic Einstein metric from its
// boundary data.  Writing the bulk metric as dr^2 + g_r on (0, eps) x M with
// g_0 = h, the Einstein condition Ric = -n g packs into one symmetric-matrix
// evolution equation in the radial variable:
//
//   r g'' - (n-1) g' - (tr_g g') g - r g' g^{-1} g' + (r/2)(tr_g g') g' - 2 r Ric(g_r) = 0
//
// (boundary indices throughout; ' is d/dr, traces and Ric are taken in g_r).
// Matching coefficients at r^{p-1} turns this into a linear solve for the
// order-p Taylor coefficient X of g_r: the trace-free part of X is hit by
// p(p-n) and the trace part by p(p-2n), so the expansion proceeds smoothly
// until p = n.  There the trace-free sector degenerates: the trace-free part
// of X becomes free data, and the leftover residual is carried by a log term
// f r^n log r whose coefficient f is trace-free and determined by h alone.
// f is the obstruction to smoothness of the expansion; n odd has no log
// sector and instead forces the trace of X at p = n.
//
// Everything here is exact rational-function arithmetic; reports classify
// residuals with the usual three-valued zero test.

#include <algorithm>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "series.hpp"

namespace fglab {

// Taylor-plus-log jet of the radial family g_r over a boundary chart.  The
// matrix entries are series in r whose coefficients are exact scalars on the
// chart; `order` is the trusted truncation order of every entry.
struct RadialJet {
    Chart boundary;
    int n = 0;
    int order = 0;
    std::shared_ptr<SxContext> ctx;
    SqMat<LogSeries> family{1, LogSeries{}};

    // r^k log(r)^l coefficient as a symmetric boundary 2-tensor.
    TensorField coefficient(int k, int l) const {
        if (k > order) throw std::invalid_argument("jet coefficient: past trusted order");
        TensorField t;
        t.chart = boundary;
        t.lower = 2;
        t.sym = Sym::LastPair;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) t.set({i, j}, sx_out(family.at(i, j).coefficient(k, l)));
        return t;
    }

    MetricField boundary_metric() const {
        MetricField m = MetricField::zero(boundary);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) m.set(i, j, sx_out(family.at(i, j).coefficient(0, 0)));
        return m;
    }

    bool has_log() const {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                if (family.at(i, j).has_log()) return true;
        return false;
    }
};

// What the recursion found at the critical order.
struct ObstructionReport {
    int n = 0;
    // n! times the h-trace of the order-n Taylor coefficient (the trace is
    // never free: the recursion forces it in every dimension).
    Expr trace_constraint = Expr::num(0);
    // Coefficient of r^n log r (n even only; may be identically zero).
    std::optional<TensorField> log_coefficient;
    std::vector<std::string> notes;

    bool log_present() const {
        if (!log_coefficient) return false;
        for (const auto& [k, e] : log_coefficient->comp)
            if (!e.is_num(Rational(0))) return true;
        return false;
    }
};

struct FgExpansion {
    RadialJet jet;
    ObstructionReport report;
};

namespace detail {

// Left side of the radial evolution equation applied to a jet.  The input is
// trusted through its own order K; the result is trusted through K - 1 (one
// radial derivative survives the trailing multiplication by r).
inline SqMat<LogSeries> evolution_phi(const SqMat<LogSeries>& g, int n,
                                      const std::vector<std::string>& xs) {
    const LogSeries zero = g.at(0, 0).ring_zero();
    const int K = zero.order();
    auto gp = radial_derivative(g);
    auto gpp = radial_derivative(gp);
    auto gi = inverse(g);
    LogSeries trgp = trace(gi, gp);
    auto gpgigp = mat_mul(gp, mat_mul(gi, gp));
    // Ric enters multiplied by r, so its order-(K-2) truncation already
    // carries everything the K-1 trusted output can see.  Truncating first
    // keeps the Christoffel convolutions small.
    auto gt = truncated(g, std::max(K - 2, 0));
    auto git = inverse(gt);
    auto ric = ricci_direct(christoffel(gt, git, xs), xs);
    const LogSeries cnm1 = zero.ring_from(Rational(n - 1));
    const LogSeries half = zero.ring_from(Rational(1, 2));
    const LogSeries two = zero.ring_from(Rational(2));
    SqMat<LogSeries> phi(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            LogSeries v = gpp.at(i, j).times_r();
            v = v - cnm1 * gp.at(i, j);
            v = v - trgp * g.at(i, j);
            v = v - gpgigp.at(i, j).times_r();
            v = v + (half * trgp * gp.at(i, j)).times_r();
            v = v - (two * ric.at(i, j)).times_r();
            phi.at(i, j) = v;
            phi.at(j, i) = v;
        }
    return phi;
}

inline SqMat<Sx> series_coeff(const SqMat<LogSeries>& m, int k, int l) {
    SqMat<Sx> out(m.dim(), m.at(0, 0).coefficient(0, 0).ring_zero());
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) out.at(i, j) = m.at(i, j).coefficient(k, l);
    return out;
}

inline bool all_exact_zero(const SqMat<Sx>& m) {
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j)
            if (!m.at(i, j).exact_zero()) return false;
    return true;
}

// E = tf + (tr/n) h with tr = h^{ij} E_ij.
struct SectorSplit {
    SqMat<Sx> tf;
    Sx tr;
};

inline SectorSplit split_sector(const SqMat<Sx>& E, const SqMat<Sx>& h, const SqMat<Sx>& hinv) {
    const int n = E.dim();
    Sx tr = trace(hinv, E);
    Sx scale = tr / tr.ring_from(Rational(n));
    return {mat_sub(E, mat_smul(scale, h)), tr};
}

inline ZeroResult aggregate_zero(const std::vector<ZeroResult>& rs) {
    ZeroResult out;
    out.verdict = ZeroVerdict::CertainlyZero;
    for (const auto& r : rs) {
        if (r.verdict == ZeroVerdict::ProbablyNonzero) return r;
        if (r.verdict == ZeroVerdict::NumericallyZero) out = r;
    }
    return out;
}

}  // namespace detail

// Expand g_r from the boundary metric through the requested radial order
// (default n + 4, capped just below the first log-log interaction when the
// obstruction is nonzero).  Optional `free_data` supplies the trace-free part
// of the order-n coefficient; it must be trace-free with respect to h.
inline FgExpansion fg_expand(const MetricField& hm, int n, int order = -1,
                             const std::optional<TensorField>& free_data = std::nullopt) {
    hm.chart.validate();
    if (hm.chart.dim() != n)
        throw std::invalid_argument("fg_expand: boundary chart dimension must equal n");
    if (n < 3) throw std::invalid_argument("fg_expand: boundary dimension must be at least 3");
    for (const auto& c : hm.chart.coords)
        if (c == "r")
            throw std::invalid_argument("fg_expand: coordinate name r is reserved for the radial variable");
    int K = order < 0 ? n + 4 : order;
    if (K < 2) throw std::invalid_argument("fg_expand: order must be at least 2");

    auto ctx = std::make_shared<SxContext>();
    const Sx zs{RatFun::constant(0), &ctx->table};
    SqMat<Sx> h(n, zs);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h.at(i, j) = sx_of(hm.at(i, j), *ctx);
    if (det(h).exact_zero()) throw SingularMetric("fg_expand: boundary metric determinant is identically zero");
    SqMat<Sx> hinv = inverse(h);

    SqMat<Sx> fd(n, zs);
    if (free_data) {
        if (free_data->chart.coords != hm.chart.coords || free_data->lower != 2 || free_data->upper != 0)
            throw std::invalid_argument("fg_expand: free data must be a 2-tensor on the boundary chart");
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) fd.at(i, j) = sx_of(free_data->at({i, j}), *ctx);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (!(fd.at(i, j) - fd.at(j, i)).exact_zero())
                    throw std::invalid_argument("fg_expand: free data must be symmetric");
        if (!trace(hinv, fd).exact_zero())
            throw std::invalid_argument("fg_expand: free data must be trace-free with respect to h");
    }

    RadialJet jet;
    jet.boundary = hm.chart;
    jet.n = n;
    jet.ctx = ctx;
    jet.family = series_matrix(n, K, &ctx->table);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) jet.family.at(i, j) = LogSeries::monomial(h.at(i, j), 0, 0, K);

    ObstructionReport rep;
    rep.n = n;
    bool capped = false;
    // Every term of the evolution equation maps a family supported on even
    // radial orders to one supported on odd orders, so while the jet stays
    // even the residual at even orders vanishes identically and odd-order
    // steps can be skipped outright.
    bool jet_even = true;

    for (int p = 2; p <= K; ++p) {
        SqMat<Sx> E0(n, zs), E1(n, zs);
        if (!(jet_even && p % 2 == 1)) {
            // Residual of the jet known so far, read at radial order p - 1.
            // The jet is truncated to p first: higher slots are still unset
            // zeros and only slow the curvature convolutions down.
            auto phi = detail::evolution_phi(truncated(jet.family, p), n, hm.chart.coords);
            E0 = detail::series_coeff(phi, p - 1, 0);
            E1 = detail::series_coeff(phi, p - 1, 1);
        }

        SqMat<Sx> Y(n, zs);
        bool haveY = false;

        if (!detail::all_exact_zero(E1)) {
            // Log sector: adding Y r^p log r shifts the (p-1, log) residual by
            // p((p-n)Y - tr(Y) h).
            auto s = detail::split_sector(E1, h, hinv);
            if (p == n) {
                // Logs are first created at order n by the smooth sector
                // below, so no log residual can precede them.
                rep.notes.push_back("unexpected log residual at the critical order");
            } else if (p == 2 * n && !s.tr.exact_zero()) {
                rep.notes.push_back(
                    "log residual at order 2n has a trace part; no single-log term can cancel it");
            } else {
                Sx ctf = zs.ring_from(Rational(-1) / Rational(p * (p - n)));
                SqMat<Sx> Ytf = mat_smul(ctf, s.tf);
                Sx trY = p == 2 * n ? zs : s.tr / zs.ring_from(Rational(-p * (p - 2 * n)));
                Y = mat_add(Ytf, mat_smul(trY / zs.ring_from(Rational(n)), h));
                haveY = true;
            }
        }

        // Smooth sector, including the spill of the freshly chosen log term:
        // Y r^p log r feeds (2p-n)Y - tr(Y) h into the (p-1) smooth residual.
        SqMat<Sx> E = E0;
        if (haveY) {
            Sx trY = trace(hinv, Y);
            E = mat_add(E, mat_sub(mat_smul(zs.ring_from(Rational(2 * p - n)), Y), mat_smul(trY, h)));
        }
        auto s0 = detail::split_sector(E, h, hinv);

        SqMat<Sx> X(n, zs);
        if (p == n) {
            // Trace-free sector degenerates.  The trace-free residual is
            // absorbed by the log coefficient f = -(1/n) E^tf (n even); the
            // trace-free part of X itself is free data.
            Sx trX = s0.tr / zs.ring_from(Rational(n * n));
            X = mat_add(fd, mat_smul(trX / zs.ring_from(Rational(n)), h));
            Rational fact(1);
            for (int q = 2; q <= n; ++q) fact = fact * Rational(q);
            rep.trace_constraint = sx_out(zs.ring_from(fact) * trX);
            rep.notes.push_back(std::string("trace-free part of the order-") + std::to_string(n) +
                                " coefficient is free data; " +
                                (free_data ? "caller-supplied tensor" : "zero") + " inserted");
            if (n % 2 == 0) {
                SqMat<Sx> f = mat_smul(zs.ring_from(Rational(-1, n)), s0.tf);
                TensorField ft;
                ft.chart = hm.chart;
                ft.lower = 2;
                ft.sym = Sym::LastPair;
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) ft.set({i, j}, sx_out(f.at(i, j)));
                rep.log_coefficient = ft;
                if (!detail::all_exact_zero(f)) {
                    Y = f;
                    haveY = true;
                    if (K > 2 * n - 1) {
                        // Squares of the log term would enter at order 2n; a
                        // single-log jet is only trusted below that.
                        K = 2 * n - 1;
                        jet.family = truncated(jet.family, K);
                        capped = true;
                    }
                }
            } else if (!detail::all_exact_zero(s0.tf)) {
                // No log sector is available in odd dimension, so a nonzero
                // trace-free residual here cannot be absorbed at all.  The
                // recursion leaves it and flags the jet as non-Einstein.
                rep.notes.push_back("odd dimension: trace-free residual at the critical order cannot be absorbed");
            }
        } else if (p == 2 * n) {
            // Trace sector degenerates: tr X drops out of the equation.  The
            // trace-free part solves as usual; a leftover trace residual is
            // carried by a pure-trace log term, tr Y = -tr E / (2n).
            Sx ctf = zs.ring_from(Rational(-1) / Rational(p * (p - n)));
            X = mat_smul(ctf, s0.tf);
            rep.notes.push_back("trace of the order-2n coefficient is undetermined by the expansion; zero inserted");
            if (!s0.tr.exact_zero()) {
                Sx trY = s0.tr / zs.ring_from(Rational(-2 * n));
                Y = mat_add(Y, mat_smul(trY / zs.ring_from(Rational(n)), h));
                haveY = true;
                rep.notes.push_back("pure-trace log term enters at order 2n");
            }
        } else {
            Sx ctf = zs.ring_from(Rational(-1) / Rational(p * (p - n)));
            Sx trX = s0.tr / zs.ring_from(Rational(-p * (p - 2 * n)));
            X = mat_add(mat_smul(ctf, s0.tf), mat_smul(trX / zs.ring_from(Rational(n)), h));
        }

        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (!X.at(i, j).exact_zero())
                    jet.family.at(i, j) = jet.family.at(i, j) + LogSeries::monomial(X.at(i, j), p, 0, K);
                if (haveY && !Y.at(i, j).exact_zero())
                    jet.family.at(i, j) = jet.family.at(i, j) + LogSeries::monomial(Y.at(i, j), p, 1, K);
            }
        if (p % 2 == 1 && (!detail::all_exact_zero(X) || (haveY && !detail::all_exact_zero(Y))))
            jet_even = false;
    }

    jet.order = K;
    if (capped)
        rep.notes.push_back("expansion truncated at order " + std::to_string(K) +
                            ": beyond it the jet would need powers of log");
    return {jet, rep};
}

// Residual of the radial evolution equation on a jet; trusted through
// jet.order - 1.  Exactly zero through order K - 1 for fg_expand output
// (degenerate slots excepted, which the report below makes visible).
inline SqMat<LogSeries> evolution_residual(const RadialJet& jet) {
    return detail::evolution_phi(jet.family, jet.n, jet.boundary.coords);
}

inline ResidualReport evolution_residual_report(const RadialJet& jet, int through_order = -1,
                                                const ZeroOptions& opt = {}) {
    auto phi = evolution_residual(jet);
    int T = through_order < 0 ? jet.order - 1 : through_order;
    if (T > jet.order - 1) throw std::invalid_argument("evolution residual: order past trust");
    ResidualReport rep;
    rep.name = "radial evolution residual";
    for (int k = 0; k <= T; ++k)
        for (int l = 0; l <= 1; ++l) {
            std::vector<ZeroResult> rs;
            for (int i = 0; i < jet.n; ++i)
                for (int j = i; j < jet.n; ++j) rs.push_back(sx_is_zero(phi.at(i, j).coefficient(k, l), opt));
            std::string lbl = "r^" + std::to_string(k) + (l ? ".log" : "");
            rep.items.push_back({lbl, detail::aggregate_zero(rs)});
        }
    return rep;
}

// Bulk curvature of dr^2 + g_r assembled from the jet.  With A = (1/2) g_r'
// (boundary indices lowered), the Gauss, Codazzi and radial Ricci identities
// give every component in terms of A, its radial derivative and the
// boundary curvature of g_r:
//
//   R_{irjr} = (A g^{-1} A)_ij - A'_ij
//   Ric_{ij} = Ric(g_r)_ij - A'_ij - (tr A) A_ij + 2 (A g^{-1} A)_ij
//   Ric_{rr} = -(tr A)' - tr(g^{-1} A g^{-1} A)
//   Scal     = Scal-trace of the above (= Ric_rr + g^{ij} Ric_ij)
//
// Everything is trusted through jet.order - 2.
struct JetCurvature {
    int n = 0;
    SqMat<LogSeries> mixed_radial{1, LogSeries{}};  // R_{irjr}
    SqMat<LogSeries> tangential{1, LogSeries{}};    // Ric_{ij}
    LogSeries normal;                               // Ric_{rr}
    LogSeries scalar;                               // Scal
};

inline JetCurvature curvature_of_jet(const RadialJet& jet) {
    if (jet.order < 2) throw std::invalid_argument("curvature of jet: order must be at least 2");
    const int n = jet.n;
    const auto& g = jet.family;
    const LogSeries zero = g.at(0, 0).ring_zero();
    auto gi = inverse(g);
    auto A = mat_smul(zero.ring_from(Rational(1, 2)), radial_derivative(g));
    auto Amix = mat_mul(gi, A);  // A^i_j
    auto AA = mat_mul(A, Amix);  // (A g^{-1} A)_ij
    auto dA = radial_derivative(A);
    LogSeries trA = zero;
    for (int i = 0; i < n; ++i) trA = trA + Amix.at(i, i);
    LogSeries trAA = zero;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) trAA = trAA + Amix.at(i, j) * Amix.at(j, i);
    auto gt = truncated(g, std::max(jet.order - 2, 0));
    auto git = inverse(gt);
    auto ric = ricci_direct(christoffel(gt, git, jet.boundary.coords), jet.boundary.coords);

    JetCurvature out;
    out.n = n;
    out.mixed_radial = SqMat<LogSeries>(n, zero);
    out.tangential = SqMat<LogSeries>(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            LogSeries m = AA.at(i, j) - dA.at(i, j);
            LogSeries t = ric.at(i, j) - dA.at(i, j) - trA * A.at(i, j) +
                          zero.ring_from(Rational(2)) * AA.at(i, j);
            out.mixed_radial.at(i, j) = m;
            out.mixed_radial.at(j, i) = m;
            out.tangential.at(i, j) = t;
            out.tangential.at(j, i) = t;
        }
    out.normal = -trA.radial_derivative() - trAA;
    out.scalar = out.normal + trace(gi, out.tangential);
    return out;
}

// The r^{n-2} log r coefficients of the bulk curvature, n even.  For a jet
// whose first log term is f r^n log r with f trace-free, differentiating
// that term twice is the only way a log reaches order n - 2, which pins
// every coefficient to a fixed multiple of f:
//
//   coeff(R_{irjr}) = coeff(Ric_ij) = -(n(n-1)/2) f_ij
//   coeff(Ric_rr)   = -(n(n-1)/2) tr_h f        (= 0 when f is trace-free)
//   coeff(Scal)     = -n(n-1) tr_h f            (= 0 likewise)
//
// The report checks all four identities entrywise.
struct LogCoefficients {
    TensorField mixed_radial;
    TensorField tangential;
    Expr normal = Expr::num(0);
    Expr scalar = Expr::num(0);
    ResidualReport relations;
};

inline LogCoefficients log_coefficients(const RadialJet& jet, const ZeroOptions& opt = {}) {
    if (jet.n % 2) throw std::domain_error("log coefficients: odd boundary dimension has no log sector");
    if (jet.order < jet.n) throw std::invalid_argument("log coefficients: jet order below the critical order");
    const int n = jet.n;
    auto jc = curvature_of_jet(jet);
    auto f = detail::series_coeff(jet.family, n, 1);
    auto h = detail::series_coeff(jet.family, 0, 0);
    auto hinv = inverse(h);
    Sx trf = trace(hinv, f);
    const Sx zs = trf.ring_zero();
    const Sx c = zs.ring_from(Rational(n * (n - 1), 2));

    LogCoefficients out;
    out.relations.name = "curvature log coefficients";
    auto Wc = detail::series_coeff(jc.mixed_radial, n - 2, 1);
    auto Rc = detail::series_coeff(jc.tangential, n - 2, 1);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            std::string ij = std::to_string(i) + std::to_string(j);
            out.relations.items.push_back(
                {"mixed-radial." + ij, sx_is_zero(Wc.at(i, j) + c * f.at(i, j), opt)});
            out.relations.items.push_back(
                {"tangential." + ij, sx_is_zero(Rc.at(i, j) + c * f.at(i, j), opt)});
        }
    Sx nc = jc.normal.coefficient(n - 2, 1);
    Sx sc = jc.scalar.coefficient(n - 2, 1);
    out.relations.items.push_back({"normal", sx_is_zero(nc + c * trf, opt)});
    out.relations.items.push_back({"scalar", sx_is_zero(sc + zs.ring_from(Rational(2)) * c * trf, opt)});
    out.relations.note = "the obstruction is trace-free, so the normal and scalar coefficients vanish";

    auto tens = [&](const SqMat<Sx>& m) {
        TensorField t;
        t.chart = jet.boundary;
        t.lower = 2;
        t.sym = Sym::LastPair;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) t.set({i, j}, sx_out(m.at(i, j)));
        return t;
    };
    out.mixed_radial = tens(Wc);
    out.tangential = tens(Rc);
    out.normal = sx_out(nc);
    out.scalar = sx_out(sc);
    return out;
}

// Equivalence between smoothness of the bulk Weyl curvature and vanishing of
// the obstruction, checked on a concrete jet.  The tangential-radial Weyl
// block is
//
//   W_{irjr} = R_{irjr} - (Ric_ij + Ric_rr g_ij) / (n-1) + Scal g_ij / (n (n-1))
//
// (bulk dimension n+1); substituting the log coefficients above collapses its
// r^{n-2} log r coefficient to -(n(n-2)/2) (f - (tr_h f / n) h), i.e. to a
// fixed nonzero multiple of the trace-free part of f.  Since f is trace-free,
// the coefficient vanishes exactly when f does.
struct EquivalenceReport {
    int n = 0;
    TensorField weyl_coefficient;  // r^{n-2} log r coefficient of W_{irjr}
    TensorField predicted;         // -(n(n-2)/2) (f - (tr_h f / n) h)
    ResidualReport match;          // coefficient minus prediction, entrywise
    ZeroResult weyl_zero;          // is the Weyl log coefficient zero
    ZeroResult obstruction_zero;   // is f zero
    bool equivalent = false;       // the two verdicts agree
    std::vector<std::string> chain;
};

inline EquivalenceReport weyl_obstruction_equivalence(const RadialJet& jet, const ZeroOptions& opt = {}) {
    if (jet.n % 2) throw std::domain_error("weyl obstruction equivalence: boundary dimension must be even");
    if (jet.order < jet.n) throw std::invalid_argument("weyl obstruction equivalence: jet order below critical");
    const int n = jet.n;
    auto jc = curvature_of_jet(jet);
    const LogSeries zero = jet.family.at(0, 0).ring_zero();
    const LogSeries cn1 = zero.ring_from(Rational(1, n - 1));
    const LogSeries cnn1 = zero.ring_from(Rational(1, n * (n - 1)));
    SqMat<LogSeries> W(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            LogSeries w = jc.mixed_radial.at(i, j) -
                          cn1 * (jc.tangential.at(i, j) + jc.normal * jet.family.at(i, j)) +
                          cnn1 * jc.scalar * jet.family.at(i, j);
            W.at(i, j) = w;
            W.at(j, i) = w;
        }

    auto Wc = detail::series_coeff(W, n - 2, 1);
    auto f = detail::series_coeff(jet.family, n, 1);
    auto h = detail::series_coeff(jet.family, 0, 0);
    auto hinv = inverse(h);
    Sx trf = trace(hinv, f);
    const Sx zs = trf.ring_zero();
    auto ftf = mat_sub(f, mat_smul(trf / zs.ring_from(Rational(n)), h));
    auto pred = mat_smul(zs.ring_from(Rational(-n * (n - 2), 2)), ftf);

    EquivalenceReport out;
    out.n = n;
    out.match.name = "weyl log coefficient vs obstruction";
    std::vector<ZeroResult> wz, fz;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            std::string ij = std::to_string(i) + std::to_string(j);
            out.match.items.push_back({"entry." + ij, sx_is_zero(Wc.at(i, j) - pred.at(i, j), opt)});
            wz.push_back(sx_is_zero(Wc.at(i, j), opt));
            fz.push_back(sx_is_zero(f.at(i, j), opt));
        }
    out.weyl_zero = detail::aggregate_zero(wz);
    out.obstruction_zero = detail::aggregate_zero(fz);
    bool wv = out.weyl_zero.verdict != ZeroVerdict::ProbablyNonzero;
    bool fv = out.obstruction_zero.verdict != ZeroVerdict::ProbablyNonzero;
    out.equivalent = (wv == fv);

    auto tens = [&](const SqMat<Sx>& m) {
        TensorField t;
        t.chart = jet.boundary;
        t.lower = 2;
        t.sym = Sym::LastPair;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) t.set({i, j}, sx_out(m.at(i, j)));
        return t;
    };
    out.weyl_coefficient = tens(Wc);
    out.predicted = tens(pred);
    out.chain = {
        "the r^{n-2} log r coefficient of W_{irjr} equals -(n(n-2)/2) times the trace-free part of the obstruction",
        "the obstruction is trace-free, so that coefficient is -(n(n-2)/2) f itself",
        "n(n-2)/2 is nonzero for n >= 3: the coefficient vanishes exactly when f does",
        "a log-free Weyl curvature therefore forces a log-free expansion, and conversely"};
    return out;
}

// n odd: n! tr_h of the order-n coefficient, which the recursion forces to
// vanish for any Einstein jet (there is no free trace).  Returns the exact
// scalar so callers can test it against hand-built jets as well.
inline Expr odd_case_trace_constraint(const RadialJet& jet) {
    if (jet.n % 2 == 0) throw std::domain_error("odd case trace constraint: boundary dimension must be odd");
    if (jet.order < jet.n) throw std::invalid_argument("odd case trace constraint: jet order below critical");
    auto gn = detail::series_coeff(jet.family, jet.n, 0);
    auto h = detail::series_coeff(jet.family, 0, 0);
    auto hinv = inverse(h);
    Sx tr = trace(hinv, gn);
    Rational fact(1);
    for (int q = 2; q <= jet.n; ++q) fact = fact * Rational(q);
    return sx_out(tr.ring_from(fact) * tr);
}

// Pointwise linear algebra of the order-p solve.  Adding X r^p moves the
// matching coefficient of the evolution residual by M_p(X) = p((p-n)X -
// tr_h(X) h), a linear map on symmetric matrices.  Its exact rank over the
// N = n(n+1)/2 dimensional space locates the degenerate orders: full rank
// away from p = n and p = 2n, rank 1 at p = n (image spanned by h, kernel
// the trace-free matrices), rank N - 1 at p = 2n (the trace drops out).
// h is any constant symmetric invertible matrix with rational entries.
inline int coefficient_map_rank(const std::vector<std::vector<Rational>>& h, int p) {
    const int n = static_cast<int>(h.size());
    if (n < 1) throw std::invalid_argument("coefficient map rank: empty matrix");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(h[i].size()) != n)
            throw std::invalid_argument("coefficient map rank: matrix not square");
        for (int j = 0; j < n; ++j)
            if (h[i][j] != h[j][i]) throw std::invalid_argument("coefficient map rank: matrix not symmetric");
    }
    // exact inverse by Gauss-Jordan
    std::vector<std::vector<Rational>> a = h;
    std::vector<std::vector<Rational>> hi(static_cast<size_t>(n), std::vector<Rational>(static_cast<size_t>(n), Rational(0)));
    for (int i = 0; i < n; ++i) hi[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1;
    for (int c = 0; c < n; ++c) {
        int piv = -1;
        for (int r = c; r < n; ++r)
            if (a[static_cast<size_t>(r)][static_cast<size_t>(c)] != 0) { piv = r; break; }
        if (piv < 0) throw SingularMetric("coefficient map rank: matrix is singular");
        std::swap(a[static_cast<size_t>(c)], a[static_cast<size_t>(piv)]);
        std::swap(hi[static_cast<size_t>(c)], hi[static_cast<size_t>(piv)]);
        Rational d = a[static_cast<size_t>(c)][static_cast<size_t>(c)];
        for (int k = 0; k < n; ++k) {
            a[static_cast<size_t>(c)][static_cast<size_t>(k)] /= d;
            hi[static_cast<size_t>(c)][static_cast<size_t>(k)] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            Rational f = a[static_cast<size_t>(r)][static_cast<size_t>(c)];
            if (f == 0) continue;
            for (int k = 0; k < n; ++k) {
                a[static_cast<size_t>(r)][static_cast<size_t>(k)] -= f * a[static_cast<size_t>(c)][static_cast<size_t>(k)];
                hi[static_cast<size_t>(r)][static_cast<size_t>(k)] -= f * hi[static_cast<size_t>(c)][static_cast<size_t>(k)];
            }
        }
    }
    // columns of M on the symmetrized basis E_ab, rows the upper triangle
    const int N = n * (n + 1) / 2;
    std::vector<std::vector<Rational>> M(static_cast<size_t>(N), std::vector<Rational>(static_cast<size_t>(N), Rational(0)));
    int col = 0;
    for (int ba = 0; ba < n; ++ba)
        for (int bb = ba; bb < n; ++bb, ++col) {
            Rational tr = ba == bb ? hi[static_cast<size_t>(ba)][static_cast<size_t>(ba)]
                                   : hi[static_cast<size_t>(ba)][static_cast<size_t>(bb)] * 2;
            int row = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j, ++row) {
                    Rational x = (i == ba && j == bb) ? Rational(1) : Rational(0);
                    M[static_cast<size_t>(row)][static_cast<size_t>(col)] =
                        Rational(p) * (Rational(p - n) * x - tr * h[static_cast<size_t>(i)][static_cast<size_t>(j)]);
                }
        }
    int rank = 0;
    for (int c = 0; c < N && rank < N; ++c) {
        int piv = -1;
        for (int r = rank; r < N; ++r)
            if (M[static_cast<size_t>(r)][static_cast<size_t>(c)] != 0) { piv = r; break; }
        if (piv < 0) continue;
        std::swap(M[static_cast<size_t>(rank)], M[static_cast<size_t>(piv)]);
        for (int r = 0; r < N; ++r) {
            if (r == rank) continue;
            Rational f = M[static_cast<size_t>(r)][static_cast<size_t>(c)] / M[static_cast<size_t>(rank)][static_cast<size_t>(c)];
            if (f == 0) continue;
            for (int k = c; k < N; ++k)
                M[static_cast<size_t>(r)][static_cast<size_t>(k)] -= f * M[static_cast<size_t>(rank)][static_cast<size_t>(k)];
        }
        ++rank;
    }
    return rank;
}

// Add t * r^k log(r)^l to the family.  Tests use this to build jets that
// violate a constraint on purpose.
inline RadialJet with_injected_term(RadialJet jet, int k, int l, const MetricField& t) {
    if (t.chart.coords != jet.boundary.coords)
        throw std::invalid_argument("inject term: chart mismatch");
    for (int i = 0; i < jet.n; ++i)
        for (int j = 0; j < jet.n; ++j) {
            Sx c = sx_of(t.at(i, j), *jet.ctx);
            if (!c.exact_zero())
                jet.family.at(i, j) = jet.family.at(i, j) + LogSeries::monomial(c, k, l, jet.order);
        }
    return jet;
}

}  // namespace fglab

#pragma once
// Pointwise numeric curvature from central finite differences of the metric
// components.  Deliberately a separate code path from the symbolic operators
// so the two can cross-check each other.

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "geometry.hpp"

namespace fglab {

struct FdOptions {
    double step = 1e-4;
};

namespace detail {

using DMat = std::vector<std::vector<double>>;

inline DMat eval_metric(const MetricField& m, std::map<std::string, double> pt) {
    int n = m.chart.dim();
    DMat g(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[static_cast<size_t>(i)][static_cast<size_t>(j)] = evaluate(m.at(i, j), pt);
    return g;
}

inline DMat dmat_inverse(DMat a) {
    int n = static_cast<int>(a.size());
    DMat inv(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<size_t>(r)][static_cast<size_t>(col)]) >
                std::abs(a[static_cast<size_t>(piv)][static_cast<size_t>(col)]))
                piv = r;
        if (a[static_cast<size_t>(piv)][static_cast<size_t>(col)] == 0.0)
            throw EvalError("finite-difference check: singular metric at probe point");
        std::swap(a[static_cast<size_t>(piv)], a[static_cast<size_t>(col)]);
        std::swap(inv[static_cast<size_t>(piv)], inv[static_cast<size_t>(col)]);
        double d = a[static_cast<size_t>(col)][static_cast<size_t>(col)];
        for (int c = 0; c < n; ++c) {
            a[static_cast<size_t>(col)][static_cast<size_t>(c)] /= d;
            inv[static_cast<size_t>(col)][static_cast<size_t>(c)] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[static_cast<size_t>(r)][static_cast<size_t>(col)];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[static_cast<size_t>(r)][static_cast<size_t>(c)] -=
                    f * a[static_cast<size_t>(col)][static_cast<size_t>(c)];
                inv[static_cast<size_t>(r)][static_cast<size_t>(c)] -=
                    f * inv[static_cast<size_t>(col)][static_cast<size_t>(c)];
            }
        }
    }
    return inv;
}

struct FdJet {
    int n = 0;
    DMat g, gi;
    std::vector<DMat> dg;                // dg[a][i][j]
    std::vector<std::vector<DMat>> d2g;  // d2g[a][b][i][j]
};

inline FdJet fd_metric_jet(const MetricField& m, const std::map<std::string, double>& pt,
                           double h) {
    FdJet jet;
    int n = m.chart.dim();
    jet.n = n;
    auto shifted = [&](int a, double da, int b, double db) {
        auto q = pt;
        q[m.chart.coords[static_cast<size_t>(a)]] += da;
        if (b >= 0) q[m.chart.coords[static_cast<size_t>(b)]] += db;
        return eval_metric(m, q);
    };
    jet.g = eval_metric(m, pt);
    jet.gi = dmat_inverse(jet.g);
    jet.dg.resize(static_cast<size_t>(n));
    jet.d2g.assign(static_cast<size_t>(n), std::vector<DMat>(static_cast<size_t>(n)));
    for (int a = 0; a < n; ++a) {
        DMat p = shifted(a, h, -1, 0), q = shifted(a, -h, -1, 0);
        DMat d(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                    (p[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                     q[static_cast<size_t>(i)][static_cast<size_t>(j)]) /
                    (2 * h);
        jet.dg[static_cast<size_t>(a)] = d;
    }
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            DMat d(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
            if (a == b) {
                DMat p = shifted(a, h, -1, 0), q = shifted(a, -h, -1, 0);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        d[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                            (p[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                             2 * jet.g[static_cast<size_t>(i)][static_cast<size_t>(j)] +
                             q[static_cast<size_t>(i)][static_cast<size_t>(j)]) /
                            (h * h);
            } else {
                DMat pp = shifted(a, h, b, h), pm = shifted(a, h, b, -h), mp = shifted(a, -h, b, h),
                     mm = shifted(a, -h, b, -h);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        d[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                            (pp[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                             pm[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                             mp[static_cast<size_t>(i)][static_cast<size_t>(j)] +
                             mm[static_cast<size_t>(i)][static_cast<size_t>(j)]) /
                            (4 * h * h);
            }
            jet.d2g[static_cast<size_t>(a)][static_cast<size_t>(b)] = d;
            jet.d2g[static_cast<size_t>(b)][static_cast<size_t>(a)] = d;
        }
    return jet;
}

struct FdCurvature {
    int n = 0;
    DMat g, gi, ric;
    std::vector<DMat> Gamma;  // Gamma[k][i][j]
    double scal = 0.0;
};

inline FdCurvature fd_curvature_at(const MetricField& m, const std::map<std::string, double>& pt,
                                   double h) {
    FdJet jet = fd_metric_jet(m, pt, h);
    int n = jet.n;
    auto z = [&] { return DMat(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0)); };
    FdCurvature out;
    out.n = n;
    out.g = jet.g;
    out.gi = jet.gi;
    out.Gamma.assign(static_cast<size_t>(n), z());
    auto G = [&](int k, int i, int j) -> double& {
        return out.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)][static_cast<size_t>(j)];
    };
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0;
                for (int l = 0; l < n; ++l)
                    acc += jet.gi[static_cast<size_t>(k)][static_cast<size_t>(l)] *
                           (jet.dg[static_cast<size_t>(i)][static_cast<size_t>(j)][static_cast<size_t>(l)] +
                            jet.dg[static_cast<size_t>(j)][static_cast<size_t>(i)][static_cast<size_t>(l)] -
                            jet.dg[static_cast<size_t>(l)][static_cast<size_t>(i)][static_cast<size_t>(j)]);
                G(k, i, j) = 0.5 * acc;
            }
    // dGamma[a][t][b][s] = d_a Gamma^t_bs, from the metric 2-jet
    auto dGamma = [&](int a, int t, int b, int s) {
        double acc = 0;
        for (int l = 0; l < n; ++l) {
            // d_a g^{tl} = -(gi dg_a gi)^{tl}
            double dginv = 0;
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q)
                    dginv -= jet.gi[static_cast<size_t>(t)][static_cast<size_t>(p)] *
                             jet.dg[static_cast<size_t>(a)][static_cast<size_t>(p)][static_cast<size_t>(q)] *
                             jet.gi[static_cast<size_t>(q)][static_cast<size_t>(l)];
            acc += dginv * (jet.dg[static_cast<size_t>(b)][static_cast<size_t>(s)][static_cast<size_t>(l)] +
                            jet.dg[static_cast<size_t>(s)][static_cast<size_t>(b)][static_cast<size_t>(l)] -
                            jet.dg[static_cast<size_t>(l)][static_cast<size_t>(b)][static_cast<size_t>(s)]);
            acc += jet.gi[static_cast<size_t>(t)][static_cast<size_t>(l)] *
                   (jet.d2g[static_cast<size_t>(a)][static_cast<size_t>(b)][static_cast<size_t>(s)][static_cast<size_t>(l)] +
                    jet.d2g[static_cast<size_t>(a)][static_cast<size_t>(s)][static_cast<size_t>(b)][static_cast<size_t>(l)] -
                    jet.d2g[static_cast<size_t>(a)][static_cast<size_t>(l)][static_cast<size_t>(b)][static_cast<size_t>(s)]);
        }
        return 0.5 * acc;
    };
    out.ric = z();
    for (int s = 0; s < n; ++s)
        for (int b = 0; b < n; ++b) {
            double acc = 0;
            for (int a = 0; a < n; ++a) {
                double r = dGamma(a, a, b, s) - dGamma(b, a, a, s);
                for (int k = 0; k < n; ++k) r += G(a, a, k) * G(k, b, s) - G(a, b, k) * G(k, a, s);
                acc += r;
            }
            out.ric[static_cast<size_t>(s)][static_cast<size_t>(b)] = acc;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.scal += jet.gi[static_cast<size_t>(i)][static_cast<size_t>(j)] *
                        out.ric[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return out;
}

}  // namespace detail

inline double fd_scalar_curvature(const MetricField& m, const std::map<std::string, double>& pt,
                                  const FdOptions& opt = {}) {
    return detail::fd_curvature_at(m, pt, opt.step).scal;
}

inline std::vector<std::vector<double>> fd_ricci(const MetricField& m,
                                                 const std::map<std::string, double>& pt,
                                                 const FdOptions& opt = {}) {
    return detail::fd_curvature_at(m, pt, opt.step).ric;
}

inline double fd_laplace_beltrami(const Expr& f, const MetricField& m,
                                  const std::map<std::string, double>& pt,
                                  const FdOptions& opt = {}) {
    auto cur = detail::fd_curvature_at(m, pt, opt.step);
    int n = cur.n;
    double h = opt.step;
    auto fat = [&](int a, double da, int b, double db) {
        auto q = pt;
        if (a >= 0) q[m.chart.coords[static_cast<size_t>(a)]] += da;
        if (b >= 0) q[m.chart.coords[static_cast<size_t>(b)]] += db;
        return evaluate(f, q);
    };
    double f0 = fat(-1, 0, -1, 0);
    std::vector<double> df(static_cast<size_t>(n), 0.0);
    for (int a = 0; a < n; ++a) df[static_cast<size_t>(a)] = (fat(a, h, -1, 0) - fat(a, -h, -1, 0)) / (2 * h);
    double acc = 0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double d2;
            if (a == b)
                d2 = (fat(a, h, -1, 0) - 2 * f0 + fat(a, -h, -1, 0)) / (h * h);
            else
                d2 = (fat(a, h, b, h) - fat(a, h, b, -h) - fat(a, -h, b, h) + fat(a, -h, b, -h)) /
                     (4 * h * h);
            double term = d2;
            for (int k = 0; k < n; ++k)
                term -= cur.Gamma[static_cast<size_t>(k)][static_cast<size_t>(a)][static_cast<size_t>(b)] *
                        df[static_cast<size_t>(k)];
            acc += cur.gi[static_cast<size_t>(a)][static_cast<size_t>(b)] * term;
        }
    return acc;
}

}  // namespace fglab

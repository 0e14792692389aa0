#pragma once
// Conformal rescaling, constant-scalar-curvature residuals, the geodesic
// defining-function gauge, and numeric decay-rate diagnostics for
// asymptotically hyperbolic metrics g_+ = rho^{-2} g.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "geometry.hpp"

namespace fglab {

// ---- rescaling ----

// Componentwise g -> factor^2 g, so rescaling by a defining function turns
// rho^{-2}-singular metrics into compact ones in one step.
inline MetricField conformal_rescale(const MetricField& m, const Expr& factor) {
    {
        SxContext ctx;
        if (sx_of(factor, ctx).exact_zero())
            throw std::invalid_argument("conformal_rescale: factor is identically zero");
    }
    MetricField out = m;
    Expr f2 = factor * factor;
    int n = m.chart.dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) out.set(i, j, f2 * m.at(i, j));
    return out;
}

// ---- compactified package ----

namespace detail {

// Deterministic probe points; the boundary face is {first coordinate = 0}.
inline std::vector<std::map<std::string, double>> face_probes(
    const std::vector<std::string>& xs, bool boundary, const ZeroOptions& opt,
    std::uint64_t salt) {
    std::mt19937_64 rng(opt.seed ^ salt);
    std::vector<std::map<std::string, double>> out;
    for (int k = 0; k < opt.probes; ++k) {
        std::map<std::string, double> pt;
        pt[xs[0]] = boundary ? 0.0 : (k + 1) / (4.0 * opt.probes);
        for (size_t a = 1; a < xs.size(); ++a) pt[xs[a]] = draw_probe(rng);
        out.push_back(std::move(pt));
    }
    return out;
}

// Evaluate e at the probes, skipping points outside the chart; fn sees each
// finite value and throws to reject. Degenerates only if every probe fails.
template <class Fn>
void for_valid_probes(const Expr& e, const std::vector<std::map<std::string, double>>& pts,
                      Fn&& fn) {
    int seen = 0;
    for (const auto& pt : pts) {
        double v;
        try {
            v = evaluate(e, pt);
        } catch (const EvalError&) {
            continue;
        }
        ++seen;
        fn(v, pt);
    }
    if (seen == 0) throw std::domain_error("no probe point evaluates inside the chart");
}

}  // namespace detail

// A conformally compact package: the interior metric is rho^{-2} g, carried
// here through its compactification g and defining function rho. Bundled
// models put the boundary at {first coordinate = 0}; check() probes the
// defining-function conditions numerically.
struct CompactifiedMetric {
    MetricField g;
    Expr rho = Expr::num(0);

    int dim() const { return g.chart.dim(); }
    const std::vector<std::string>& coords() const { return g.chart.coords; }

    MetricField interior() const {
        MetricField out = g;
        int n = dim();
        Expr r2 = rho * rho;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) out.set(i, j, g.at(i, j) / r2);
        return out;
    }

    // rho > 0 off the boundary, rho = 0 and d(rho) != 0 on it.
    void check(const ZeroOptions& opt = {}) const {
        g.chart.validate();
        const auto& xs = g.chart.coords;
        detail::for_valid_probes(rho, detail::face_probes(xs, false, opt, 0x636f6d70u),
                                 [&](double v, const std::map<std::string, double>&) {
                                     if (!(v > 0))
                                         throw std::invalid_argument(
                                             "defining function is not positive at an interior "
                                             "probe");
                                 });
        auto bpts = detail::face_probes(xs, true, opt, 0x62647279u);
        detail::for_valid_probes(rho, bpts, [&](double v, const std::map<std::string, double>&) {
            if (std::fabs(v) > opt.tolerance)
                throw std::invalid_argument("defining function does not vanish on the boundary");
        });
        Expr grad2 = Expr::num(0);
        for (const auto& x : xs) {
            Expr d = differentiate(rho, x);
            grad2 = grad2 + d * d;
        }
        detail::for_valid_probes(grad2, bpts, [&](double v, const std::map<std::string, double>&) {
            if (!(v > 1e-12))
                throw std::invalid_argument("defining function has vanishing differential on the "
                                            "boundary");
        });
    }
};

// ---- constant-scalar-curvature residual ----

// Residual of the constant-scalar equation for the conformal metric
// u^{4/(N-2)} g:
//   Delta_g u - (N-2)/(4(N-1)) S u + (N-2)/(4(N-1)) lambda u^{(N+2)/(N-2)}.
// N defaults to dim(g); passing another N covers conventions that label the
// dimension differently. Integer exponents (N in {3, 4, 6}) keep the
// residual exact; otherwise the fractional power forces numeric probes.
inline ResidualReport yamabe_residual(const MetricField& m, const Expr& u, const Rational& lambda,
                                      int N = -1, const ZeroOptions& opt = {}) {
    if (N < 0) N = m.chart.dim();
    if (N < 3) throw std::invalid_argument("yamabe_residual: dimension must be at least 3");
    const auto& xs = m.chart.coords;
    {
        std::mt19937_64 rng(opt.seed ^ 0x79616d62u);
        int seen = 0;
        for (int k = 0; k < opt.probes + opt.retry_budget && seen < opt.probes; ++k) {
            std::map<std::string, double> pt;
            for (const auto& x : xs) pt[x] = detail::draw_probe(rng);
            double v;
            try {
                v = evaluate(u, pt);
            } catch (const EvalError&) {
                continue;
            }
            ++seen;
            if (!(v > 0)) throw std::domain_error("yamabe_residual: u is not positive at a probe");
        }
    }
    Curvature c = compute_curvature(m);
    Sx us = sx_of(u, *c.ctx);
    Sx lap = laplace(us, c.gi, c.Gamma, xs);
    Rational cN = Rational(N - 2) / Rational(4 * (N - 1));
    ResidualReport rep;
    rep.name = "constant-scalar-residual";
    if ((N + 2) % (N - 2) == 0) {
        int e = (N + 2) / (N - 2);
        Sx upow = us.ring_one();
        for (int i = 0; i < e; ++i) upow = upow * us;
        Sx res = lap - us.ring_from(cN) * c.scal * us + us.ring_from(cN * lambda) * upow;
        rep.items.push_back({"residual", sx_is_zero(res, opt)});
        rep.note = "integer conformal exponent " + std::to_string(e) + ": exact residual";
    } else {
        Expr lapE = sx_out(lap), sE = sx_out(c.scal);
        double ex = double(N + 2) / double(N - 2);
        double cNd = rational_to_double(cN), lam = rational_to_double(lambda);
        std::set<std::string> vars(xs.begin(), xs.end());
        auto eval = [&](const std::map<std::string, double>& pt) {
            double uu = evaluate(u, pt);
            if (!(uu > 0)) throw EvalError("u not positive at probe");
            return evaluate(lapE, pt) - cNd * evaluate(sE, pt) * uu +
                   cNd * lam * std::pow(uu, ex);
        };
        rep.items.push_back({"residual", detail::probe_zero(vars, eval, opt)});
        rep.note = "fractional conformal exponent: numeric probes only";
    }
    return rep;
}

// ---- geodesic gauge ----

// Residual of the gauge equation for r = u rho:
//   2 (grad rho)(log u) + rho |grad log u|^2_g - (1 - |grad rho|^2_g) / rho.
// A collar solution makes the normalized residual regular across {rho = 0};
// a surviving pole means u is not a collar solution, and the report says so
// instead of judging zeroness.
inline ResidualReport geodesic_gauge_residual(const CompactifiedMetric& cm, const Expr& u,
                                              const ZeroOptions& opt = {}) {
    const auto& xs = cm.coords();
    int n = cm.dim();
    auto bpts = detail::face_probes(xs, true, opt, 0x67617567u);
    detail::for_valid_probes(u, bpts, [&](double v, const std::map<std::string, double>&) {
        if (std::fabs(v - 1.0) > opt.tolerance)
            throw std::invalid_argument("geodesic_gauge_residual: u must equal 1 on the boundary");
    });
    detail::for_valid_probes(u, detail::face_probes(xs, false, opt, 0x67617567u),
                             [&](double v, const std::map<std::string, double>&) {
                                 if (!(v > 0))
                                     throw std::invalid_argument(
                                         "geodesic_gauge_residual: u must be positive in the "
                                         "collar");
                             });
    Curvature c = compute_curvature(cm.g);
    Sx us = sx_of(u, *c.ctx), rs = sx_of(cm.rho, *c.ctx);
    std::vector<Sx> du, dr;
    for (const auto& x : xs) {
        du.push_back(us.diff(x));
        dr.push_back(rs.diff(x));
    }
    Sx pair_term = us.ring_zero(), gradu2 = us.ring_zero(), gradr2 = us.ring_zero();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            pair_term = pair_term + c.gi.at(a, b) * dr[static_cast<size_t>(a)] *
                                        du[static_cast<size_t>(b)];
            gradu2 = gradu2 + c.gi.at(a, b) * du[static_cast<size_t>(a)] *
                                  du[static_cast<size_t>(b)];
            gradr2 = gradr2 + c.gi.at(a, b) * dr[static_cast<size_t>(a)] *
                                  dr[static_cast<size_t>(b)];
        }
    Sx res = (pair_term + pair_term) / us + rs * gradu2 / (us * us) -
             (us.ring_one() - gradr2) / rs;
    ResidualReport rep;
    rep.name = "geodesic-gauge";
    Expr resE = sx_out(res);
    int poles = 0, values = 0;
    for (const auto& pt : bpts) {
        try {
            (void)evaluate(resE, pt);
            ++values;
        } catch (const EvalError&) {
            ++poles;
        }
    }
    if (values == 0 && poles > 0) {
        rep.hypothesis_met = false;
        rep.note = "not a collar solution: residual keeps a pole on the boundary";
        ZeroResult zr;
        zr.verdict = ZeroVerdict::ProbablyNonzero;
        zr.seed = opt.seed;
        zr.probes_run = poles;
        zr.witness = "pole on {rho = 0}";
        rep.items.push_back({"gauge", zr});
        return rep;
    }
    rep.items.push_back({"gauge", sx_is_zero(res, opt)});
    return rep;
}

// ---- radial geodesic factor ----

// Samples of the geodesic factor u along the collar of a radially symmetric
// model, from the boundary out to the requested depth.
struct GeodesicFactor {
    std::vector<double> t, rho, u, dudt;
    bool complete = true;
    double depth_reached = 0;
    std::string note;

    double u_at_t(double tq) const {
        if (t.size() < 2 || tq <= t.front()) return u.empty() ? 1.0 : u.front();
        if (tq >= t.back()) return u.back();
        size_t i = static_cast<size_t>(std::upper_bound(t.begin(), t.end(), tq) - t.begin()) - 1;
        double h = t[i + 1] - t[i], s = (tq - t[i]) / h;
        double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        return h00 * u[i] + h * h10 * dudt[i] + h01 * u[i + 1] + h * h11 * dudt[i + 1];
    }
};

struct RadialSolveOptions {
    double depth = 0.5;
    int nodes = 128;
    double rel_tol = 1e-10;
};

namespace detail {
struct CollarEnd : std::runtime_error {
    using std::runtime_error::runtime_error;
};
}  // namespace detail

// Reduces the gauge equation to the collar ODE (log u)' = v(t) with
//   v = (1 - w rho') / (rho w),  w = 1 / sqrt(g_00),
// the branch that stays bounded at the boundary, and integrates it with
// adaptive step control. Requires g_00 and rho to depend on the first
// coordinate only and the first coordinate to have no cross terms.
inline GeodesicFactor solve_geodesic_factor_radial(const CompactifiedMetric& cm,
                                                   const RadialSolveOptions& sopt = {}) {
    const auto& xs = cm.coords();
    int n = cm.dim();
    {
        SxContext ctx;
        Sx g00 = sx_of(cm.g.at(0, 0), ctx), rs = sx_of(cm.rho, ctx);
        for (size_t a = 1; a < xs.size(); ++a) {
            if (!g00.diff(xs[a]).exact_zero() || !rs.diff(xs[a]).exact_zero())
                throw std::invalid_argument(
                    "solve_geodesic_factor_radial: g_00 and rho must depend on the first "
                    "coordinate only");
        }
        for (int a = 1; a < n; ++a)
            if (!sx_of(cm.g.at(0, a), ctx).exact_zero())
                throw std::invalid_argument(
                    "solve_geodesic_factor_radial: first coordinate must have no cross terms");
    }
    Expr g00E = cm.g.at(0, 0), rhoE = cm.rho, drhoE = differentiate(cm.rho, xs[0]);
    auto v_at = [&](double tv) {
        std::map<std::string, double> pt{{xs[0], tv}};
        double g00v = evaluate(g00E, pt);
        if (!(g00v > 0)) throw detail::CollarEnd("metric degenerates");
        double w = 1.0 / std::sqrt(g00v);
        double rv = evaluate(rhoE, pt), dv = evaluate(drhoE, pt);
        if (!(rv > 0)) throw detail::CollarEnd("defining function stops being positive");
        if (!(w * dv > 0)) throw detail::CollarEnd("defining function stops increasing");
        double vv = (1.0 - w * dv) / (rv * w);
        if (!std::isfinite(vv) || std::fabs(vv) > 1e12)
            throw detail::CollarEnd("gauge slope blows up");
        return vv;
    };
    GeodesicFactor out;
    out.t.push_back(0);
    out.rho.push_back(0);
    out.u.push_back(1);
    double eps = std::min(1e-7, sopt.depth / (100.0 * sopt.nodes));
    double S = eps * v_at(eps / 2);  // midpoint start across the removable 0/0
    out.dudt.push_back(v_at(eps));
    namespace odt = boost::numeric::odeint;
    auto stepper = odt::make_controlled(sopt.rel_tol * 1e-2, sopt.rel_tol,
                                        odt::runge_kutta_dopri5<double>());
    auto rhs = [&](const double&, double& dSdt, double tv) { dSdt = v_at(tv); };
    double t_prev = eps;
    for (int k = 1; k <= sopt.nodes; ++k) {
        double t_next = sopt.depth * k / sopt.nodes;
        try {
            odt::integrate_adaptive(stepper, rhs, S, t_prev, t_next, (t_next - t_prev) / 8);
        } catch (const detail::CollarEnd& e) {
            out.complete = false;
            out.note = std::string("stopped before requested depth: ") + e.what();
            break;
        } catch (const EvalError& e) {
            out.complete = false;
            out.note = std::string("stopped before requested depth: ") + e.what();
            break;
        }
        t_prev = t_next;
        std::map<std::string, double> pt{{xs[0], t_next}};
        double uv = std::exp(S);
        out.t.push_back(t_next);
        out.rho.push_back(evaluate(rhoE, pt));
        out.u.push_back(uv);
        out.dudt.push_back(uv * v_at(t_next));
    }
    out.depth_reached = out.t.back();
    if (out.complete) out.note = "reached requested depth";
    return out;
}

// Inverts rho(t) by bisection on the exact expression, then interpolates u.
inline double geodesic_factor_at_rho(const GeodesicFactor& gf, const CompactifiedMetric& cm,
                                     double rq) {
    if (gf.rho.size() < 2 || rq <= 0) return 1.0;
    if (rq >= gf.rho.back())
        throw std::domain_error("geodesic_factor_at_rho: rho beyond sampled collar");
    const std::string& x0 = cm.coords()[0];
    double lo = 0, hi = gf.t.back();
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1 + hi); ++it) {
        double mid = (lo + hi) / 2;
        double rv = evaluate(cm.rho, {{x0, mid}});
        (rv < rq ? lo : hi) = mid;
    }
    return gf.u_at_t((lo + hi) / 2);
}

// ---- decay-rate diagnostics ----

struct RateItem {
    std::string label;
    double exponent = 0;  // +inf when every sample sits at the numeric floor
    bool at_floor = false;
    std::vector<double> rho, value;
};

struct AsymptoticsReport {
    std::vector<RateItem> rates;
    std::string note;

    const RateItem* find(const std::string& label) const {
        for (const auto& r : rates)
            if (r.label == label) return &r;
        return nullptr;
    }
    Report to_report() const {
        Report rep;
        for (const auto& r : rates) {
            std::string d = r.at_floor ? "at numeric floor"
                                       : "measured exponent " + std::to_string(r.exponent);
            rep.add("asymptotics." + r.label, true, d);
        }
        return rep;
    }
};

struct AsymptoticsOptions {
    int start_k = 3;  // first sample at first-coordinate 2^{-start_k}
    int samples = 6;
    std::vector<double> tangential;  // ray offsets for the other coordinates
    double floor_tol = 1e-12;
};

namespace detail {

inline double fit_rate(RateItem& item, double floor_tol) {
    std::vector<double> lr, lv;
    for (size_t i = 0; i < item.value.size(); ++i)
        if (item.value[i] > floor_tol) {
            lr.push_back(std::log(item.rho[i]));
            lv.push_back(std::log(item.value[i]));
        }
    if (lv.size() + 2 < item.value.size() || lv.size() < 3) {
        item.at_floor = true;
        item.exponent = std::numeric_limits<double>::infinity();
        return item.exponent;
    }
    std::vector<double> p;
    for (size_t i = 0; i + 1 < lv.size(); ++i)
        p.push_back((lv[i] - lv[i + 1]) / (lr[i] - lr[i + 1]));
    // one extrapolation level: the slope error scales like the step itself
    item.exponent = p.size() >= 2 ? 2 * p.back() - p[p.size() - 2] : p.back();
    return item.exponent;
}

}  // namespace detail

// Measures, along the boundary-normal ray, the decay of
//   (a) the sectional curvatures of rho^{-2} g against the constant -1,
//   (b) the Hessian form of Ric(g) built from rho (tensor residual),
//   (c) its trace form for the scalar curvature,
//   (d) the Einstein defect |Ric_+ + (N-1) g_+| in the interior norm,
// each reported as a Richardson-extrapolated exponent in rho.
inline AsymptoticsReport ah_curvature_asymptotics(const CompactifiedMetric& cm,
                                                  const AsymptoticsOptions& aopt = {}) {
    int N = cm.dim();
    int n = N - 1;
    const auto& xs = cm.coords();
    Curvature cg = compute_curvature(cm.g);
    Curvature cp = compute_curvature(cm.interior());
    Sx rs = sx_of(cm.rho, *cg.ctx);
    std::vector<Sx> dr;
    for (const auto& x : xs) dr.push_back(rs.diff(x));
    Sx gradr2 = rs.ring_zero();
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            gradr2 = gradr2 + cg.gi.at(a, b) * dr[static_cast<size_t>(a)] *
                                  dr[static_cast<size_t>(b)];
    Sx lap = laplace(rs, cg.gi, cg.Gamma, xs);
    Sx one = rs.ring_one();
    Sx scal_shape = (lap + lap) * rs.ring_from(Rational(n)) / rs -
                    rs.ring_from(Rational(n * (n + 1))) * (gradr2 - one) / (rs * rs);
    Expr scal_res = sx_out(cg.scal + scal_shape);
    std::vector<Expr> ric_res;
    for (int a = 0; a < N; ++a)
        for (int b = a; b < N; ++b) {
            Sx hess = dr[static_cast<size_t>(a)].diff(xs[static_cast<size_t>(b)]);
            for (int k = 0; k < N; ++k)
                hess = hess - cg.Gamma.at(k, a, b) * dr[static_cast<size_t>(k)];
            Sx shape = rs.ring_from(Rational(n - 1)) * hess / rs -
                       (rs.ring_from(Rational(n)) * (gradr2 - one) / (rs * rs) - lap / rs) *
                           cg.g.at(a, b);
            ric_res.push_back(sx_out(cg.ric.at(a, b) + shape));
        }
    std::vector<Expr> sec;  // K_+(a, b) + 1 on coordinate planes
    for (int a = 0; a < N; ++a)
        for (int b = a + 1; b < N; ++b) {
            Sx gram = cp.g.at(a, a) * cp.g.at(b, b) - cp.g.at(a, b) * cp.g.at(a, b);
            sec.push_back(sx_out(cp.Rlow.at(a, b, a, b) / gram + one));
        }
    std::vector<Expr> epl, gip;  // lowered Einstein defect and interior inverse
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            epl.push_back(sx_out(cp.ric.at(a, b) + rs.ring_from(Rational(n)) * cp.g.at(a, b)));
            gip.push_back(sx_out(cp.gi.at(a, b)));
        }

    AsymptoticsReport rep;
    rep.rates = {RateItem{"sectional", 0, false, {}, {}},
                 RateItem{"ricci-relation", 0, false, {}, {}},
                 RateItem{"scalar-relation", 0, false, {}, {}},
                 RateItem{"einstein-decay", 0, false, {}, {}}};
    for (int k = aopt.start_k; k < aopt.start_k + aopt.samples; ++k) {
        std::map<std::string, double> pt;
        pt[xs[0]] = std::pow(2.0, -k);
        for (size_t a = 1; a < xs.size(); ++a)
            pt[xs[a]] = a - 1 < aopt.tangential.size() ? aopt.tangential[a - 1] : 0.125;
        try {
            double rv = evaluate(cm.rho, pt);
            if (!(rv > 0))
                throw std::domain_error("ah_curvature_asymptotics: ray leaves {rho > 0}");
            double vs = 0;
            for (const auto& e : sec) vs = std::max(vs, std::fabs(evaluate(e, pt)));
            double vr = 0;
            for (const auto& e : ric_res) vr = std::max(vr, std::fabs(evaluate(e, pt)));
            double vscal = std::fabs(evaluate(scal_res, pt));
            std::vector<double> ev(static_cast<size_t>(N) * N), gv(ev.size());
            for (size_t i = 0; i < ev.size(); ++i) {
                ev[i] = evaluate(epl[i], pt);
                gv[i] = evaluate(gip[i], pt);
            }
            double norm2 = 0;
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b)
                    for (int c = 0; c < N; ++c)
                        for (int d = 0; d < N; ++d)
                            norm2 += gv[static_cast<size_t>(a * N + c)] *
                                     gv[static_cast<size_t>(b * N + d)] *
                                     ev[static_cast<size_t>(a * N + b)] *
                                     ev[static_cast<size_t>(c * N + d)];
            double vals[4] = {vs, vr, vscal, std::sqrt(std::max(0.0, norm2))};
            for (int i = 0; i < 4; ++i) {
                rep.rates[static_cast<size_t>(i)].rho.push_back(rv);
                rep.rates[static_cast<size_t>(i)].value.push_back(vals[i]);
            }
        } catch (const EvalError& e) {
            throw std::domain_error(std::string("ah_curvature_asymptotics: ray exits chart: ") +
                                    e.what());
        }
    }
    for (auto& r : rep.rates) detail::fit_rate(r, aopt.floor_tol);
    rep.note = "exponents from Richardson-extrapolated log ratios along the ray";
    return rep;
}

// ---- pointwise Hessian identity ----

// Residual at one point, for one direction pair (a, b), of
//   Delta rho - N g_ab^{-1} D^2 rho(e_a, e_b)
//     - N/(N-2) g_ab^{-1} rho (Ric_ab - S g_ab / N);
// identically zero when rho^{-2} g is Einstein, so it isolates the elliptic
// operator acting on rho.
inline double einstein_hessian_residual(const CompactifiedMetric& cm,
                                        const std::map<std::string, double>& at, int a, int b) {
    int N = cm.dim();
    if (N < 3) throw std::invalid_argument("einstein_hessian_residual: dimension at least 3");
    if (a < 0 || b < 0 || a >= N || b >= N)
        throw std::invalid_argument("einstein_hessian_residual: direction out of range");
    const auto& xs = cm.coords();
    Curvature c = compute_curvature(cm.g);
    Sx rs = sx_of(cm.rho, *c.ctx);
    Sx lap = laplace(rs, c.gi, c.Gamma, xs);
    Sx hess = rs.diff(xs[static_cast<size_t>(a)]).diff(xs[static_cast<size_t>(b)]);
    for (int k = 0; k < N; ++k)
        hess = hess - c.Gamma.at(k, a, b) * rs.diff(xs[static_cast<size_t>(k)]);
    double gab = evaluate(sx_out(c.g.at(a, b)), at);
    if (std::fabs(gab) < 1e-12)
        throw std::domain_error("einstein_hessian_residual: g_ab vanishes at the point");
    double lapv = evaluate(sx_out(lap), at), hessv = evaluate(sx_out(hess), at);
    double rv = evaluate(cm.rho, at);
    double ricv = evaluate(sx_out(c.ric.at(a, b)), at), sv = evaluate(sx_out(c.scal), at);
    return lapv - N * hessv / gab -
           double(N) / double(N - 2) * rv * (ricv - sv * gab / N) / gab;
}

// ---- conformal Ricci relation ----

// For g = u^{-2} gbar in dimension m, componentwise residual of
//   Ric(g) = Ric(gbar) + (m-2) D^2 u / u + (Delta u / u - (m-1) |du|^2 / u^2) gbar
// with every right-hand operator taken in gbar. The gradient-square
// coefficient is -(m-1): the +(m-1) variant already fails on hyperbolic
// space (gbar flat, u the height coordinate).
inline ResidualReport conformal_ricci_relation_residual(const MetricField& gbar, const Expr& u,
                                                        const ZeroOptions& opt = {}) {
    int m = gbar.chart.dim();
    const auto& xs = gbar.chart.coords;
    MetricField g = gbar;
    Expr u2 = u * u;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) g.set(i, j, gbar.at(i, j) / u2);
    Curvature cg = compute_curvature(g);
    Curvature cb = compute_curvature(gbar);
    Sx us = sx_of(u, *cb.ctx);
    std::vector<Sx> du;
    for (const auto& x : xs) du.push_back(us.diff(x));
    Sx grad2 = us.ring_zero();
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            grad2 = grad2 + cb.gi.at(a, b) * du[static_cast<size_t>(a)] *
                                du[static_cast<size_t>(b)];
    Sx lap = laplace(us, cb.gi, cb.Gamma, xs);
    Sx trace_part = lap / us - us.ring_from(Rational(m - 1)) * grad2 / (us * us);
    ResidualReport rep;
    rep.name = "conformal-ricci-relation";
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            Sx hess = du[static_cast<size_t>(a)].diff(xs[static_cast<size_t>(b)]);
            for (int k = 0; k < m; ++k)
                hess = hess - cb.Gamma.at(k, a, b) * du[static_cast<size_t>(k)];
            Sx rhs = cb.ric.at(a, b) + us.ring_from(Rational(m - 2)) * hess / us +
                     trace_part * cb.g.at(a, b);
            Sx lhs = sx_of(sx_out(cg.ric.at(a, b)), *cb.ctx);
            rep.items.push_back({"a" + std::to_string(a) + ".b" + std::to_string(b),
                                 sx_is_zero(lhs - rhs, opt)});
        }
    return rep;
}

}  // namespace fglab

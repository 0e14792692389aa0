#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fglab/conformal.hpp"
#include "fglab/parse.hpp"

using namespace fglab;

namespace {

Expr E(const std::string& s) { return parse_expr(s); }

bool certainly_zero(const Expr& e) {
    return is_zero(e).verdict == ZeroVerdict::CertainlyZero;
}

MetricField diag_metric(std::vector<std::string> coords, std::vector<std::string> diag) {
    std::vector<Expr> d;
    for (const auto& s : diag) d.push_back(E(s));
    return MetricField::diagonal(Chart{std::move(coords)}, std::move(d));
}

// unit-curvature sphere factors in the rational polar chart
const std::string kQ1 = "4*u1^2/(1+u1^2)^2";
const std::string kQ2 = "4*u2^2/(1+u2^2)^2";

MetricField round_s3() {
    return diag_metric({"u1", "u2", "u3"},
                       {"4/(1+u1^2)^2", kQ1 + "*4/(1+u2^2)^2", kQ1 + "*" + kQ2 + "*4/(1+u3^2)^2"});
}

CompactifiedMetric ball_collar() {
    auto g = diag_metric({"s", "u1", "u2", "u3"},
                         {"1", "(1-s)^2*4/(1+u1^2)^2", "(1-s)^2*" + kQ1 + "*4/(1+u2^2)^2",
                          "(1-s)^2*" + kQ1 + "*" + kQ2 + "*4/(1+u3^2)^2"});
    return CompactifiedMetric{g, E("s - s^2/2")};
}

// Same ball collar in angle coordinates.  Trig atoms keep the curvature
// expressions small, so this is the cheap fixture for numeric sampling;
// exact-zero checks stay on the rational chart above.
CompactifiedMetric ball_collar_polar() {
    auto g = diag_metric({"s", "a", "b", "c"},
                         {"1", "(1-s)^2", "(1-s)^2*sin(a)^2", "(1-s)^2*sin(a)^2*sin(b)^2"});
    return CompactifiedMetric{g, E("s - s^2/2")};
}

CompactifiedMetric half_space4() {
    return CompactifiedMetric{diag_metric({"t", "x", "y", "z"}, {"1", "1", "1", "1"}), E("t")};
}

CompactifiedMetric perturbed_warped() {
    return CompactifiedMetric{diag_metric({"t", "x", "y", "z"}, {"1", "1 + t^3", "1", "1"}),
                              E("t")};
}

}  // namespace

TEST_CASE("rescaling composes exactly and carries curvature weight") {
    auto g = diag_metric({"x", "y", "z"}, {"1 + y^2", "1 + x^2 + z^2", "2"});
    g.set(0, 1, E("x*y/4"));
    Expr u = E("1 + x^2/4");

    auto back = conformal_rescale(conformal_rescale(g, u), E("1") / u);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= i; ++j) CHECK(certainly_zero(back.at(i, j) - g.at(i, j)));

    CHECK_THROWS_AS(conformal_rescale(g, E("x - x")), std::invalid_argument);

    // constant factor c: scalar curvature scales by c^{-2}
    Expr s_orig = scalar_curvature(g);
    Expr s_scaled = scalar_curvature(conformal_rescale(g, E("3")));
    CHECK(certainly_zero(E("9") * s_scaled - s_orig));

    // lowered Weyl tensor scales like the metric
    auto g4 = diag_metric({"x1", "x2", "x3", "x4"}, {"1", "1 + x1^2", "1 + x2^2/2", "1"});
    Expr u4 = E("1 + x3^2/3");
    auto w = weyl(g4);
    auto wr = weyl(conformal_rescale(g4, u4));
    std::set<std::vector<int>> keys;
    for (const auto& [k, e] : w.comp) keys.insert(k);
    for (const auto& [k, e] : wr.comp) keys.insert(k);
    REQUIRE(!keys.empty());
    for (const auto& k : keys) CHECK(certainly_zero(wr.at(k) - u4 * u4 * w.at(k)));
}

TEST_CASE("constant-scalar residual pins the equation coefficients") {
    auto s3 = round_s3();

    auto r1 = yamabe_residual(s3, E("1"), Rational(6));
    CHECK(r1.all_certainly_zero());
    CHECK(r1.note.find("exponent 5") != std::string::npos);

    // u constant = 2 rebalances the zero to lambda = S / u^4 = 6/16
    auto r2 = yamabe_residual(s3, E("2"), Rational(3, 8));
    CHECK(r2.all_certainly_zero());

    // wrong lambda must show up
    auto r3 = yamabe_residual(s3, E("1"), Rational(0));
    CHECK_FALSE(r3.all_zeroish());

    // stereographic factor flattens the round four-sphere: lambda = 0
    std::string cf = "4/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2";
    auto s4 = diag_metric({"x1", "x2", "x3", "x4"}, {cf, cf, cf, cf});
    auto r4 = yamabe_residual(s4, E("(1 + x1^2 + x2^2 + x3^2 + x4^2)/2"), Rational(0));
    CHECK(r4.all_certainly_zero());

    // dimension 5 has a fractional exponent: numeric probes only
    auto s3xf = diag_metric({"u1", "u2", "u3", "p", "q"},
                            {"4/(1+u1^2)^2", kQ1 + "*4/(1+u2^2)^2",
                             kQ1 + "*" + kQ2 + "*4/(1+u3^2)^2", "1", "1"});
    auto r5 = yamabe_residual(s3xf, E("1"), Rational(6));
    CHECK(r5.note.find("numeric probes") != std::string::npos);
    REQUIRE(r5.items.size() == 1);
    CHECK(r5.items[0].zero.verdict == ZeroVerdict::NumericallyZero);

    CHECK_THROWS_AS(yamabe_residual(s3, E("u1"), Rational(6)), std::domain_error);
    auto g2 = diag_metric({"x", "y"}, {"1", "1"});
    CHECK_THROWS_AS(yamabe_residual(g2, E("1"), Rational(0)), std::invalid_argument);
}

TEST_CASE("geodesic gauge residual detects collar solutions and poles") {
    // |grad rho| = 1 already: u = 1 solves the gauge equation
    auto collar = CompactifiedMetric{diag_metric({"t", "x", "y"}, {"1", "1 + t^2", "1"}), E("t")};
    auto r1 = geodesic_gauge_residual(collar, E("1"));
    CHECK(r1.hypothesis_met);
    CHECK(r1.all_certainly_zero());

    // the ball collar with its closed-form geodesic factor
    auto ball = ball_collar();
    auto r2 = geodesic_gauge_residual(ball, E("4/(2 - s)^2"));
    CHECK(r2.hypothesis_met);
    CHECK(r2.all_certainly_zero());

    // wrong factor, still regular: nonzero residual, no pole
    auto r3 = geodesic_gauge_residual(ball, E("1"));
    CHECK(r3.hypothesis_met);
    CHECK_FALSE(r3.all_zeroish());

    // |grad rho| != 1 on the boundary and u = 1: the 1/rho pole survives
    auto flat3 = CompactifiedMetric{diag_metric({"t", "x", "y"}, {"1", "1", "1"}),
                                    E("t*(1 + x^2)")};
    auto r4 = geodesic_gauge_residual(flat3, E("1"));
    CHECK_FALSE(r4.hypothesis_met);
    CHECK(r4.note.find("not a collar solution") != std::string::npos);

    CHECK_THROWS_AS(geodesic_gauge_residual(ball, E("2 - s")), std::invalid_argument);
    CHECK_THROWS_AS(geodesic_gauge_residual(ball, E("1 - 8*s")), std::invalid_argument);
}

TEST_CASE("radial geodesic factor solver matches closed forms") {
    auto collar = CompactifiedMetric{diag_metric({"t", "x", "y"}, {"1", "1 + t^2", "1"}), E("t")};
    auto gf1 = solve_geodesic_factor_radial(collar);
    REQUIRE(gf1.complete);
    for (double uv : gf1.u) CHECK(std::fabs(uv - 1.0) <= 1e-12);

    auto ball = ball_collar();
    RadialSolveOptions sopt;
    sopt.depth = 0.8;
    auto gf2 = solve_geodesic_factor_radial(ball, sopt);
    REQUIRE(gf2.complete);
    for (size_t i = 0; i < gf2.t.size(); ++i) {
        double s = gf2.t[i];
        double oracle = 4.0 / ((2 - s) * (2 - s));
        CHECK(std::fabs(gf2.u[i] - oracle) <= 1e-8);
    }
    // interpolant queried between nodes, through the exact rho inversion
    double s_star = 1.0 - std::sqrt(1.0 - 0.6);
    double u_star = geodesic_factor_at_rho(gf2, ball, 0.3);
    CHECK(std::fabs(u_star - 4.0 / ((2 - s_star) * (2 - s_star))) <= 1e-8);

    // past s = 1 the defining function stops increasing: maximal depth report
    RadialSolveOptions deep;
    deep.depth = 1.2;
    auto gf3 = solve_geodesic_factor_radial(ball, deep);
    CHECK_FALSE(gf3.complete);
    CHECK(gf3.depth_reached <= 1.01);
    CHECK(gf3.note.find("stopped before requested depth") != std::string::npos);

    auto bad = ball;
    bad.rho = E("s*(1 + u1^2)");
    CHECK_THROWS_AS(solve_geodesic_factor_radial(bad), std::invalid_argument);
    auto crossed = ball;
    crossed.g.set(0, 1, E("s"));
    CHECK_THROWS_AS(solve_geodesic_factor_radial(crossed), std::invalid_argument);
}

TEST_CASE("asymptotic decay rates separate Einstein models from perturbed ones") {
    auto hs = half_space4();
    auto rep1 = ah_curvature_asymptotics(hs);
    for (const auto& label : {"sectional", "ricci-relation", "scalar-relation", "einstein-decay"}) {
        const auto* r = rep1.find(label);
        REQUIRE(r != nullptr);
        CHECK(r->at_floor);
    }

    auto ball = ball_collar_polar();
    auto rep2 = ah_curvature_asymptotics(ball);
    for (const auto& label : {"sectional", "ricci-relation", "scalar-relation", "einstein-decay"}) {
        const auto* r = rep2.find(label);
        REQUIRE(r != nullptr);
        CHECK(r->at_floor);
    }

    auto pw = perturbed_warped();
    auto rep3 = ah_curvature_asymptotics(pw);
    const auto* ed = rep3.find("einstein-decay");
    REQUIRE(ed != nullptr);
    CHECK_FALSE(ed->at_floor);
    CHECK(std::fabs(ed->exponent - 3.0) <= 0.1);
    const auto* rr = rep3.find("ricci-relation");
    REQUIRE(rr != nullptr);
    CHECK_FALSE(rr->at_floor);
    CHECK(rr->exponent >= 0.5);
    const auto* sc = rep3.find("sectional");
    REQUIRE(sc != nullptr);
    CHECK((sc->at_floor || sc->exponent >= 1.9));

    // exponent estimates stable under halving the initial sample
    AsymptoticsOptions shifted;
    shifted.start_k = 4;
    auto rep4 = ah_curvature_asymptotics(pw, shifted);
    CHECK(std::fabs(rep4.find("einstein-decay")->exponent - ed->exponent) <= 0.1);

    // a ray through the chart's degenerate edge is reported, not mangled
    AsymptoticsOptions edge;
    edge.start_k = 0;
    CHECK_THROWS_AS(ah_curvature_asymptotics(ball, edge), std::domain_error);
}

TEST_CASE("pointwise Hessian identity vanishes on Einstein models") {
    // flat compactification of the half-space, mixed so g_01 != 0
    auto mixed = diag_metric({"y0", "y1", "y2", "y3"}, {"1", "5/4", "1", "1"});
    mixed.set(0, 1, E("1/2"));
    auto cm = CompactifiedMetric{mixed, E("y0 + y1/2")};
    std::map<std::string, double> pt{{"y0", 0.25}, {"y1", 0.125}, {"y2", 0.3}, {"y3", -0.2}};
    CHECK(std::fabs(einstein_hessian_residual(cm, pt, 0, 1)) <= 1e-8);
    CHECK_THROWS_AS(einstein_hessian_residual(cm, pt, 0, 2), std::domain_error);

    // same mix of the perturbed warped model: residual decays quadratically
    auto pg = diag_metric({"a", "b", "y", "z"}, {"1", "5/4 + (a + b/2)^3", "1", "1"});
    pg.set(0, 1, E("1/2"));
    auto pcm = CompactifiedMetric{pg, E("a + b/2")};
    std::vector<double> res;
    for (int k = 2; k <= 5; ++k) {
        std::map<std::string, double> q{{"a", std::pow(2.0, -k)}, {"b", 0.0}, {"y", 0.0},
                                        {"z", 0.0}};
        res.push_back(std::fabs(einstein_hessian_residual(pcm, q, 0, 1)));
    }
    for (size_t i = 0; i + 1 < res.size(); ++i) {
        REQUIRE(res[i] > 1e-12);
        CHECK(std::log2(res[i] / res[i + 1]) >= 1.9);
    }
}

TEST_CASE("conformal Ricci relation holds componentwise") {
    // hyperbolic pin: flat background, u the height coordinate
    auto flat4 = diag_metric({"x1", "x2", "x3", "x4"}, {"1", "1", "1", "1"});
    auto r0 = conformal_ricci_relation_residual(flat4, E("x1"));
    CHECK(r0.all_certainly_zero());

    auto g3 = diag_metric({"x1", "x2", "x3"}, {"1 + x2^2/3", "2", "1 + x1^2/2"});
    g3.set(0, 1, E("x3/5"));
    auto r1 = conformal_ricci_relation_residual(g3, E("1 + x1/4 + x2^2/6"));
    CHECK(r1.all_certainly_zero());

    auto g4 = diag_metric({"x1", "x2", "x3", "x4"}, {"1", "1 + x1^2/4", "1", "1 + x3^2/5"});
    g4.set(1, 2, E("x4/7"));
    auto r2 = conformal_ricci_relation_residual(g4, E("1 + x2/3"));
    CHECK(r2.all_certainly_zero());
}

TEST_CASE("compactified package validates its defining function") {
    auto ball = ball_collar();
    CHECK_NOTHROW(ball.check());
    CHECK(certainly_zero(ball.interior().at(0, 0) - E("4/(s*(2 - s))^2")));

    auto flat = ball;
    flat.rho = E("s^2");  // vanishing differential on the boundary
    CHECK_THROWS_AS(flat.check(), std::invalid_argument);
    flat.rho = E("s - 1");  // negative inside, nonzero on the boundary
    CHECK_THROWS_AS(flat.check(), std::invalid_argument);
}

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "fglab/fgx.hpp"
#include "fglab/parse.hpp"

using namespace fglab;

namespace {

Expr E(const std::string& s) { return parse_expr(s); }

bool certainly_zero(const Expr& e) {
    return is_zero(e).verdict == ZeroVerdict::CertainlyZero;
}
bool probably_nonzero(const Expr& e) {
    return is_zero(e).verdict == ZeroVerdict::ProbablyNonzero;
}

MetricField diag_metric(std::vector<std::string> coords, std::vector<std::string> entries) {
    Chart c{std::move(coords)};
    std::vector<Expr> d;
    d.reserve(entries.size());
    for (const auto& s : entries) d.push_back(E(s));
    return MetricField::diagonal(c, d);
}

// The series is a polynomial in r; render it so it can be compared against a
// closed-form expression on the same chart.
std::string poly_in_r(const LogSeries& s) {
    std::string out = "0";
    for (const auto& [key, c] : s.terms()) {
        REQUIRE(key.second == 0);
        out += " + (" + to_string(sx_out(c)) + ")*r^" + std::to_string(key.first);
    }
    return out;
}

bool tensor_zero(const TensorField& t, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            if (!certainly_zero(t.at({i, j}))) return false;
    return true;
}

}  // namespace

TEST_CASE("coefficient map rank profile over random metrics") {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> pick(-3, 3);
    for (int n : {3, 4}) {
        const int N = n * (n + 1) / 2;
        for (int sample = 0; sample < 5; ++sample) {
            // random symmetric positive definite rational matrix
            std::vector<std::vector<Rational>> A(static_cast<size_t>(n),
                                                 std::vector<Rational>(static_cast<size_t>(n)));
            for (auto& row : A)
                for (auto& v : row) v = pick(rng);
            std::vector<std::vector<Rational>> h(static_cast<size_t>(n),
                                                 std::vector<Rational>(static_cast<size_t>(n), Rational(0)));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    for (int k = 0; k < n; ++k)
                        h[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
                            A[static_cast<size_t>(k)][static_cast<size_t>(i)] *
                            A[static_cast<size_t>(k)][static_cast<size_t>(j)];
                    if (i == j) h[static_cast<size_t>(i)][static_cast<size_t>(j)] += n;
                }
            for (int p = 2; p <= 2 * n + 1; ++p) {
                int expect = p == n ? 1 : (p == 2 * n ? N - 1 : N);
                CAPTURE(n, sample, p);
                CHECK(coefficient_map_rank(h, p) == expect);
            }
        }
    }
}

TEST_CASE("jet curvature matches the curvature of an explicit product metric") {
    // A shear family with determinant one: every bulk curvature component is
    // a polynomial in r, so a high-order jet captures it exactly and the two
    // computation routes must agree verbatim.
    const int K = 20;
    RadialJet jet;
    jet.boundary = Chart{{"x", "y"}};
    jet.n = 2;
    jet.order = K;
    jet.ctx = std::make_shared<SxContext>();
    jet.family = series_matrix(2, K, &jet.ctx->table);
    auto put = [&](int i, int j, const std::string& e, int k) {
        auto c = sx_of(E(e), *jet.ctx);
        jet.family.at(i, j) = jet.family.at(i, j) + LogSeries::monomial(c, k, 0, K);
        if (i != j) jet.family.at(j, i) = jet.family.at(i, j);
    };
    put(0, 0, "1", 0);
    put(0, 1, "x", 1);
    put(0, 1, "y", 2);
    put(1, 1, "1", 0);
    put(1, 1, "x^2", 2);
    put(1, 1, "2*x*y", 3);
    put(1, 1, "y^2", 4);

    MetricField bulk = MetricField::zero(Chart{{"r", "x", "y"}});
    bulk.set(0, 0, E("1"));
    bulk.set(1, 1, E("1"));
    bulk.set(1, 2, E("r*x + r^2*y"));
    bulk.set(2, 2, E("1 + (r*x + r^2*y)^2"));

    auto jc = curvature_of_jet(jet);
    auto ric = ricci(bulk);
    auto riem = riemann(bulk);

    CHECK_FALSE(jc.normal.has_log());
    CHECK(certainly_zero(ric.at({0, 0}) - E(poly_in_r(jc.normal))));
    CHECK(certainly_zero(scalar_curvature(bulk) - E(poly_in_r(jc.scalar))));
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(ric.at({i + 1, j + 1}) - E(poly_in_r(jc.tangential.at(i, j)))));
            CHECK(certainly_zero(riem.at({i + 1, 0, j + 1, 0}) - E(poly_in_r(jc.mixed_radial.at(i, j)))));
        }
}

TEST_CASE("flat boundary data expands to the unperturbed family") {
    for (int n : {3, 4}) {
        CAPTURE(n);
        std::vector<std::string> coords, ones;
        for (int i = 1; i <= n; ++i) {
            coords.push_back("x" + std::to_string(i));
            ones.push_back("1");
        }
        auto [jet, rep] = fg_expand(diag_metric(coords, ones), n);
        CHECK(jet.order == n + 4);
        CHECK_FALSE(jet.has_log());
        for (int k = 1; k <= jet.order; ++k) CHECK(tensor_zero(jet.coefficient(k, 0), n));
        CHECK(certainly_zero(rep.trace_constraint));
        if (n % 2 == 0) {
            REQUIRE(rep.log_coefficient.has_value());
            CHECK_FALSE(rep.log_present());
        } else {
            CHECK_FALSE(rep.log_coefficient.has_value());
        }
        bool noted = false;
        for (const auto& s : rep.notes) noted = noted || s.find("free data") != std::string::npos;
        CHECK(noted);
        CHECK(evolution_residual_report(jet).all_certainly_zero());
        if (n == 4) {
            auto eq = weyl_obstruction_equivalence(jet);
            CHECK(eq.match.all_certainly_zero());
            CHECK(eq.weyl_zero.verdict == ZeroVerdict::CertainlyZero);
            CHECK(eq.obstruction_zero.verdict == ZeroVerdict::CertainlyZero);
            CHECK(eq.equivalent);
        }
    }
}

TEST_CASE("round sphere boundary reproduces the closed-form family") {
    // g_r = (1 - r^2/4)^2 h solves the evolution equation for the unit round
    // sphere in every dimension: coefficients -h/2 at r^2, h/16 at r^4, and
    // nothing else through order 6.
    auto check_round = [](const MetricField& h, int n) {
        auto [jet, rep] = fg_expand(h, n, 6);
        CHECK_FALSE(jet.has_log());
        for (int k : {1, 3, 5, 6}) CHECK(tensor_zero(jet.coefficient(k, 0), n));
        auto t2 = jet.coefficient(2, 0);
        auto t4 = jet.coefficient(4, 0);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                CAPTURE(n, i, j);
                CHECK(certainly_zero(t2.at({i, j}) + E("1/2") * h.at(i, j)));
                CHECK(certainly_zero(t4.at({i, j}) - E("1/16") * h.at(i, j)));
            }
        return rep;
    };

    // rational polar charts (tan of half the angle per coordinate) keep every
    // cancellation canonical; the trig identities never enter
    std::string q1 = "4*u1^2/(1+u1^2)^2", q2 = "4*u2^2/(1+u2^2)^2", q3 = "4*u3^2/(1+u3^2)^2";
    auto s3 = diag_metric({"u1", "u2", "u3"},
                          {"4/(1+u1^2)^2", q1 + "*4/(1+u2^2)^2", q1 + "*" + q2 + "*4/(1+u3^2)^2"});
    CHECK(certainly_zero(scalar_curvature(s3) - E("6")));
    auto r3 = check_round(s3, 3);
    CHECK(certainly_zero(r3.trace_constraint));
    CHECK_FALSE(r3.log_coefficient.has_value());

    auto s4 = diag_metric({"u1", "u2", "u3", "u4"},
                          {"4/(1+u1^2)^2", q1 + "*4/(1+u2^2)^2", q1 + "*" + q2 + "*4/(1+u3^2)^2",
                           q1 + "*" + q2 + "*" + q3 + "*4/(1+u4^2)^2"});
    CHECK(certainly_zero(scalar_curvature(s4) - E("12")));
    auto r4 = check_round(s4, 4);
    REQUIRE(r4.log_coefficient.has_value());
    CHECK_FALSE(r4.log_present());
    // 4! times the trace of h/16 is exactly 6
    CHECK(certainly_zero(r4.trace_constraint - E("6")));

    // the classical trig chart carries the same geometry, but its
    // cancellations rest on sin^2+cos^2 = 1, which the exact layer does not
    // know; the seeded probe test still certifies the coefficients
    auto s3p = diag_metric({"a", "b", "c"}, {"1", "sin(a)^2", "sin(a)^2*sin(b)^2"});
    auto [jp, rp] = fg_expand(s3p, 3, 4);
    auto p2 = jp.coefficient(2, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            CAPTURE(i, j);
            CHECK(is_zero(p2.at({i, j}) + E("1/2") * s3p.at(i, j)).verdict != ZeroVerdict::ProbablyNonzero);
        }
}

TEST_CASE("odd boundary dimension forces the trace and frees the rest") {
    auto h = diag_metric({"x", "y", "z"}, {"1 + y^2", "1 + x^2", "1"});
    auto [jet, rep] = fg_expand(h, 3, 5);

    // order-2 coefficient agrees with the curvature of the boundary metric:
    // g2 = -(Ric - S h / (2(n-1))) / (n-2), here -(Ric - S h / 4)
    auto ric = ricci(h);
    auto S = scalar_curvature(h);
    auto t2 = jet.coefficient(2, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(t2.at({i, j}) + ric.at({i, j}) - E("1/4") * S * h.at(i, j)));
        }

    CHECK(tensor_zero(jet.coefficient(3, 0), 3));
    CHECK(certainly_zero(rep.trace_constraint));
    CHECK(certainly_zero(odd_case_trace_constraint(jet)));
    CHECK(evolution_residual_report(jet).all_certainly_zero());

    // the trace-free slot takes caller data verbatim
    TensorField sigma;
    sigma.chart = h.chart;
    sigma.lower = 2;
    sigma.sym = Sym::LastPair;
    sigma.set({0, 1}, E("1"));
    auto [jets, reps] = fg_expand(h, 3, 5, sigma);
    auto t3 = jets.coefficient(3, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(t3.at({i, j}) - sigma.at({i, j})));
        }
    CHECK(certainly_zero(odd_case_trace_constraint(jets)));

    // a pure-trace insertion at the critical order breaks both the residual
    // and the trace constraint, and the report must see it
    auto bad = with_injected_term(jet, 3, 0, h);
    CHECK(certainly_zero(odd_case_trace_constraint(bad) - E("18")));
    auto res = evolution_residual_report(bad);
    CHECK_FALSE(res.all_certainly_zero());
    CHECK_FALSE(res.all_zeroish());
}

TEST_CASE("curvature log coefficients track an injected obstruction") {
    // The identities relating the r^{n-2} log r curvature coefficients to the
    // first log term hold for any family whose first log sits at order n,
    // regardless of how the smooth part was produced.  Inject a position
    // dependent trace-free tensor into the flat expansion and check them.
    std::vector<std::string> coords = {"x1", "x2", "x3", "x4"};
    auto h = diag_metric(coords, {"1", "1", "1", "1"});
    auto [jet, rep] = fg_expand(h, 4, 6);

    MetricField tau = MetricField::zero(Chart{coords});
    tau.set(0, 0, E("x1"));
    tau.set(1, 1, E("-x1"));
    tau.set(0, 1, E("x3^2"));
    auto inj = with_injected_term(jet, 4, 1, tau);
    CHECK(inj.has_log());

    auto lc = log_coefficients(inj);
    CHECK(lc.relations.all_certainly_zero());
    // with tr tau = 0 the normal and scalar coefficients vanish outright
    CHECK(certainly_zero(lc.normal));
    CHECK(certainly_zero(lc.scalar));
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(lc.mixed_radial.at({i, j}) + E("6") * tau.at(i, j)));
        }

    auto eq = weyl_obstruction_equivalence(inj);
    CHECK(eq.match.all_certainly_zero());
    CHECK(eq.weyl_zero.verdict == ZeroVerdict::ProbablyNonzero);
    CHECK(eq.obstruction_zero.verdict == ZeroVerdict::ProbablyNonzero);
    CHECK(eq.equivalent);
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(eq.predicted.at({i, j}) + E("4") * tau.at(i, j)));
        }
}

TEST_CASE("curved boundary in dimension four produces a trace-free obstruction") {
    std::vector<std::string> coords = {"x1", "x2", "x3", "x4"};
    auto h = diag_metric(coords, {"1 + x2^2", "1 + x1^2", "1", "1"});

    // the boundary metric is not conformally flat
    auto W = weyl(h);
    bool curved = false;
    for (int i = 0; i < 4 && !curved; ++i)
        for (int j = 0; j < 4 && !curved; ++j)
            for (int k = 0; k < 4 && !curved; ++k)
                for (int l = 0; l < 4 && !curved; ++l)
                    curved = probably_nonzero(W.at({i, j, k, l}));
    REQUIRE(curved);

    auto [jet, rep] = fg_expand(h, 4, 6);
    REQUIRE(rep.log_coefficient.has_value());
    CHECK(rep.log_present());
    const auto& f = *rep.log_coefficient;

    // trace-free with respect to h
    auto hi = inverse_metric(h);
    Expr tr = Expr::num(0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) tr = tr + hi.at({i, j}) * f.at({i, j});
    CHECK(certainly_zero(tr));

    // order-2 coefficient again matches the boundary curvature, n = 4 now
    auto ric = ricci(h);
    auto S = scalar_curvature(h);
    auto t2 = jet.coefficient(2, 0);
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(E("2") * t2.at({i, j}) + ric.at({i, j}) - E("1/6") * S * h.at(i, j)));
        }

    CHECK(evolution_residual_report(jet).all_certainly_zero());

    auto lc = log_coefficients(jet);
    CHECK(lc.relations.all_certainly_zero());

    auto eq = weyl_obstruction_equivalence(jet);
    CHECK(eq.match.all_certainly_zero());
    CHECK(eq.weyl_zero.verdict == ZeroVerdict::ProbablyNonzero);
    CHECK(eq.obstruction_zero.verdict == ZeroVerdict::ProbablyNonzero);
    CHECK(eq.equivalent);

    // the obstruction ignores the free slot entirely
    TensorField sigma;
    sigma.chart = h.chart;
    sigma.lower = 2;
    sigma.sym = Sym::LastPair;
    sigma.set({0, 1}, E("1"));
    auto [jets, reps] = fg_expand(h, 4, 4, sigma);
    REQUIRE(reps.log_coefficient.has_value());
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(reps.log_coefficient->at({i, j}) - f.at({i, j})));
        }
    auto t4a = jets.coefficient(4, 0);
    auto t4b = jet.coefficient(4, 0);
    CHECK(certainly_zero(t4a.at({0, 1}) - t4b.at({0, 1}) - E("1")));
    CHECK(certainly_zero(reps.trace_constraint - rep.trace_constraint));

    // constant rescaling of the boundary metric: h -> 4h leaves the order-2
    // coefficient alone, quarters the obstruction, sixteenths the trace
    auto h4 = diag_metric(coords, {"4*(1 + x2^2)", "4*(1 + x1^2)", "4", "4"});
    auto [jet4, rep4] = fg_expand(h4, 4, 4);
    REQUIRE(rep4.log_coefficient.has_value());
    auto s2 = jet4.coefficient(2, 0);
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            CAPTURE(i, j);
            CHECK(certainly_zero(s2.at({i, j}) - t2.at({i, j})));
            CHECK(certainly_zero(E("4") * rep4.log_coefficient->at({i, j}) - f.at({i, j})));
        }
    CHECK(certainly_zero(E("16") * rep4.trace_constraint - rep.trace_constraint));
}

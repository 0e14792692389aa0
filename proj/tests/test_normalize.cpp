#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fglab/parse.hpp"
#include "fglab/ratfun.hpp"
#include "fglab/report.hpp"

using namespace fglab;

static Expr nz(const std::string& s) { return normalize(parse_expr(s)); }

TEST_CASE("polynomial gcd and exact division") {
    // ids stand in for three variables
    Poly x = Poly::variable(0), y = Poly::variable(1), z = Poly::variable(2);
    Poly p = x * x - y * y;
    Poly q = x + y;
    CHECK(*Poly::divide(p, q) == x - y);
    CHECK(!Poly::divide(q, p).has_value());

    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> coef(-4, 4), ex(0, 2);
    auto rnd = [&] {
        Poly p0;
        for (int t = 0; t < 4; ++t) {
            Poly term = Poly::constant(coef(rng));
            term = term * Poly::variable(0, ex(rng)) * Poly::variable(1, ex(rng)) *
                   Poly::variable(2, ex(rng));
            p0 += term;
        }
        return p0;
    };
    for (int trial = 0; trial < 40; ++trial) {
        Poly a = rnd(), b = rnd(), c = rnd();
        if (c.is_zero()) continue;
        if (!a.is_zero()) CHECK(*Poly::divide(a * c, c) == a);
        if (a.is_zero() || b.is_zero()) continue;
        Poly g = Poly::gcd(a * c, b * c);
        // common factor c must divide the gcd
        CHECK(Poly::divide(g, c.primitive()).has_value());
        CHECK(Poly::divide(a * c, g).has_value());
        CHECK(Poly::divide(b * c, g).has_value());
    }
}

TEST_CASE("normalize collapses rational-function identities") {
    CHECK(to_string(nz("(r+1)^2 - r^2 - 2*r - 1")) == "0");
    CHECK(to_string(nz("(x^2 - 1)/(x - 1)")) == "x + 1");
    CHECK(to_string(nz("(a+b)*(a-b) - a^2 + b^2")) == "0");
    // opaque atoms: no trigonometric simplification
    CHECK(to_string(nz("sin(x)^2 + cos(x)^2")) != "1");
}

TEST_CASE("normalize records domain caveats for cancelled denominators") {
    auto r = normalize_report(parse_expr("x/x"));
    CHECK(to_string(r.expr) == "1");
    REQUIRE(r.caveats.size() == 1);
    CHECK(r.caveats[0] == "x != 0");

    auto r2 = normalize_report(parse_expr("(x^2 - 1)/(x - 1)"));
    CHECK(to_string(r2.expr) == "x + 1");
    REQUIRE(r2.caveats.size() == 1);
    CHECK(r2.caveats[0] == "x - 1 != 0");

    // factor still present in the denominator: the domain did not grow
    auto r3 = normalize_report(parse_expr("(x*y)/(x^2)"));
    CHECK(to_string(r3.expr) == "y/x");
    CHECK(r3.caveats.empty());
}

TEST_CASE("normalize is canonical across different spellings") {
    CHECK(structurally_equal(nz("x + y"), nz("y + x")));
    CHECK(structurally_equal(nz("(a+b)*(a-b)"), nz("a^2 - b^2")));
    CHECK(structurally_equal(nz("sin(x)*cos(y) + 1"), nz("1 + cos(y)*sin(x)")));
    CHECK(structurally_equal(nz("1/(1+x) + 1/(1-x)"), nz("2/(1 - x^2)")));
}

TEST_CASE("division by an identically zero expression is reported") {
    CHECK_THROWS_AS(nz("1/(x - x)"), ZeroDenominator);
    CHECK_THROWS_AS(nz("(x+1)/0"), ZeroDenominator);
    CHECK_THROWS_AS(nz("(x - x)^-2"), ZeroDenominator);
}

TEST_CASE("derivative matches hand result after normalize") {
    Expr d = differentiate(parse_expr("(1 - r^2/4)^2"), "r");
    CHECK(structurally_equal(normalize(d), nz("-r*(1 - r^2/4)")));

    Expr m = parse_expr("sin(x1*x2)");
    Expr d12 = differentiate(differentiate(m, "x1"), "x2");
    Expr d21 = differentiate(differentiate(m, "x2"), "x1");
    CHECK(structurally_equal(normalize(d12), normalize(d21)));
}

TEST_CASE("normal-form derivative agrees with tree derivative") {
    for (const char* src : {"log(x^2 + 1)*tan(x) + sqrt(x^2 + 1)", "exp(x)/x - sinh(x)*cosh(x)",
                            "sqrt(x)*tanh(x) + x^3/(x - 2)"}) {
        Expr e = parse_expr(src);
        AtomTable tab;
        RatFun f = from_expr(e, tab);
        RatFun d1 = ratfun_diff(f, "x", tab);
        RatFun d2 = from_expr(differentiate(e, "x"), tab);
        CHECK((d1 - d2).is_zero_form());
    }
}

namespace {

Expr random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
    std::uniform_int_distribution<int> small(-5, 5), vnum(1, 3), fnum(0, 8), en(2, 3);
    switch (pick(rng)) {
        case 0: return Expr::num(Rational(small(rng)));
        case 1: return Expr::var("x" + std::to_string(vnum(rng)));
        case 2: return random_tree(rng, depth - 1) + random_tree(rng, depth - 1);
        case 3: return random_tree(rng, depth - 1) * random_tree(rng, depth - 1);
        case 4: return Expr::div(random_tree(rng, depth - 1), random_tree(rng, depth - 1));
        case 5: return Expr::pow(random_tree(rng, depth - 1), en(rng));
        default: return Expr::apply(static_cast<Fn>(fnum(rng)), random_tree(rng, depth - 1));
    }
}

}  // namespace

TEST_CASE("normalize is idempotent and evaluation-preserving") {
    std::mt19937_64 rng(20240817);
    int done = 0;
    for (int trial = 0; trial < 400 && done < 200; ++trial) {
        Expr e = random_tree(rng, 3);
        Expr n1;
        try {
            n1 = normalize(e);
        } catch (const ZeroDenominator&) {
            continue;  // tree divided by an identically zero subexpression
        }
        Expr n2 = normalize(n1);
        INFO("expr: " << to_string(e));
        INFO("n1:   " << to_string(n1));
        INFO("n2:   " << to_string(n2));
        CHECK(structurally_equal(n1, n2));

        // evaluation agreement away from poles
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (int p = 0; p < 4; ++p) {
            std::map<std::string, double> pt;
            for (const auto& v : free_variables(e)) pt[v] = u(rng);
            double a, b;
            try {
                a = evaluate(e, pt);
                b = evaluate(n1, pt);
            } catch (const EvalError&) {
                continue;
            }
            if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a) > 1e6) continue;
            CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
        }
        ++done;
    }
    CHECK(done >= 150);
}

TEST_CASE("three-valued zero test") {
    auto r1 = is_zero(parse_expr("(r+1)^2 - (r^2 + 2*r + 1)"));
    CHECK(r1.verdict == ZeroVerdict::CertainlyZero);

    auto r2 = is_zero(parse_expr("sin(2*x) - 2*sin(x)*cos(x)"));
    CHECK(r2.verdict == ZeroVerdict::NumericallyZero);
    CHECK(r2.probes_run == 8);

    auto r3 = is_zero(parse_expr("r"));
    CHECK(r3.verdict == ZeroVerdict::ProbablyNonzero);
    CHECK(!r3.witness.empty());

    // seeds are honored and recorded
    ZeroOptions opt;
    opt.seed = 7;
    auto r4 = is_zero(parse_expr("x - 1/3"), opt);
    CHECK(r4.seed == 7);
    CHECK(r4.verdict == ZeroVerdict::ProbablyNonzero);
}

TEST_CASE("check lines round-trip") {
    CheckResult c{"geometry.bianchi.s2", true, "residual certainly-zero"};
    auto back = parse_check_line(check_line(c));
    REQUIRE(back.has_value());
    CHECK(back->name == c.name);
    CHECK(back->pass == c.pass);
    CHECK(back->detail == c.detail);

    CheckResult f{"fg.order4", false, "max |residual| = 3.2e-5"};
    auto b2 = parse_check_line(check_line(f));
    REQUIRE(b2.has_value());
    CHECK(!b2->pass);
    CHECK(b2->detail == "max |residual| = 3.2e-5");

    CHECK(!parse_check_line("nonsense").has_value());
    CHECK(!parse_check_line("CHECK name MAYBE x").has_value());

    Report rep;
    rep.add("a", true);
    rep.add("b", false, "boom");
    CHECK(!rep.all_pass());
    CHECK(rep.failures() == 1);
}

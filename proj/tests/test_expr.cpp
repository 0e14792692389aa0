#include "fglab/parse.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace fglab;

TEST_CASE("rational literals fold at parse time") {
    Expr e = parse_expr("1/2");
    REQUIRE(e.is_num());
    REQUIRE(e.value() == Rational(1, 2));

    Expr d = parse_expr("0.25");
    REQUIRE(d.is_num());
    REQUIRE(d.value() == Rational(1, 4));

    Expr m = parse_expr("-3");
    REQUIRE(m.is_num());
    REQUIRE(m.value() == Rational(-3));

    // x/2 stays a quotient node
    Expr q = parse_expr("x/2");
    REQUIRE(q.kind() == Kind::Div);
}

TEST_CASE("parse errors carry byte offsets") {
    REQUIRE_THROWS_AS(parse_expr("1 + "), ParseError);
    REQUIRE_THROWS_AS(parse_expr("foo(2)"), ParseError);
    REQUIRE_THROWS_AS(parse_expr("(x"), ParseError);
    REQUIRE_THROWS_AS(parse_expr("x^y"), ParseError);
    try {
        parse_expr("2*foo(2)");
        FAIL("expected throw");
    } catch (const ParseError& pe) {
        REQUIRE(pe.offset == 2);
    }
}

TEST_CASE("printing inverts parsing on sample inputs") {
    for (const char* s : {
             "(1 - r^2/4)^2",
             "x + y*z",
             "x - y - z",
             "-x^2",
             "sin(x)*cos(y) - tan(z)^3",
             "1/2*x - 3/4",
             "x/(y/z)",
             "a/b/c",
             "-(x + y)",
             "2 - -3*x",
             "sqrt(x^2 + 1)",
             "exp(-x) * log(y)",
             "x^-2 + x^0",
         }) {
        Expr once = parse_expr(s);
        Expr twice = parse_expr(to_string(once));
        INFO(s << "  ->  " << to_string(once));
        REQUIRE(structurally_equal(once, twice));
    }
}

namespace {

Expr random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
    switch (pick(rng)) {
        case 0: {
            std::uniform_int_distribution<long long> n(-12, 12), d(1, 9);
            return Expr::num(Rational(n(rng), d(rng)));
        }
        case 1: {
            const char* names[] = {"x", "y", "z", "r", "u_1"};
            return Expr::var(names[rng() % 5]);
        }
        case 2: return Expr::add(random_tree(rng, depth - 1), random_tree(rng, depth - 1));
        case 3: return Expr::mul(random_tree(rng, depth - 1), random_tree(rng, depth - 1));
        case 4: return Expr::div(random_tree(rng, depth - 1), random_tree(rng, depth - 1));
        case 5: {
            std::uniform_int_distribution<long long> e(-3, 4);
            return Expr::pow(random_tree(rng, depth - 1), e(rng));
        }
        default: {
            Fn fs[] = {Fn::Sin, Fn::Cos, Fn::Tan, Fn::Exp, Fn::Log, Fn::Sqrt, Fn::Sinh, Fn::Cosh, Fn::Tanh};
            return Expr::apply(fs[rng() % 9], random_tree(rng, depth - 1));
        }
    }
}

} // namespace

TEST_CASE("print/parse round-trip is stable on random trees") {
    std::mt19937_64 rng(20240817);
    for (int i = 0; i < 1000; ++i) {
        Expr t = random_tree(rng, 5);
        // print may re-spell constructs; the fixed point must be reached after one parse
        Expr p1 = parse_expr(to_string(t));
        Expr p2 = parse_expr(to_string(p1));
        INFO(to_string(t));
        REQUIRE(structurally_equal(p1, p2));
    }
}

TEST_CASE("differentiate and evaluate agree with finite differences") {
    std::map<std::string, double> at{{"x", 0.7}, {"y", -0.3}};
    for (const char* s : {"sin(x)*cos(y)", "exp(x*y)", "sqrt(x^2 + 1)", "tan(x)/cosh(y)",
                          "log(x + 2)*sinh(y)", "(x + y)^3", "x^-2"}) {
        Expr e = parse_expr(s);
        Expr dx = differentiate(e, "x");
        double h = 1e-6;
        auto up = at, dn = at;
        up["x"] += h;
        dn["x"] -= h;
        double fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * h);
        REQUIRE(std::abs(evaluate(dx, at) - fd) < 1e-7 * (1 + std::abs(fd)));
    }
}

TEST_CASE("evaluation reports domain violations") {
    REQUIRE_THROWS_AS(evaluate(parse_expr("log(x)"), {{"x", -1.0}}), EvalError);
    REQUIRE_THROWS_AS(evaluate(parse_expr("sqrt(x)"), {{"x", -1.0}}), EvalError);
    REQUIRE_THROWS_AS(evaluate(parse_expr("1/x"), {{"x", 0.0}}), EvalError);
    REQUIRE_THROWS_AS(evaluate(parse_expr("y + 1"), {{"x", 0.0}}), EvalError);
    REQUIRE(evaluate(parse_expr("sqrt(x)"), {{"x", 0.0}}) == 0.0);
}

#include "catch_amalgamated.hpp"

#include "daepencil/error.hpp"
#include "daepencil/expr.hpp"

#include <cmath>
#include <random>

using namespace daepencil;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

auto kind_is(ErrorKind k) {
    return Catch::Matchers::Predicate<Error>([k](const Error& e) { return e.kind() == k; });
}

Vec v3(double a, double b, double c) {
    Vec x(3);
    x << a, b, c;
    return x;
}

} // namespace

TEST_CASE("parsing builds the expected tree", "[expr]") {
    const Expr e = parse_expr("x1^2", 2);
    REQUIRE(e.kind() == Expr::Kind::Pow);
    CHECK(e.args()[0].kind() == Expr::Kind::State);
    CHECK(e.args()[0].index() == 0);
    CHECK(e.args()[1].value() == 2.0);

    CHECK_THROWS_MATCHES(parse_expr("-(u^3+3*u^2+u+1)", 3), Error, kind_is(ErrorKind::UnknownIdentifier));
    CHECK_THROWS_MATCHES(parse_expr("x4", 3), Error, kind_is(ErrorKind::UnknownIdentifier));
    CHECK_THROWS_MATCHES(parse_expr("sin(x1, x2)", 3), Error, kind_is(ErrorKind::ArityError));
    CHECK_THROWS_MATCHES(parse_expr("x1 +* 2", 3), Error, kind_is(ErrorKind::SyntaxError));
    CHECK_THROWS_MATCHES(parse_expr("t", Scope{1, false, std::nullopt}), Error, kind_is(ErrorKind::UnknownIdentifier));
}

TEST_CASE("syntax errors report the offset", "[expr]") {
    try {
        parse_expr("x1 + (x2", 2);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SyntaxError);
        CHECK(e.offset() == 8);
    }
}

TEST_CASE("precedence and associativity", "[expr]") {
    CHECK(parse_expr("2^3^2", 0).eval(0.0, Vec()) == 512.0);
    CHECK(parse_expr("-2^2", 0).eval(0.0, Vec()) == -4.0);
    CHECK(parse_expr("8/4/2", 0).eval(0.0, Vec()) == 1.0);
    CHECK(parse_expr("1 - 2 - 3", 0).eval(0.0, Vec()) == -4.0);
    CHECK_THAT(parse_expr("2*pi + e", 0).eval(0.0, Vec()), WithinRel(2 * M_PI + M_E, 1e-15));
}

TEST_CASE("evaluation of the example right-hand sides", "[expr]") {
    // (3-1-1)^3 + 3 - 1 + (-2) by hand.
    CHECK(parse_expr("(x1-x3-1)^3+x1-x3+x2", 3).eval(0.0, v3(3, -2, 1)) == 1.0);
    Vec x2(2);
    x2 << 3, 0.5;
    CHECK(parse_expr("x1*x2-1", 2).eval(0.0, x2) == 0.5);

    Vec one(1);
    one << 1.0;
    CHECK_THROWS_MATCHES(parse_expr("1/(x1-1)", 1).eval(0.0, one), Error, kind_is(ErrorKind::EvalDomainError));
    CHECK_THROWS_MATCHES(parse_expr("log(x1-1)", 1).eval(0.0, one), Error, kind_is(ErrorKind::EvalDomainError));
    one << 710.0;
    CHECK(std::isinf(parse_expr("exp(x1)", 1).eval(0.0, one)));
}

TEST_CASE("derivatives", "[expr]") {
    CHECK(parse_expr("x1^2", 2).diff(Var::x(0)).str() == "2*x1");
    CHECK(parse_expr("sin(t)*x1", 1).diff(Var::t()).str() == "cos(t)*x1");

    const Expr f3 = parse_expr("-(x2^3+3*x2^2+x2+1)-(t+1)*x3^2", 3);
    const Expr df = f3.diff(Var::x(1));
    const Expr textbook = parse_expr("-(3*x2^2+6*x2+1)", 3);
    for (double x : {-2.0, -0.5, 0.0, 1.5}) CHECK(df.eval(0.3, v3(0.1, x, 2.0)) == textbook.eval(0.3, v3(0.1, x, 2.0)));
    CHECK(df.eval(0.0, v3(0, -2, 0)) == -1.0);
}

TEST_CASE("jacobian tables", "[expr]") {
    const auto J1 = jacobian({parse_expr("x1^2", 2), parse_expr("sin(t)", 2)}, 2);
    CHECK(J1[0][0].str() == "2*x1");
    CHECK(J1[1][0].eval(1.0, Vec::Ones(2)) == 0.0);
    CHECK(J1[1][1].eval(1.0, Vec::Ones(2)) == 0.0);

    const auto J3 = jacobian({parse_expr("0", 2), parse_expr("x1^2+x2^2+x2-1", 2)}, 2);
    CHECK(J3[1][1].str() == "2*x2 + 1");
    for (int j = 0; j < 2; ++j) CHECK(J3[0][j].eval(0.0, Vec::Ones(2)) == 0.0);
}

TEST_CASE("derivative golden table", "[expr][property]") {
    struct Row {
        const char* f;
        int var; // 0..2 state, 3 = t
        const char* df;
    };
    const Row table[] = {
        {"x1^3", 0, "3*x1^2"},
        {"x1*x2", 1, "x1"},
        {"sin(x1)", 0, "cos(x1)"},
        {"cos(x2)", 1, "-sin(x2)"},
        {"tan(x1)", 0, "1/cos(x1)^2"},
        {"exp(2*x1)", 0, "2*exp(2*x1)"},
        {"log(1+x1^2)", 0, "2*x1/(1+x1^2)"},
        {"sqrt(2+x3^2)", 2, "x3/sqrt(2+x3^2)"},
        {"x1/x2", 1, "-x1/x2^2"},
        {"x1/(1+x2^2)", 0, "1/(1+x2^2)"},
        {"(x1+x2)^4", 1, "4*(x1+x2)^3"},
        {"t*x1", 3, "x1"},
        {"t^2*x3", 3, "2*t*x3"},
        {"sin(t)*cos(x1)", 3, "cos(t)*cos(x1)"},
        {"exp(-t)*x2", 3, "-exp(-t)*x2"},
        {"(2+x1^2)^x2", 1, "log(2+x1^2)*(2+x1^2)^x2"},
        {"(2+x1^2)^x2", 0, "x2*(2+x1^2)^(x2-1)*2*x1"},
        {"2^x1", 0, "log(2)*2^x1"},
        {"x1*exp(x1)", 0, "exp(x1)+x1*exp(x1)"},
        {"-x3", 2, "-1"},
        {"x1-x3-1", 2, "-1"},
        {"(x1-x3-1)^3", 0, "3*(x1-x3-1)^2"},
        {"(x1-x3-1)^3", 2, "-3*(x1-x3-1)^2"},
        {"x1^2+x2^2+x2-1", 1, "2*x2+1"},
        {"1/(3+cos(x1+x2))", 0, "sin(x1+x2)/(3+cos(x1+x2))^2"},
        {"sin(x1*x2*x3)", 2, "x1*x2*cos(x1*x2*x3)"},
        {"log(2+sin(t))", 3, "cos(t)/(2+sin(t))"},
        {"sqrt(1+t)*x1", 3, "x1/(2*sqrt(1+t))"},
        {"x2^3+3*x2^2+x2+1", 1, "3*x2^2+6*x2+1"},
        {"exp(x1*x1)/(1+x2*x2)", 1, "-2*x2*exp(x1*x1)/(1+x2*x2)^2"},
    };
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-1.5, 1.5), tt(0.0, 3.0);
    for (const Row& r : table) {
        const Var v = r.var < 3 ? Var::x(r.var) : Var::t();
        const Expr d = parse_expr(r.f, 3).diff(v);
        const Expr ref = parse_expr(r.df, 3);
        for (int k = 0; k < 20; ++k) {
            const Vec x = v3(u(gen), u(gen), u(gen));
            const double t = tt(gen);
            INFO(r.f << " d/" << (r.var < 3 ? "x" + std::to_string(r.var + 1) : std::string("t")));
            CHECK_THAT(d.eval(t, x), WithinAbs(ref.eval(t, x), 1e-12 * (1 + std::abs(ref.eval(t, x)))));
        }
    }
}

TEST_CASE("parser never crashes on random token streams", "[expr][property]") {
    const char* tokens[] = {"x1", "x2", "t", "+", "-", "*", "/", "^", "(", ")", ",", "sin", "max", "2", "0.5",
                            "1e3", "pi", "@", "y", " ", "abs", "sgn", "3.", ".5e-1"};
    std::mt19937_64 gen(37);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(tokens) - 1), len(0, 12);
    int ok = 0, rejected = 0;
    for (int k = 0; k < 5000; ++k) {
        std::string s;
        for (std::size_t i = len(gen); i > 0; --i) s += tokens[pick(gen)];
        try {
            parse_expr(s, 2);
            ++ok;
        } catch (const Error& e) {
            CHECK((e.kind() == ErrorKind::SyntaxError || e.kind() == ErrorKind::UnknownIdentifier ||
                   e.kind() == ErrorKind::ArityError));
            ++rejected;
        }
    }
    CHECK(ok + rejected == 5000);
    CHECK(ok > 0);
}

TEST_CASE("predicates", "[expr]") {
    const Predicate p = parse_predicate("abs(x1-1) >= r", Scope{1, true, std::string("r")});
    EvalPoint pt;
    double x = 1.5;
    pt.x = &x;
    pt.n = 1;
    pt.s = 0.4;
    CHECK(p.holds(pt));
    pt.s = 0.6;
    CHECK_FALSE(p.holds(pt));
    CHECK_THAT(p.gap(pt), WithinAbs(-0.1, 1e-15));

    Vec y(2);
    y << 0.0, 1.0;
    CHECK(parse_predicate("x1 != 1", Scope::state(2)).holds(0.0, y));
    CHECK_FALSE(parse_predicate("x2 < 1", Scope::state(2)).holds(0.0, y));
    CHECK_THROWS_MATCHES(parse_predicate("x1 + 1", Scope::state(2)), Error, kind_is(ErrorKind::SyntaxError));
}

TEST_CASE("scalar scopes", "[expr]") {
    const Expr chi = parse_expr("4*v^(3/2)", Scope::scalar_only("v"));
    CHECK(chi.eval_scalar(4.0) == 32.0);
    CHECK(chi.uses(Var::Kind::Scalar));
    CHECK_FALSE(chi.uses(Var::Kind::Time));
    CHECK_THROWS_MATCHES(parse_expr("x1*v", Scope::scalar_only("v")), Error, kind_is(ErrorKind::UnknownIdentifier));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfl/common.hpp"
#include "mfl/expr.hpp"

using namespace mfl;

TEST_CASE("arithmetic and precedence") {
    CHECK(Expr::parse("1+2*3").eval({0, 0}) == doctest::Approx(7.0));
    CHECK(Expr::parse("(1+2)*3").eval({0, 0}) == doctest::Approx(9.0));
    CHECK(Expr::parse("7/2 - 1").eval({0, 0}) == doctest::Approx(2.5));
    CHECK(Expr::parse("2^10").eval({0, 0}) == doctest::Approx(1024.0));
    CHECK(Expr::parse("-3 + 5").eval({0, 0}) == doctest::Approx(2.0));
}

TEST_CASE("coordinates and aliases") {
    const Vec2 p{2.0, 3.0};
    CHECK(Expr::parse("x*y").eval(p) == doctest::Approx(6.0));
    CHECK(Expr::parse("x1 + x2").eval(p) == doctest::Approx(5.0));
    CHECK(Expr::parse("x^2 + y^2").eval(p) == doctest::Approx(13.0));
}

TEST_CASE("pi and exp") {
    CHECK(Expr::parse("pi").eval({0, 0}) == doctest::Approx(kPi).epsilon(1e-14));
    CHECK(Expr::parse("exp(0)").eval({0, 0}) == doctest::Approx(1.0));
    CHECK(Expr::parse("exp(1)").eval({0, 0}) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(Expr::parse("exp(x - y)").eval({1.5, 0.5}) == doctest::Approx(std::exp(1.0)));
    CHECK(Expr::parse("2*pi*x").eval({0.5, 0}) == doctest::Approx(kPi));
}

TEST_CASE("parse errors carry position info") {
    CHECK_THROWS_AS(Expr::parse("2*"), ConfigError);
    CHECK_THROWS_AS(Expr::parse("foo"), ConfigError);
    CHECK_THROWS_AS(Expr::parse("(1+2"), ConfigError);
    CHECK_THROWS_AS(Expr::parse(""), ConfigError);
    CHECK_THROWS_AS(Expr::parse("exp()"), ConfigError);
    try {
        Expr::parse("1 + @");
        CHECK(false);
    } catch (const ConfigError& e) {
        // the message should point at the offending character
        CHECK(std::string(e.what()).find("4") != std::string::npos);
    }
}

TEST_CASE("text is preserved") {
    const std::string s = "exp(x)*2 + y";
    CHECK(Expr::parse(s).text() == s);
}

TEST_CASE("pi literals for resonance targets") {
    CHECK(parse_pi_literal("6pi") == doctest::Approx(6.0 * kPi).epsilon(1e-14));
    CHECK(parse_pi_literal("4 pi") == doctest::Approx(4.0 * kPi).epsilon(1e-14));
    CHECK(parse_pi_literal("12.5") == doctest::Approx(12.5));
    CHECK(parse_pi_literal("2pi/3") == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(parse_pi_literal("abc"), ConfigError);
    CHECK_THROWS_AS(parse_pi_literal(""), ConfigError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "mfl/singular.hpp"

using namespace mfl;

namespace {

std::shared_ptr<const GreenFunction> make_green(double h) {
    auto mesh = std::make_shared<const Mesh>(mesh_unit_disk(h));
    auto fem = std::make_shared<const FemSystem>(mesh, SurfaceModel::flat_unit_disk());
    return std::make_shared<const GreenFunction>(fem);
}

bool contains(const std::vector<double>& vals, double target) {
    return std::any_of(vals.begin(), vals.end(),
                       [&](double v) { return std::abs(v - target) < 1e-9; });
}

}  // namespace

TEST_CASE("admissible exponents: gamma > -1 and not a nonnegative integer") {
    CHECK(admissible_gamma(0.5));
    CHECK(admissible_gamma(-0.5));
    CHECK(admissible_gamma(1.7));
    CHECK(!admissible_gamma(0.0));
    CHECK(!admissible_gamma(1.0));
    CHECK(!admissible_gamma(2.0));
    CHECK(!admissible_gamma(-1.0));
    CHECK(!admissible_gamma(-1.5));
}

TEST_CASE("constructor validation") {
    auto G = make_green(0.08);
    CHECK_THROWS_AS(SingularData(G, {{{0.2, 0.0}, 1.0}}, Expr::parse("1")), ConfigError);
    CHECK_THROWS_AS(SingularData(G, {{{0.2, 0.0}, -1.2}}, Expr::parse("1")), ConfigError);
    CHECK_THROWS_AS(
        SingularData(G, {{{0.2, 0.0}, 0.5}, {{0.2, 0.0}, -0.5}}, Expr::parse("1")),
        ConfigError);
    CHECK_THROWS_AS(SingularData(G, {}, Expr::parse("x - 5")), ConfigError);  // not positive
}

TEST_CASE("flat-disk curvature shift is 1/2 - |x|^2") {
    auto G = make_green(0.05);
    const Field h = geodesic_shift(G->fem());
    double emax = 0.0;
    for (int v = 0; v < h.size(); ++v) {
        const double exact = 0.5 - G->fem().mesh().verts[v].norm2();
        emax = std::max(emax, std::abs(h[v] - exact));
    }
    CHECK(emax < 8e-3);
    CHECK(std::abs(G->fem().mean(h)) < 1e-9);
}

TEST_CASE("boundary transform doubles and tilts the weight") {
    auto G = make_green(0.05);
    const SingularData on(G, {}, Expr::parse("1"), true);
    const SingularData off(G, {}, Expr::parse("1"), false);

    // with the transform: V = 2 e^h, so log V(0) = ln 2 + 1/2
    CHECK(on.log_V({0.0, 0.0}) == doctest::Approx(std::log(2.0) + 0.5).epsilon(0.02));
    // without: V is the user weight itself and the shift is zero
    CHECK(off.log_V({0.3, -0.4}) == doctest::Approx(0.0).epsilon(1e-12));
    double smax = 0.0;
    for (int v = 0; v < off.curvature_shift().size(); ++v)
        smax = std::max(smax, std::abs(off.curvature_shift()[v]));
    CHECK(smax == 0.0);

    // no singular points: K = V identically
    CHECK(off.hQ({0.2, 0.2}) == 0.0);
    CHECK(on.log_K({0.2, 0.2}) == doctest::Approx(on.log_V({0.2, 0.2})).epsilon(1e-12));
}

TEST_CASE("logarithmic potential h_Q: closure and discrete agreement") {
    auto G = make_green(0.05);
    const Vec2 cone{0.25, -0.15};
    const double g = 0.5;
    const SingularData data(G, {{cone, g}}, Expr::parse("1"), false);

    // closure: h_Q = (rho gamma / 2) G(., cone)
    const Vec2 x{-0.4, 0.3};
    CHECK(data.hQ(x) ==
          doctest::Approx(0.5 * 8.0 * kPi * g * G->eval(x, cone)).epsilon(1e-12));

    // weak-form solve agrees away from the cone point
    const Field hq = data.hQ_field();
    CHECK(hq.eval(x) == doctest::Approx(data.hQ(x)).epsilon(0.03));

    // K vanishes like |x - cone|^{2 gamma}: the compensated log stays bounded
    const Vec2 dir{1.0, 0.0};
    for (double t : {1e-2, 1e-3}) {
        const Vec2 p{cone.x + t * dir.x, cone.y + t * dir.y};
        const double compensated = data.log_K(p) - 2.0 * g * std::log(t);
        CHECK(std::abs(compensated) < 1.0);
    }
}

TEST_CASE("local smooth factors K_i") {
    auto G = make_green(0.05);
    const Vec2 cone{0.25, -0.15};
    const double g = 0.5;
    const SingularData data(G, {{cone, g}}, Expr::parse("1"), false);

    // at a regular center the local factor is just K
    const Vec2 reg{-0.3, 0.2};
    CHECK(data.log_Ki(reg, reg) == doctest::Approx(data.log_K(reg)).epsilon(1e-12));
    CHECK(data.log_Ki_center(reg) == doctest::Approx(data.log_K(reg)).epsilon(1e-9));

    // at the cone point the compensated factor extends continuously
    const double center = data.log_Ki_center(cone);
    CHECK(std::isfinite(center));
    const Vec2 p{cone.x + 1e-3, cone.y};
    CHECK(data.log_Ki(p, cone) == doctest::Approx(center).epsilon(0.02));

    double spread = 1.0;
    const double ray_mean = data.log_Ki_ray_check(cone, 8, &spread);
    CHECK(ray_mean == doctest::Approx(center).epsilon(0.02));
    CHECK(spread < 0.02);
}

TEST_CASE("resonant mass values") {
    auto G = make_green(0.08);
    // interior cone gamma 1/2 (adds 12 pi) and boundary cone gamma 1/2 (adds 6 pi)
    const SingularData data(G, {{{0.0, 0.0}, 0.5}, {{1.0, 0.0}, 0.5}}, Expr::parse("1"));
    const std::vector<double> vals = resonant_set(data, parse_pi_literal("40pi"));

    CHECK(contains(vals, 4.0 * kPi));    // one boundary regular center
    CHECK(contains(vals, 6.0 * kPi));    // the boundary cone alone
    CHECK(contains(vals, 8.0 * kPi));    // one interior regular center
    CHECK(contains(vals, 12.0 * kPi));   // the interior cone alone
    CHECK(contains(vals, 18.0 * kPi));   // both cones
    CHECK(!contains(vals, 2.0 * kPi));
    for (double v : vals) {
        CHECK(v > 0.0);
        CHECK(v <= 40.0 * kPi + 1e-9);
    }
    CHECK(std::is_sorted(vals.begin(), vals.end()));
    for (std::size_t i = 1; i < vals.size(); ++i) CHECK(vals[i] - vals[i - 1] > 1e-9);

    CHECK_THROWS_AS(resonant_set(data, -1.0), ConfigError);
}

TEST_CASE("enumerating the generators of a mass value") {
    auto G = make_green(0.08);
    const SingularData data(G, {{{0.0, 0.0}, 0.5}, {{1.0, 0.0}, 0.5}}, Expr::parse("1"));

    // 8 pi = (p=1) = (q=2); the interior cone needs 12 pi so it cannot enter
    const ResonanceIndex idx = enumerate_index_sets(data, 8.0 * kPi);
    CHECK(idx.rho_star == doctest::Approx(8.0 * kPi));
    CHECK(idx.triples.size() == 2);
    for (const ResonanceTriple& t : idx.triples) {
        double mass = 4.0 * kPi * (2.0 * t.p + t.q);
        for (int q1 : t.subset)
            mass += (1.0 + data.points()[q1].gamma) * data.points()[q1].rho;
        CHECK(mass == doctest::Approx(8.0 * kPi).epsilon(1e-12));
        CHECK(t.gamma_seq.size() == static_cast<std::size_t>(t.p + t.q) + t.subset.size());
    }

    // 6 pi is realized only by the boundary cone
    const ResonanceIndex six = enumerate_index_sets(data, 6.0 * kPi);
    REQUIRE(six.triples.size() == 1);
    CHECK(six.triples[0].p == 0);
    CHECK(six.triples[0].q == 0);
    REQUIRE(six.triples[0].subset.size() == 1);
    CHECK(data.points()[six.triples[0].subset[0]].boundary);
}

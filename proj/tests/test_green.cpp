#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "mfl/green.hpp"

using namespace mfl;

namespace {

std::shared_ptr<const GreenFunction> make_green(double h) {
    auto mesh = std::make_shared<const Mesh>(mesh_unit_disk(h));
    auto fem = std::make_shared<const FemSystem>(mesh, SurfaceModel::flat_unit_disk());
    return std::make_shared<const GreenFunction>(fem);
}

}  // namespace

TEST_CASE("disk oracle: symmetry, mean-zero equation, natural boundary data") {
    const Vec2 xi{-0.4, 0.2};
    const Vec2 x{0.3, 0.1};
    CHECK(disk_oracle::green(x, xi) == doctest::Approx(disk_oracle::green(xi, x)).epsilon(1e-13));

    // away from the pole: Lap G = 1/|S| = 1/pi (the mean-zero counterweight)
    const double d = 1e-3;
    const double lap = (disk_oracle::green({x.x + d, x.y}, xi) + disk_oracle::green({x.x - d, x.y}, xi) +
                        disk_oracle::green({x.x, x.y + d}, xi) + disk_oracle::green({x.x, x.y - d}, xi) -
                        4.0 * disk_oracle::green(x, xi)) /
                       (d * d);
    CHECK(lap == doctest::Approx(1.0 / kPi).epsilon(1e-4));

    // radial derivative vanishes on the circle
    const Vec2 b{std::cos(1.1), std::sin(1.1)};
    const double g1 = disk_oracle::green({(1.0 - 1e-5) * b.x, (1.0 - 1e-5) * b.y}, xi);
    const double g0 = disk_oracle::green(b, xi);
    CHECK(std::abs((g0 - g1) / 1e-5) < 1e-3);

    // short-distance law: G + (1/2pi) ln|x-xi| stays bounded with the Robin limit
    const double eps = 1e-6;
    const double near = disk_oracle::green({xi.x + eps, xi.y}, xi) + std::log(eps) / (2.0 * kPi);
    CHECK(near == doctest::Approx(disk_oracle::robin(xi)).epsilon(1e-4));

    CHECK(disk_oracle::robin({0.0, 0.0}) == doctest::Approx(-3.0 / (8.0 * kPi)).epsilon(1e-13));
    CHECK(disk_oracle::robin({1.0, 0.0}) == doctest::Approx(1.0 / (8.0 * kPi)).epsilon(1e-13));
}

TEST_CASE("discrete Green function matches the oracle") {
    auto G = make_green(0.04);
    const std::vector<Vec2> poles = {{0.0, 0.0}, {0.45, -0.2}, {std::cos(0.8), std::sin(0.8)}};
    double emax = 0.0;
    for (const Vec2& xi : poles)
        for (double r : {0.2, 0.6, 0.9})
            for (int k = 0; k < 8; ++k) {
                const double th = 2.0 * kPi * (k + 0.3) / 8.0;
                const Vec2 x{r * std::cos(th), r * std::sin(th)};
                if (dist(x, xi) < 0.05) continue;
                emax = std::max(emax, std::abs(G->eval_smooth(x, xi) - disk_oracle::green(x, xi)));
            }
    CHECK(emax < 4e-3);  // ~ h^2 * |log h| at h = 0.04

    CHECK(G->robin({0.0, 0.0}) == doctest::Approx(-3.0 / (8.0 * kPi)).epsilon(0.02));
    CHECK(G->robin({std::cos(0.8), std::sin(0.8)}) ==
          doctest::Approx(1.0 / (8.0 * kPi)).epsilon(0.05));
}

TEST_CASE("symmetry holds without assuming the oracle") {
    auto G = make_green(0.05);
    const std::vector<std::pair<Vec2, Vec2>> pairs = {
        {{0.3, 0.2}, {-0.4, 0.1}}, {{0.0, 0.0}, {0.5, -0.3}}, {{0.2, 0.55}, {-0.3, -0.4}}};
    for (const auto& [a, b] : pairs)
        CHECK(G->eval_smooth(a, b) == doctest::Approx(G->eval_smooth(b, a)).epsilon(5e-3));
}

TEST_CASE("split structure: singular part and zero mean") {
    auto G = make_green(0.05);
    const Vec2 xi{0.1, -0.2};
    const Chart& ch = G->chart(xi);
    CHECK(G->rho(xi) == doctest::Approx(8.0 * kPi));

    // inside the cutoff plateau the singular part is exactly -(4/rho) ln|y|
    const Vec2 x{xi.x + 0.01, xi.y + 0.005};
    const double ay = ch.to_chart(x).norm();
    CHECK(G->singular_part(x, xi) ==
          doctest::Approx(-(4.0 / G->rho(xi)) * std::log(ay)).epsilon(1e-12));
    // far outside the chart it vanishes
    CHECK(G->singular_part({-0.8, 0.5}, xi) == 0.0);

    // mean(G) = 0: the regular part balances the singular mean
    const auto H = G->regular_part(xi);
    CHECK(G->fem().mean(*H) == doctest::Approx(-G->singular_mean(xi)).epsilon(1e-8));

    // boundary poles carry rho = 4 pi
    const Vec2 bxi{std::cos(2.0), std::sin(2.0)};
    CHECK(G->rho(bxi) == doctest::Approx(4.0 * kPi));
    CHECK(G->chart(bxi).is_boundary());
}

TEST_CASE("regular-part cache: stable handles under eviction") {
    auto G = make_green(0.09);
    const Vec2 xi{0.2, 0.3};
    const auto h0 = G->regular_part(xi);
    CHECK(G->regular_part(xi).get() == h0.get());  // cached

    // flood the cache with other poles; the original handle must stay valid
    for (int k = 0; k < 40; ++k) {
        const double th = 2.0 * kPi * k / 40.0;
        (void)G->regular_part({0.6 * std::cos(th), 0.6 * std::sin(th)});
    }
    const double v = h0->eval({0.5, 0.1});
    CHECK(std::isfinite(v));
    CHECK(G->regular_part(xi)->eval({0.5, 0.1}) == doctest::Approx(v).epsilon(1e-12));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfl/expr.hpp"
#include "mfl/geometry.hpp"

using namespace mfl;

TEST_CASE("cutoff profile: plateau, support, smoothness") {
    const CutoffProfile prof;  // plateau_end = 1.6
    CHECK(prof.plateau_end() == doctest::Approx(1.6));
    CHECK(prof.value(0.0) == doctest::Approx(1.0));
    CHECK(prof.value(1.0) == doctest::Approx(1.0));
    CHECK(prof.value(1.6) == doctest::Approx(1.0));
    CHECK(prof.value(2.0) == doctest::Approx(0.0));
    CHECK(prof.value(5.0) == doctest::Approx(0.0));
    CHECK(prof.deriv(1.0) == doctest::Approx(0.0));
    CHECK(prof.deriv(1.8) < 0.0);
    CHECK(prof.value(1.8) == doctest::Approx(0.5));  // smoothstep midpoint

    // C^2 matching at both junctions and FD consistency inside.
    for (double s : {1.6, 2.0}) {
        const double d = 1e-6;
        CHECK(std::abs(prof.deriv(s - d) - prof.deriv(s + d)) < 1e-4);
        CHECK(std::abs(prof.second(s - d) - prof.second(s + d)) < 1e-2);
    }
    for (double s : {1.65, 1.8, 1.95}) {
        const double d = 1e-5;
        const double fd1 = (prof.value(s + d) - prof.value(s - d)) / (2 * d);
        const double fd2 = (prof.deriv(s + d) - prof.deriv(s - d)) / (2 * d);
        CHECK(prof.deriv(s) == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(prof.second(s) == doctest::Approx(fd2).epsilon(1e-5));
    }
}

TEST_CASE("flat disk model basics") {
    const SurfaceModel m = SurfaceModel::flat_unit_disk();
    CHECK(m.is_flat());
    CHECK(m.area() == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(m.boundary_length() == doctest::Approx(2.0 * kPi).epsilon(1e-12));
    CHECK(m.boundary_curvature(0.7) == doctest::Approx(1.0));
    CHECK(m.log_conformal({0.3, -0.2}) == doctest::Approx(0.0));
    CHECK(m.grad_log_conformal({0.3, -0.2}).norm() == doctest::Approx(0.0));
}

TEST_CASE("interior chart: centering and inversion") {
    const SurfaceModel m = SurfaceModel::flat_unit_disk();
    const Vec2 xi{0.3, 0.2};
    const Chart ch = m.chart_at(xi);
    CHECK(!ch.is_boundary());
    CHECK(ch.rho() == doctest::Approx(8.0 * kPi));
    CHECK(ch.center().x == doctest::Approx(xi.x));
    CHECK(ch.to_chart(xi).norm() < 1e-13);

    // flat interior charts reduce to translations
    const Vec2 x{0.35, 0.13};
    const Vec2 y = ch.to_chart(x);
    CHECK(y.x == doctest::Approx(x.x - xi.x).epsilon(1e-12));
    CHECK(y.y == doctest::Approx(x.y - xi.y).epsilon(1e-12));
    const Vec2 back = ch.from_chart(y);
    CHECK(back.x == doctest::Approx(x.x).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(x.y).epsilon(1e-12));

    // chart radius convention: 0.49 * distance to the boundary
    CHECK(ch.radius() == doctest::Approx(0.49 * (1.0 - xi.norm())).epsilon(1e-9));
}

TEST_CASE("boundary chart: flattening and orientation") {
    const SurfaceModel m = SurfaceModel::flat_unit_disk();
    const double th = 0.7;
    const Vec2 xi{std::cos(th), std::sin(th)};
    const Chart ch = m.chart_at(xi);
    CHECK(ch.is_boundary());
    CHECK(ch.rho() == doctest::Approx(4.0 * kPi));
    CHECK(ch.radius() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ch.to_chart(xi).norm() < 1e-12);

    // nearby boundary points land on {y2 = 0}, interior points on {y2 > 0}
    for (double dth : {-0.3, -0.1, 0.1, 0.3}) {
        const Vec2 b{std::cos(th + dth), std::sin(th + dth)};
        CHECK(std::abs(ch.to_chart(b).y) < 1e-12);
    }
    const Vec2 inner{0.9 * std::cos(th + 0.05), 0.9 * std::sin(th + 0.05)};
    CHECK(ch.to_chart(inner).y > 0.0);

    const Vec2 y = ch.to_chart(inner);
    const Vec2 back = ch.from_chart(y);
    CHECK(back.x == doctest::Approx(inner.x).epsilon(1e-10));
    CHECK(back.y == doctest::Approx(inner.y).epsilon(1e-10));
}

TEST_CASE("boundary snapping tolerance") {
    const SurfaceModel m = SurfaceModel::flat_unit_disk();
    const Chart ch = m.chart_at({1.0 - 1e-12, 0.0});
    CHECK(ch.is_boundary());
    CHECK(ch.center().x == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("try_to_chart rejects points outside the image") {
    const SurfaceModel m = SurfaceModel::flat_unit_disk();
    const Chart ch = m.chart_at({0.5, 0.0});
    Vec2 y;
    CHECK(ch.try_to_chart({0.52, 0.01}, y));
    CHECK(!ch.try_to_chart({-0.9, 0.0}, y));  // far outside the chart image
}

TEST_CASE("conformal model: metric data and normalized charts") {
    const Expr psi = Expr::parse("x/2 - y/4");
    const SurfaceModel m = SurfaceModel::conformal_disk(psi);
    CHECK(!m.is_flat());
    CHECK(m.log_conformal({0.4, 0.2}) == doctest::Approx(0.4 / 2 - 0.2 / 4).epsilon(1e-12));

    const Vec2 g = m.grad_log_conformal({0.1, -0.3});
    CHECK(g.x == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(g.y == doctest::Approx(-0.25).epsilon(1e-6));

    // area = int e^psi dx, sanity bounds from min/max of psi on the disk
    CHECK(m.area() > kPi * std::exp(-0.75));
    CHECK(m.area() < kPi * std::exp(0.75));

    // normalized chart: phi(0) = 0 and grad phi(0) = 0 at interior centers,
    // where e^{phi(y)} |dy|^2 is the metric in chart coordinates.
    const Vec2 xi{0.2, 0.1};
    const Chart ch = m.chart_at(xi);
    CHECK(std::abs(ch.log_factor({0.0, 0.0})) < 1e-9);
    const double d = 1e-5;
    CHECK(std::abs(ch.log_factor({d, 0}) - ch.log_factor({-d, 0})) / (2 * d) < 1e-3);
    CHECK(std::abs(ch.log_factor({0, d}) - ch.log_factor({0, -d})) / (2 * d) < 1e-3);

    // boundary chart normalization: grad phi(0) = (0, -2 k_g)
    const Chart bch = m.chart_at({std::cos(0.4), std::sin(0.4)});
    const double kg = m.boundary_curvature(0.4);
    const double dphi2 = (bch.log_factor({0, d}) - bch.log_factor({0, 0})) / d;
    CHECK(dphi2 == doctest::Approx(-2.0 * kg).epsilon(1e-3));
}

TEST_CASE("model hashing distinguishes metrics") {
    const SurfaceModel flat = SurfaceModel::flat_unit_disk();
    const SurfaceModel conf = SurfaceModel::conformal_disk(Expr::parse("x/2"));
    CHECK(flat.hash() != conf.hash());
    CHECK(flat.hash() == SurfaceModel::flat_unit_disk().hash());
}

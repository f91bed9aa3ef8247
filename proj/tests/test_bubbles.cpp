#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "mfl/bubbles.hpp"
#include "mfl/green.hpp"

using namespace mfl;

namespace {

struct Setup {
    std::shared_ptr<const FemSystem> fem;
    std::shared_ptr<const GreenFunction> green;
    explicit Setup(double h) {
        auto mesh = std::make_shared<const Mesh>(mesh_unit_disk(h));
        fem = std::make_shared<const FemSystem>(mesh, SurfaceModel::flat_unit_disk());
        green = std::make_shared<const GreenFunction>(fem);
    }
};

}  // namespace

TEST_CASE("bubble profile identities") {
    for (double g : {-0.5, 0.0, 0.5, 1.7}) {
        const BubbleShape sh{g, 50.0};
        const double a = 1.0 + g;

        CHECK(sh.t_of(1.0 / sh.lambda) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sh.peak() == doctest::Approx(std::log(8.0 * a * a) +
                                           2.0 * a * std::log(sh.lambda)).epsilon(1e-12));
        CHECK(sh.value(0.0) == doctest::Approx(sh.peak()).epsilon(1e-12));
        CHECK(sh.far_shift() == doctest::Approx(std::log(8.0 * a * a) -
                                                2.0 * a * std::log(sh.lambda)).epsilon(1e-12));

        // direct formula at a generic radius
        const double y = 0.021;
        const double t = std::pow(sh.lambda * y, 2.0 * a);
        const double direct = std::log(8.0 * a * a) + 2.0 * a * std::log(sh.lambda) -
                              2.0 * std::log1p(t);
        CHECK(sh.value(y) == doctest::Approx(direct).epsilon(1e-12));

        // derivative vs finite differences
        const double d = 1e-7;
        const double fd = (sh.value(y + d) - sh.value(y - d)) / (2.0 * d);
        CHECK(sh.dvalue(y) == doctest::Approx(fd).epsilon(1e-5));

        // far-field law: delta -> far_shift - 4(1+g) ln|y|
        const BubbleShape far{g, 500.0};
        const double yy = 0.8;
        const double asym = far.far_shift() - 4.0 * a * std::log(yy);
        CHECK(far.value(yy) == doctest::Approx(asym).epsilon(1e-3));
    }
}

TEST_CASE("kernel modes of the linearized profile equation") {
    const BubbleShape sh{0.5, 30.0};
    // dilation mode: 2(1+g) at the center, zero at t = 1, -2(1+g) at infinity
    CHECK(kernel_mode(sh, {0.0, 0.0}, 0) == doctest::Approx(3.0).epsilon(1e-12));
    const double r1 = 1.0 / sh.lambda;
    CHECK(kernel_mode(sh, {r1, 0.0}, 0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(kernel_mode(sh, {50.0, 0.0}, 0) == doctest::Approx(-3.0).epsilon(1e-4));

    // translation modes exist at gamma = 0 and are odd in y
    const BubbleShape reg{0.0, 30.0};
    const Vec2 y{0.05, -0.02};
    const double z1 = kernel_mode(reg, y, 1);
    CHECK(z1 == doctest::Approx(4.0 * reg.lambda * y.x /
                                (1.0 + reg.lambda * reg.lambda * y.norm2())).epsilon(1e-12));
    CHECK(kernel_mode(reg, {-y.x, -y.y}, 1) == doctest::Approx(-z1).epsilon(1e-12));
    CHECK(kernel_mode(reg, y, 2) ==
          doctest::Approx(4.0 * reg.lambda * y.y /
                          (1.0 + reg.lambda * reg.lambda * y.norm2())).epsilon(1e-12));
}

TEST_CASE("dilation tail constant: closed values") {
    CHECK(dilation_tail_constant(1.0) == doctest::Approx(kPi / 2.0).epsilon(1e-12));
    CHECK(dilation_tail_constant(3.0) == doctest::Approx(kPi * std::sqrt(2.0) / 4.0).epsilon(1e-12));
    // (pi/(1+g)) csc(pi/(1+g)) at g = 1/2
    const double a = 1.5;
    CHECK(dilation_tail_constant(0.5) ==
          doctest::Approx((kPi / a) / std::sin(kPi / a)).epsilon(1e-12));
    CHECK_THROWS_AS(dilation_tail_constant(-0.5), ConfigError);
}

TEST_CASE("projection remainder scales") {
    const double rho = 8.0 * kPi, area = kPi;
    // gamma < 0: no constant shift, first order lambda^{-2(1+g)}
    const ScaleConstants neg = scale_constants(-0.5, 100.0, rho, area);
    CHECK(neg.eps0 == 0.0);
    CHECK(neg.eps1 == doctest::Approx(std::pow(100.0, -1.0)).epsilon(1e-12));

    // gamma = 0: eps0 = (rho/2) ln(lambda)/lambda^2/|S|, eps1 = lambda^{-2}
    const ScaleConstants zer = scale_constants(0.0, 100.0, rho, area);
    CHECK(zer.eps0 == doctest::Approx(0.5 * rho * std::log(100.0) / 1e4 / area).epsilon(1e-12));
    CHECK(zer.eps1 == doctest::Approx(1e-4).epsilon(1e-12));

    // gamma > 0: eps0 = (rho c(g)/4) lambda^{-2}/|S|, eps1 = lambda^{-2(1+g)} ln lambda
    const ScaleConstants pos = scale_constants(0.5, 100.0, rho, area);
    CHECK(pos.eps0 ==
          doctest::Approx(0.25 * rho * dilation_tail_constant(0.5) / 1e4 / area).epsilon(1e-12));
    CHECK(pos.eps1 == doctest::Approx(std::pow(100.0, -3.0) * std::log(100.0)).epsilon(1e-12));

    CHECK_THROWS_AS(scale_constants(1.0, 100.0, rho, area), ConfigError);
    CHECK_THROWS_AS(scale_constants(0.5, 0.5, rho, area), ConfigError);
}

TEST_CASE("closed-form suite verifies itself by quadrature") {
    for (double g : {0.5, 1.0, 2.0}) {
        const auto suite = closed_form_suite(g);
        CHECK(suite.size() >= 5);
        for (const ClosedForm& cf : suite) {
            INFO(cf.name, " at gamma ", g);
            CHECK(cf.verified);
            CHECK(std::abs(cf.quadrature - cf.reference) <=
                  1e-6 * std::max(1.0, std::abs(cf.reference)));
        }
    }
}

TEST_CASE("projected bubble: mass, zero mean, far field") {
    Setup s(0.05);
    const double g = 0.0;
    const double lam = 200.0;
    const Chart& ch = s.green->chart({0.0, 0.0});
    const ProjectedBubble pb(s.fem, s.green->profile(), ch, g, lam);

    CHECK(pb.mass() == doctest::Approx(8.0 * kPi).epsilon(5e-3));

    // P delta has zero mean by construction: the remainder's mean balances
    // the exact chart-quadrature integral of the core
    CHECK(s.fem->mean(pb.remainder()) ==
          doctest::Approx(-pb.core_integral() / s.fem->area()).epsilon(1e-6));

    // far field approaches rho G: the Green function carries the same
    // normalization, so the gap at distance ~ 0.7 is O(eps0 + eps1 + h^2)
    const Vec2 x{0.7, 0.1};
    const double gap = pb.eval_smooth(x) - 8.0 * kPi * s.green->eval_smooth(x, {0.0, 0.0});
    CHECK(std::abs(gap - scale_constants(g, lam, 8.0 * kPi, s.fem->area()).eps0) < 0.02);

    // peak value: core dominates, remainder is bounded
    CHECK(pb.eval({0.0, 0.0}) > 0.9 * pb.shape().peak());
}

TEST_CASE("boundary bubbles carry half the mass constant") {
    Setup s(0.05);
    const Vec2 bxi{std::cos(0.7), std::sin(0.7)};
    const ProjectedBubble pb(s.fem, s.green->profile(), s.green->chart(bxi), 0.5, 60.0);
    CHECK(pb.mass() == doctest::Approx(1.5 * 4.0 * kPi).epsilon(1e-2));
}

TEST_CASE("projected kernels: core normalization and Gram diagonals") {
    Setup s(0.05);
    const Chart& ch = s.green->chart({0.0, 0.0});
    const double g = 0.5;
    const double lam = std::pow(300.0, 1.0 / (1.0 + g));

    const ProjectedKernel dil(s.fem, s.green->profile(), ch, g, lam, 0);
    CHECK(dil.core({0.0, 0.0}) == doctest::Approx(4.0 * (1.0 + g)).epsilon(1e-10));
    // <PZ0, PZ0> -> (4/3) (1+g)^3 rho
    const double d0 = pair_h1(dil, dil);
    CHECK(d0 == doctest::Approx((4.0 / 3.0) * std::pow(1.5, 3) * 8.0 * kPi).epsilon(0.03));

    const ProjectedKernel tr1(s.fem, s.green->profile(), ch, 0.0, 300.0, 1);
    const ProjectedKernel tr2(s.fem, s.green->profile(), ch, 0.0, 300.0, 2);
    const double rho = 8.0 * kPi;
    CHECK(pair_h1(tr1, tr1) == doctest::Approx((4.0 / 3.0) * rho).epsilon(0.03));
    CHECK(pair_h1(tr2, tr2) == doctest::Approx((4.0 / 3.0) * rho).epsilon(0.03));
    // symmetry modes are H1-orthogonal
    CHECK(std::abs(pair_h1(tr1, tr2)) < 0.03 * (4.0 / 3.0) * rho);

    // translation modes require gamma = 0
    CHECK_THROWS_AS(ProjectedKernel(s.fem, s.green->profile(), ch, 0.5, lam, 1), ConfigError);
}

TEST_CASE("pairings agree with direct evaluation") {
    Setup s(0.06);
    const Chart& ch = s.green->chart({0.2, -0.1});
    const ProjectedBubble pb(s.fem, s.green->profile(), ch, 0.0, 80.0);
    const ProjectedKernel pk(s.fem, s.green->profile(), ch, 0.0, 80.0, 1);

    // <P delta, f> via the defining source vs the H1 pairing path
    const double via_pair = pair_h1(pk, pb);
    const double via_source = pk.pair_zero_mean([&](const Vec2& x) { return pb.eval(x); });
    CHECK(via_pair == doctest::Approx(via_source).epsilon(0.02));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "mfl/linearized.hpp"

using namespace mfl;

namespace {

struct Setup {
    std::shared_ptr<const FemSystem> fem;
    std::shared_ptr<const SingularData> data;
    std::shared_ptr<ReducedProblem> prob;
    AnsatzState state;

    explicit Setup(double h, double eps) {
        auto mesh = std::make_shared<const Mesh>(mesh_unit_disk(h));
        fem = std::make_shared<const FemSystem>(mesh, SurfaceModel::flat_unit_disk());
        auto green = std::make_shared<const GreenFunction>(fem);
        data = std::make_shared<const SingularData>(
            green, std::vector<std::pair<Vec2, double>>{}, Expr::parse("1"));
        prob = std::make_shared<ReducedProblem>(data, 1, 0, std::vector<int>{}, 0.05);
        state = prob->assemble(Eigen::VectorXd::Zero(2), eps);
    }
};

Eigen::VectorXd zero_mean_random(const FemSystem& fem, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    const int n = fem.mesh().num_vertices();
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = N(rng);
    // subtract the metric (lumped) mean
    double m = 0.0, tot = 0.0;
    for (int i = 0; i < n; ++i) {
        m += fem.lumped_mass()[i] * v[i];
        tot += fem.lumped_mass()[i];
    }
    v.array() -= m / tot;
    return v;
}

}  // namespace

TEST_CASE("kernel space: Gram structure and exact projector") {
    Setup s(0.05, 3e-3);
    const KernelSpace ks(*s.prob, s.state);
    REQUIRE(ks.size() == 2);  // two translation modes of one interior center

    const Eigen::MatrixXd& G = ks.gram();
    const double diag = (4.0 / 3.0) * 8.0 * kPi;
    CHECK(G(0, 0) == doctest::Approx(diag).epsilon(0.05));
    CHECK(G(1, 1) == doctest::Approx(diag).epsilon(0.05));
    CHECK(std::abs(G(0, 1)) < 0.05 * diag);
    CHECK(G(0, 1) == doctest::Approx(G(1, 0)).epsilon(1e-10));

    // idempotency and span annihilation
    const Eigen::VectorXd v = zero_mean_random(*s.fem, 11);
    const Eigen::VectorXd pv = ks.project(v);
    CHECK((ks.project(pv) - pv).norm() <= 1e-10 * std::max(1.0, pv.norm()));

    // the projector kills the nodal interpolants of the basis
    for (const ProjectedKernel& z : ks.basis()) {
        Eigen::VectorXd zn(s.fem->mesh().num_vertices());
        for (int i = 0; i < zn.size(); ++i) zn[i] = z.eval(s.fem->mesh().verts[i]);
        const double before = std::sqrt(zn.dot(s.fem->stiffness() * zn));
        const Eigen::VectorXd pz = ks.project(zn);
        const double after = std::sqrt(pz.dot(s.fem->stiffness() * pz));
        CHECK(after <= 1e-8 * before);
    }

    // components of a basis interpolant point at that basis element
    Eigen::VectorXd z0(s.fem->mesh().num_vertices());
    for (int i = 0; i < z0.size(); ++i) z0[i] = ks.basis()[0].eval(s.fem->mesh().verts[i]);
    const Eigen::VectorXd comp = ks.components(Field(s.fem->mesh_ptr(),
                                                     std::vector<double>(z0.data(), z0.data() + z0.size())));
    CHECK(comp[0] == doctest::Approx(1.0).epsilon(0.1));
    CHECK(std::abs(comp[1]) < 0.1);
}

TEST_CASE("load projection is adjoint to the state projection") {
    Setup s(0.05, 3e-3);
    const KernelSpace ks(*s.prob, s.state);
    const Eigen::VectorXd load = zero_mean_random(*s.fem, 3);

    const Eigen::VectorXd pl = ks.project_load(load);
    // annihilates the span...
    for (const ProjectedKernel& z : ks.basis()) {
        Eigen::VectorXd zn(s.fem->mesh().num_vertices());
        for (int i = 0; i < zn.size(); ++i) zn[i] = z.eval(s.fem->mesh().verts[i]);
        CHECK(std::abs(pl.dot(zn)) <= 1e-9 * load.norm() * zn.norm());
    }
    // ...and preserves the action on projected states
    const Eigen::VectorXd v = zero_mean_random(*s.fem, 5);
    const Eigen::VectorXd pv = ks.project(v);
    CHECK(pl.dot(pv) == doctest::Approx(load.dot(pv)).epsilon(1e-9));
}

TEST_CASE("linearized operator is symmetric on the zero-mean subspace") {
    Setup s(0.06, 3e-3);
    const LinearizedOperator op(*s.prob, s.state);
    CHECK(op.size() == s.fem->mesh().num_vertices());

    const Eigen::VectorXd u = zero_mean_random(*s.fem, 21);
    const Eigen::VectorXd v = zero_mean_random(*s.fem, 22);
    for (bool full : {false, true}) {
        const double a = v.dot(op.apply(u, full));
        const double b = u.dot(op.apply(v, full));
        CHECK(a == doctest::Approx(b).epsilon(1e-8));
    }
}

TEST_CASE("bubble weight approximates the full Jacobian as eps shrinks") {
    Setup coarse(0.06, 1e-2);
    Setup fine(0.06, 1e-3);
    const LinearizedOperator opc(*coarse.prob, coarse.state);
    const LinearizedOperator opf(*fine.prob, fine.state);

    const Eigen::VectorXd v = zero_mean_random(*coarse.fem, 31);
    std::vector<double> vals(v.data(), v.data() + v.size());
    const Field phi(coarse.fem->mesh_ptr(), vals);

    const double gc = opc.gap_norm(phi, 1.05);
    const double gf = opf.gap_norm(phi, 1.05);
    CHECK(gf > 0.0);
    CHECK(gf < gc);
}

TEST_CASE("nonlinear remainder is quadratic at small amplitude") {
    Setup s(0.06, 3e-3);
    const LinearizedOperator op(*s.prob, s.state);
    Eigen::VectorXd v = zero_mean_random(*s.fem, 41);
    v *= 0.05 / v.cwiseAbs().maxCoeff();
    std::vector<double> v1(v.size()), v2(v.size());
    for (int i = 0; i < v.size(); ++i) {
        v1[i] = v[i];
        v2[i] = 2.0 * v[i];
    }
    const double n1 = op.nonlinearity_norm(Field(s.fem->mesh_ptr(), v1), 1.05);
    const double n2 = op.nonlinearity_norm(Field(s.fem->mesh_ptr(), v2), 1.05);
    CHECK(n1 > 0.0);
    CHECK(n2 / n1 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("coercivity on the kernel complement beats the raw spectrum") {
    Setup s(0.06, 3e-3);
    const LinearizedOperator op(*s.prob, s.state);
    const KernelSpace ks(*s.prob, s.state);

    const double raw = coercivity_constant(op, nullptr);
    const double proj = coercivity_constant(op, &ks);
    CHECK(raw > 0.0);
    CHECK(proj > raw);

    // the projected constant degenerates only logarithmically: c / |ln eps|
    const double L = std::abs(std::log(s.state.eps));
    CHECK(proj * L > 0.05);
    CHECK(proj * L < 20.0);
}

TEST_CASE("Newton correction converges and quantizes the mass") {
    Setup s(0.05, 3e-3);
    const NewtonReport rep = newton_correct(*s.prob, s.state);
    CHECK(rep.converged);
    CHECK(rep.residual_norm <= 1e-9);
    CHECK(rep.iterations >= 1);
    CHECK(rep.phi_norm > 0.0);
    CHECK(rep.phi_norm < 1.0);
    REQUIRE(!rep.trace.empty());
    CHECK(rep.trace.front().residual > rep.trace.back().residual);
    for (const auto& row : rep.trace) {
        CHECK(row.damping > 0.0);
        CHECK(row.damping <= 1.0);
    }

    // the corrected mass hits the quantized target
    const double mass = s.prob->total_mass(s.state, &rep.correction);
    CHECK(mass == doctest::Approx(8.0 * kPi).epsilon(0.02));

    // the nodal solution is W + phi at the vertices
    for (int i : {3, 57, 211}) {
        const Vec2 x = s.fem->mesh().verts[i];
        CHECK(rep.solution[i] ==
              doctest::Approx(s.state.eval(x) + rep.correction[i]).epsilon(1e-9));
    }
}

TEST_CASE("Newton with a frozen kernel solves the auxiliary equation") {
    Setup s(0.05, 3e-3);
    const KernelSpace ks(*s.prob, s.state);
    NewtonOptions opts;
    opts.freeze = &ks;
    const NewtonReport rep = newton_correct(*s.prob, s.state, opts);
    CHECK(rep.converged);
    REQUIRE(rep.kernel_components.size() == 2);
    // the raw residual retains only kernel components; they are small but
    // need not vanish
    for (int k = 0; k < rep.kernel_components.size(); ++k)
        CHECK(std::abs(rep.kernel_components[k]) < 1.0);

    // the correction is (numerically) orthogonal to the kernel span
    const Eigen::VectorXd phi =
        Eigen::Map<const Eigen::VectorXd>(rep.correction.values().data(), rep.correction.size());
    CHECK((ks.project(phi) - phi).norm() <= 1e-7 * std::max(1.0, phi.norm()));
}

TEST_CASE("whole-plane model kernel: dimension probe") {
    const ModelKernelReport rep = model_kernel_dimension(0.5, 50.0, false);
    CHECK(rep.conclusive);
    CHECK(rep.dimension == 1);  // dilation mode only at a cone point

    CHECK_THROWS_AS(model_kernel_dimension(0.5, 30.0, false), ConfigError);
}

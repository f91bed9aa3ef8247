#pragma once

// P1 finite elements for Neumann problems on the conformal disk. The
// Dirichlet form is conformally invariant in two dimensions, so the
// stiffness matrix is metric-free; masses and loads carry the conformal
// area element. Solves are posed on the zero-mean subspace: the load is
// projected onto the compatible range, one degree of freedom is pinned by a
// rank-one SPD augmentation, and the result is shifted to the target mean.

#include <Eigen/Sparse>

#include <functional>
#include <memory>

#include "mfl/field.hpp"
#include "mfl/geometry.hpp"
#include "mfl/mesh.hpp"
#include "mfl/quadrature.hpp"

namespace mfl {

using SpMat = Eigen::SparseMatrix<double>;

class FemSystem {
public:
    FemSystem(std::shared_ptr<const Mesh> mesh, SurfaceModel model);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
    const SurfaceModel& model() const { return model_; }

    const SpMat& stiffness() const { return A_; }
    const std::vector<double>& lumped_mass() const { return lumped_; }
    double area() const { return area_; }

    double integral(const Field& u) const;
    double mean(const Field& u) const;

    /// L_i = \int f phi_i dv_g with curved-boundary corrections.
    std::vector<double> load_volume(const std::function<double(Vec2)>& f, int degree = 4) const;
    /// L_i = \oint g phi_i ds_g.
    std::vector<double> load_boundary(const std::function<double(Vec2)>& g, int order = 4) const;
    /// Scatter value*phi_i(x) into `out` (locates x, clamping if outside).
    void scatter(const Vec2& x, double value, std::vector<double>& out) const;

    /// Mass matrix of the form sum_q w_q weight(x_q) phi_a phi_b over plain
    /// triangle quadrature; the caller folds any metric factor into `weight`.
    SpMat assemble_weighted_mass(const std::function<double(Vec2)>& weight, int degree = 4) const;

    /// Solve -Lap_g u = f - mean_g(f) with natural boundary conditions and
    /// mean_g(u) = target_mean. `load` is a dual vector (phi_i moments).
    Field solve_zero_mean(const std::vector<double>& load, double target_mean = 0.0) const;

    /// H1 seminorm product (metric-free by conformal invariance).
    double h1_product(const Field& u, const Field& v) const;

    double linear_solve_tolerance() const { return 1e-10; }

private:
    std::shared_ptr<const Mesh> mesh_;
    SurfaceModel model_;
    SpMat A_;
    std::vector<double> lumped_;
    double area_ = 0.0;
    mutable std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> pinned_;
    mutable std::once_flag pinned_once_;
    void ensure_factorization() const;
};

}  // namespace mfl

#pragma once

// Linearization at the ansatz: the operator phi -> -Lap phi - w phi + mean
// correction with either the concentrated bubble weight
//   w_b = sum_k chi_k |y|^{2 gamma_k} e^{-conf} e^{delta_k}
// or the full Jacobian weight eps^2 K e^W, the translation kernel space and
// its projector, a smallest-singular-value probe, a damped Newton corrector
// for the full nonlinear problem, the criticality-transfer scan, and the
// whole-plane model kernel count.
//
// All matrices act on nodal coefficient vectors; solves and products are
// restricted to the zero-mean subspace where the operator is symmetric.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfl/reduction.hpp"

namespace mfl {

/// Translation modes PZ at the regular centers (two per interior center,
/// one tangential mode per boundary center). Exposes the H1 Gram computed
/// through the defining sources (diagonals approach (4/3) rho(xi)) and an
/// exactly idempotent stiffness-orthogonal projector built on the nodal
/// interpolants of the basis.
class KernelSpace {
public:
    KernelSpace(const ReducedProblem& prob, const AnsatzState& state);

    int size() const { return static_cast<int>(basis_.size()); }
    bool empty() const { return basis_.empty(); }
    const std::vector<ProjectedKernel>& basis() const { return basis_; }

    /// H1 Gram of the basis via the defining sources.
    const Eigen::MatrixXd& gram() const { return gram_; }

    /// Stiffness-orthogonal projection of a nodal vector onto the complement
    /// of the nodal kernel span (identity when the space is empty).
    Eigen::VectorXd project(const Eigen::VectorXd& v) const;
    Field project(const Field& f) const;
    /// Adjoint projection for load vectors (functionals): zeroes the action
    /// on the span while preserving the action on its complement.
    Eigen::VectorXd project_load(const Eigen::VectorXd& load) const;

    /// Components <PZ_k, f>_{H1} of a zero-mean field against the basis,
    /// solved through the Gram matrix.
    Eigen::VectorXd components(const Field& f) const;

private:
    const FemSystem* fem_ = nullptr;
    std::vector<ProjectedKernel> basis_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd onb_;  // nodal interpolants, stiffness-orthonormalized
};

/// Discrete linearized operator at an assembled state. Quadrature points are
/// frozen at construction: fine chart-polar rules inside each bubble support,
/// mesh-volume quadrature outside, each point carrying its interpolation
/// stencil so weights can be re-evaluated at a corrected field cheaply.
class LinearizedOperator {
public:
    LinearizedOperator(const ReducedProblem& prob, const AnsatzState& state);

    const ReducedProblem& problem() const { return *prob_; }
    const AnsatzState& state() const { return state_; }
    const FemSystem& fem() const { return *fem_; }
    int size() const { return n_; }

    /// Weighted mass matrices at phi = 0: the bubble weight and the full
    /// Jacobian weight eps^2 K e^W.
    const SpMat& bubble_mass() const { return mw_bubble_; }
    const SpMat& jacobian_mass() const { return mw_full_; }

    /// Mean-corrected action (A - Mw) phi + (colsum(Mw) phi / |S|) m_L on a
    /// nodal vector; `full` switches between the two weights.
    Eigen::VectorXd apply(const Eigen::VectorXd& phi, bool full) const;

    /// Load vector of -Lap_g W in weak form (defining sources minus their
    /// projection constants); exact by construction of the projected bubbles.
    const Eigen::VectorXd& ansatz_load() const { return ansatz_load_; }

    /// Nonlinear pieces at a corrected field phi (nodal): the load of
    /// eps^2 K e^{W+phi}, its total mass, and the tangent weighted mass.
    struct NonlinearAssembly {
        Eigen::VectorXd load;
        double mass = 0.0;
        SpMat tangent;
    };
    NonlinearAssembly assemble_at(const Eigen::VectorXd& phi, bool want_tangent) const;

    /// ||(full Jacobian - bubble operator) phi||_s with mean correction.
    double gap_norm(const Field& phi, double s) const;
    /// ||eps^2 K e^W (e^phi - 1 - phi)||_s with mean correction.
    double nonlinearity_norm(const Field& phi, double s) const;

private:
    const ReducedProblem* prob_;
    AnsatzState state_;
    std::shared_ptr<const FemSystem> fem_;
    int n_ = 0;

    struct QPt {
        Vec2 x;            // base-coordinate position
        double w = 0.0;    // plain measure weight (chart dy inside, dx outside)
        double log_full = 0.0;    // log density of eps^2 K e^W in that measure
        double log_bubble = 0.0;  // log density of the bubble weight (-inf outside)
        double log_metric = 0.0;  // log conformal factor (measure <-> function values)
        int verts[3] = {0, 0, 0};
        double bary[3] = {0.0, 0.0, 0.0};
    };
    std::vector<QPt> pts_;

    SpMat mw_bubble_, mw_full_;
    Eigen::VectorXd ansatz_load_;
    Eigen::VectorXd lumped_;  // metric lumped loads m_L

    double interp(const QPt& q, const Eigen::VectorXd& v) const {
        return v[q.verts[0]] * q.bary[0] + v[q.verts[1]] * q.bary[1] +
               v[q.verts[2]] * q.bary[2];
    }
    SpMat assemble_mass(const std::function<double(const QPt&)>& dens) const;
    double corrected_norm(const std::function<double(const QPt&)>& value, double s) const;
};

/// Smallest singular value of the mean-corrected bubble operator on the
/// zero-mean subspace, orthogonal (in H1) to the kernel space when one is
/// given; computed by blocked inverse iteration on the symmetric pencil.
/// Throws NumericError with the iterate log if the iteration stagnates.
double coercivity_constant(const LinearizedOperator& op, const KernelSpace* kspace);

struct NewtonOptions {
    int max_iterations = 25;
    double tolerance = 1e-9;      // dual-norm residual target
    int max_backtracks = 30;
    const KernelSpace* freeze = nullptr;  // project steps off the kernel span
};

struct NewtonReport {
    Field solution;      // nodal interpolant of W + phi (diagnostic)
    Field correction;    // phi
    double phi_norm = 0.0;        // H1 seminorm of phi
    double residual_norm = 0.0;   // dual (H^-1-type) norm at exit
    int iterations = 0;
    bool converged = false;
    struct TraceRow {
        int iter;
        double residual;
        double damping;
        double phi_norm;
    };
    std::vector<TraceRow> trace;
    Eigen::VectorXd kernel_components;  // residual components on the kernel basis
};

/// Damped Newton solve of the discrete -Lap u = eps^2 K e^u - mean,
/// natural boundary data, zero mean, with u = W + phi and phi nodal.
NewtonReport newton_correct(const ReducedProblem& prob, const AnsatzState& state,
                            const NewtonOptions& opts = {});

struct CritScanReport {
    int n = 0;                      // grid is n x n
    double cell = 0.0;              // grid spacing
    std::vector<Eigen::VectorXd> nodes;
    std::vector<double> reduced_energy;   // corrected-energy values
    std::vector<double> f_values;
    std::vector<char> valid;              // Newton succeeded at the node
    int argmin_energy_grad = -1;          // interior node with smallest |dE|
    int argmin_f_grad = -1;               // interior node with smallest |dF|
    bool stationary_within_cell = false;
    double grad_discrepancy = 0.0;        // aggregate |dE - (-dF/2)| / |dF/2|
};

/// Scan a square grid of configurations around `center`, Newton-correct with
/// translation modes frozen, and compare the corrected-energy landscape with
/// the reduced function: grid-stationarity transfer and the derivative
/// identity dE = -dF/2 + o(1). Only supported for two-dimensional
/// configuration spaces (one movable interior center).
CritScanReport criticality_equivalence_check(const ReducedProblem& prob,
                                             const Eigen::VectorXd& center, double eps,
                                             double half_width, int n = 5, int jobs = 1);

struct ModelKernelReport {
    int dimension = 0;
    bool conclusive = false;
    std::vector<double> gaps;  // sorted |mu - 1| for the nearest eigenvalues
};

/// Count eigenvalues mu near 1 of -Lap phi = mu 8(1+g)^2 |y|^{2g}
/// (1+|y|^{2(1+g)})^{-2} phi on the truncated plane (or half-plane, Neumann
/// throughout): the kernel dimension of the model linearization.
ModelKernelReport model_kernel_dimension(double gamma, double radius, bool half,
                                         double gap_tol = 0.05);

}  // namespace mfl

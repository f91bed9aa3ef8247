#pragma once

// Finite-dimensional reduction machinery: blow-up configurations, the
// per-center scaling d_i and concentration lambda_i(eps), the ansatz
// W = sum_i P delta_i, the reduced function F on regular-center positions,
// critical-point search with a stability probe, energies, the weak residual,
// and mass quantization.
//
// A configuration consists of p movable interior regular centers, q movable
// boundary regular centers (one tangential degree of freedom each), and a
// fixed subset of the cone points carrying their exponents. The reduced
// function is
//   F = sum_i 2(1+g_i) rho_i ln K_i(xi_i) + sum_i (1+g_i)^2 rho_i^2 R(xi_i)
//     + sum_{i != j} (1+g_i)(1+g_j) rho_i rho_j G(xi_i, xi_j),
// and the scalings are
//   d_i = (1/(8(1+g_i)^2)) exp[ (1+g_i) rho_i R(xi_i)
//         + sum_{j != i} (1+g_j) rho_j G(xi_i, xi_j) + ln K_i(xi_i) ],
//   lambda_i = (d_i eps^2)^{-1/(2(1+g_i))}.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "mfl/bubbles.hpp"
#include "mfl/singular.hpp"

namespace mfl {

struct ReducedCenter {
    Vec2 pos;
    double gamma = 0.0;   // 0 at regular centers
    bool boundary = false;
    double rho = 8.0 * kPi;
};

/// The ansatz at a fixed configuration and eps. Immutable once assembled.
struct AnsatzState {
    double eps = 0.0;
    double rho_star = 0.0;
    double F_value = 0.0;                 // reduced function at the configuration
    std::vector<ReducedCenter> centers;   // regular centers first, then singular
    std::vector<double> d;                // scaling constants
    std::vector<double> lambda;           // concentrations
    std::vector<ProjectedBubble> bubbles;

    double eval(const Vec2& x) const;         // W(x)
    double eval_smooth(const Vec2& x) const;  // smooth-remainder variant
};

struct SearchReport {
    Eigen::VectorXd point;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool escaped = false;     // search left the admissible set
    int stable_count = 0;     // perturbation probes that returned inside the ball
    int n_pert = 0;
    double sigma = 0.0;       // probe ball radius
};

struct ResidualReport {
    Field pointwise;   // residual density sampled at mesh vertices (diagnostic)
    double norm_s = 0.0;
    double s = 1.05;
};

class ReducedProblem {
public:
    /// subset: indices into data->points() selected as blow-up centers.
    ReducedProblem(std::shared_ptr<const SingularData> data, int p, int q,
                   std::vector<int> subset, double r0 = 0.05);

    const SingularData& data() const { return *data_; }
    const GreenFunction& green() const { return data_->green(); }
    int num_interior() const { return p_; }
    int num_boundary() const { return q_; }
    int num_singular() const { return static_cast<int>(subset_.size()); }
    int dof() const { return 2 * p_ + q_; }
    double separation_radius() const { return r0_; }
    double rho_star() const { return rho_star_; }

    /// Pack/unpack regular-center coordinates: p (x,y) pairs, then q angles.
    std::vector<ReducedCenter> decode(const Eigen::VectorXd& u) const;
    Eigen::VectorXd encode_interior(const std::vector<Vec2>& interior,
                                    const std::vector<double>& boundary_angles) const;

    /// Separation/admissibility rules; throws ConfigError on violation.
    void validate(const Eigen::VectorXd& u) const;
    bool is_admissible(const Eigen::VectorXd& u) const;

    double scaling_d(int i, const std::vector<ReducedCenter>& centers) const;

    double F(const Eigen::VectorXd& u) const;
    /// Fourth-order central differences of F (the production gradient).
    Eigen::VectorXd grad_F(const Eigen::VectorXd& u) const;
    /// Plain second-order central differences (independent cross-check).
    Eigen::VectorXd grad_F_fd(const Eigen::VectorXd& u, double step) const;

    SearchReport find_critical(const Eigen::VectorXd& start, int n_pert = 8,
                               double eta = 1e-3, std::uint64_t seed = 1234) const;

    AnsatzState assemble(const Eigen::VectorXd& u, double eps) const;

    /// E_eps(W) = 1/2 int |grad W|^2 - eps^2 int K e^W.
    double energy(const AnsatzState& state) const;
    /// E_eps(W) minus its second-order expansion
    /// (3 ln 2 - 2) rho* - 2 rho* ln(eps) + sum 2(1+g) rho ln(1+g) - F/2.
    double expansion_gap(const AnsatzState& state) const;
    /// J_rho(W + phi) = 1/2 ||grad(W+phi)||^2 - rho ln int K e^{W+phi}.
    double j_rho(const AnsatzState& state, const Field* phi, double rho) const;
    /// Predicted eps -> 0 limit of J_{rho*} at the corrected solution:
    /// -rho* - rho* ln(rho*/8) + sum 2(1+g) rho ln(1+g) - F/2.
    double j_level_prediction(const AnsatzState& state) const;

    double total_mass(const AnsatzState& state) const;
    /// Mass with an additive correction field: eps^2 int K e^{W+phi}.
    double total_mass(const AnsatzState& state, const Field* phi) const;

    ResidualReport residual(const AnsatzState& state, double s = 1.05) const;

    /// eps^2 K(x) e^{W(x)+phi(x)} pointwise in shifted log-space.
    double density(const AnsatzState& state, const Field* phi, const Vec2& x) const;

    /// Integral over the surface (metric measure) of a concentration-aware
    /// integrand: fine chart-polar quadrature inside each bubble support,
    /// mesh quadrature outside. The integrand receives x, the index k of the
    /// enclosing bubble support (-1 outside all supports), and the chart
    /// radius |y_k(x)| (-1 outside); concentration factors |y|^{2 gamma} must
    /// be part of f (the inner quadrature is graded for them).
    double split_integral(const AnsatzState& state,
                          const std::function<double(const Vec2&, int, double)>& f) const;

private:
    std::shared_ptr<const SingularData> data_;
    int p_ = 0, q_ = 0;
    std::vector<int> subset_;
    double r0_ = 0.05;
    double rho_star_ = 0.0;
    std::vector<ReducedCenter> singular_centers_;
    mutable double singular_F_part_ = 0.0;   // center-position-independent terms
    mutable bool singular_F_ready_ = false;

    double F_centers(const std::vector<ReducedCenter>& centers) const;
    void validate_centers(const std::vector<ReducedCenter>& centers) const;
    double singular_F_part() const;
};

}  // namespace mfl

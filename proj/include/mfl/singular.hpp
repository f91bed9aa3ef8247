#pragma once

// Singular data of the problem: marked points with admissible weights, the
// logarithmic potential h_Q, the vanishing weight K = V e^{-h_Q}, the smooth
// local factors K_i with the |y|^(2 gamma) component removed, the resonant
// mass values, and the boundary geodesic-curvature transform.

#include <memory>
#include <utility>
#include <vector>

#include "mfl/expr.hpp"
#include "mfl/green.hpp"

namespace mfl {

class SingularData {
public:
    struct Point {
        Vec2 pos;
        double gamma;
        bool boundary;
        double rho;  // 8*pi interior, 4*pi boundary
    };

    /// `tilde_K` is the user weight; with `transform_boundary` the effective
    /// potential is V = 2 tilde_K e^h where h is the curvature shift solving
    /// -Lap_g h = (2 \oint k_g ds)/|S|, dnu h = -2 k_g, mean 0.
    SingularData(std::shared_ptr<const GreenFunction> green,
                 const std::vector<std::pair<Vec2, double>>& points, Expr tilde_K,
                 bool transform_boundary = true);

    const GreenFunction& green() const { return *green_; }
    const std::shared_ptr<const GreenFunction>& green_ptr() const { return green_; }
    const std::vector<Point>& points() const { return pts_; }
    /// Index of the singular point at xi (within tol), or -1.
    int find_point(const Vec2& xi, double tol = 1e-9) const;

    const Field& curvature_shift() const { return shift_; }
    double V(const Vec2& x) const;
    double log_V(const Vec2& x) const;

    /// h_Q(x) = sum (rho gamma / 2) G(x, xi) as an exact closure.
    double hQ(const Vec2& x) const;
    /// Discrete representative of h_Q (weak-form delta solve on the mesh).
    Field hQ_field() const;

    double K(const Vec2& x) const { return std::exp(log_K(x)); }
    double log_K(const Vec2& x) const { return log_V(x) - hQ(x); }

    /// Smooth-evaluation variants (quadratic-fit field evaluation), suitable
    /// for finite differencing in x.
    double log_V_smooth(const Vec2& x) const;
    double hQ_smooth(const Vec2& x) const;
    double log_K_smooth(const Vec2& x) const { return log_V_smooth(x) - hQ_smooth(x); }

    /// ln K_i for a blow-up center at xi: the factor |y_xi|^(2 gamma(xi)) is
    /// removed, leaving a function smooth across xi. x must lie in the chart
    /// of xi when xi is singular; regular centers reduce to ln K.
    double log_Ki(const Vec2& x, const Vec2& xi) const;
    /// Removable limit ln K_i(xi).
    double log_Ki_center(const Vec2& xi) const;
    /// Cross-check of the removable limit by linear extrapolation of
    /// ln K - 2 gamma ln|y| along `rays` chart directions; returns the mean
    /// and writes the relative spread across rays.
    double log_Ki_ray_check(const Vec2& xi, int rays, double* rel_spread) const;

private:
    std::shared_ptr<const GreenFunction> green_;
    std::vector<Point> pts_;
    Expr tilde_K_;
    double v_factor_ = 1.0;  // 2 with the boundary transform, 1 without
    Field shift_;            // zero field when the transform is disabled
};

/// Curvature shift h of a model: -Lap_g h = (2 \oint k_g ds_g)/|S|_g,
/// dnu h = -2 k_g, zero mean. Flat disk: h = 1/2 - |x|^2.
Field geodesic_shift(const FemSystem& fem);

struct ResonanceTriple {
    int p = 0;                      // interior regular centers
    int q = 0;                      // boundary regular centers
    std::vector<int> subset;        // indices into SingularData::points()
    std::vector<double> gamma_seq;  // 0 x (p+q), then gamma of each subset point
};

struct ResonanceIndex {
    int m = -1;  // position in the sorted resonant set (-1: value supplied directly)
    double rho_star = 0.0;
    std::vector<ResonanceTriple> triples;
};

/// All resonant mass values 4 pi (2p + q) + sum_{Q1} (1+gamma) rho in (0, cap],
/// sorted and deduplicated at 1e-9. Distinct generator triples that collide
/// within 1e-6 are reported in `collisions` (pairs of values), never merged.
std::vector<double> resonant_set(const SingularData& data, double cap,
                                 std::vector<std::pair<double, double>>* collisions = nullptr);

/// Exhaustive list of triples realizing the given mass value (tol 1e-12 scale).
ResonanceIndex enumerate_index_sets(const SingularData& data, double rho_star);

}  // namespace mfl

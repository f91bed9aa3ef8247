#pragma once

// Surface models and normalized isothermal charts.
//
// A model is the closed unit disk carrying either the flat metric or a
// conformal metric exp(psi(x)) * <.,.> with smooth user-supplied psi.
// chart_at(xi) returns coordinates y with y(xi) = 0 in which the metric is
// exp(phi(y)) * <.,.> and
//   phi(0) = 0,
//   grad phi(0) = (0, 0)            for interior xi,
//   grad phi(0) = (0, -2 k_g(xi))   for boundary xi (boundary maps to {y2 = 0},
//                                    interior to {y2 > 0}).
// Interior charts are translations composed with a quadratic conformal
// normalization; boundary charts are Moebius boundary-flattening maps with the
// same normalization. Chart images are the disk (interior) or half-disk
// (boundary) of radius 2*r where r = Chart::radius().

#include <complex>
#include <cstdint>
#include <optional>

#include "mfl/common.hpp"
#include "mfl/expr.hpp"

namespace mfl {

/// Radial C^2 cutoff profile: 1 on [0, plateau_end], 0 on [2, inf),
/// quintic smoothstep in between. plateau_end in [1, 1.9].
class CutoffProfile {
public:
    explicit CutoffProfile(double plateau_end = 1.6);

    double value(double s) const;
    double deriv(double s) const;
    double second(double s) const;
    double plateau_end() const { return s0_; }

private:
    double s0_;
};

class Chart {
public:
    Vec2 center() const { return xi_; }
    bool is_boundary() const { return boundary_; }
    double radius() const { return r_; }           ///< r_xi; image radius is 2 r_xi
    double rho() const { return boundary_ ? 4.0 * kPi : 8.0 * kPi; }

    Vec2 to_chart(const Vec2& x) const;
    Vec2 from_chart(const Vec2& y) const;
    /// Chart image of x when x lies in the chart domain, else false. Safe on
    /// arbitrary surface points (to_chart is only valid inside the domain).
    bool try_to_chart(const Vec2& x, Vec2& y) const;
    /// Conformal exponent phi(y) of the pulled-back metric.
    double log_factor(const Vec2& y) const;
    /// Base-map scale |a| (|dy/dx| at the center is |a| for interior charts).
    double scale() const { return std::abs(a_); }

    /// Cutoff chi_xi(x) = profile(4 |y_xi(x)| / r_xi) as a function of s = 4|y|/r.
    double cutoff(double abs_y, const CutoffProfile& prof) const {
        return prof.value(4.0 * abs_y / r_);
    }

private:
    friend class SurfaceModel;
    using C = std::complex<double>;

    Vec2 xi_;
    bool boundary_ = false;
    double r_ = 0.0;
    double mcap_ = 0.0;  // chart domain radius in base-map coordinates
    // interior: y = a (z - z0) + b (z - z0)^2
    // boundary: y = alpha m + beta m^2 with m = 2i (1 - conj(u) z)/(1 + conj(u) z), u = z0
    C z0_;
    C a_{1.0, 0.0}, b_{0.0, 0.0};
    const class SurfaceModel* model_ = nullptr;

    C base_map(const C& z) const;       // (z - z0) or Moebius m(z)
    C base_inverse(const C& m) const;
    C normalized(const C& m) const { return a_ * m + b_ * m * m; }
    C invert_normalized(const C& y) const;
};

enum class ModelKind { FlatDisk, ConformalDisk };

class SurfaceModel {
public:
    static SurfaceModel flat_unit_disk();
    static SurfaceModel conformal_disk(const Expr& psi);

    ModelKind kind() const { return kind_; }
    bool is_flat() const { return kind_ == ModelKind::FlatDisk; }

    /// Conformal exponent psi(x) of the metric in base coordinates (0 when flat).
    double log_conformal(const Vec2& x) const;
    Vec2 grad_log_conformal(const Vec2& x) const;

    double area() const { return area_; }                   ///< |Sigma|_g
    double boundary_length() const { return bdry_len_; }    ///< |dSigma|_g
    /// Geodesic curvature of the boundary circle at angle theta.
    double boundary_curvature(double theta) const;

    /// Normalized isothermal chart centered at xi. Points with ||xi|-1| <= snap_tol
    /// are treated as boundary points (snapped onto the circle).
    Chart chart_at(const Vec2& xi) const;

    std::uint64_t hash() const;

    static constexpr double snap_tol = 1e-9;

private:
    SurfaceModel() = default;

    ModelKind kind_ = ModelKind::FlatDisk;
    std::optional<Expr> psi_;
    double area_ = kPi;
    double bdry_len_ = 2.0 * kPi;
};

}  // namespace mfl

#pragma once

// Singular flat bubbles, their zero-mean projections onto the surface, and
// the associated approximate-kernel elements.
//
// The model profile with cone exponent gamma and concentration lambda is
//   delta(y) = ln( 8 (1+g)^2 lambda^{2(1+g)} / (1 + lambda^{2(1+g)} |y|^{2(1+g)})^2 ),
// written in the normalized chart at the center. Its zero-mean Neumann
// projection P delta is represented semi-analytically as
//   P delta = chi * (delta - far_shift) + v,
// where chi is the chart cutoff, far_shift = ln(8 (1+g)^2 lambda^{-2(1+g)})
// is the additive constant delta carries at unit distance, and the remainder
// v is a single smooth finite element solve whose data live on the annulus
// where chi varies. This keeps the lambda-scale concentration out of the mesh
// entirely: concentrated integrals are done by chart-polar quadrature, and v
// converges at the regular FEM rate uniformly in lambda.
//
// Kernel elements Z (one dilation mode, translation modes at regular centers)
// are projected the same way; their cores decay, so the remainders are small.

#include <functional>
#include <memory>

#include "mfl/elliptic.hpp"
#include "mfl/quadrature.hpp"

namespace mfl {

/// Radial bubble profile in chart coordinates.
struct BubbleShape {
    double gamma = 0.0;
    double lambda = 10.0;

    /// t = (lambda |y|)^{2(1+gamma)}; the profile core sits at t <= 1.
    double t_of(double abs_y) const;
    double value(double abs_y) const;   ///< delta(|y|)
    double dvalue(double abs_y) const;  ///< d delta / d|y|
    double far_shift() const;           ///< ln(8 (1+g)^2 lambda^{-2(1+g)})
    double peak() const;                ///< delta(0)
};

/// Scaled kernel modes of the linearized profile equation.
/// mode 0: dilation 2(1+g)(1-t)/(1+t); modes 1,2: translations
/// 4 lambda y_j / (1 + lambda^2 |y|^2) (admissible only when gamma = 0).
double kernel_mode(const BubbleShape& shape, const Vec2& y, int mode);

/// Asymptotic expansion scales of the projection remainders.
struct ScaleConstants {
    double eps0 = 0.0;  ///< constant shift in the far-field expansion
    double eps1 = 0.0;  ///< first neglected order
};

/// c(g) = int_0^inf ln(1 + s^{-(1+g)}) ds = (pi/(1+g)) csc(pi/(1+g)), g > 0.
double dilation_tail_constant(double gamma);

/// eps0/eps1 for a center with polar weight rho_xi on a surface of the given
/// area. Three-way split on the sign of gamma.
ScaleConstants scale_constants(double gamma, double lambda, double rho_xi, double area);

/// Reference integrals of the model profile over the plane, with closed forms
/// and independent quadrature values.
struct ClosedForm {
    const char* name;
    double reference;   ///< closed-form value
    double quadrature;  ///< adaptive quadrature of the defining integral
    bool verified;      ///< relative agreement to 1e-8
};
std::vector<ClosedForm> closed_form_suite(double gamma);

/// Zero-mean Neumann projection of a bubble, core + smooth remainder.
class ProjectedBubble {
public:
    ProjectedBubble(std::shared_ptr<const FemSystem> fem, CutoffProfile profile,
                    const Chart& chart, double gamma, double lambda);

    const BubbleShape& shape() const { return shape_; }
    const Chart& chart() const { return chart_; }
    const FemSystem& fem() const { return *fem_; }

    /// Concentrated source mass: int chi |y|^{2g} e^{delta} dy -> (1+g) rho(xi).
    double mass() const { return mass_; }
    /// int chi (delta - far_shift) dv_g (fixes the remainder's mean).
    double core_integral() const { return core_integral_; }
    const Field& remainder() const { return remainder_; }

    double core(const Vec2& x) const;  ///< chi * (delta - far_shift)
    double eval(const Vec2& x) const { return core(x) + remainder_.eval(x); }
    /// Smooth-remainder evaluation for pointwise comparisons off mesh nodes.
    double eval_smooth(const Vec2& x) const { return core(x) + remainder_.eval_smooth(x); }

    /// Quadrature of the defining source chi |y|^{2g} e^{delta}: points in
    /// base coordinates, weights including the source density (chart measure).
    const QuadRule& source_rule() const { return source_; }

    /// <P delta, f> for zero-mean f, via the defining equation:
    /// integral of the source against f minus the mean correction (which
    /// drops for zero-mean f).
    double pair_zero_mean(const std::function<double(const Vec2&)>& f) const;

private:
    std::shared_ptr<const FemSystem> fem_;
    CutoffProfile prof_;
    Chart chart_;
    BubbleShape shape_;
    QuadRule source_;
    double mass_ = 0.0;
    double core_integral_ = 0.0;
    Field remainder_;
};

/// Zero-mean projection PZ of a kernel mode.
class ProjectedKernel {
public:
    ProjectedKernel(std::shared_ptr<const FemSystem> fem, CutoffProfile profile,
                    const Chart& chart, double gamma, double lambda, int mode);

    const BubbleShape& shape() const { return shape_; }
    const Chart& chart() const { return chart_; }
    int mode() const { return mode_; }

    /// Core part: mode 0 -> chi (Z + 2(1+g)) = 4(1+g) chi/(1+t); modes 1,2 -> chi Z.
    double core(const Vec2& x) const;
    double eval(const Vec2& x) const { return core(x) + remainder_.eval(x); }
    double eval_smooth(const Vec2& x) const { return core(x) + remainder_.eval_smooth(x); }
    const Field& remainder() const { return remainder_; }

    /// Source quadrature with density chi |y|^{2g} e^{delta} Z.
    const QuadRule& source_rule() const { return source_; }
    double pair_zero_mean(const std::function<double(const Vec2&)>& f) const;

private:
    std::shared_ptr<const FemSystem> fem_;
    CutoffProfile prof_;
    Chart chart_;
    BubbleShape shape_;
    int mode_ = 0;
    QuadRule source_;
    Field remainder_;
};

/// H1 pairings through the defining data (both arguments zero-mean).
double pair_h1(const ProjectedBubble& a, const ProjectedBubble& b);
double pair_h1(const ProjectedKernel& a, const ProjectedBubble& b);
double pair_h1(const ProjectedKernel& a, const ProjectedKernel& b);

}  // namespace mfl

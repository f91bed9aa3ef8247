#pragma once

// Green function of the metric Laplacian with natural boundary conditions,
// normalized to zero mean: -Lap_g G(., xi) = delta_xi - 1/|S|, with the polar
// weight rho = 8*pi at interior poles and 4*pi at boundary poles. Since the
// base coordinates are conformal on the whole disk, ln|x - xi| is globally
// harmonic and G splits without any cutoff as
//   G = -(4/rho) * ln|x - xi|  +  H(., xi),
// where the regular part H is smooth on the closed disk: it solves a Neumann
// problem whose flux data is the analytic normal derivative of the log term
// (identically (4/rho)/2 along the circle when the pole sits on it). The
// Robin function is the value R(xi) = H(xi, xi).

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "mfl/elliptic.hpp"
#include "mfl/quadrature.hpp"

namespace mfl {

class GreenFunction {
public:
    explicit GreenFunction(std::shared_ptr<const FemSystem> fem,
                           CutoffProfile profile = CutoffProfile());

    const FemSystem& fem() const { return *fem_; }
    const std::shared_ptr<const FemSystem>& fem_ptr() const { return fem_; }
    const CutoffProfile& profile() const { return prof_; }

    /// Normalized chart at a pole (cached; boundary poles snap to the circle).
    const Chart& chart(const Vec2& xi) const;
    /// Polar weight: 8*pi for interior poles, 4*pi for boundary poles.
    double rho(const Vec2& xi) const;

    /// The singular part -(4/rho) ln|x - xi| (global; throws at the pole).
    double singular_part(const Vec2& x, const Vec2& xi) const;
    /// Regular part H(., xi) as a mesh field. Cached per pole with bounded
    /// eviction; the returned handle stays valid after eviction.
    std::shared_ptr<const Field> regular_part(const Vec2& xi) const;
    double eval(const Vec2& x, const Vec2& xi) const;
    /// Variant with the regular part evaluated by local quadratic fit;
    /// smooth enough in x for finite differencing of configuration data.
    double eval_smooth(const Vec2& x, const Vec2& xi) const;
    /// Robin value R(xi) = H(xi, xi), evaluated by local quadratic fit.
    double robin(const Vec2& xi) const;

    /// Mean of the singular part over the surface (used to pin mean(G) = 0).
    double singular_mean(const Vec2& xi) const;

    /// Optional on-disk cache of regular-part fields.
    void set_cache_dir(std::string dir) { cache_dir_ = std::move(dir); }

private:
    std::shared_ptr<const FemSystem> fem_;
    CutoffProfile prof_;
    std::string cache_dir_;

    struct Key {
        std::uint64_t xb, yb;
        bool operator<(const Key& o) const { return std::tie(xb, yb) < std::tie(o.xb, o.yb); }
    };
    static Key key_of(const Vec2& xi);
    mutable std::mutex mtx_;
    mutable std::map<Key, std::unique_ptr<Chart>> charts_;
    mutable std::map<Key, std::shared_ptr<const Field>> regular_;
    // Volume rule and conformal weights at its nodes, shared by every pole's
    // mean computation (built on first use, guarded by mtx_).
    mutable std::optional<QuadRule> mean_rule_;
    mutable std::vector<double> mean_weights_;

    Field solve_regular(const Chart& ch) const;
    std::string cache_path(const Chart& ch) const;
    const QuadRule& mean_rule() const;
};

/// Closed-form zero-mean Neumann Green function of the flat unit disk
/// (one formula covers interior and boundary poles).
namespace disk_oracle {
double green(const Vec2& x, const Vec2& xi);
double robin(const Vec2& xi);
}  // namespace disk_oracle

}  // namespace mfl

#include "mfl/geometry.hpp"

#include <cmath>

namespace mfl {

// ------------------------------------------------------------- CutoffProfile

CutoffProfile::CutoffProfile(double plateau_end) : s0_(plateau_end) {
    if (!(s0_ >= 1.0 && s0_ <= 1.9))
        throw ConfigError("cutoff plateau end must lie in [1, 1.9]");
}

namespace {
// quintic smoothstep and derivatives: S(0)=0, S(1)=1, S'=S''=0 at both ends
inline double smooth5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double smooth5_d(double t) { return 30.0 * t * t * (1.0 + t * (-2.0 + t)); }
inline double smooth5_dd(double t) { return 60.0 * t * (1.0 + t * (-3.0 + 2.0 * t)); }
}  // namespace

double CutoffProfile::value(double s) const {
    s = std::abs(s);
    if (s <= s0_) return 1.0;
    if (s >= 2.0) return 0.0;
    return smooth5((2.0 - s) / (2.0 - s0_));
}

double CutoffProfile::deriv(double s) const {
    s = std::abs(s);
    if (s <= s0_ || s >= 2.0) return 0.0;
    const double d = 2.0 - s0_;
    return -smooth5_d((2.0 - s) / d) / d;
}

double CutoffProfile::second(double s) const {
    s = std::abs(s);
    if (s <= s0_ || s >= 2.0) return 0.0;
    const double d = 2.0 - s0_;
    return smooth5_dd((2.0 - s) / d) / (d * d);
}

// --------------------------------------------------------------------- Chart

Chart::C Chart::base_map(const C& z) const {
    if (!boundary_) return z - z0_;
    const C u = std::conj(z0_) * z;
    return C(0.0, 2.0) * (1.0 - u) / (1.0 + u);
}

Chart::C Chart::base_inverse(const C& m) const {
    if (!boundary_) return m + z0_;
    const C i(0.0, 1.0);
    return z0_ * (i - 0.5 * m) / (i + 0.5 * m);
}

Chart::C Chart::invert_normalized(const C& y) const {
    if (std::abs(b_) == 0.0) return y / a_;
    // Newton for a m + b m^2 = y from m = y/a; quadratic map, fast convergence.
    C m = y / a_;
    for (int it = 0; it < 60; ++it) {
        const C f = a_ * m + b_ * m * m - y;
        const C df = a_ + 2.0 * b_ * m;
        if (std::abs(df) < 1e-14)
            throw NumericError("chart inversion hit a critical point");
        const C step = f / df;
        m -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(m))) return m;
    }
    throw NumericError("chart inversion did not converge");
}

Vec2 Chart::to_chart(const Vec2& x) const {
    const C y = normalized(base_map(C(x.x, x.y)));
    return {y.real(), y.imag()};
}

bool Chart::try_to_chart(const Vec2& x, Vec2& y) const {
    const C z(x.x, x.y);
    if (boundary_) {
        // Guard the Moebius pole at the antipodal boundary point.
        if (std::abs(1.0 + std::conj(z0_) * z) < 1e-6) return false;
    }
    const C m = base_map(z);
    if (std::abs(m) >= mcap_) return false;
    const C yc = normalized(m);
    y = {yc.real(), yc.imag()};
    return true;
}

Vec2 Chart::from_chart(const Vec2& y) const {
    const C z = base_inverse(invert_normalized(C(y.x, y.y)));
    return {z.real(), z.imag()};
}

double Chart::log_factor(const Vec2& yv) const {
    const C y(yv.x, yv.y);
    const C m = invert_normalized(y);
    const C z = base_inverse(m);
    // dx/dy = (base_inverse)'(m) * 1/(a + 2 b m)
    double log_dxdy = -std::log(std::abs(a_ + 2.0 * b_ * m));
    if (boundary_) {
        // |d base_inverse / dm| = 1/|i + m/2|^2
        log_dxdy += -2.0 * std::log(std::abs(C(0.0, 1.0) + 0.5 * m));
    }
    const double psi = model_ ? model_->log_conformal({z.real(), z.imag()}) : 0.0;
    return psi + 2.0 * log_dxdy;
}

// -------------------------------------------------------------- SurfaceModel

SurfaceModel SurfaceModel::flat_unit_disk() {
    SurfaceModel m;
    m.kind_ = ModelKind::FlatDisk;
    m.area_ = kPi;
    m.bdry_len_ = 2.0 * kPi;
    return m;
}

namespace {
// Fixed high-order polar quadrature over the unit disk (for model constants).
template <typename F>
double disk_quad(F&& f) {
    // Gauss-Legendre 48 points in r mapped by r = t (weight r dr), 128 angles.
    constexpr int nr = 48, nt = 128;
    static std::vector<double> rx, rw;
    if (rx.empty()) {
        // Newton on Legendre polynomials
        rx.resize(nr);
        rw.resize(nr);
        for (int i = 0; i < nr; ++i) {
            double t = std::cos(kPi * (i + 0.75) / (nr + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= nr; ++k) {
                    double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = nr * (t * p1 - p0) / (t * t - 1.0);
                double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-15) break;
            }
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= nr; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = nr * (t * p1 - p0) / (t * t - 1.0);
            rx[i] = 0.5 * (t + 1.0);
            rw[i] = 1.0 / ((1.0 - t * t) * dp * dp);  // weight/2 scaled to [0,1]
        }
    }
    double total = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = rx[i];
        double ring = 0.0;
        for (int j = 0; j < nt; ++j) {
            const double th = 2.0 * kPi * j / nt;
            ring += f(Vec2{r * std::cos(th), r * std::sin(th)});
        }
        total += rw[i] * r * ring * (2.0 * kPi / nt);
    }
    return total;
}
}  // namespace

SurfaceModel SurfaceModel::conformal_disk(const Expr& psi) {
    SurfaceModel m;
    m.kind_ = ModelKind::ConformalDisk;
    m.psi_ = psi;
    m.area_ = disk_quad([&](const Vec2& p) { return std::exp(psi.eval(p)); });
    double len = 0.0;
    constexpr int nb = 512;
    for (int j = 0; j < nb; ++j) {
        const double th = 2.0 * kPi * j / nb;
        len += std::exp(0.5 * psi.eval({std::cos(th), std::sin(th)}));
    }
    m.bdry_len_ = len * 2.0 * kPi / nb;
    return m;
}

double SurfaceModel::log_conformal(const Vec2& x) const {
    return psi_ ? psi_->eval(x) : 0.0;
}

Vec2 SurfaceModel::grad_log_conformal(const Vec2& x) const {
    if (!psi_) return {0.0, 0.0};
    const double h = 1e-5;
    const double dx = (psi_->eval({x.x + h, x.y}) - psi_->eval({x.x - h, x.y})) / (2 * h);
    const double dy = (psi_->eval({x.x, x.y + h}) - psi_->eval({x.x, x.y - h})) / (2 * h);
    return {dx, dy};
}

double SurfaceModel::boundary_curvature(double theta) const {
    if (!psi_) return 1.0;
    const Vec2 p{std::cos(theta), std::sin(theta)};
    const Vec2 g = grad_log_conformal(p);
    const double dr = g.x * p.x + g.y * p.y;  // radial derivative of psi
    return std::exp(-0.5 * psi_->eval(p)) * (1.0 + 0.5 * dr);
}

Chart SurfaceModel::chart_at(const Vec2& xi) const {
    const double rad = xi.norm();
    if (rad > 1.0 + snap_tol)
        throw ConfigError("chart center lies outside the closed unit disk");

    Chart c;
    c.model_ = this;
    const bool boundary = std::abs(rad - 1.0) <= snap_tol;
    c.boundary_ = boundary;

    using C = std::complex<double>;
    double mcap = 0.0;  // admissible radius in base-map coordinates m
    if (boundary) {
        const double th = std::atan2(xi.y, xi.x);
        c.xi_ = {std::cos(th), std::sin(th)};  // snap exactly onto the circle
        c.z0_ = C(c.xi_.x, c.xi_.y);
        const double alpha = std::exp(0.5 * log_conformal(c.xi_));
        const Vec2 g = grad_log_conformal(c.xi_);
        // d psi = (psi_x - i psi_y)/2; beta = alpha/2 * Re(i e^{i th} d psi).
        // Real alpha, beta keep {y2 = 0} on the boundary.
        const C dpsi(0.5 * g.x, -0.5 * g.y);
        const C rot = C(0.0, 1.0) * std::exp(C(0.0, th)) * dpsi;
        c.a_ = C(alpha, 0.0);
        c.b_ = C(0.5 * alpha * rot.real(), 0.0);
        mcap = 2.0;  // Moebius base map covers the whole half-plane
    } else {
        c.xi_ = xi;
        c.z0_ = C(xi.x, xi.y);
        const double a = std::exp(0.5 * log_conformal(xi));
        const Vec2 g = grad_log_conformal(xi);
        const C dpsi(0.5 * g.x, -0.5 * g.y);
        c.a_ = C(a, 0.0);
        c.b_ = 0.5 * a * dpsi;
        mcap = 0.98 * (1.0 - rad);  // keep the preimage inside the open disk
    }
    const double amod = std::abs(c.a_), bmod = std::abs(c.b_);
    if (bmod > 1e-14)
        mcap = std::min(mcap, 0.25 * amod / bmod);  // univalence of a m + b m^2
    const double q = (bmod / amod) * mcap;          // <= 0.25
    // the image of |m| < mcap contains the disk of radius a*mcap*(1-q)
    c.mcap_ = mcap;
    c.r_ = 0.5 * amod * mcap * (1.0 - q);
    if (!(c.r_ > 0.0))
        throw NumericError("degenerate chart radius");
    return c;
}

std::uint64_t SurfaceModel::hash() const {
    Fnv1a h;
    h.add(static_cast<std::uint64_t>(kind_));
    if (psi_) h.add(psi_->text());
    return h.value();
}

}  // namespace mfl

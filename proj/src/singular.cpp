#include "mfl/singular.hpp"

#include <algorithm>
#include <cmath>

#include "mfl/quadrature.hpp"

namespace mfl {

SingularData::SingularData(std::shared_ptr<const GreenFunction> green,
                           const std::vector<std::pair<Vec2, double>>& points, Expr tilde_K,
                           bool transform_boundary)
    : green_(std::move(green)), tilde_K_(std::move(tilde_K)) {
    const FemSystem& fem = green_->fem();
    for (const auto& [pos, gamma] : points) {
        if (!admissible_gamma(gamma))
            throw ConfigError("singular weight must lie in (-1, inf) and avoid 0, 1, 2, ...");
        const Chart& ch = green_->chart(pos);
        pts_.push_back({ch.center(), gamma, ch.is_boundary(), ch.rho()});
    }
    for (size_t i = 0; i < pts_.size(); ++i)
        for (size_t j = i + 1; j < pts_.size(); ++j)
            if (dist(pts_[i].pos, pts_[j].pos) < 1e-6)
                throw ConfigError("singular points must be distinct");
    if (transform_boundary) {
        shift_ = geodesic_shift(fem);
        v_factor_ = 2.0;
    } else {
        shift_ = Field(fem.mesh_ptr());
        v_factor_ = 1.0;
    }
    // The weight must be positive on the surface.
    double vmin = std::numeric_limits<double>::max();
    for (const Vec2& p : fem.mesh().verts) vmin = std::min(vmin, tilde_K_.eval(p));
    if (!(vmin > 0.0)) throw ConfigError("weight expression must be positive on the disk");
}

int SingularData::find_point(const Vec2& xi, double tol) const {
    for (size_t i = 0; i < pts_.size(); ++i)
        if (dist(pts_[i].pos, xi) <= tol) return static_cast<int>(i);
    return -1;
}

double SingularData::log_V(const Vec2& x) const {
    const double k = tilde_K_.eval(x);
    if (!(k > 0.0)) throw NumericError("weight expression non-positive at evaluation point");
    return std::log(v_factor_) + std::log(k) + shift_.eval(x);
}

double SingularData::V(const Vec2& x) const { return std::exp(log_V(x)); }

double SingularData::hQ(const Vec2& x) const {
    double s = 0.0;
    for (const Point& p : pts_) s += 0.5 * p.rho * p.gamma * green_->eval(x, p.pos);
    return s;
}

double SingularData::log_V_smooth(const Vec2& x) const {
    const double k = tilde_K_.eval(x);
    if (!(k > 0.0)) throw NumericError("weight expression non-positive at evaluation point");
    return std::log(v_factor_) + std::log(k) + shift_.eval_smooth(x);
}

double SingularData::hQ_smooth(const Vec2& x) const {
    double s = 0.0;
    for (const Point& p : pts_) s += 0.5 * p.rho * p.gamma * green_->eval_smooth(x, p.pos);
    return s;
}

Field SingularData::hQ_field() const {
    const FemSystem& fem = green_->fem();
    std::vector<double> load(fem.mesh().num_vertices(), 0.0);
    for (const Point& p : pts_) {
        const double c = 0.5 * p.rho * p.gamma;
        fem.scatter(p.pos, c, load);
        for (int i = 0; i < fem.mesh().num_vertices(); ++i)
            load[i] -= c * fem.lumped_mass()[i] / fem.area();
    }
    return fem.solve_zero_mean(load, 0.0);
}

double SingularData::log_Ki(const Vec2& x, const Vec2& xi) const {
    const int i = find_point(xi);
    if (i < 0) return log_K(x);
    double s = log_V(x);
    for (size_t j = 0; j < pts_.size(); ++j) {
        if (static_cast<int>(j) == i) continue;
        s -= 0.5 * pts_[j].rho * pts_[j].gamma * green_->eval(x, pts_[j].pos);
    }
    // Own-point contribution with |y|^(2 gamma) removed:
    // G + (4/rho) ln|y| = H + (4/rho)(1 - chi) ln|y|.
    const Chart& ch = green_->chart(xi);
    Vec2 y;
    if (!ch.try_to_chart(x, y))
        throw NumericError("log_Ki evaluated outside the chart of its singular center");
    const double c = 0.5 * pts_[i].rho * pts_[i].gamma;
    double own = green_->regular_part(xi)->eval(x);
    const double srel = 4.0 * y.norm() / ch.radius();
    if (srel > 1e-12) {
        const double chi = green_->profile().value(srel);
        if (chi < 1.0) own += (4.0 / pts_[i].rho) * (1.0 - chi) * std::log(y.norm());
    }
    return s - c * own;
}

double SingularData::log_Ki_center(const Vec2& xi) const {
    const int i = find_point(xi);
    if (i < 0) return log_K(xi);
    double s = log_V(xi);
    for (size_t j = 0; j < pts_.size(); ++j) {
        if (static_cast<int>(j) == i) continue;
        s -= 0.5 * pts_[j].rho * pts_[j].gamma * green_->eval(xi, pts_[j].pos);
    }
    return s - 0.5 * pts_[i].rho * pts_[i].gamma * green_->robin(xi);
}

double SingularData::log_Ki_ray_check(const Vec2& xi, int rays, double* rel_spread) const {
    const int i = find_point(xi);
    const Chart& ch = green_->chart(xi);
    const double t1 = ch.radius() / 32.0, t0 = t1 / 2.0;
    const double gamma = i >= 0 ? pts_[i].gamma : 0.0;
    std::vector<double> vals;
    for (int k = 0; k < rays; ++k) {
        const double th =
            ch.is_boundary() ? kPi * (k + 0.5) / rays : 2.0 * kPi * k / rays + 0.1;
        const Vec2 dir{std::cos(th), std::sin(th)};
        auto probe = [&](double t) {
            const Vec2 x = ch.from_chart(dir * t);
            return log_K(x) - 2.0 * gamma * std::log(t);
        };
        // ln K_i(t) = v0 + c t + O(t^2): eliminate the linear term.
        vals.push_back(2.0 * probe(t0) - probe(t1));
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    if (rel_spread) {
        double spread = 0.0;
        for (double v : vals) spread = std::max(spread, std::abs(v - mean));
        *rel_spread = spread / std::max(std::abs(mean), 1e-12);
    }
    return mean;
}

Field geodesic_shift(const FemSystem& fem) {
    const SurfaceModel& model = fem.model();
    const QuadRule brule = boundary_rule(fem.mesh(), 4);
    const double total = integrate_boundary_metric(
        model, brule, [&](const Vec2& p) { return model.boundary_curvature(std::atan2(p.y, p.x)); });
    const double c = 2.0 * total / fem.area();
    std::vector<double> load(fem.mesh().num_vertices());
    for (int i = 0; i < fem.mesh().num_vertices(); ++i) load[i] = c * fem.lumped_mass()[i];
    const std::vector<double> bload = fem.load_boundary(
        [&](const Vec2& p) { return -2.0 * model.boundary_curvature(std::atan2(p.y, p.x)); });
    for (int i = 0; i < fem.mesh().num_vertices(); ++i) load[i] += bload[i];
    return fem.solve_zero_mean(load, 0.0);
}

namespace {

double subset_mass(const SingularData& data, unsigned mask) {
    double s = 0.0;
    const auto& pts = data.points();
    for (size_t k = 0; k < pts.size(); ++k)
        if (mask & (1u << k)) s += (1.0 + pts[k].gamma) * pts[k].rho;
    return s;
}

}  // namespace

std::vector<double> resonant_set(const SingularData& data, double cap,
                                 std::vector<std::pair<double, double>>* collisions) {
    if (!(cap > 0.0)) throw ConfigError("resonant_set: cap must be positive");
    const size_t nq = data.points().size();
    if (nq > 20) throw ConfigError("resonant_set: too many singular points to enumerate");
    std::vector<double> vals;
    for (unsigned mask = 0; mask < (1u << nq); ++mask) {
        const double base = subset_mass(data, mask);
        if (base > cap + 1e-9) continue;
        for (int n = 0;; ++n) {
            const double v = base + 4.0 * kPi * n;
            if (v > cap + 1e-9) break;
            if (v > 1e-9) vals.push_back(v);
        }
    }
    std::sort(vals.begin(), vals.end());
    std::vector<double> out;
    for (double v : vals) {
        if (!out.empty() && v - out.back() < 1e-9) continue;  // identical value
        if (collisions && !out.empty() && v - out.back() < 1e-6)
            collisions->emplace_back(out.back(), v);
        out.push_back(v);
    }
    return out;
}

ResonanceIndex enumerate_index_sets(const SingularData& data, double rho_star) {
    if (!(rho_star > 0.0)) throw ConfigError("enumerate_index_sets: mass must be positive");
    ResonanceIndex idx;
    idx.rho_star = rho_star;
    const auto& pts = data.points();
    const size_t nq = pts.size();
    if (nq > 20) throw ConfigError("enumerate_index_sets: too many singular points");
    const double tol = 1e-12 * std::max(1.0, rho_star);
    for (unsigned mask = 0; mask < (1u << nq); ++mask) {
        const double base = subset_mass(data, mask);
        const double rest = rho_star - base;
        if (rest < -tol) continue;
        const int nmax = static_cast<int>(std::floor(rest / (4.0 * kPi) + 0.5)) + 1;
        for (int p = 0; 2 * p <= nmax; ++p) {
            for (int q = 0; 2 * p + q <= nmax; ++q) {
                if (std::abs(4.0 * kPi * (2 * p + q) - rest) > tol) continue;
                ResonanceTriple t;
                t.p = p;
                t.q = q;
                for (size_t k = 0; k < nq; ++k)
                    if (mask & (1u << k)) t.subset.push_back(static_cast<int>(k));
                t.gamma_seq.assign(p + q, 0.0);
                for (int k : t.subset) t.gamma_seq.push_back(pts[k].gamma);
                idx.triples.push_back(std::move(t));
            }
        }
    }
    return idx;
}

}  // namespace mfl

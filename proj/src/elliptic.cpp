#include "mfl/elliptic.hpp"

#include <cmath>

namespace mfl {

namespace {

struct TriGeom {
    Vec2 g[3];  // P1 basis gradients
    double area;
};

TriGeom tri_geom(const Mesh& mesh, int t) {
    const auto& T = mesh.tris[t];
    const Vec2 &A = mesh.verts[T[0]], &B = mesh.verts[T[1]], &C = mesh.verts[T[2]];
    TriGeom g;
    g.area = mesh.triangle_area(t);
    const double s = 1.0 / (2.0 * g.area);
    g.g[0] = {(B.y - C.y) * s, (C.x - B.x) * s};
    g.g[1] = {(C.y - A.y) * s, (A.x - C.x) * s};
    g.g[2] = {(A.y - B.y) * s, (B.x - A.x) * s};
    return g;
}

}  // namespace

FemSystem::FemSystem(std::shared_ptr<const Mesh> mesh, SurfaceModel model)
    : mesh_(std::move(mesh)), model_(std::move(model)) {
    const int n = mesh_->num_vertices();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh_->tris.size());
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
        const TriGeom g = tri_geom(*mesh_, t);
        const auto& T = mesh_->tris[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips.emplace_back(T[a], T[b], g.area * dot(g.g[a], g.g[b]));
    }
    A_.resize(n, n);
    A_.setFromTriplets(trips.begin(), trips.end());
    lumped_ = load_volume([](const Vec2&) { return 1.0; }, 4);
    area_ = 0.0;
    for (double m : lumped_) area_ += m;
}

double FemSystem::integral(const Field& u) const {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += lumped_[i] * u[i];
    return s;
}

double FemSystem::mean(const Field& u) const { return integral(u) / area_; }

std::vector<double> FemSystem::load_volume(const std::function<double(Vec2)>& f,
                                           int degree) const {
    std::vector<double> out(mesh_->num_vertices(), 0.0);
    // Straight triangles: map the reference rule, scatter by barycentrics.
    const QuadRule tri = triangle_rule(*mesh_, degree);
    const size_t per = tri.pts.size() / mesh_->tris.size();
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
        const auto& T = mesh_->tris[t];
        const Vec2 &A = mesh_->verts[T[0]], &B = mesh_->verts[T[1]], &C = mesh_->verts[T[2]];
        const double inv = 1.0 / (2.0 * mesh_->triangle_area(t));
        for (size_t q = 0; q < per; ++q) {
            const QPoint& qp = tri.pts[t * per + q];
            const double val = qp.w * std::exp(model_.log_conformal(qp.x)) * f(qp.x);
            const double b0 =
                ((B.x - qp.x.x) * (C.y - qp.x.y) - (B.y - qp.x.y) * (C.x - qp.x.x)) * inv;
            const double b1 =
                ((C.x - qp.x.x) * (A.y - qp.x.y) - (C.y - qp.x.y) * (A.x - qp.x.x)) * inv;
            out[T[0]] += val * b0;
            out[T[1]] += val * b1;
            out[T[2]] += val * (1.0 - b0 - b1);
        }
    }
    // Circular-segment corrections, clamped onto boundary triangles.
    QuadRule full = volume_rule(*mesh_, degree);
    for (size_t q = mesh_->tris.size() * per; q < full.pts.size(); ++q) {
        const QPoint& qp = full.pts[q];
        scatter(qp.x, qp.w * std::exp(model_.log_conformal(qp.x)) * f(qp.x), out);
    }
    return out;
}

std::vector<double> FemSystem::load_boundary(const std::function<double(Vec2)>& g,
                                             int order) const {
    std::vector<double> out(mesh_->num_vertices(), 0.0);
    std::vector<double> gn, gw;
    gauss_legendre(std::max(2, order), gn, gw);
    const double R = mesh_->bdry_radius;
    for (size_t e = 0; e < mesh_->bedges.size(); ++e) {
        const int ia = mesh_->bedges[e][0], ib = mesh_->bedges[e][1];
        const Vec2 &a = mesh_->verts[ia], &b = mesh_->verts[ib];
        if (mesh_->bedge_is_arc[e]) {
            const double ta = std::atan2(a.y, a.x);
            double dth = std::atan2(b.y, b.x) - ta;
            while (dth <= 0.0) dth += 2.0 * kPi;
            for (size_t i = 0; i < gn.size(); ++i) {
                const double th = ta + gn[i] * dth;
                const Vec2 p{R * std::cos(th), R * std::sin(th)};
                const double w = gw[i] * R * dth * std::exp(0.5 * model_.log_conformal(p)) * g(p);
                // Trace basis along the edge parametrized by arc fraction.
                out[ia] += w * (1.0 - gn[i]);
                out[ib] += w * gn[i];
            }
        } else {
            const double len = dist(a, b);
            for (size_t i = 0; i < gn.size(); ++i) {
                const Vec2 p = a + (b - a) * gn[i];
                const double w = gw[i] * len * std::exp(0.5 * model_.log_conformal(p)) * g(p);
                out[ia] += w * (1.0 - gn[i]);
                out[ib] += w * gn[i];
            }
        }
    }
    return out;
}

void FemSystem::scatter(const Vec2& x, double value, std::vector<double>& out) const {
    std::array<double, 3> b{};
    const int t = mesh_->locate(x, b);
    for (int k = 0; k < 3; ++k) out[mesh_->tris[t][k]] += value * b[k];
}

SpMat FemSystem::assemble_weighted_mass(const std::function<double(Vec2)>& weight,
                                        int degree) const {
    const int n = mesh_->num_vertices();
    std::vector<Eigen::Triplet<double>> trips;
    const QuadRule tri = triangle_rule(*mesh_, degree);
    const size_t per = tri.pts.size() / mesh_->tris.size();
    trips.reserve(9 * mesh_->tris.size());
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
        const auto& T = mesh_->tris[t];
        const Vec2 &A = mesh_->verts[T[0]], &B = mesh_->verts[T[1]], &C = mesh_->verts[T[2]];
        const double inv = 1.0 / (2.0 * mesh_->triangle_area(t));
        double loc[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        for (size_t q = 0; q < per; ++q) {
            const QPoint& qp = tri.pts[t * per + q];
            const double val = qp.w * weight(qp.x);
            double bb[3];
            bb[0] = ((B.x - qp.x.x) * (C.y - qp.x.y) - (B.y - qp.x.y) * (C.x - qp.x.x)) * inv;
            bb[1] = ((C.x - qp.x.x) * (A.y - qp.x.y) - (C.y - qp.x.y) * (A.x - qp.x.x)) * inv;
            bb[2] = 1.0 - bb[0] - bb[1];
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) loc[a][c] += val * bb[a] * bb[c];
        }
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) trips.emplace_back(T[a], T[c], loc[a][c]);
    }
    SpMat M(n, n);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

void FemSystem::ensure_factorization() const {
    std::call_once(pinned_once_, [this] {
        SpMat P = A_;
        P.coeffRef(0, 0) += 1.0;  // rank-one pin; exact on compatible loads
        auto solver = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
        solver->compute(P);
        if (solver->info() != Eigen::Success)
            throw NumericError("elliptic: factorization of the pinned stiffness failed");
        pinned_ = std::move(solver);
    });
}

Field FemSystem::solve_zero_mean(const std::vector<double>& load, double target_mean) const {
    const int n = mesh_->num_vertices();
    if (static_cast<int>(load.size()) != n) throw ConfigError("solve_zero_mean: load size");
    ensure_factorization();
    // Project the load onto the compatible (zero-sum) range.
    double lsum = 0.0, lnorm = 0.0;
    for (double v : load) {
        lsum += v;
        lnorm = std::max(lnorm, std::abs(v));
    }
    Eigen::VectorXd rhs(n);
    const double shift = lsum / area_;
    for (int i = 0; i < n; ++i) rhs[i] = load[i] - shift * lumped_[i];
    Eigen::VectorXd u = pinned_->solve(rhs);
    // One step of iterative refinement on the pinned system.
    Eigen::VectorXd res = rhs - A_ * u;
    res[0] -= u[0];
    u += pinned_->solve(res);
    res = rhs - A_ * u;
    res[0] -= u[0];
    const double rnorm = res.lpNorm<Eigen::Infinity>();
    if (lnorm > 0 && rnorm > 1e3 * linear_solve_tolerance() * lnorm)
        throw NumericError("elliptic: linear solve did not reach tolerance");
    Field f(mesh_);
    for (int i = 0; i < n; ++i) f[i] = u[i];
    f.shift(target_mean - mean(f));
    return f;
}

double FemSystem::h1_product(const Field& u, const Field& v) const {
    double s = 0.0;
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
        const TriGeom g = tri_geom(*mesh_, t);
        const auto& T = mesh_->tris[t];
        Vec2 gu{0, 0}, gv{0, 0};
        for (int k = 0; k < 3; ++k) {
            gu += g.g[k] * u[T[k]];
            gv += g.g[k] * v[T[k]];
        }
        s += g.area * dot(gu, gv);
    }
    return s;
}

}  // namespace mfl

#include "mfl/field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace mfl {

Field::Field(std::shared_ptr<const Mesh> mesh)
    : mesh_(std::move(mesh)), vals_(mesh_->num_vertices(), 0.0) {}

Field::Field(std::shared_ptr<const Mesh> mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), vals_(std::move(values)) {
    if (static_cast<int>(vals_.size()) != mesh_->num_vertices())
        throw ConfigError("field: value count does not match mesh");
}

double Field::eval(const Vec2& p) const {
    std::array<double, 3> b{};
    const int t = mesh_->locate(p, b);
    const auto& T = mesh_->tris[t];
    return b[0] * vals_[T[0]] + b[1] * vals_[T[1]] + b[2] * vals_[T[2]];
}

Vec2 Field::grad(const Vec2& p) const {
    std::array<double, 3> b{};
    const int t = mesh_->locate(p, b);
    const auto& T = mesh_->tris[t];
    const Vec2 &A = mesh_->verts[T[0]], &B = mesh_->verts[T[1]], &C = mesh_->verts[T[2]];
    const double two_area = 2.0 * mesh_->triangle_area(t);
    // grad of the P1 basis: rotated opposite edges / (2 area).
    const Vec2 gA{(B.y - C.y) / two_area, (C.x - B.x) / two_area};
    const Vec2 gB{(C.y - A.y) / two_area, (A.x - C.x) / two_area};
    const Vec2 gC{(A.y - B.y) / two_area, (B.x - A.x) / two_area};
    return gA * vals_[T[0]] + gB * vals_[T[1]] + gC * vals_[T[2]];
}

struct Field::Quad {
    // q(x) = c0 + c1 dx + c2 dy + c3 dx^2 + c4 dx dy + c5 dy^2 around p.
    double c[6];
};

Field::Quad Field::fit_quadratic(const Vec2& p) const {
    std::array<double, 3> b{};
    const int t = mesh_->locate(p, b);
    const auto& T = mesh_->tris[t];
    double hloc = 0.0;
    for (int e = 0; e < 3; ++e)
        hloc = std::max(hloc, dist(mesh_->verts[T[e]], mesh_->verts[T[(e + 1) % 3]]));
    double radius = 2.5 * hloc;
    std::vector<int> near;
    for (int attempt = 0; attempt < 8; ++attempt) {
        near = mesh_->nearby_vertices(p, radius);
        if (near.size() >= 12) break;
        radius *= 1.6;
    }
    if (near.size() < 6) throw NumericError("field fit: too few neighbors");
    Eigen::Matrix<double, 6, 6> N = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
    for (int v : near) {
        const Vec2 d = mesh_->verts[v] - p;
        const double r = d.norm() / radius;
        if (r >= 1.0) continue;
        const double w = std::pow(1.0 - r * r, 3);
        const double s = 1.0 / radius;  // scale for conditioning
        Eigen::Matrix<double, 6, 1> phi;
        phi << 1.0, d.x * s, d.y * s, d.x * d.x * s * s, d.x * d.y * s * s, d.y * d.y * s * s;
        N += w * phi * phi.transpose();
        rhs += w * vals_[v] * phi;
    }
    N += 1e-12 * Eigen::Matrix<double, 6, 6>::Identity();
    const Eigen::Matrix<double, 6, 1> c = N.ldlt().solve(rhs);
    Quad q;
    const double s = 1.0 / radius;
    q.c[0] = c[0];
    q.c[1] = c[1] * s;
    q.c[2] = c[2] * s;
    q.c[3] = c[3] * s * s;
    q.c[4] = c[4] * s * s;
    q.c[5] = c[5] * s * s;
    return q;
}

double Field::eval_smooth(const Vec2& p) const { return fit_quadratic(p).c[0]; }

Vec2 Field::grad_smooth(const Vec2& p) const {
    const Quad q = fit_quadratic(p);
    return {q.c[1], q.c[2]};
}

Field& Field::operator+=(const Field& o) {
    for (size_t i = 0; i < vals_.size(); ++i) vals_[i] += o.vals_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    for (size_t i = 0; i < vals_.size(); ++i) vals_[i] -= o.vals_[i];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : vals_) v *= s;
    return *this;
}

Field& Field::add_scaled(const Field& o, double s) {
    for (size_t i = 0; i < vals_.size(); ++i) vals_[i] += s * o.vals_[i];
    return *this;
}

Field& Field::shift(double c) {
    for (double& v : vals_) v += c;
    return *this;
}

}  // namespace mfl

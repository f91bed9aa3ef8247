#pragma once

// Piecewise-linear nodal fields on a mesh. `eval` is the plain P1
// interpolant (cheap, used inside integrals); `eval_smooth`/`grad_smooth`
// run a weighted moving-least-squares quadratic fit over nearby vertices,
// which removes the vertex-set discontinuities of the interpolant and is
// used wherever point values enter finite differences or extrapolations.

#include <memory>
#include <vector>

#include "mfl/common.hpp"
#include "mfl/mesh.hpp"

namespace mfl {

class Field {
public:
    Field() = default;
    explicit Field(std::shared_ptr<const Mesh> mesh);
    Field(std::shared_ptr<const Mesh> mesh, std::vector<double> values);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
    std::vector<double>& values() { return vals_; }
    const std::vector<double>& values() const { return vals_; }
    double& operator[](int i) { return vals_[i]; }
    double operator[](int i) const { return vals_[i]; }
    int size() const { return static_cast<int>(vals_.size()); }

    double eval(const Vec2& p) const;
    Vec2 grad(const Vec2& p) const;  ///< piecewise-constant element gradient
    double eval_smooth(const Vec2& p) const;
    Vec2 grad_smooth(const Vec2& p) const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);
    Field& add_scaled(const Field& o, double s);
    Field& shift(double c);

private:
    std::shared_ptr<const Mesh> mesh_;
    std::vector<double> vals_;

    struct Quad;  // local quadratic fit
    Quad fit_quadratic(const Vec2& p) const;
};

}  // namespace mfl

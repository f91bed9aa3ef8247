#pragma once

// Conforming triangle meshes of the unit disk (and truncated disks for the
// whole-plane model problems). Meshes come from a deterministic Delaunay
// triangulation of structured ring lattices; local polar grading is obtained
// by inserting geometric point clusters around marked points so that the
// local edge length near a mark at distance d is <= h * d^((beta-1)/beta).

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mfl/common.hpp"

namespace mfl {

/// Grading mark: polar refinement around `pos` with the given exponent.
/// `inner` is the smallest resolved scale (0 = natural floor h^exponent),
/// `outer` the radius of the graded region.
struct Mark {
    Vec2 pos;
    double exponent = 2.0;
    double inner = 0.0;
    double outer = 0.15;
};

class Mesh {
public:
    std::vector<Vec2> verts;
    std::vector<std::array<int, 3>> tris;    ///< CCW vertex triples
    std::vector<std::array<int, 2>> bedges;  ///< boundary edges, domain on the left
    std::vector<char> on_boundary;           ///< per-vertex flag
    std::vector<char> bedge_is_arc;          ///< edge lies on the circular part
    double h = 0.0;                          ///< nominal edge target
    double bdry_radius = 1.0;                ///< radius of the circular boundary
    bool half = false;                       ///< half-disk {y >= 0}
    std::vector<Mark> marks;

    int num_vertices() const { return static_cast<int>(verts.size()); }
    int num_triangles() const { return static_cast<int>(tris.size()); }

    double triangle_area(int t) const;
    /// Containing triangle and barycentric coordinates; points slightly outside
    /// the polygonal hull are clamped to the nearest boundary triangle.
    int locate(const Vec2& p, std::array<double, 3>& bary) const;
    /// Indices of all vertices within `radius` of p (unsorted but deterministic).
    std::vector<int> nearby_vertices(const Vec2& p, double radius) const;

    /// Structural checks: positive areas, conforming edges, closed boundary.
    void validate() const;

    std::uint64_t hash() const;

    void save(const std::string& path) const;
    static Mesh load(const std::string& path);

private:
    friend Mesh delaunay_triangulate(std::vector<Vec2> pts, double h, double bdry_radius,
                                     bool half);
    struct LocateGrid;
    mutable std::shared_ptr<LocateGrid> grid_;
    mutable CopyableOnce grid_once_;
    void build_grid() const;
    void ensure_grid() const;
};

/// Mesh of the unit disk at edge target h with graded clusters at the marks.
Mesh mesh_unit_disk(double h, const std::vector<Mark>& marks = {});

/// Mesh of the disk (or half-disk) of radius R: uniform core of spacing
/// core_h inside |y| <= core_r, geometric rings outside. Used by the
/// whole-plane linearization model. core_grading > 1 grades the core toward 0.
Mesh mesh_truncated_disk(double R, double core_h, double core_r, bool half,
                         double core_grading = 1.0);

}  // namespace mfl

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "mfl/mesh.hpp"

using namespace mfl;

TEST_CASE("unit disk mesh: structure and area") {
    const Mesh mesh = mesh_unit_disk(0.1);
    CHECK_NOTHROW(mesh.validate());
    CHECK(mesh.num_vertices() > 100);
    CHECK(mesh.h == doctest::Approx(0.1));

    double area = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        CHECK(mesh.triangle_area(t) > 0.0);
        area += mesh.triangle_area(t);
    }
    // straight triangles miss the circular segments: area slightly below pi
    CHECK(area < kPi);
    CHECK(area > kPi - 2.0 * kPi * 0.1 * 0.1);

    for (const auto& e : mesh.bedges) {
        CHECK(mesh.on_boundary[e[0]]);
        CHECK(mesh.on_boundary[e[1]]);
    }
    for (int v = 0; v < mesh.num_vertices(); ++v)
        CHECK(mesh.verts[v].norm() <= 1.0 + 1e-12);
}

TEST_CASE("locate returns consistent barycentric coordinates") {
    const Mesh mesh = mesh_unit_disk(0.08);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double r = 0.999 * std::sqrt(U(rng));
        const double th = 2.0 * kPi * U(rng);
        const Vec2 p{r * std::cos(th), r * std::sin(th)};
        std::array<double, 3> b{};
        const int t = mesh.locate(p, b);
        REQUIRE(t >= 0);
        CHECK(b[0] + b[1] + b[2] == doctest::Approx(1.0).epsilon(1e-10));
        Vec2 rec{0, 0};
        for (int i = 0; i < 3; ++i) {
            CHECK(b[i] > -1e-9);
            rec.x += b[i] * mesh.verts[mesh.tris[t][i]].x;
            rec.y += b[i] * mesh.verts[mesh.tris[t][i]].y;
        }
        CHECK(dist(rec, p) < 1e-10);
    }
    // a point in a circular segment, outside the polygonal hull, is clamped
    std::array<double, 3> b{};
    CHECK(mesh.locate({0.99999 * std::cos(0.123), 0.99999 * std::sin(0.123)}, b) >= 0);
}

TEST_CASE("nearby_vertices honors the radius and finds the closest vertex") {
    const Mesh mesh = mesh_unit_disk(0.1);
    const Vec2 p{0.21, -0.37};
    const auto near = mesh.nearby_vertices(p, 0.25);
    CHECK(!near.empty());
    for (int v : near) CHECK(dist(mesh.verts[v], p) <= 0.25 + 1e-12);

    int best = 0;
    for (int v = 1; v < mesh.num_vertices(); ++v)
        if (dist(mesh.verts[v], p) < dist(mesh.verts[best], p)) best = v;
    CHECK(std::find(near.begin(), near.end(), best) != near.end());

    CHECK(mesh.nearby_vertices(p, 0.25) == near);  // deterministic
}

TEST_CASE("graded marks refine locally") {
    const Mark mark{{0.0, 0.0}, 2.0, 1e-3, 0.15};
    const Mesh fine = mesh_unit_disk(0.1, {mark});
    CHECK_NOTHROW(fine.validate());
    const Mesh plain = mesh_unit_disk(0.1);
    CHECK(fine.hash() != plain.hash());

    // The first graded ring sits at max(inner, h^exponent): with inner below
    // the floor the ring lands at h^2 = 0.01, with inner above it wins.
    const auto nearest_ring = [](const Mesh& m) {
        double dmin = 1e9;
        for (const Vec2& v : m.verts) {
            const double d = v.norm();
            if (d > 1e-12) dmin = std::min(dmin, d);
        }
        return dmin;
    };
    CHECK(nearest_ring(fine) == doctest::Approx(0.01).epsilon(0.02));

    const Mark wide{{0.0, 0.0}, 2.0, 0.02, 0.15};
    const Mesh coarse_core = mesh_unit_disk(0.1, {wide});
    CHECK(nearest_ring(coarse_core) == doctest::Approx(0.02).epsilon(0.02));
}

TEST_CASE("truncated disk meshes for the whole-plane model") {
    const Mesh full = mesh_truncated_disk(20.0, 0.5, 2.0, false);
    CHECK_NOTHROW(full.validate());
    CHECK(full.bdry_radius == doctest::Approx(20.0));
    CHECK(!full.half);

    const Mesh half = mesh_truncated_disk(20.0, 0.5, 2.0, true);
    CHECK_NOTHROW(half.validate());
    CHECK(half.half);
    for (const Vec2& v : half.verts) CHECK(v.y >= -1e-9);
    // the straight diameter part of the boundary is present
    bool has_segment = false;
    for (std::size_t e = 0; e < half.bedges.size(); ++e)
        if (!half.bedge_is_arc[e]) has_segment = true;
    CHECK(has_segment);
}

TEST_CASE("meshes are deterministic and serializable") {
    const Mesh a = mesh_unit_disk(0.1);
    const Mesh b = mesh_unit_disk(0.1);
    CHECK(a.hash() == b.hash());

    const std::string path = "/tmp/mfl_test_mesh.bin";
    a.save(path);
    const Mesh c = Mesh::load(path);
    CHECK(c.hash() == a.hash());
    CHECK(c.num_vertices() == a.num_vertices());
    std::remove(path.c_str());
}

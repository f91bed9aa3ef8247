#include "mfl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace mfl {

namespace {

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// ---------------------------------------------------------------------------
// Bowyer-Watson incremental Delaunay triangulation.
// ---------------------------------------------------------------------------

struct BwTri {
    int v[3];    // CCW vertices
    int nbr[3];  // nbr[i] is across the edge opposite v[i]; -1 at the hull
    Vec2 cc;     // circumcenter
    double r2;   // squared circumradius
    bool alive = true;
};

class Triangulator {
public:
    explicit Triangulator(std::vector<Vec2> pts) : pts_(std::move(pts)) {
        const int n = static_cast<int>(pts_.size());
        if (n < 3) throw NumericError("triangulation needs at least 3 points");
        Vec2 lo = pts_[0], hi = pts_[0];
        for (const Vec2& p : pts_) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        }
        const Vec2 mid{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)};
        const double ext = 40.0 * std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
        pts_.push_back({mid.x - 2.0 * ext, mid.y - ext});
        pts_.push_back({mid.x + 2.0 * ext, mid.y - ext});
        pts_.push_back({mid.x, mid.y + 2.0 * ext});
        make_tri(n, n + 1, n + 2, -1, -1, -1);
        for (int i = 0; i < n; ++i) insert(i);
    }

    // Alive triangles avoiding the three synthetic corner vertices.
    std::vector<std::array<int, 3>> result() const {
        const int n = static_cast<int>(pts_.size()) - 3;
        std::vector<std::array<int, 3>> out;
        for (const BwTri& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
            out.push_back({t.v[0], t.v[1], t.v[2]});
        }
        return out;
    }

private:
    std::vector<Vec2> pts_;
    std::vector<BwTri> tris_;
    int last_ = 0;
    std::vector<int> cavity_, stack_;
    std::vector<char> seen_;

    int make_tri(int a, int b, int c, int na, int nb, int nc) {
        BwTri t;
        t.v[0] = a;
        t.v[1] = b;
        t.v[2] = c;
        t.nbr[0] = na;
        t.nbr[1] = nb;
        t.nbr[2] = nc;
        const double d = 2.0 * orient2d(pts_[a], pts_[b], pts_[c]);
        if (!(d > 0.0)) throw NumericError("degenerate or misoriented triangle during meshing");
        const Vec2 &A = pts_[a], &B = pts_[b], &C = pts_[c];
        const double a2 = A.x * A.x + A.y * A.y;
        const double b2 = B.x * B.x + B.y * B.y;
        const double c2 = C.x * C.x + C.y * C.y;
        t.cc.x = (a2 * (B.y - C.y) + b2 * (C.y - A.y) + c2 * (A.y - B.y)) / d;
        t.cc.y = (a2 * (C.x - B.x) + b2 * (A.x - C.x) + c2 * (B.x - A.x)) / d;
        t.r2 = (t.cc - A).norm2();
        tris_.push_back(t);
        return static_cast<int>(tris_.size()) - 1;
    }

    bool in_circum(int t, const Vec2& p) const {
        return (p - tris_[t].cc).norm2() <= tris_[t].r2 * (1.0 + 1e-12);
    }

    int find_containing(const Vec2& p) const {
        int t = (last_ >= 0 && last_ < static_cast<int>(tris_.size()) && tris_[last_].alive)
                    ? last_
                    : -1;
        if (t < 0) {
            for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
                if (tris_[i].alive) {
                    t = i;
                    break;
                }
        }
        long guard = 8 * static_cast<long>(tris_.size()) + 64;
        while (guard-- > 0) {
            const BwTri& T = tris_[t];
            int next = -1;
            for (int e = 0; e < 3; ++e) {
                const Vec2& a = pts_[T.v[(e + 1) % 3]];
                const Vec2& b = pts_[T.v[(e + 2) % 3]];
                if (orient2d(a, b, p) < 0.0) {
                    next = T.nbr[e];
                    break;
                }
            }
            if (next == -1) return t;
            t = next;
        }
        // Walk cycled (nearly degenerate data); fall back to a full scan.
        for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
            if (!tris_[i].alive) continue;
            const BwTri& T = tris_[i];
            bool inside = true;
            for (int e = 0; e < 3 && inside; ++e)
                inside = orient2d(pts_[T.v[(e + 1) % 3]], pts_[T.v[(e + 2) % 3]], p) >= -1e-14;
            if (inside) return i;
        }
        throw NumericError("point location failed during meshing");
    }

    void insert(int ip) {
        const Vec2 p = pts_[ip];
        const int t0 = find_containing(p);
        // Grow the cavity of triangles whose circumcircle contains p.
        cavity_.clear();
        stack_.clear();
        seen_.assign(tris_.size(), 0);
        stack_.push_back(t0);
        seen_[t0] = 1;
        while (!stack_.empty()) {
            const int t = stack_.back();
            stack_.pop_back();
            if (!tris_[t].alive || !in_circum(t, p)) continue;
            cavity_.push_back(t);
            for (int e = 0; e < 3; ++e) {
                const int u = tris_[t].nbr[e];
                if (u >= 0 && !seen_[u]) {
                    seen_[u] = 1;
                    stack_.push_back(u);
                }
            }
        }
        if (cavity_.empty()) cavity_.push_back(t0);
        for (int t : cavity_) tris_[t].alive = false;
        // Directed cavity boundary edges (a, b), with the outside neighbor.
        struct Rim {
            int a, b, outside;
        };
        std::vector<Rim> rim;
        for (int t : cavity_) {
            for (int e = 0; e < 3; ++e) {
                const int u = tris_[t].nbr[e];
                const bool inside = (u >= 0 && !tris_[u].alive);
                if (!inside) rim.push_back({tris_[t].v[(e + 1) % 3], tris_[t].v[(e + 2) % 3], u});
            }
        }
        // New fan around p; link siblings through shared edges (p, x).
        std::unordered_map<int, int> by_a, by_b;
        by_a.reserve(rim.size());
        by_b.reserve(rim.size());
        std::vector<int> fresh;
        fresh.reserve(rim.size());
        for (const Rim& r : rim) {
            const int id = make_tri(ip, r.a, r.b, r.outside, -1, -1);
            fresh.push_back(id);
            by_a[r.a] = id;
            by_b[r.b] = id;
            if (r.outside >= 0) {
                BwTri& o = tris_[r.outside];
                for (int e = 0; e < 3; ++e) {
                    const int x = o.v[(e + 1) % 3], y = o.v[(e + 2) % 3];
                    if ((x == r.b && y == r.a) || (x == r.a && y == r.b)) o.nbr[e] = id;
                }
            }
        }
        for (size_t k = 0; k < rim.size(); ++k) {
            BwTri& t = tris_[fresh[k]];
            t.nbr[1] = by_a.at(rim[k].b);  // across edge (b, p)
            t.nbr[2] = by_b.at(rim[k].a);  // across edge (p, a)
        }
        last_ = fresh.empty() ? last_ : fresh.front();
    }
};

// Deterministic jitter in [-0.5, 0.5]^2 used to break cocircular lattices.
Vec2 hash_jitter(std::uint64_t tag_a, std::uint64_t tag_b) {
    Fnv1a f;
    f.add(tag_a);
    f.add(tag_b);
    const std::uint64_t h = f.value();
    const double u = static_cast<double>(h & 0xffffffffull) / 4294967296.0 - 0.5;
    const double v = static_cast<double>(h >> 32) / 18446744073709551616.0 - 0.5;
    return {u, v};
}

struct PointSet {
    std::vector<Vec2> pts;
    double dedup_cell;

    explicit PointSet(double cell) : dedup_cell(cell) {}

    void add(const Vec2& p) { pts.push_back(p); }

    // Drop points inside a disk (used to clear room for graded clusters).
    // Points with norm >= keep_norm (the outer rim) are always preserved.
    void remove_inside(const Vec2& c, double radius, double keep_norm) {
        std::vector<Vec2> kept;
        kept.reserve(pts.size());
        for (const Vec2& p : pts)
            if (dist(p, c) >= radius || p.norm() >= keep_norm) kept.push_back(p);
        pts.swap(kept);
    }

    // Remove exact/near duplicates deterministically (first occurrence wins).
    void dedup() {
        std::unordered_map<std::uint64_t, std::vector<int>> grid;
        std::vector<Vec2> kept;
        kept.reserve(pts.size());
        auto key = [&](long ix, long iy) {
            Fnv1a f;
            f.add(static_cast<std::uint64_t>(ix));
            f.add(static_cast<std::uint64_t>(iy));
            return f.value();
        };
        for (const Vec2& p : pts) {
            const long ix = std::lround(p.x / dedup_cell), iy = std::lround(p.y / dedup_cell);
            bool dup = false;
            for (long dx = -1; dx <= 1 && !dup; ++dx)
                for (long dy = -1; dy <= 1 && !dup; ++dy) {
                    auto it = grid.find(key(ix + dx, iy + dy));
                    if (it == grid.end()) continue;
                    for (int j : it->second)
                        if (dist(kept[j], p) < dedup_cell) {
                            dup = true;
                            break;
                        }
                }
            if (!dup) {
                kept.push_back(p);
                grid[key(ix, iy)].push_back(static_cast<int>(kept.size()) - 1);
            }
        }
        pts.swap(kept);
    }
};

double grading_step(double h, double s, double exponent) {
    return h * std::pow(s, (exponent - 1.0) / exponent);
}

}  // namespace

// ---------------------------------------------------------------------------
// Mesh methods
// ---------------------------------------------------------------------------

struct Mesh::LocateGrid {
    double x0 = 0, y0 = 0, cell = 1;
    int nx = 1, ny = 1;
    std::vector<std::vector<int>> tri_cells;
    std::vector<std::vector<int>> vert_cells;
    std::vector<std::vector<int>> vert_tris;

    int index(int ix, int iy) const { return iy * nx + ix; }
};

double Mesh::triangle_area(int t) const {
    const auto& T = tris[t];
    return 0.5 * orient2d(verts[T[0]], verts[T[1]], verts[T[2]]);
}

void Mesh::build_grid() const {
    auto g = std::make_shared<LocateGrid>();
    Vec2 lo = verts[0], hi = verts[0];
    for (const Vec2& p : verts) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    const int n = std::clamp(static_cast<int>(std::sqrt(tris.size() / 2.0)), 8, 512);
    g->x0 = lo.x;
    g->y0 = lo.y;
    g->cell = std::max({(hi.x - lo.x) / n, (hi.y - lo.y) / n, 1e-12});
    g->nx = static_cast<int>((hi.x - lo.x) / g->cell) + 2;
    g->ny = static_cast<int>((hi.y - lo.y) / g->cell) + 2;
    g->tri_cells.assign(static_cast<size_t>(g->nx) * g->ny, {});
    g->vert_cells.assign(static_cast<size_t>(g->nx) * g->ny, {});
    g->vert_tris.assign(verts.size(), {});
    auto cell_of = [&](const Vec2& p, int& ix, int& iy) {
        ix = std::clamp(static_cast<int>((p.x - g->x0) / g->cell), 0, g->nx - 1);
        iy = std::clamp(static_cast<int>((p.y - g->y0) / g->cell), 0, g->ny - 1);
    };
    for (int t = 0; t < num_triangles(); ++t) {
        Vec2 tlo = verts[tris[t][0]], thi = tlo;
        for (int k = 1; k < 3; ++k) {
            const Vec2& p = verts[tris[t][k]];
            tlo.x = std::min(tlo.x, p.x);
            tlo.y = std::min(tlo.y, p.y);
            thi.x = std::max(thi.x, p.x);
            thi.y = std::max(thi.y, p.y);
        }
        int ix0, iy0, ix1, iy1;
        cell_of(tlo, ix0, iy0);
        cell_of(thi, ix1, iy1);
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix) g->tri_cells[g->index(ix, iy)].push_back(t);
        for (int k = 0; k < 3; ++k) g->vert_tris[tris[t][k]].push_back(t);
    }
    for (int v = 0; v < num_vertices(); ++v) {
        int ix, iy;
        cell_of(verts[v], ix, iy);
        g->vert_cells[g->index(ix, iy)].push_back(v);
    }
    grid_ = std::move(g);
}

void Mesh::ensure_grid() const {
    std::call_once(grid_once_.flag, [this] { build_grid(); });
}

int Mesh::locate(const Vec2& p, std::array<double, 3>& bary) const {
    ensure_grid();
    const LocateGrid& g = *grid_;
    const int ix = std::clamp(static_cast<int>((p.x - g.x0) / g.cell), 0, g.nx - 1);
    const int iy = std::clamp(static_cast<int>((p.y - g.y0) / g.cell), 0, g.ny - 1);
    auto barycentric = [&](int t, std::array<double, 3>& b) {
        const Vec2 &A = verts[tris[t][0]], &B = verts[tris[t][1]], &C = verts[tris[t][2]];
        const double area = orient2d(A, B, C);
        b[0] = orient2d(p, B, C) / area;
        b[1] = orient2d(A, p, C) / area;
        b[2] = orient2d(A, B, p) / area;
        return std::min({b[0], b[1], b[2]});
    };
    for (int t : g.tri_cells[g.index(ix, iy)]) {
        if (barycentric(t, bary) >= -1e-12) return t;
    }
    // Not inside any triangle of this cell: clamp to the fan of the nearest
    // vertex (points marginally outside the polygonal hull, e.g. between a
    // boundary chord and the circular arc, end up here).
    int best_v = -1;
    double best_d = std::numeric_limits<double>::max();
    for (int ring = 0; ring < std::max(g.nx, g.ny); ++ring) {
        for (int dy = -ring; dy <= ring; ++dy)
            for (int dx = -ring; dx <= ring; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                const int jx = ix + dx, jy = iy + dy;
                if (jx < 0 || jy < 0 || jx >= g.nx || jy >= g.ny) continue;
                for (int v : g.vert_cells[g.index(jx, jy)]) {
                    const double d = dist(p, verts[v]);
                    if (d < best_d) {
                        best_d = d;
                        best_v = v;
                    }
                }
            }
        if (best_v >= 0 && best_d <= (ring - 0.5) * g.cell) break;
        if (best_v >= 0 && ring > 2 && best_d <= ring * g.cell) break;
    }
    if (best_v < 0) throw NumericError("mesh locate: empty vertex grid");
    int best_t = -1;
    double best_min = -std::numeric_limits<double>::max();
    std::array<double, 3> b{};
    for (int t : g.vert_tris[best_v]) {
        const double m = barycentric(t, b);
        if (m > best_min) {
            best_min = m;
            best_t = t;
            bary = b;
        }
    }
    if (best_t < 0) throw NumericError("mesh locate: isolated vertex");
    double s = 0;
    for (double& c : bary) {
        c = std::max(c, 0.0);
        s += c;
    }
    for (double& c : bary) c /= s;
    return best_t;
}

std::vector<int> Mesh::nearby_vertices(const Vec2& p, double radius) const {
    ensure_grid();
    const LocateGrid& g = *grid_;
    const int ix0 = std::clamp(static_cast<int>((p.x - radius - g.x0) / g.cell), 0, g.nx - 1);
    const int ix1 = std::clamp(static_cast<int>((p.x + radius - g.x0) / g.cell), 0, g.nx - 1);
    const int iy0 = std::clamp(static_cast<int>((p.y - radius - g.y0) / g.cell), 0, g.ny - 1);
    const int iy1 = std::clamp(static_cast<int>((p.y + radius - g.y0) / g.cell), 0, g.ny - 1);
    std::vector<int> out;
    for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix)
            for (int v : g.vert_cells[g.index(ix, iy)])
                if (dist(verts[v], p) <= radius) out.push_back(v);
    return out;
}

void Mesh::validate() const {
    if (verts.empty() || tris.empty()) throw NumericError("mesh validate: empty mesh");
    for (int t = 0; t < num_triangles(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const int v = tris[t][k];
            if (v < 0 || v >= num_vertices()) throw NumericError("mesh validate: vertex index");
        }
        if (!(triangle_area(t) > 0.0)) throw NumericError("mesh validate: non-positive area");
    }
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& T : tris)
        for (int e = 0; e < 3; ++e) {
            const int a = T[(e + 1) % 3], b = T[(e + 2) % 3];
            ++edge_count[{std::min(a, b), std::max(a, b)}];
        }
    for (const auto& [e, c] : edge_count)
        if (c > 2) throw NumericError("mesh validate: non-manifold edge");
    std::map<std::pair<int, int>, int> hull;
    for (const auto& [e, c] : edge_count)
        if (c == 1) hull[e] = 0;
    if (hull.size() != bedges.size()) throw NumericError("mesh validate: boundary edge count");
    std::vector<int> degree(verts.size(), 0);
    for (const auto& E : bedges) {
        if (!hull.count({std::min(E[0], E[1]), std::max(E[0], E[1])}))
            throw NumericError("mesh validate: stray boundary edge");
        ++degree[E[0]];
        ++degree[E[1]];
        if (!on_boundary[E[0]] || !on_boundary[E[1]])
            throw NumericError("mesh validate: unflagged boundary vertex");
    }
    for (int v = 0; v < num_vertices(); ++v) {
        if (degree[v] != (on_boundary[v] ? 2 : 0))
            throw NumericError("mesh validate: boundary is not a closed loop");
    }
}

std::uint64_t Mesh::hash() const {
    Fnv1a f;
    f.add(static_cast<std::uint64_t>(verts.size()));
    f.add(static_cast<std::uint64_t>(tris.size()));
    for (const Vec2& p : verts) {
        f.add(p.x);
        f.add(p.y);
    }
    for (const auto& T : tris)
        for (int v : T) f.add(static_cast<std::uint64_t>(v));
    for (const auto& E : bedges) {
        f.add(static_cast<std::uint64_t>(E[0]));
        f.add(static_cast<std::uint64_t>(E[1]));
    }
    f.add(h);
    f.add(bdry_radius);
    f.add(static_cast<std::uint64_t>(half ? 1 : 0));
    return f.value();
}

void Mesh::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open mesh file for writing: " + path);
    out.precision(17);
    out << "mflmesh 1\n";
    out << "h " << h << " radius " << bdry_radius << " half " << (half ? 1 : 0) << "\n";
    out << "verts " << verts.size() << "\n";
    for (int v = 0; v < num_vertices(); ++v)
        out << verts[v].x << " " << verts[v].y << " " << int(on_boundary[v]) << "\n";
    out << "tris " << tris.size() << "\n";
    for (const auto& T : tris) out << T[0] << " " << T[1] << " " << T[2] << "\n";
    out << "bedges " << bedges.size() << "\n";
    for (size_t e = 0; e < bedges.size(); ++e)
        out << bedges[e][0] << " " << bedges[e][1] << " " << int(bedge_is_arc[e]) << "\n";
    out << "marks " << marks.size() << "\n";
    for (const Mark& m : marks)
        out << m.pos.x << " " << m.pos.y << " " << m.exponent << " " << m.inner << " " << m.outer
            << "\n";
    if (!out) throw ConfigError("failed writing mesh file: " + path);
}

Mesh Mesh::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mesh file: " + path);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "mflmesh" || version != 1) throw ConfigError("unrecognized mesh file: " + path);
    Mesh m;
    std::string key;
    int half_flag = 0;
    in >> key >> m.h >> key >> m.bdry_radius >> key >> half_flag;
    m.half = half_flag != 0;
    size_t n = 0;
    in >> key >> n;
    m.verts.resize(n);
    m.on_boundary.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int b;
        in >> m.verts[i].x >> m.verts[i].y >> b;
        m.on_boundary[i] = static_cast<char>(b);
    }
    in >> key >> n;
    m.tris.resize(n);
    for (auto& T : m.tris) in >> T[0] >> T[1] >> T[2];
    in >> key >> n;
    m.bedges.resize(n);
    m.bedge_is_arc.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int arc;
        in >> m.bedges[i][0] >> m.bedges[i][1] >> arc;
        m.bedge_is_arc[i] = static_cast<char>(arc);
    }
    in >> key >> n;
    m.marks.resize(n);
    for (Mark& mk : m.marks) in >> mk.pos.x >> mk.pos.y >> mk.exponent >> mk.inner >> mk.outer;
    if (!in) throw ConfigError("truncated mesh file: " + path);
    m.validate();
    m.build_grid();
    return m;
}

// ---------------------------------------------------------------------------
// Mesh generation
// ---------------------------------------------------------------------------

Mesh delaunay_triangulate(std::vector<Vec2> pts, double h, double bdry_radius, bool half) {
    Mesh m;
    m.h = h;
    m.bdry_radius = bdry_radius;
    m.half = half;
    m.verts = pts;
    m.tris = Triangulator(std::move(pts)).result();
    // Hull edges (count 1) become the boundary, oriented with the domain left.
    std::map<std::pair<int, int>, std::pair<int, int>> edges;  // sorted -> directed
    for (const auto& T : m.tris)
        for (int e = 0; e < 3; ++e) {
            const int a = T[(e + 1) % 3], b = T[(e + 2) % 3];
            auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = edges.find(key);
            if (it == edges.end())
                edges[key] = {a, b};
            else
                it->second = {-1, -1};
        }
    m.on_boundary.assign(m.verts.size(), 0);
    for (const auto& [key, dir] : edges) {
        if (dir.first < 0) continue;
        m.bedges.push_back({dir.first, dir.second});
        m.on_boundary[dir.first] = 1;
        m.on_boundary[dir.second] = 1;
    }
    m.bedge_is_arc.resize(m.bedges.size());
    const double tol = 1e-7 * bdry_radius;
    for (size_t e = 0; e < m.bedges.size(); ++e) {
        const Vec2& a = m.verts[m.bedges[e][0]];
        const Vec2& b = m.verts[m.bedges[e][1]];
        m.bedge_is_arc[e] =
            std::abs(a.norm() - bdry_radius) < tol && std::abs(b.norm() - bdry_radius) < tol;
    }
    m.validate();
    m.build_grid();
    return m;
}

namespace {

// Polar point cluster realizing the graded-edge rule around one mark.
void add_cluster(PointSet& ps, const Mark& mk, double h, bool boundary_mark) {
    const double beta = std::max(mk.exponent, 1.0);
    const double floor_s = std::pow(h, beta);
    double s = std::max(mk.inner, floor_s);
    ps.add(mk.pos);
    const double theta_p = std::atan2(mk.pos.y, mk.pos.x);
    int k = 0;
    std::vector<double> radii;
    while (s < mk.outer) {
        radii.push_back(s);
        s += grading_step(h, s, beta);
        if (++k > 100000) throw NumericError("mesh grading produced too many rings");
    }
    // Snap or append the final ring exactly at the cluster rim.
    if (!radii.empty() && mk.outer - radii.back() < 0.5 * grading_step(h, radii.back(), beta))
        radii.back() = mk.outer;
    else
        radii.push_back(mk.outer);
    for (size_t j = 0; j < radii.size(); ++j) {
        const double r = radii[j];
        const double step = grading_step(h, r, beta);
        if (boundary_mark) {
            // Boundary-fitted polar rows: the end points of each ring land
            // exactly on the circle |x| = 1, at arc distance r from the mark.
            const int mrow = std::max(4, static_cast<int>(std::lround(kPi * r / step)));
            for (int i = 0; i <= mrow; ++i) {
                const double t = kPi * i / mrow;
                const double alpha = theta_p + r * std::cos(t);
                const double rho = 1.0 - r * std::sin(t);
                Vec2 p{rho * std::cos(alpha), rho * std::sin(alpha)};
                if (i > 0 && i < mrow) {
                    const Vec2 jit = hash_jitter(0x9b5cull + j, 7919ull * i + 13);
                    p += jit * (2e-6 * step);
                }
                ps.add(p);
            }
        } else {
            const int n = std::max(6, static_cast<int>(std::lround(2.0 * kPi * r / step)));
            const double off = (j % 2 == 1) ? 0.5 : 0.0;
            for (int i = 0; i < n; ++i) {
                const double t = 2.0 * kPi * (i + off) / n;
                Vec2 p = mk.pos + Vec2{r * std::cos(t), r * std::sin(t)};
                const Vec2 jit = hash_jitter(0x51adull + j, 7919ull * i + 29);
                p += jit * (2e-6 * step);
                ps.add(p);
            }
        }
    }
}

}  // namespace

Mesh mesh_unit_disk(double h, const std::vector<Mark>& marks_in) {
    if (!(h > 1e-4 && h < 0.5)) throw ConfigError("mesh_unit_disk: h out of range");
    // Deduplicate marks and cap their graded regions so clusters stay clear of
    // each other and (for interior marks) of the boundary circle.
    std::vector<Mark> marks;
    for (const Mark& mk : marks_in) {
        bool merged = false;
        for (Mark& ex : marks)
            if (dist(ex.pos, mk.pos) < 1e-9) {
                ex.exponent = std::max(ex.exponent, mk.exponent);
                ex.inner = std::min(ex.inner, mk.inner);
                ex.outer = std::max(ex.outer, mk.outer);
                merged = true;
                break;
            }
        if (!merged) marks.push_back(mk);
    }
    for (size_t i = 0; i < marks.size(); ++i) {
        Mark& mk = marks[i];
        const double r = mk.pos.norm();
        if (r > 1.0 + 1e-9) throw ConfigError("mesh_unit_disk: mark outside the disk");
        const bool on_b = std::abs(r - 1.0) < 1e-9;
        if (on_b) mk.pos = mk.pos / r;  // snap exactly onto the circle
        if (!on_b) mk.outer = std::min(mk.outer, 0.8 * (1.0 - r));
        for (size_t j = 0; j < marks.size(); ++j)
            if (j != i) mk.outer = std::min(mk.outer, 0.45 * dist(mk.pos, marks[j].pos));
        mk.outer = std::max(mk.outer, 8.0 * h * h);  // keep a nontrivial cluster
    }

    PointSet ps(1e-8);
    const int rings = std::max(3, static_cast<int>(std::lround(1.0 / h)));
    const double dr = 1.0 / rings;
    ps.add({0.0, 0.0});
    for (int j = 1; j <= rings; ++j) {
        const double r = j * dr;
        const int n = std::max(6, static_cast<int>(std::lround(2.0 * kPi * r / dr)));
        const double off = (j % 2 == 1) ? 0.5 : 0.0;
        const bool is_rim = (j == rings);
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * kPi * (i + off) / n;
            Vec2 p{r * std::cos(t), r * std::sin(t)};
            if (!is_rim) p += hash_jitter(1000ull + j, i) * (2e-6 * dr);
            ps.add(p);
        }
    }
    for (const Mark& mk : marks) {
        const bool on_b = std::abs(mk.pos.norm() - 1.0) < 1e-9;
        // Clear base points in the graded region plus a margin band so the
        // transition to the surviving lattice has no sliver-thin gaps. For
        // interior marks the rim ring of the disk is never removed; boundary
        // marks re-create the circle locally at graded arc spacing.
        ps.remove_inside(mk.pos, mk.outer + 0.4 * dr, on_b ? 2.0 : 1.0 - 1e-12);
        add_cluster(ps, mk, dr, on_b);
    }
    ps.dedup();
    Mesh m = delaunay_triangulate(std::move(ps.pts), h, 1.0, false);
    m.marks = marks;
    return m;
}

Mesh mesh_truncated_disk(double R, double core_h, double core_r, bool half,
                         double core_grading) {
    if (!(R > 2.0 * core_r) || !(core_r > 0) || !(core_h > 0) || core_grading < 1.0)
        throw ConfigError("mesh_truncated_disk: invalid parameters");
    PointSet ps(1e-8 * std::max(1.0, R));
    auto add_ring = [&](double r, double gap, std::uint64_t tag, bool on_circle) {
        const double span = half ? kPi : 2.0 * kPi;
        int n = std::max(half ? 4 : 6, static_cast<int>(std::lround(span * r / gap)));
        if (half) {
            for (int i = 0; i <= n; ++i) {
                const double t = kPi * i / n;
                Vec2 p{r * std::cos(t), r * std::sin(t)};
                if (i == 0) p = {r, 0.0};
                if (i == n) p = {-r, 0.0};
                const bool fixed = on_circle || i == 0 || i == n;
                if (!fixed) p += hash_jitter(tag, i) * (2e-6 * gap);
                ps.add(p);
            }
        } else {
            const double off = (tag % 2 == 1) ? 0.5 : 0.0;
            for (int i = 0; i < n; ++i) {
                const double t = 2.0 * kPi * (i + off) / n;
                Vec2 p{r * std::cos(t), r * std::sin(t)};
                if (!on_circle) p += hash_jitter(tag, i) * (2e-6 * gap);
                ps.add(p);
            }
        }
    };
    ps.add({0.0, 0.0});
    const int kcore = std::max(2, static_cast<int>(std::lround(core_r / core_h)));
    double prev = 0.0;
    for (int k = 1; k <= kcore; ++k) {
        const double r = core_r * std::pow(static_cast<double>(k) / kcore, core_grading);
        add_ring(r, std::max(r - prev, 1e-12), 2000ull + k, false);
        prev = r;
    }
    const double q = 1.0 + core_h / core_r;
    double r = core_r;
    std::uint64_t tag = 4000;
    while (r * q < R) {
        const double rn = r * q;
        add_ring(rn, rn - r, ++tag, false);
        r = rn;
    }
    add_ring(R, R * (q - 1.0), ++tag, true);
    ps.dedup();
    Mesh m = delaunay_triangulate(std::move(ps.pts), core_h, R, half);
    return m;
}

}  // namespace mfl

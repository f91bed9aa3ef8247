#include "mfl/quadrature.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace mfl {

double QuadRule::total_weight() const {
    double s = 0.0;
    for (const QPoint& q : pts) s += q.w;
    return s;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mtx;
    {
        std::lock_guard<std::mutex> lk(mtx);
        auto it = cache.find(n);
        if (it != cache.end()) {
            nodes = it->second.first;
            weights = it->second.second;
            return;
        }
    }
    if (n < 1 || n > 200) throw ConfigError("gauss_legendre: order out of range");
    std::vector<double> xs(n), ws(n);
    for (int i = 0; i < n; ++i) {
        // Newton iteration from the Chebyshev-like initial guess on [-1, 1].
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        xs[i] = 0.5 * (1.0 - x);  // map to [0, 1]; loop order makes this ascending
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    {
        std::lock_guard<std::mutex> lk(mtx);
        cache[n] = {xs, ws};
    }
    nodes = xs;
    weights = ws;
}

namespace {

struct BaryPoint {
    double b0, b1, b2, w;
};

const std::vector<BaryPoint>& reference_rule(int degree) {
    static const std::vector<BaryPoint> deg2 = {
        {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0},
        {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0},
        {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0},
    };
    // Six-point rule with degree-4 exactness.
    static const std::vector<BaryPoint> deg4 = [] {
        const double a = 0.445948490915965, wa = 0.223381589678011;
        const double b = 0.091576213509771, wb = 0.109951743655322;
        std::vector<BaryPoint> r;
        r.push_back({1.0 - 2.0 * a, a, a, wa});
        r.push_back({a, 1.0 - 2.0 * a, a, wa});
        r.push_back({a, a, 1.0 - 2.0 * a, wa});
        r.push_back({1.0 - 2.0 * b, b, b, wb});
        r.push_back({b, 1.0 - 2.0 * b, b, wb});
        r.push_back({b, b, 1.0 - 2.0 * b, wb});
        return r;
    }();
    if (degree <= 2) return deg2;
    return deg4;
}

}  // namespace

QuadRule triangle_rule(const Mesh& mesh, int degree) {
    const auto& ref = reference_rule(degree);
    QuadRule rule;
    rule.pts.reserve(mesh.tris.size() * ref.size());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2& A = mesh.verts[mesh.tris[t][0]];
        const Vec2& B = mesh.verts[mesh.tris[t][1]];
        const Vec2& C = mesh.verts[mesh.tris[t][2]];
        const double area = mesh.triangle_area(t);
        for (const BaryPoint& q : ref) {
            rule.pts.push_back({{q.b0 * A.x + q.b1 * B.x + q.b2 * C.x,
                                 q.b0 * A.y + q.b1 * B.y + q.b2 * C.y},
                                q.w * area});
        }
    }
    return rule;
}

QuadRule volume_rule(const Mesh& mesh, int degree) {
    QuadRule rule = triangle_rule(mesh, degree);
    // Circular segments between boundary chords and the true arc.
    std::vector<double> gn, gw;
    gauss_legendre(4, gn, gw);
    const double R = mesh.bdry_radius;
    for (size_t e = 0; e < mesh.bedges.size(); ++e) {
        if (!mesh.bedge_is_arc[e]) continue;
        const Vec2& a = mesh.verts[mesh.bedges[e][0]];
        const Vec2& b = mesh.verts[mesh.bedges[e][1]];
        const double ta = std::atan2(a.y, a.x);
        double dth = std::atan2(b.y, b.x) - ta;
        while (dth <= 0.0) dth += 2.0 * kPi;
        if (dth > kPi) continue;  // safety: never a half-circle chord
        for (int i = 0; i < 4; ++i) {
            const double s = gn[i];
            const double th = ta + s * dth;
            const Vec2 arc{R * std::cos(th), R * std::sin(th)};
            const Vec2 darc{-R * dth * std::sin(th), R * dth * std::cos(th)};
            const Vec2 chord{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
            const Vec2 dchord{b.x - a.x, b.y - a.y};
            for (int j = 0; j < 4; ++j) {
                const double t = gn[j];
                const Vec2 p = chord * (1.0 - t) + arc * t;
                const Vec2 dps = dchord * (1.0 - t) + darc * t;
                const Vec2 dpt = arc - chord;
                const double jac = std::abs(dps.x * dpt.y - dps.y * dpt.x);
                rule.pts.push_back({p, gw[i] * gw[j] * jac});
            }
        }
    }
    return rule;
}

QuadRule boundary_rule(const Mesh& mesh, int order) {
    std::vector<double> gn, gw;
    gauss_legendre(std::max(2, order), gn, gw);
    QuadRule rule;
    const double R = mesh.bdry_radius;
    for (size_t e = 0; e < mesh.bedges.size(); ++e) {
        const Vec2& a = mesh.verts[mesh.bedges[e][0]];
        const Vec2& b = mesh.verts[mesh.bedges[e][1]];
        if (mesh.bedge_is_arc[e]) {
            const double ta = std::atan2(a.y, a.x);
            double dth = std::atan2(b.y, b.x) - ta;
            while (dth <= 0.0) dth += 2.0 * kPi;
            for (size_t i = 0; i < gn.size(); ++i) {
                const double th = ta + gn[i] * dth;
                rule.pts.push_back({{R * std::cos(th), R * std::sin(th)}, gw[i] * R * dth});
            }
        } else {
            const double len = dist(a, b);
            for (size_t i = 0; i < gn.size(); ++i)
                rule.pts.push_back({a + (b - a) * gn[i], gw[i] * len});
        }
    }
    return rule;
}

QuadRule chart_rule(const Chart& chart, double r_max, double inner_scale, double gamma,
                    int n_ang, int n_rad) {
    if (!(r_max > 0.0) || !(inner_scale > 0.0) || !(gamma > -1.0))
        throw ConfigError("chart_rule: invalid parameters");
    r_max = std::min(r_max, 2.0 * chart.radius());
    inner_scale = std::min(inner_scale, 0.5 * r_max);
    std::vector<double> gn, gw;
    gauss_legendre(n_rad, gn, gw);
    // Radial panel boundaries: geometric growth from the concentration scale.
    std::vector<double> panel{0.0, inner_scale};
    while (panel.back() < r_max) panel.push_back(std::min(panel.back() * 2.0, r_max));
    // Angular nodes: periodic trapezoid for interior charts, Gauss on [0, pi]
    // for boundary charts (the half-disk integrand is not periodic).
    std::vector<double> th, thw;
    if (chart.is_boundary()) {
        std::vector<double> an, aw;
        gauss_legendre(n_ang, an, aw);
        for (int i = 0; i < n_ang; ++i) {
            th.push_back(kPi * an[i]);
            thw.push_back(kPi * aw[i]);
        }
    } else {
        for (int i = 0; i < n_ang; ++i) {
            th.push_back(2.0 * kPi * i / n_ang);
            thw.push_back(2.0 * kPi / n_ang);
        }
    }
    QuadRule rule;
    rule.pts.reserve((panel.size() - 1) * gn.size() * th.size());
    const double p = 1.0 / (1.0 + gamma);
    for (size_t k = 0; k + 1 < panel.size(); ++k) {
        for (size_t i = 0; i < gn.size(); ++i) {
            double r, dr;
            if (k == 0) {
                // r = t1 * u^(1/(1+gamma)) turns r^(2*gamma) * r dr into u du.
                const double u = gn[i];
                r = panel[1] * std::pow(u, p);
                dr = panel[1] * p * std::pow(u, p - 1.0);
            } else {
                r = panel[k] + gn[i] * (panel[k + 1] - panel[k]);
                dr = panel[k + 1] - panel[k];
            }
            for (size_t j = 0; j < th.size(); ++j) {
                rule.pts.push_back({{r * std::cos(th[j]), r * std::sin(th[j])},
                                    gw[i] * dr * r * thw[j]});
            }
        }
    }
    return rule;
}

}  // namespace mfl

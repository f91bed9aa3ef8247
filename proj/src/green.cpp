#include "mfl/green.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mfl/quadrature.hpp"

namespace mfl {

GreenFunction::GreenFunction(std::shared_ptr<const FemSystem> fem, CutoffProfile profile)
    : fem_(std::move(fem)), prof_(profile) {}

GreenFunction::Key GreenFunction::key_of(const Vec2& xi) {
    return {std::bit_cast<std::uint64_t>(xi.x), std::bit_cast<std::uint64_t>(xi.y)};
}

const Chart& GreenFunction::chart(const Vec2& xi) const {
    std::lock_guard<std::mutex> lk(mtx_);
    const Key k = key_of(xi);
    auto it = charts_.find(k);
    if (it == charts_.end())
        it = charts_.emplace(k, std::make_unique<Chart>(fem_->model().chart_at(xi))).first;
    return *it->second;
}

double GreenFunction::rho(const Vec2& xi) const {
    return chart(xi).is_boundary() ? 4.0 * kPi : 8.0 * kPi;
}

double GreenFunction::singular_part(const Vec2& x, const Vec2& xi) const {
    const Chart& ch = chart(xi);
    const double coeff = 4.0 / (ch.is_boundary() ? 4.0 * kPi : 8.0 * kPi);
    const double r2 = (x - ch.center()).norm2();
    if (r2 <= 0.0) throw NumericError("green singular part: evaluation at the pole");
    return -coeff * 0.5 * std::log(r2);
}

const QuadRule& GreenFunction::mean_rule() const {
    std::lock_guard<std::mutex> lk(mtx_);
    if (!mean_rule_) {
        mean_rule_.emplace(volume_rule(fem_->mesh(), 4));
        mean_weights_.resize(mean_rule_->pts.size());
        for (size_t q = 0; q < mean_weights_.size(); ++q)
            mean_weights_[q] = std::exp(fem_->model().log_conformal(mean_rule_->pts[q].x));
    }
    return *mean_rule_;
}

double GreenFunction::singular_mean(const Vec2& xi) const {
    const Chart& ch = chart(xi);
    const double coeff = 4.0 / (ch.is_boundary() ? 4.0 * kPi : 8.0 * kPi);
    const Vec2 p = ch.center();
    const SurfaceModel& model = fem_->model();
    // Zeroth moment of ln|x - p| over the unit disk is exactly pi (|p|^2 - 1)/2.
    double total = 0.5 * kPi * (p.norm2() - 1.0);
    if (!model.is_flat()) {
        const double wp = std::exp(model.log_conformal(p));
        const Vec2 gw = model.grad_log_conformal(p) * wp;
        total *= wp;
        // First moment: (x - p) ln r is the gradient of (r^2/4)(ln r^2 - 1),
        // so its disk integral reduces to a circle integral of that potential.
        const int n_th = 2048;
        Vec2 lin{0.0, 0.0};
        for (int i = 0; i < n_th; ++i) {
            const double th = 2.0 * kPi * (i + 0.5) / n_th;
            const Vec2 x{std::cos(th), std::sin(th)};
            const double r2 = (x - p).norm2();
            if (r2 > 0.0) lin += x * (0.25 * r2 * (std::log(r2) - 1.0));
        }
        total += dot(gw, lin * (2.0 * kPi / n_th));
        // Second-order remainder of the conformal weight, integrand ~ r^2 ln r.
        const QuadRule& rule = mean_rule();
        double rem = 0.0;
        for (size_t q = 0; q < rule.pts.size(); ++q) {
            const Vec2 d = rule.pts[q].x - p;
            const double r2 = d.norm2();
            if (r2 < 1e-28) continue;
            rem += rule.pts[q].w * (mean_weights_[q] - wp - dot(gw, d)) * 0.5 * std::log(r2);
        }
        total += rem;
    }
    return -coeff * total / fem_->area();
}

std::string GreenFunction::cache_path(const Chart& ch) const {
    Fnv1a f;
    f.add(fem_->model().hash());
    f.add(fem_->mesh().hash());
    f.add(ch.center().x);
    f.add(ch.center().y);
    f.add(std::uint64_t{2});  // layout version
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(f.value()));
    return cache_dir_ + "/greenH-" + buf + ".txt";
}

Field GreenFunction::solve_regular(const Chart& ch) const {
    const double rho_xi = ch.is_boundary() ? 4.0 * kPi : 8.0 * kPi;
    const double coeff = 4.0 / rho_xi;
    const Vec2 p = ch.center();
    const Mesh& mesh = fem_->mesh();
    std::vector<double> load(mesh.num_vertices(), 0.0);
    // The regular part solves -Lap H = -1/|S| with the natural-boundary flux
    // d/dn H = coeff * d/dn ln|x - p| along the circle. For a pole on the
    // circle the half-angle identity collapses that flux to the constant
    // coeff/2; for interior poles it is evaluated on each boundary chord.
    std::vector<double> gn, gw;
    gauss_legendre(4, gn, gw);
    for (const auto& e : mesh.bedges) {
        const Vec2& a = mesh.verts[e[0]];
        const Vec2& b = mesh.verts[e[1]];
        const Vec2 d = b - a;
        const double len = d.norm();
        const Vec2 n_out{d.y / len, -d.x / len};  // domain lies left of a -> b
        for (size_t q = 0; q < gn.size(); ++q) {
            const double t = gn[q];
            double data = 0.5 * coeff;
            if (!ch.is_boundary()) {
                const Vec2 x = a + d * t;
                data = coeff * dot(x - p, n_out) / (x - p).norm2();
            }
            const double w = gw[q] * len * data;
            load[e[0]] += w * (1.0 - t);
            load[e[1]] += w * t;
        }
    }
    for (int i = 0; i < mesh.num_vertices(); ++i)
        load[i] -= fem_->lumped_mass()[i] / fem_->area();
    const double target = -singular_mean(p);
    return fem_->solve_zero_mean(load, target);
}

std::shared_ptr<const Field> GreenFunction::regular_part(const Vec2& xi) const {
    const Chart& ch = chart(xi);
    {
        std::lock_guard<std::mutex> lk(mtx_);
        auto it = regular_.find(key_of(xi));
        if (it != regular_.end()) return it->second;
    }
    // On-disk cache, keyed by model, mesh, and pole.
    if (!cache_dir_.empty()) {
        const std::string path = cache_path(ch);
        std::ifstream in(path);
        if (in) {
            std::vector<double> vals(fem_->mesh().num_vertices());
            for (double& v : vals) in >> v;
            if (in) {
                auto f = std::make_shared<const Field>(fem_->mesh_ptr(), std::move(vals));
                std::lock_guard<std::mutex> lk(mtx_);
                regular_[key_of(xi)] = f;
                return f;
            }
        }
    }
    Field sol = solve_regular(ch);
    if (!cache_dir_.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cache_dir_, ec);
        const std::string path = cache_path(ch);
        std::ofstream out(path + ".tmp");
        out.precision(17);
        for (double v : sol.values()) out << v << "\n";
        out.close();
        if (out) std::filesystem::rename(path + ".tmp", path, ec);
    }
    auto f = std::make_shared<const Field>(std::move(sol));
    std::lock_guard<std::mutex> lk(mtx_);
    // Configuration searches probe many poles; keep memory bounded (evicted
    // entries are rebuilt on demand, outstanding handles stay valid).
    if (regular_.size() >= 384) regular_.clear();
    regular_[key_of(xi)] = f;
    return f;
}

double GreenFunction::eval(const Vec2& x, const Vec2& xi) const {
    return singular_part(x, xi) + regular_part(xi)->eval(x);
}

double GreenFunction::eval_smooth(const Vec2& x, const Vec2& xi) const {
    return singular_part(x, xi) + regular_part(xi)->eval_smooth(x);
}

double GreenFunction::robin(const Vec2& xi) const {
    return regular_part(xi)->eval_smooth(chart(xi).center());
}

namespace disk_oracle {

double green(const Vec2& x, const Vec2& xi) {
    const double d2 = (x - xi).norm2();
    if (d2 <= 0.0) throw NumericError("disk green oracle: evaluation at the pole");
    const double image = x.norm2() * xi.norm2() - 2.0 * dot(x, xi) + 1.0;
    return -(0.5 / kPi) * (0.5 * std::log(d2) + 0.5 * std::log(image)) +
           (x.norm2() + xi.norm2()) / (4.0 * kPi) - 3.0 / (8.0 * kPi);
}

double robin(const Vec2& xi) {
    const double r2 = xi.norm2();
    if (r2 >= 1.0 - 1e-12) return 1.0 / (8.0 * kPi);
    return -(0.5 / kPi) * std::log(1.0 - r2) + r2 / (2.0 * kPi) - 3.0 / (8.0 * kPi);
}

}  // namespace disk_oracle

}  // namespace mfl

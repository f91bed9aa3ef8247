#include "mfl/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mfl {

double AnsatzState::eval(const Vec2& x) const {
    double acc = 0.0;
    for (const auto& b : bubbles) acc += b.eval(x);
    return acc;
}

double AnsatzState::eval_smooth(const Vec2& x) const {
    double acc = 0.0;
    for (const auto& b : bubbles) acc += b.eval_smooth(x);
    return acc;
}

ReducedProblem::ReducedProblem(std::shared_ptr<const SingularData> data, int p, int q,
                               std::vector<int> subset, double r0)
    : data_(std::move(data)), p_(p), q_(q), subset_(std::move(subset)), r0_(r0) {
    if (p_ < 0 || q_ < 0) throw ConfigError("reduced problem: negative center count");
    if (p_ + q_ + static_cast<int>(subset_.size()) < 1)
        throw ConfigError("reduced problem: at least one blow-up center required");
    if (!(r0_ > 0.0) || r0_ > 0.12)
        throw ConfigError("reduced problem: separation radius must lie in (0, 0.12]");
    const auto& pts = data_->points();
    std::vector<int> seen;
    for (int k : subset_) {
        if (k < 0 || k >= static_cast<int>(pts.size()))
            throw ConfigError("reduced problem: singular subset index out of range");
        if (std::find(seen.begin(), seen.end(), k) != seen.end())
            throw ConfigError("reduced problem: repeated singular subset index");
        seen.push_back(k);
        const auto& pt = pts[k];
        singular_centers_.push_back({pt.pos, pt.gamma, pt.boundary, pt.rho});
    }
    rho_star_ = 4.0 * kPi * (2 * p_ + q_);
    for (const auto& c : singular_centers_) rho_star_ += (1.0 + c.gamma) * c.rho;
}

std::vector<ReducedCenter> ReducedProblem::decode(const Eigen::VectorXd& u) const {
    if (u.size() != dof()) throw ConfigError("reduced problem: coordinate vector size mismatch");
    std::vector<ReducedCenter> centers;
    centers.reserve(p_ + q_ + singular_centers_.size());
    for (int i = 0; i < p_; ++i)
        centers.push_back({{u[2 * i], u[2 * i + 1]}, 0.0, false, 8.0 * kPi});
    for (int m = 0; m < q_; ++m) {
        const double th = u[2 * p_ + m];
        centers.push_back({{std::cos(th), std::sin(th)}, 0.0, true, 4.0 * kPi});
    }
    centers.insert(centers.end(), singular_centers_.begin(), singular_centers_.end());
    return centers;
}

Eigen::VectorXd ReducedProblem::encode_interior(const std::vector<Vec2>& interior,
                                                const std::vector<double>& boundary_angles) const {
    if (static_cast<int>(interior.size()) != p_ ||
        static_cast<int>(boundary_angles.size()) != q_)
        throw ConfigError("reduced problem: encode size mismatch");
    Eigen::VectorXd u(dof());
    for (int i = 0; i < p_; ++i) {
        u[2 * i] = interior[i].x;
        u[2 * i + 1] = interior[i].y;
    }
    for (int m = 0; m < q_; ++m) u[2 * p_ + m] = boundary_angles[m];
    return u;
}

void ReducedProblem::validate_centers(const std::vector<ReducedCenter>& centers) const {
    const SurfaceModel& model = green().fem().model();
    const auto& cone_pts = data_->points();
    for (size_t i = 0; i < centers.size(); ++i) {
        const auto& c = centers[i];
        if (!c.boundary && c.pos.norm() > 1.0 - 2.0 * r0_ + 1e-12)
            throw ConfigError("configuration: interior center too close to the boundary");
        const Chart ch = model.chart_at(c.pos);
        if (ch.radius() < 4.0 * r0_ - 1e-12)
            throw ConfigError("configuration: no chart of radius 4 r0 at a center");
        for (size_t j = i + 1; j < centers.size(); ++j)
            if (dist(c.pos, centers[j].pos) < 8.0 * r0_ - 1e-12)
                throw ConfigError("configuration: centers violate the separation radius");
        for (const auto& pt : cone_pts) {
            const double dq = dist(c.pos, pt.pos);
            if (dq <= 1e-9) continue;  // the center sits at this cone point
            if (dq < 4.0 * r0_ - 1e-12)
                throw ConfigError("configuration: center too close to a cone point");
        }
    }
    // Regular centers must not coincide with cone points.
    for (int i = 0; i < p_ + q_ && i < static_cast<int>(centers.size()); ++i)
        if (data_->find_point(centers[i].pos, 1e-9) >= 0)
            throw ConfigError("configuration: regular center placed on a cone point");
}

void ReducedProblem::validate(const Eigen::VectorXd& u) const { validate_centers(decode(u)); }

bool ReducedProblem::is_admissible(const Eigen::VectorXd& u) const {
    try {
        validate(u);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

double ReducedProblem::scaling_d(int i, const std::vector<ReducedCenter>& centers) const {
    const auto& c = centers[i];
    const double g1 = 1.0 + c.gamma;
    double s = g1 * c.rho * green().robin(c.pos);
    for (size_t j = 0; j < centers.size(); ++j) {
        if (static_cast<int>(j) == i) continue;
        s += (1.0 + centers[j].gamma) * centers[j].rho *
             green().eval_smooth(c.pos, centers[j].pos);
    }
    s += (i < p_ + q_) ? data_->log_K_smooth(c.pos) : data_->log_Ki_center(c.pos);
    return std::exp(s) / (8.0 * g1 * g1);
}

double ReducedProblem::singular_F_part() const {
    if (!singular_F_ready_) {
        double acc = 0.0;
        const int n0 = p_ + q_;
        std::vector<ReducedCenter> cs = singular_centers_;
        for (size_t i = 0; i < cs.size(); ++i) {
            const double g1 = 1.0 + cs[i].gamma;
            acc += 2.0 * g1 * cs[i].rho * data_->log_Ki_center(cs[i].pos);
            acc += g1 * g1 * cs[i].rho * cs[i].rho * green().robin(cs[i].pos);
            for (size_t j = 0; j < cs.size(); ++j)
                if (j != i)
                    acc += g1 * (1.0 + cs[j].gamma) * cs[i].rho * cs[j].rho *
                           green().eval_smooth(cs[i].pos, cs[j].pos);
        }
        (void)n0;
        singular_F_part_ = acc;
        singular_F_ready_ = true;
    }
    return singular_F_part_;
}

double ReducedProblem::F_centers(const std::vector<ReducedCenter>& centers) const {
    double acc = singular_F_part();
    const int n0 = p_ + q_;
    const int n = static_cast<int>(centers.size());
    for (int i = 0; i < n0; ++i) {
        const auto& c = centers[i];
        acc += 2.0 * c.rho * data_->log_K_smooth(c.pos);
        acc += c.rho * c.rho * green().robin(c.pos);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = (1.0 + centers[j].gamma) * c.rho * centers[j].rho *
                             green().eval_smooth(c.pos, centers[j].pos);
            acc += (j < n0) ? w : 2.0 * w;  // singular cross-terms appear twice
        }
    }
    return acc;
}

double ReducedProblem::F(const Eigen::VectorXd& u) const {
    const auto centers = decode(u);
    validate_centers(centers);
    return F_centers(centers);
}

Eigen::VectorXd ReducedProblem::grad_F(const Eigen::VectorXd& u) const {
    validate(u);
    const double h = 2e-3;
    Eigen::VectorXd g(dof());
    for (int k = 0; k < dof(); ++k) {
        Eigen::VectorXd v = u;
        auto probe = [&](double t) {
            v[k] = u[k] + t;
            return F_centers(decode(v));
        };
        g[k] = (-probe(2.0 * h) + 8.0 * probe(h) - 8.0 * probe(-h) + probe(-2.0 * h)) /
               (12.0 * h);
    }
    return g;
}

Eigen::VectorXd ReducedProblem::grad_F_fd(const Eigen::VectorXd& u, double step) const {
    validate(u);
    Eigen::VectorXd g(dof());
    for (int k = 0; k < dof(); ++k) {
        Eigen::VectorXd v = u;
        v[k] = u[k] + step;
        const double fp = F_centers(decode(v));
        v[k] = u[k] - step;
        const double fm = F_centers(decode(v));
        g[k] = (fp - fm) / (2.0 * step);
    }
    return g;
}

namespace {

// Damped Newton iteration on a gradient field with finite-difference
// Jacobian, using |grad|^2 as merit (critical points need not be minima).
struct GradSearch {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
    std::function<bool(const Eigen::VectorXd&)> admissible;
    double tol = 1e-8;
    int max_iter = 60;

    bool run(Eigen::VectorXd& u, double& gnorm, int& iters, bool& escaped) const {
        const int n = static_cast<int>(u.size());
        escaped = false;
        Eigen::VectorXd g = grad(u);
        gnorm = g.norm();
        for (iters = 0; iters < max_iter; ++iters) {
            if (gnorm <= tol) return true;
            Eigen::MatrixXd H(n, n);
            const double hh = 1e-4;
            for (int k = 0; k < n; ++k) {
                Eigen::VectorXd up = u, um = u;
                up[k] += hh;
                um[k] -= hh;
                H.col(k) = (grad(up) - grad(um)) / (2.0 * hh);
            }
            H = 0.5 * (H + H.transpose()).eval();
            Eigen::VectorXd step;
            double mu = 0.0;
            for (int attempt = 0; attempt < 8; ++attempt) {
                Eigen::MatrixXd M = H + mu * Eigen::MatrixXd::Identity(n, n);
                step = M.fullPivLu().solve(-g);
                if (step.allFinite() && step.norm() > 0.0) break;
                mu = (mu == 0.0) ? 1e-6 : mu * 100.0;
            }
            if (!step.allFinite() || step.norm() == 0.0) step = -g;
            // Keep single steps modest relative to the separation scale.
            const double cap = 0.2;
            if (step.norm() > cap) step *= cap / step.norm();
            double alpha = 1.0;
            bool moved = false;
            for (int back = 0; back < 40; ++back, alpha *= 0.5) {
                Eigen::VectorXd trial = u + alpha * step;
                if (!admissible(trial)) continue;
                Eigen::VectorXd gt = grad(trial);
                if (gt.norm() < (1.0 - 1e-4 * alpha) * gnorm) {
                    u = trial;
                    g = gt;
                    gnorm = g.norm();
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                // Try the steepest-descent direction once before giving up.
                alpha = 0.1;
                for (int back = 0; back < 40; ++back, alpha *= 0.5) {
                    Eigen::VectorXd trial = u - alpha * g;
                    if (!admissible(trial)) continue;
                    Eigen::VectorXd gt = grad(trial);
                    if (gt.norm() < (1.0 - 1e-4 * alpha) * gnorm) {
                        u = trial;
                        g = gt;
                        gnorm = g.norm();
                        moved = true;
                        break;
                    }
                }
            }
            if (!moved) {
                // No admissible improving step: either a flat spot at the
                // tolerance floor or a trajectory pinned to the domain edge.
                escaped = !admissible(u + 1e-6 * step) && !admissible(u - 1e-6 * g);
                return gnorm <= 10.0 * tol;
            }
        }
        return gnorm <= tol;
    }
};

}  // namespace

SearchReport ReducedProblem::find_critical(const Eigen::VectorXd& start, int n_pert, double eta,
                                           std::uint64_t seed) const {
    validate(start);
    SearchReport rep;
    rep.n_pert = n_pert;
    rep.sigma = r0_;

    GradSearch search;
    search.grad = [this](const Eigen::VectorXd& u) { return grad_F(u); };
    search.admissible = [this](const Eigen::VectorXd& u) { return is_admissible(u); };

    Eigen::VectorXd u = start;
    rep.converged = search.run(u, rep.grad_norm, rep.iterations, rep.escaped);
    rep.point = u;
    if (!rep.converged || rep.escaped) return rep;

    // Stability probe: perturb F by a small linear functional (a C^1-small
    // perturbation) and check the perturbed search stays inside the ball.
    const double scale = std::max(1.0, std::abs(F_centers(decode(u))));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < n_pert; ++t) {
        Eigen::VectorXd w(dof());
        for (int k = 0; k < dof(); ++k) w[k] = nd(rng);
        if (w.norm() == 0.0) w.setOnes();
        w *= eta * scale / w.norm();
        GradSearch pert = search;
        pert.grad = [this, &w](const Eigen::VectorXd& v) {
            return (grad_F(v) + w).eval();
        };
        Eigen::VectorXd v = u;
        double gn;
        int it;
        bool esc;
        const bool ok = pert.run(v, gn, it, esc);
        if (ok && !esc && (v - u).norm() <= rep.sigma) ++rep.stable_count;
    }
    return rep;
}

AnsatzState ReducedProblem::assemble(const Eigen::VectorXd& u, double eps) const {
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ConfigError("assemble: eps must be positive and finite");
    auto centers = decode(u);
    validate_centers(centers);
    AnsatzState st;
    st.eps = eps;
    st.rho_star = rho_star_;
    st.centers = centers;
    st.F_value = F_centers(centers);
    const auto& fem = green().fem_ptr();
    for (size_t i = 0; i < centers.size(); ++i) {
        const double d = scaling_d(static_cast<int>(i), centers);
        const double g1 = 1.0 + centers[i].gamma;
        const double lam = std::pow(d * eps * eps, -0.5 / g1);
        if (lam * r0_ < 10.0)
            throw ResolutionError("assemble: concentration scale below the resolvable range");
        st.d.push_back(d);
        st.lambda.push_back(lam);
        st.bubbles.emplace_back(fem, green().profile(), green().chart(centers[i].pos),
                                centers[i].gamma, lam);
    }
    return st;
}

double ReducedProblem::split_integral(
    const AnsatzState& state, const std::function<double(const Vec2&, int, double)>& f) const {
    double acc = 0.0;
    const int n = static_cast<int>(state.bubbles.size());
    for (int k = 0; k < n; ++k) {
        const Chart& ch = state.bubbles[k].chart();
        const double r = ch.radius();
        const double inner = std::min(1.0 / state.lambda[k], 0.125 * r);
        const QuadRule rule =
            chart_rule(ch, 0.5 * r, inner, state.centers[k].gamma, 64, 12);
        for (const auto& qp : rule.pts) {
            const Vec2& y = qp.x;
            acc += qp.w * std::exp(ch.log_factor(y)) * f(ch.from_chart(y), k, y.norm());
        }
    }
    const FemSystem& fem = green().fem();
    const QuadRule vol = volume_rule(fem.mesh(), 4);
    for (const auto& qp : vol.pts) {
        bool inside = false;
        for (int k = 0; k < n && !inside; ++k) {
            Vec2 y;
            if (state.bubbles[k].chart().try_to_chart(qp.x, y) &&
                y.norm() < 0.5 * state.bubbles[k].chart().radius())
                inside = true;
        }
        if (inside) continue;
        acc += qp.w * std::exp(fem.model().log_conformal(qp.x)) * f(qp.x, -1, -1.0);
    }
    return acc;
}

double ReducedProblem::density(const AnsatzState& state, const Field* phi,
                               const Vec2& x) const {
    double a = 2.0 * std::log(state.eps) + state.eval(x);
    if (phi) a += phi->eval(x);
    for (size_t k = 0; k < state.bubbles.size(); ++k) {
        Vec2 y;
        const Chart& ch = state.bubbles[k].chart();
        if (ch.try_to_chart(x, y) && y.norm() < 0.5 * ch.radius() &&
            state.centers[k].gamma != 0.0) {
            const double ay = std::max(y.norm(), 1e-300);
            return std::exp(a + data_->log_Ki(x, state.centers[k].pos) +
                            2.0 * state.centers[k].gamma * std::log(ay));
        }
    }
    return std::exp(a + data_->log_K(x));
}

double ReducedProblem::total_mass(const AnsatzState& state) const {
    return total_mass(state, nullptr);
}

double ReducedProblem::total_mass(const AnsatzState& state, const Field* phi) const {
    const double leps = 2.0 * std::log(state.eps);
    return split_integral(state, [&](const Vec2& x, int k, double ay) {
        double a = leps + state.eval(x);
        if (phi) a += phi->eval(x);
        if (k >= 0) {
            const double g = state.centers[k].gamma;
            a += data_->log_Ki(x, state.centers[k].pos);
            if (g != 0.0) a += 2.0 * g * std::log(std::max(ay, 1e-300));
        } else {
            a += data_->log_K(x);
        }
        return std::exp(a);
    });
}

double ReducedProblem::energy(const AnsatzState& state) const {
    double dirichlet = 0.0;
    for (const auto& bi : state.bubbles)
        for (const auto& bj : state.bubbles) dirichlet += pair_h1(bi, bj);
    return 0.5 * dirichlet - total_mass(state);
}

double ReducedProblem::expansion_gap(const AnsatzState& state) const {
    const double r = state.rho_star;
    double comparator = (3.0 * std::log(2.0) - 2.0) * r - 2.0 * r * std::log(state.eps) -
                        0.5 * state.F_value;
    for (const auto& c : state.centers)
        comparator += 2.0 * (1.0 + c.gamma) * c.rho * std::log1p(c.gamma);
    return energy(state) - comparator;
}

double ReducedProblem::j_rho(const AnsatzState& state, const Field* phi, double rho) const {
    double dirichlet = 0.0;
    for (const auto& bi : state.bubbles)
        for (const auto& bj : state.bubbles) dirichlet += pair_h1(bi, bj);
    if (phi) {
        for (const auto& b : state.bubbles)
            dirichlet += 2.0 * b.pair_zero_mean([&](const Vec2& x) { return phi->eval(x); });
        dirichlet += green().fem().h1_product(*phi, *phi);
    }
    const double mass = total_mass(state, phi);
    // ln int K e^{W+phi} = ln(mass) - 2 ln eps.
    return 0.5 * dirichlet - rho * (std::log(mass) - 2.0 * std::log(state.eps));
}

double ReducedProblem::j_level_prediction(const AnsatzState& state) const {
    const double r = state.rho_star;
    double level = -r - r * std::log(r / 8.0) - 0.5 * state.F_value;
    for (const auto& c : state.centers)
        level += 2.0 * (1.0 + c.gamma) * c.rho * std::log1p(c.gamma);
    return level;
}

ResidualReport ReducedProblem::residual(const AnsatzState& state, double s) const {
    if (!(s > 1.0)) throw ConfigError("residual: norm exponent must exceed 1");
    const double leps = 2.0 * std::log(state.eps);
    const double total = total_mass(state);
    double source_sum = 0.0;
    for (const auto& b : state.bubbles) source_sum += b.mass();
    const double c0 = (total - source_sum) / green().fem().area();

    // Pointwise residual density: eps^2 K e^W - sum_k chi_k |y|^{2g} e^{-phi}
    // e^{delta_k} - c0, evaluated stably as e^B expm1(A - B) - c0 inside a
    // bubble support.
    auto res_at = [&](const Vec2& x, int k, double ay) {
        if (k >= 0) {
            const Chart& ch = state.bubbles[k].chart();
            Vec2 y;
            ch.try_to_chart(x, y);
            const double g = state.centers[k].gamma;
            const double lay = std::log(std::max(ay, 1e-300));
            const double a = leps + data_->log_Ki(x, state.centers[k].pos) + 2.0 * g * lay +
                             state.eval(x);
            const double chi = ch.cutoff(ay, green().profile());
            if (chi <= 0.0) return std::exp(a) - c0;
            const double b = std::log(chi) + 2.0 * g * lay - ch.log_factor(y) +
                             state.bubbles[k].shape().value(ay);
            return std::exp(b) * std::expm1(a - b) - c0;
        }
        return std::exp(leps + data_->log_K(x) + state.eval(x)) - c0;
    };

    const double integral = split_integral(state, [&](const Vec2& x, int k, double ay) {
        return std::pow(std::abs(res_at(x, k, ay)), s);
    });

    ResidualReport rep;
    rep.s = s;
    rep.norm_s = std::pow(integral, 1.0 / s);
    const auto& mesh = green().fem().mesh();
    std::vector<double> vals(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Vec2& x = mesh.verts[v];
        int k = -1;
        double ay = -1.0;
        for (size_t i = 0; i < state.bubbles.size() && k < 0; ++i) {
            Vec2 y;
            const Chart& ch = state.bubbles[i].chart();
            if (ch.try_to_chart(x, y) && y.norm() < 0.5 * ch.radius()) {
                k = static_cast<int>(i);
                ay = y.norm();
            }
        }
        vals[v] = (k >= 0 && ay <= 1e-12) ? 0.0 : res_at(x, k, ay);
    }
    rep.pointwise = Field(green().fem().mesh_ptr(), std::move(vals));
    return rep;
}

}  // namespace mfl

#include "mfl/linearized.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfl {

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

/// Solver for the mean-constrained system K z + mu m = b, m^T z = 0 via the
/// symmetric saddle augmentation; K symmetric, possibly indefinite.
class SaddleSolver {
public:
    SaddleSolver(const SpMat& K, const Eigen::VectorXd& m) : n_(static_cast<int>(m.size())) {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(K.nonZeros() + 2 * n_);
        for (int c = 0; c < K.outerSize(); ++c)
            for (SpMat::InnerIterator it(K, c); it; ++it)
                trips.emplace_back(static_cast<int>(it.row()), c, it.value());
        for (int i = 0; i < n_; ++i) {
            trips.emplace_back(i, n_, m[i]);
            trips.emplace_back(n_, i, m[i]);
        }
        SpMat aug(n_ + 1, n_ + 1);
        aug.setFromTriplets(trips.begin(), trips.end());
        aug.makeCompressed();
        lu_.compute(aug);
        ok_ = (lu_.info() == Eigen::Success);
    }

    bool ok() const { return ok_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        Eigen::VectorXd rhs(n_ + 1);
        rhs.head(n_) = b;
        rhs[n_] = 0.0;
        Eigen::VectorXd z = lu_.solve(rhs);
        return z.head(n_);
    }

private:
    int n_;
    Eigen::SparseLU<SpMat> lu_;
    bool ok_ = false;
};

}  // namespace

// --------------------------------------------------------------- KernelSpace

KernelSpace::KernelSpace(const ReducedProblem& prob, const AnsatzState& state)
    : fem_(&prob.green().fem()) {
    const int n_regular = prob.num_interior() + prob.num_boundary();
    for (int i = 0; i < n_regular; ++i) {
        const auto& c = state.centers[i];
        const int n_modes = c.boundary ? 1 : 2;
        for (int j = 1; j <= n_modes; ++j)
            basis_.emplace_back(prob.green().fem_ptr(), prob.green().profile(),
                                state.bubbles[i].chart(), c.gamma, state.lambda[i], j);
    }
    const int m = size();
    gram_.resize(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            gram_(a, b) = pair_h1(basis_[a], basis_[b]);
            gram_(b, a) = gram_(a, b);
        }

    // Nodal interpolants, stiffness-orthonormalized for the projector.
    const Mesh& mesh = fem_->mesh();
    const SpMat& A = fem_->stiffness();
    Eigen::MatrixXd B(mesh.num_vertices(), m);
    for (int k = 0; k < m; ++k)
        for (int v = 0; v < mesh.num_vertices(); ++v) B(v, k) = basis_[k].eval(mesh.verts[v]);
    onb_.resize(mesh.num_vertices(), 0);
    for (int k = 0; k < m; ++k) {
        Eigen::VectorXd q = B.col(k);
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < onb_.cols(); ++j)
                q -= onb_.col(j) * (onb_.col(j).transpose() * (A * q))(0);
        const double nrm = std::sqrt(q.dot(A * q));
        if (nrm < 1e-12 * std::sqrt(B.col(k).dot(A * B.col(k))) || nrm == 0.0)
            continue;  // numerically dependent direction
        onb_.conservativeResize(Eigen::NoChange, onb_.cols() + 1);
        onb_.col(onb_.cols() - 1) = q / nrm;
    }
}

Eigen::VectorXd KernelSpace::project(const Eigen::VectorXd& v) const {
    if (onb_.cols() == 0) return v;
    const SpMat& A = fem_->stiffness();
    return v - onb_ * (onb_.transpose() * (A * v));
}

Field KernelSpace::project(const Field& f) const {
    Eigen::VectorXd v = project(to_eigen(f.values()));
    return Field(fem_->mesh_ptr(), to_std(v));
}

Eigen::VectorXd KernelSpace::project_load(const Eigen::VectorXd& load) const {
    if (onb_.cols() == 0) return load;
    // Adjoint of `project`: removes the components that act on the span, so
    // the result tests only directions in the stiffness-orthogonal complement.
    const SpMat& A = fem_->stiffness();
    return load - A * (onb_ * (onb_.transpose() * load));
}

Eigen::VectorXd KernelSpace::components(const Field& f) const {
    const int m = size();
    Eigen::VectorXd rhs(m);
    for (int k = 0; k < m; ++k)
        rhs[k] = basis_[k].pair_zero_mean([&](const Vec2& x) { return f.eval(x); });
    return gram_.ldlt().solve(rhs);
}

// ------------------------------------------------------- LinearizedOperator

LinearizedOperator::LinearizedOperator(const ReducedProblem& prob, const AnsatzState& state)
    : prob_(&prob), state_(state), fem_(prob.green().fem_ptr()) {
    const Mesh& mesh = fem_->mesh();
    n_ = mesh.num_vertices();
    lumped_ = to_eigen(fem_->lumped_mass());
    const double leps = 2.0 * std::log(state_.eps);
    const double neg_inf = -std::numeric_limits<double>::infinity();
    const SingularData& data = prob.data();

    auto stencil = [&](QPt& q) {
        std::array<double, 3> b;
        const int t = mesh.locate(q.x, b);
        for (int a = 0; a < 3; ++a) {
            q.verts[a] = mesh.tris[t][a];
            q.bary[a] = b[a];
        }
    };

    const int nb = static_cast<int>(state_.bubbles.size());
    for (int k = 0; k < nb; ++k) {
        const Chart& ch = state_.bubbles[k].chart();
        const double g = state_.centers[k].gamma;
        const double r = ch.radius();
        const QuadRule rule =
            chart_rule(ch, 0.5 * r, std::min(1.0 / state_.lambda[k], 0.125 * r), g, 64, 12);
        for (const auto& qp : rule.pts) {
            QPt q;
            const Vec2& y = qp.x;
            const double ay = std::max(y.norm(), 1e-300);
            q.x = ch.from_chart(y);
            q.w = qp.w;
            q.log_metric = ch.log_factor(y);
            q.log_full = q.log_metric + leps + data.log_Ki(q.x, state_.centers[k].pos) +
                         2.0 * g * std::log(ay) + state_.eval(q.x);
            const double chi = ch.cutoff(ay, prob.green().profile());
            q.log_bubble = (chi > 0.0) ? std::log(chi) + 2.0 * g * std::log(ay) +
                                             state_.bubbles[k].shape().value(ay)
                                       : neg_inf;
            stencil(q);
            pts_.push_back(q);
        }
    }
    const QuadRule vol = volume_rule(mesh, 4);
    for (const auto& qp : vol.pts) {
        bool inside = false;
        for (int k = 0; k < nb && !inside; ++k) {
            Vec2 y;
            const Chart& ch = state_.bubbles[k].chart();
            if (ch.try_to_chart(qp.x, y) && y.norm() < 0.5 * ch.radius()) inside = true;
        }
        if (inside) continue;
        QPt q;
        q.x = qp.x;
        q.w = qp.w;
        q.log_metric = fem_->model().log_conformal(qp.x);
        q.log_full = q.log_metric + leps + data.log_K(qp.x) + state_.eval(qp.x);
        q.log_bubble = neg_inf;
        stencil(q);
        pts_.push_back(q);
    }

    mw_bubble_ = assemble_mass([](const QPt& q) { return std::exp(q.log_bubble); });
    mw_full_ = assemble_mass([](const QPt& q) { return std::exp(q.log_full); });

    ansatz_load_ = Eigen::VectorXd::Zero(n_);
    std::vector<double> scat(n_, 0.0);
    for (const auto& b : state_.bubbles) {
        for (const auto& qp : b.source_rule().pts) fem_->scatter(qp.x, qp.w, scat);
        ansatz_load_ -= (b.mass() / fem_->area()) * lumped_;
    }
    ansatz_load_ += to_eigen(scat);
}

SpMat LinearizedOperator::assemble_mass(const std::function<double(const QPt&)>& dens) const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * pts_.size());
    for (const auto& q : pts_) {
        const double d = q.w * dens(q);
        if (d == 0.0) continue;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips.emplace_back(q.verts[a], q.verts[b], d * q.bary[a] * q.bary[b]);
    }
    SpMat M(n_, n_);
    M.setFromTriplets(trips.begin(), trips.end());
    M.makeCompressed();
    return M;
}

Eigen::VectorXd LinearizedOperator::apply(const Eigen::VectorXd& phi, bool full) const {
    const SpMat& M = full ? mw_full_ : mw_bubble_;
    Eigen::VectorXd mphi = M * phi;
    return fem_->stiffness() * phi - mphi + (mphi.sum() / fem_->area()) * lumped_;
}

LinearizedOperator::NonlinearAssembly LinearizedOperator::assemble_at(
    const Eigen::VectorXd& phi, bool want_tangent) const {
    NonlinearAssembly out;
    out.load = Eigen::VectorXd::Zero(n_);
    std::vector<Eigen::Triplet<double>> trips;
    if (want_tangent) trips.reserve(9 * pts_.size());
    for (const auto& q : pts_) {
        const double d = q.w * std::exp(q.log_full + interp(q, phi));
        out.mass += d;
        for (int a = 0; a < 3; ++a) out.load[q.verts[a]] += d * q.bary[a];
        if (want_tangent)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    trips.emplace_back(q.verts[a], q.verts[b], d * q.bary[a] * q.bary[b]);
    }
    if (want_tangent) {
        out.tangent.resize(n_, n_);
        out.tangent.setFromTriplets(trips.begin(), trips.end());
        out.tangent.makeCompressed();
    }
    return out;
}

// Shared two-pass mean-corrected L^s norm over the frozen points: `value`
// returns the pointwise function value (not a measure density).
double LinearizedOperator::corrected_norm(const std::function<double(const QPt&)>& value,
                                          double s) const {
    double mean = 0.0;
    for (const auto& q : pts_) mean += q.w * std::exp(q.log_metric) * value(q);
    mean /= fem_->area();
    double acc = 0.0;
    for (const auto& q : pts_)
        acc += q.w * std::exp(q.log_metric) * std::pow(std::abs(value(q) - mean), s);
    return std::pow(acc, 1.0 / s);
}

double LinearizedOperator::gap_norm(const Field& phi, double s) const {
    const Eigen::VectorXd pv = to_eigen(phi.values());
    return corrected_norm(
        [&](const QPt& q) {
            // Function values: the stored logs are densities in the local
            // quadrature measure, so the metric factor is divided back out.
            const double a = q.log_full - q.log_metric;
            double diff;
            if (std::isinf(q.log_bubble)) {
                diff = std::exp(a);
            } else {
                const double b = q.log_bubble - q.log_metric;
                diff = std::exp(b) * std::expm1(a - b);
            }
            return diff * interp(q, pv);
        },
        s);
}

double LinearizedOperator::nonlinearity_norm(const Field& phi, double s) const {
    const Eigen::VectorXd pv = to_eigen(phi.values());
    return corrected_norm(
        [&](const QPt& q) {
            const double p = interp(q, pv);
            return std::exp(q.log_full - q.log_metric) * (std::expm1(p) - p);
        },
        s);
}

// ------------------------------------------------------ coercivity constant

double coercivity_constant(const LinearizedOperator& op, const KernelSpace* kspace) {
    const FemSystem& fem = op.fem();
    const SpMat& A = fem.stiffness();
    const Eigen::VectorXd mL = to_eigen(fem.lumped_mass());
    const int n = op.size();
    SpMat K = A - op.bubble_mass();
    K.makeCompressed();
    SaddleSolver solver(K, mL);
    if (!solver.ok()) throw NumericError("coercivity: factorization of the pencil failed");

    auto project = [&](Eigen::VectorXd v) {
        // Kernel projection first: it is insensitive to constant shifts, so
        // the mean subtraction afterwards preserves both constraints.
        if (kspace && !kspace->empty()) v = kspace->project(v);
        v -= (mL.dot(v) / fem.area()) * Eigen::VectorXd::Ones(n);
        return v;
    };

    const Mesh& mesh = fem.mesh();
    const int m = 4;
    Eigen::MatrixXd V(n, m);
    for (int v = 0; v < n; ++v) {
        const Vec2& p = mesh.verts[v];
        V(v, 0) = p.x;
        V(v, 1) = p.y;
        V(v, 2) = p.x * p.x - p.y * p.y;
        V(v, 3) = p.x * p.y;
    }
    auto orthonormalize = [&](Eigen::MatrixXd& X) {
        for (int k = 0; k < X.cols(); ++k) {
            for (int pass = 0; pass < 2; ++pass)
                for (int j = 0; j < k; ++j)
                    X.col(k) -= X.col(j) * (X.col(j).dot(A * X.col(k)));
            const double nrm = std::sqrt(X.col(k).dot(A * X.col(k)));
            if (nrm < 1e-14) throw NumericError("coercivity: start block degenerated");
            X.col(k) /= nrm;
        }
    };
    for (int k = 0; k < m; ++k) V.col(k) = project(V.col(k));
    orthonormalize(V);

    double sigma = std::numeric_limits<double>::infinity();
    std::ostringstream log;
    for (int iter = 0; iter < 120; ++iter) {
        Eigen::MatrixXd W(n, m);
        for (int k = 0; k < m; ++k) W.col(k) = project(solver.solve(A * V.col(k)));
        orthonormalize(W);
        V = W;
        Eigen::MatrixXd P(m, m);
        for (int a = 0; a < m; ++a) {
            const Eigen::VectorXd kv = K * V.col(a);
            for (int b = 0; b < m; ++b) P(a, b) = V.col(b).dot(kv);
        }
        P = 0.5 * (P + P.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
        const double cand = eig.eigenvalues().cwiseAbs().minCoeff();
        log << iter << ' ' << cand << '\n';
        if (iter >= 5 && std::abs(cand - sigma) <= 1e-7 * std::abs(cand)) return cand;
        sigma = cand;
    }
    throw NumericError("coercivity: inverse iteration stagnated; iterate log:\n" + log.str());
}

// -------------------------------------------------------------- Newton solve

NewtonReport newton_correct(const ReducedProblem& prob, const AnsatzState& state,
                            const NewtonOptions& opts) {
    LinearizedOperator op(prob, state);
    const FemSystem& fem = op.fem();
    const SpMat& A = fem.stiffness();
    const Eigen::VectorXd mL = to_eigen(fem.lumped_mass());
    const double area = fem.area();
    const int n = op.size();

    const bool frozen = opts.freeze && !opts.freeze->empty();
    auto residual = [&](const Eigen::VectorXd& phi,
                        const LinearizedOperator::NonlinearAssembly& asmb) {
        return (op.ansatz_load() + A * phi - asmb.load + (asmb.mass / area) * mL).eval();
    };
    auto dual_norm = [&](const Eigen::VectorXd& res) {
        if (!res.allFinite()) return std::numeric_limits<double>::infinity();
        // With a frozen span the equation being solved is the auxiliary one:
        // only the components acting on the complement are driven to zero.
        const Eigen::VectorXd r = frozen ? opts.freeze->project_load(res) : res;
        const Field z = fem.solve_zero_mean(to_std(r), 0.0);
        const double v = r.dot(to_eigen(z.values()));
        return (v > 0.0) ? std::sqrt(v) : 0.0;
    };

    NewtonReport rep;
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    auto asmb = op.assemble_at(phi, true);
    Eigen::VectorXd res = residual(phi, asmb);
    double rnorm = dual_norm(res);
    rep.trace.push_back({0, rnorm, 0.0, 0.0});

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        if (rnorm <= opts.tolerance) {
            rep.converged = true;
            break;
        }
        SpMat K = A - asmb.tangent;
        K.makeCompressed();
        SaddleSolver solver(K, mL);
        if (!solver.ok()) {
            rep.converged = false;
            break;
        }
        Eigen::VectorXd step = solver.solve(-res);
        if (opts.freeze && !opts.freeze->empty()) step = opts.freeze->project(step);

        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, alpha *= 0.5) {
            Eigen::VectorXd trial = phi + alpha * step;
            auto ta = op.assemble_at(trial, false);
            Eigen::VectorXd tres = residual(trial, ta);
            const double tn = dual_norm(tres);
            if (tn < (1.0 - 1e-4 * alpha) * rnorm) {
                phi = trial;
                rnorm = tn;
                accepted = true;
                break;
            }
        }
        rep.iterations = iter;
        if (!accepted) {
            rep.converged = false;
            rep.trace.push_back({iter, rnorm, 0.0, std::sqrt(phi.dot(A * phi))});
            break;
        }
        asmb = op.assemble_at(phi, true);
        res = residual(phi, asmb);
        rnorm = dual_norm(res);  // recompute at the exact accepted point
        rep.trace.push_back({iter, rnorm, alpha, std::sqrt(phi.dot(A * phi))});
        if (rnorm <= opts.tolerance) {
            rep.converged = true;
            break;
        }
    }

    rep.residual_norm = rnorm;
    rep.phi_norm = std::sqrt(phi.dot(A * phi));
    rep.correction = Field(fem.mesh_ptr(), to_std(phi));
    std::vector<double> uvals(n);
    for (int v = 0; v < n; ++v) uvals[v] = state.eval(fem.mesh().verts[v]) + phi[v];
    rep.solution = Field(fem.mesh_ptr(), std::move(uvals));

    const KernelSpace* ks = opts.freeze;
    std::optional<KernelSpace> local;
    if (!ks && prob.num_interior() + prob.num_boundary() > 0) {
        local.emplace(prob, state);
        ks = &*local;
    }
    if (ks && !ks->empty()) {
        const Field zres = fem.solve_zero_mean(to_std(res), 0.0);
        rep.kernel_components = ks->components(zres);
    } else {
        rep.kernel_components = Eigen::VectorXd();
    }
    return rep;
}

// -------------------------------------------------- criticality equivalence

CritScanReport criticality_equivalence_check(const ReducedProblem& prob,
                                             const Eigen::VectorXd& center, double eps,
                                             double half_width, int n, int jobs) {
    if (prob.dof() != 2)
        throw ConfigError("criticality scan: requires exactly one movable interior center");
    if (n < 3) throw ConfigError("criticality scan: grid must be at least 3x3");

    CritScanReport rep;
    rep.n = n;
    rep.cell = 2.0 * half_width / (n - 1);
    const int total = n * n;
    rep.nodes.resize(total);
    rep.reduced_energy.assign(total, std::numeric_limits<double>::quiet_NaN());
    rep.f_values.assign(total, std::numeric_limits<double>::quiet_NaN());
    rep.valid.assign(total, 0);

    std::vector<std::optional<AnsatzState>> states(total);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int id = i * n + j;
            Eigen::VectorXd u = center;
            u[0] += -half_width + i * rep.cell;
            u[1] += -half_width + j * rep.cell;
            rep.nodes[id] = u;
            try {
                states[id].emplace(prob.assemble(u, eps));
                rep.f_values[id] = prob.F(u);
            } catch (const ConfigError&) {
            } catch (const ResolutionError&) {
            }
        }

    const FemSystem& fem = prob.green().fem();
    parallel_for(total, jobs, [&](int id) {
        if (!states[id]) return;
        const AnsatzState& st = *states[id];
        KernelSpace ks(prob, st);
        NewtonOptions no;
        no.freeze = &ks;
        NewtonReport nr = newton_correct(prob, st, no);
        if (!nr.converged) return;
        double dir = 0.0;
        for (const auto& bi : st.bubbles)
            for (const auto& bj : st.bubbles) dir += pair_h1(bi, bj);
        for (const auto& b : st.bubbles)
            dir += 2.0 * b.pair_zero_mean(
                             [&](const Vec2& x) { return nr.correction.eval(x); });
        dir += fem.h1_product(nr.correction, nr.correction);
        rep.reduced_energy[id] = 0.5 * dir - prob.total_mass(st, &nr.correction);
        rep.valid[id] = 1;
    });

    // Interior central differences of the corrected energy vs -grad F / 2.
    auto id_of = [&](int i, int j) { return i * n + j; };
    double best_e = std::numeric_limits<double>::infinity();
    double best_f = std::numeric_limits<double>::infinity();
    double num = 0.0, den = 0.0;
    for (int i = 1; i + 1 < n; ++i)
        for (int j = 1; j + 1 < n; ++j) {
            const int id = id_of(i, j);
            const bool ok = rep.valid[id] && rep.valid[id_of(i - 1, j)] &&
                            rep.valid[id_of(i + 1, j)] && rep.valid[id_of(i, j - 1)] &&
                            rep.valid[id_of(i, j + 1)];
            if (!ok) continue;
            const Vec2 dE{(rep.reduced_energy[id_of(i + 1, j)] -
                           rep.reduced_energy[id_of(i - 1, j)]) /
                              (2.0 * rep.cell),
                          (rep.reduced_energy[id_of(i, j + 1)] -
                           rep.reduced_energy[id_of(i, j - 1)]) /
                              (2.0 * rep.cell)};
            const Eigen::VectorXd gF = prob.grad_F(rep.nodes[id]);
            const Vec2 target{-0.5 * gF[0], -0.5 * gF[1]};
            num += dist(dE, target);
            den += target.norm();
            if (dE.norm() < best_e) {
                best_e = dE.norm();
                rep.argmin_energy_grad = id;
            }
            if (gF.norm() < best_f) {
                best_f = gF.norm();
                rep.argmin_f_grad = id;
            }
        }
    rep.grad_discrepancy = (den > 0.0) ? num / den : std::numeric_limits<double>::infinity();
    if (rep.argmin_energy_grad >= 0) {
        const Eigen::VectorXd& u = rep.nodes[rep.argmin_energy_grad];
        rep.stationary_within_cell =
            std::max(std::abs(u[0] - center[0]), std::abs(u[1] - center[1])) <=
            rep.cell + 1e-12;
    }
    return rep;
}

// ----------------------------------------------------- model kernel counter

ModelKernelReport model_kernel_dimension(double gamma, double radius, bool half,
                                         double gap_tol) {
    if (!(gamma > -1.0)) throw ConfigError("model kernel: gamma must exceed -1");
    if (radius < 50.0) throw ConfigError("model kernel: truncation radius must be >= 50");

    const auto mesh = std::make_shared<const Mesh>(
        mesh_truncated_disk(radius, 0.08, 4.0, half, 1.0));
    FemSystem fem(mesh, SurfaceModel::flat_unit_disk());
    const int n = mesh->num_vertices();
    const SpMat& A = fem.stiffness();

    // Weighted mass of the model profile via a graded polar rule scattered
    // onto the hats; captures the |y|^{2 gamma} factor exactly at the origin.
    const double g1 = 1.0 + gamma;
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> gl_x, gl_w;
    gauss_legendre(12, gl_x, gl_w);
    const int n_ang = half ? 64 : 128;
    std::vector<double> th(n_ang), thw(n_ang);
    if (half) {
        std::vector<double> ax, aw;
        gauss_legendre(n_ang, ax, aw);
        for (int a = 0; a < n_ang; ++a) {
            th[a] = kPi * ax[a];
            thw[a] = kPi * aw[a];
        }
    } else {
        for (int a = 0; a < n_ang; ++a) {
            th[a] = 2.0 * kPi * (a + 0.5) / n_ang;
            thw[a] = 2.0 * kPi / n_ang;
        }
    }
    double captured = 0.0;
    double r_lo = 2e-3;
    while (r_lo < radius) {
        const double r_hi = std::min(2.0 * r_lo, radius);
        for (size_t q = 0; q < gl_x.size(); ++q) {
            // Inner panels graded for the r^{2 gamma} factor via u = r^{1+g}.
            const double u_lo = std::pow(r_lo, g1), u_hi = std::pow(r_hi, g1);
            const double u = u_lo + (u_hi - u_lo) * gl_x[q];
            const double r = std::pow(u, 1.0 / g1);
            const double jac = (u_hi - u_lo) * gl_w[q] * std::pow(u, 1.0 / g1 - 1.0) / g1;
            const double t = std::pow(r, 2.0 * g1);
            const double dens = 8.0 * g1 * g1 * std::pow(r, 2.0 * gamma) /
                                ((1.0 + t) * (1.0 + t));
            for (int a = 0; a < n_ang; ++a) {
                const Vec2 x{r * std::cos(th[a]), r * std::sin(th[a])};
                const double w = jac * r * thw[a] * dens;
                captured += w;
                std::array<double, 3> b;
                const int tri = mesh->locate(x, b);
                for (int ia = 0; ia < 3; ++ia)
                    for (int ib = 0; ib < 3; ++ib)
                        trips.emplace_back(mesh->tris[tri][ia], mesh->tris[tri][ib],
                                           w * b[ia] * b[ib]);
            }
        }
        r_lo = r_hi;
    }
    SpMat Mw(n, n);
    Mw.setFromTriplets(trips.begin(), trips.end());
    Mw.makeCompressed();
    const double full_mass = (half ? 4.0 : 8.0) * kPi * g1;
    const bool mass_ok = std::abs(captured - full_mass) <= 1e-3 * full_mass;

    // Shift-invert block iteration around mu = 1 on A phi = mu Mw phi.
    double shift = 1.0;
    SpMat K = (A - shift * Mw).pruned();
    K.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) {
        shift = 0.97;
        K = (A - shift * Mw).pruned();
        K.makeCompressed();
        lu.compute(K);
        if (lu.info() != Eigen::Success)
            throw NumericError("model kernel: shifted factorization failed");
    }

    const int m = 10;
    Eigen::MatrixXd X(n, m);
    for (int v = 0; v < n; ++v) {
        const Vec2& p = mesh->verts[v];
        const double r2 = p.norm2();
        const double t = std::pow(std::max(r2, 1e-300), g1);
        X(v, 0) = (1.0 - t) / (1.0 + t);
        X(v, 1) = p.x / (1.0 + r2);
        X(v, 2) = p.y / (1.0 + r2);
        X(v, 3) = 1.0;
        X(v, 4) = p.x;
        X(v, 5) = p.y;
        X(v, 6) = p.x * p.y / (1.0 + r2);
        X(v, 7) = (p.x * p.x - p.y * p.y) / (1.0 + r2 * r2);
        X(v, 8) = 1.0 / (1.0 + r2);
        X(v, 9) = std::cos(p.x) * std::exp(-0.1 * r2);
    }

    Eigen::VectorXd nus;
    Eigen::VectorXd prev;
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::MatrixXd Z = Mw * X;
        Eigen::MatrixXd Y(n, m);
        for (int k = 0; k < m; ++k) Y.col(k) = lu.solve(Z.col(k));
        // Ritz values of the shift-inverted operator in the Mw inner product.
        Eigen::MatrixXd H = Z.transpose() * Y;
        Eigen::MatrixXd G = X.transpose() * Z;
        H = 0.5 * (H + H.transpose()).eval();
        G = 0.5 * (G + G.transpose()).eval();
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, G);
        if (eig.info() == Eigen::Success) nus = eig.eigenvalues();

        // Mw-orthonormalize the iterated block.
        Eigen::MatrixXd Gy = Y.transpose() * (Mw * Y);
        Gy = 0.5 * (Gy + Gy.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> go(Gy);
        Eigen::MatrixXd Xn(n, m);
        int kept = 0;
        const double gmax = go.eigenvalues().cwiseAbs().maxCoeff();
        for (int k = m - 1; k >= 0; --k) {
            if (go.eigenvalues()[k] <= 1e-13 * gmax) break;
            Xn.col(kept++) = Y * go.eigenvectors().col(k) / std::sqrt(go.eigenvalues()[k]);
        }
        for (int k = kept; k < m; ++k) Xn.col(k) = X.col(k);  // refresh lost directions
        X = Xn;

        if (iter >= 10 && prev.size() == nus.size() &&
            (nus - prev).cwiseAbs().maxCoeff() <=
                1e-8 * std::max(1.0, nus.cwiseAbs().maxCoeff()))
            break;
        prev = nus;
    }
    if (nus.size() == 0) throw NumericError("model kernel: Ritz extraction failed");

    std::vector<double> mus;
    for (int k = 0; k < nus.size(); ++k)
        if (std::abs(nus[k]) > 1e-10) mus.push_back(shift + 1.0 / nus[k]);
    std::sort(mus.begin(), mus.end(),
              [](double a, double b) { return std::abs(a - 1.0) < std::abs(b - 1.0); });

    ModelKernelReport rep;
    for (double mu : mus) {
        if (rep.gaps.size() < 6) rep.gaps.push_back(std::abs(mu - 1.0));
        if (std::abs(mu - 1.0) <= gap_tol) ++rep.dimension;
    }
    const double next_gap = (rep.dimension < static_cast<int>(mus.size()))
                                ? std::abs(mus[rep.dimension] - 1.0)
                                : std::numeric_limits<double>::infinity();
    double worst_in = 0.0;
    for (int k = 0; k < rep.dimension; ++k)
        worst_in = std::max(worst_in, std::abs(mus[k] - 1.0));
    rep.conclusive = mass_ok && worst_in <= 0.6 * gap_tol && next_gap >= 1.5 * gap_tol;
    return rep;
}

}  // namespace mfl

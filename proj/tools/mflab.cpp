// mflab: experiment runner for the blow-up laboratory.
//
// Subcommands: green-check, bubble-check, resonance, find-critical, sweep,
// newton, verify-all. Configuration is a JSON file; command-line flags
// override the corresponding config fields. Exit codes: 0 pass, 1 checks
// failed, 2 usage/config error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "mfl/bubbles.hpp"
#include "mfl/elliptic.hpp"
#include "mfl/expr.hpp"
#include "mfl/fitting.hpp"
#include "mfl/geometry.hpp"
#include "mfl/green.hpp"
#include "mfl/labconfig.hpp"
#include "mfl/linearized.hpp"
#include "mfl/mesh.hpp"
#include "mfl/reduction.hpp"
#include "mfl/report.hpp"
#include "mfl/singular.hpp"
#include "mfl/verify.hpp"

namespace {

using nlohmann::json;
using namespace mfl;

struct Lab {
    ExperimentConfig cfg;
    std::shared_ptr<const FemSystem> fem;
    std::shared_ptr<const GreenFunction> green;
    std::shared_ptr<const SingularData> data;

    explicit Lab(const ExperimentConfig& c) : cfg(c) {
        SurfaceModel model = SurfaceModel::flat_unit_disk();
        if (cfg.model.rfind("conformal:", 0) == 0)
            model = SurfaceModel::conformal_disk(Expr::parse(cfg.model.substr(10)));
        else if (cfg.model != "flat_disk")
            throw ConfigError("config: unknown model \"" + cfg.model + "\"");
        auto mesh = std::make_shared<const Mesh>(mesh_unit_disk(cfg.mesh_h));
        fem = std::make_shared<const FemSystem>(mesh, model);
        green = std::make_shared<const GreenFunction>(fem);
        std::vector<std::pair<Vec2, double>> pts;
        for (const PointSpec& ps : cfg.points) pts.push_back({{ps.x, ps.y}, ps.gamma});
        data = std::make_shared<const SingularData>(green, pts, Expr::parse(cfg.weight));
    }

    ReducedProblem problem() const {
        return ReducedProblem(data, cfg.p, cfg.q, cfg.subset, cfg.separation);
    }

    Eigen::VectorXd start_vector(const ReducedProblem& prob) const {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(prob.dof());
        if (!cfg.start.empty()) {
            if (static_cast<int>(cfg.start.size()) != prob.dof())
                throw ConfigError("config: \"start\" must have 2p+q = " +
                                  std::to_string(prob.dof()) + " entries");
            for (int i = 0; i < prob.dof(); ++i) u[i] = cfg.start[i];
        }
        prob.validate(u);
        return u;
    }
};

// ----------------------------------------------------------------- green-check

int cmd_green_check(const ExperimentConfig& cfg) {
    Lab lab(cfg);
    const GreenFunction& G = *lab.green;
    const bool flat = lab.fem->model().is_flat();

    double max_err = 0.0;
    if (flat) {
        const std::vector<Vec2> poles = {{0.0, 0.0},       {0.3, 0.2},
                                         {-0.5, 0.35},     {0.7, 0.0},
                                         {std::cos(0.3), std::sin(0.3)},
                                         {std::cos(2.2), std::sin(2.2)}};
        for (const Vec2& xi : poles)
            for (double rad : {0.15, 0.45, 0.75, 0.95})
                for (int k = 0; k < 12; ++k) {
                    const double th = 2.0 * kPi * (k + 0.5) / 12.0;
                    const Vec2 x{rad * std::cos(th), rad * std::sin(th)};
                    if (dist(x, xi) < 0.03) continue;
                    max_err = std::max(
                        max_err, std::abs(G.eval_smooth(x, xi) - disk_oracle::green(x, xi)));
                }
    }
    double sym = 0.0;
    const std::vector<std::pair<Vec2, Vec2>> pairs = {{{0.3, 0.2}, {-0.4, 0.1}},
                                                      {{0.0, 0.0}, {0.5, -0.3}},
                                                      {{0.7, 0.0}, {0.0, 0.6}},
                                                      {{0.2, 0.55}, {-0.3, -0.4}},
                                                      {{0.45, 0.45}, {-0.6, 0.1}}};
    for (const auto& [a, b] : pairs)
        sym = std::max(sym, std::abs(G.eval_smooth(a, b) - G.eval_smooth(b, a)));
    const double robin_err =
        flat ? std::abs(G.robin({0.0, 0.0}) - (-3.0 / (8.0 * kPi))) : 0.0;

    CsvTable csv({"check", "value", "tolerance"});
    if (flat) csv.add_text_row({"max_oracle_error", format_cell(max_err), "0.001"});
    csv.add_text_row({"symmetry_defect", format_cell(sym), "0.001"});
    if (flat) csv.add_text_row({"center_robin_error", format_cell(robin_err), "0.001"});
    csv.write(cfg.out_dir + "/green_check.csv");

    const bool ok = max_err <= 1e-3 && sym <= 1e-3 && robin_err <= 1e-3;
    std::printf("green-check: max oracle error %.3e, symmetry defect %.3e, Robin error %.3e -> %s\n",
                max_err, sym, robin_err, ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------- bubble-check

int cmd_bubble_check(const ExperimentConfig& cfg) {
    Lab lab(cfg);
    CsvTable csv({"check", "gamma", "measured", "reference", "rel_err"});
    bool ok = true;

    double worst_form = 0.0;
    for (double g : {0.5, 1.0, 2.0})
        for (const ClosedForm& cf : closed_form_suite(g)) {
            const double rel =
                std::abs(cf.quadrature - cf.reference) / std::max(1.0, std::abs(cf.reference));
            worst_form = std::max(worst_form, rel);
            ok = ok && rel <= 1e-6 && cf.verified;
            csv.add_text_row({cf.name, format_cell(g), format_cell(cf.quadrature),
                              format_cell(cf.reference), format_cell(rel)});
        }

    const double c1 = std::abs(dilation_tail_constant(1.0) - kPi / 2.0);
    const double c3 = std::abs(dilation_tail_constant(3.0) - kPi * std::sqrt(2.0) / 4.0);
    ok = ok && c1 <= 1e-8 && c3 <= 1e-8;
    csv.add_text_row({"tail_constant", "1", format_cell(dilation_tail_constant(1.0)),
                      format_cell(kPi / 2.0), format_cell(c1)});
    csv.add_text_row({"tail_constant", "3", format_cell(dilation_tail_constant(3.0)),
                      format_cell(kPi * std::sqrt(2.0) / 4.0), format_cell(c3)});

    std::vector<double> gammas = {-0.5, 0.0, 0.5};
    for (const PointSpec& ps : cfg.points)
        if (std::find(gammas.begin(), gammas.end(), ps.gamma) == gammas.end())
            gammas.push_back(ps.gamma);
    double worst_mass = 0.0;
    for (double g : gammas) {
        const double lambda = std::pow(100.0, 1.0 / (1.0 + g));
        for (int b = 0; b < 2; ++b) {
            const Vec2 xi = b ? Vec2{std::cos(0.7), std::sin(0.7)} : Vec2{0.25, -0.1};
            const double rho = b ? 4.0 * kPi : 8.0 * kPi;
            ProjectedBubble pb(lab.fem, lab.green->profile(), lab.green->chart(xi), g, lambda);
            const double rel = std::abs(pb.mass() - (1.0 + g) * rho) / ((1.0 + g) * rho);
            worst_mass = std::max(worst_mass, rel);
            ok = ok && rel <= 0.01;
            csv.add_text_row({b ? "mass_boundary" : "mass_interior", format_cell(g),
                              format_cell(pb.mass()), format_cell((1.0 + g) * rho),
                              format_cell(rel)});
        }
    }
    csv.write(cfg.out_dir + "/bubble_check.csv");
    std::printf("bubble-check: closed forms max rel %.3e (tol 1e-6), masses max rel %.3e "
                "(tol 1e-2) -> %s\n",
                worst_form, worst_mass, ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

// ------------------------------------------------------------------- resonance

int cmd_resonance(const ExperimentConfig& cfg, const std::string& cap_text) {
    Lab lab(cfg);
    const double cap = parse_pi_literal(cap_text.empty() ? cfg.resonance_cap : cap_text);
    std::vector<std::pair<double, double>> collisions;
    const std::vector<double> values = resonant_set(*lab.data, cap, &collisions);

    CsvTable csv({"index", "value", "value_over_pi"});
    for (std::size_t i = 0; i < values.size(); ++i) {
        csv.add_row({static_cast<double>(i), values[i], values[i] / kPi});
        std::printf("%3zu: %.12g  (= %.12g pi)\n", i, values[i], values[i] / kPi);
    }
    csv.write(cfg.out_dir + "/resonance.csv");
    if (!collisions.empty()) {
        std::printf("%zu collision pair(s) within 1e-6 kept distinct:\n", collisions.size());
        for (const auto& [a, b] : collisions) std::printf("  %.12g vs %.12g\n", a, b);
    }
    if (!cfg.subset.empty() || cfg.p + cfg.q > 0) {
        ReducedProblem prob = lab.problem();
        const ResonanceIndex idx = enumerate_index_sets(*lab.data, prob.rho_star());
        std::printf("configured mass %.12g (= %.12g pi): %zu realizing triple(s), index %d\n",
                    prob.rho_star(), prob.rho_star() / kPi, idx.triples.size(), idx.m);
    }
    return 0;
}

// --------------------------------------------------------------- find-critical

int cmd_find_critical(const ExperimentConfig& cfg) {
    Lab lab(cfg);
    ReducedProblem prob = lab.problem();
    const Eigen::VectorXd u0 = lab.start_vector(prob);
    const SearchReport rep = prob.find_critical(u0, 8, 1e-3, cfg.seed);

    CsvTable csv({"coordinate", "value"});
    for (int i = 0; i < rep.point.size(); ++i)
        csv.add_text_row({"u" + std::to_string(i), format_cell(rep.point[i])});
    csv.add_text_row({"F", format_cell(prob.F(rep.point))});
    csv.add_text_row({"grad_norm", format_cell(rep.grad_norm)});
    csv.add_text_row({"stable_count", std::to_string(rep.stable_count)});
    csv.write(cfg.out_dir + "/critical.csv");

    std::ostringstream pt;
    for (int i = 0; i < rep.point.size(); ++i) pt << (i ? ", " : "") << format_cell(rep.point[i]);
    std::printf("find-critical: point (%s), |grad F| %.3e, %d iters, %s%s, stability %d/%d\n",
                pt.str().c_str(), rep.grad_norm, rep.iterations,
                rep.converged ? "converged" : "NOT converged",
                rep.escaped ? " (left admissible set)" : "", rep.stable_count, rep.n_pert);
    return (rep.converged && !rep.escaped && rep.stable_count == rep.n_pert) ? 0 : 1;
}

// ----------------------------------------------------------------------- sweep

int cmd_sweep(const ExperimentConfig& cfg) {
    Lab lab(cfg);
    ReducedProblem prob = lab.problem();
    const Eigen::VectorXd u = lab.start_vector(prob);
    const int ncent = prob.num_interior() + prob.num_boundary() + prob.num_singular();
    const int neps = static_cast<int>(cfg.eps_grid.size());

    struct Row {
        bool have = false;
        std::string skip;
        std::vector<double> lambda;
        double F = 0, E = 0, gap = 0, res = 0, mass = 0;
    };
    std::vector<Row> rows(neps);
    parallel_for(neps, cfg.jobs, [&](int i) {
        Row& r = rows[i];
        try {
            const AnsatzState st = prob.assemble(u, cfg.eps_grid[i]);
            r.lambda = st.lambda;
            r.F = st.F_value;
            r.E = prob.energy(st);
            r.gap = prob.expansion_gap(st);
            r.res = prob.residual(st, 1.05).norm_s;
            r.mass = prob.total_mass(st);
            r.have = true;
        } catch (const ResolutionError& e) {
            r.skip = e.what();
        }
    });

    std::vector<std::string> cols = {"eps"};
    for (int k = 0; k < ncent; ++k) cols.push_back("lambda_" + std::to_string(k));
    for (const char* c : {"F", "E_W", "gap", "res_norm_s", "mass", "mass_target"})
        cols.push_back(c);
    CsvTable csv(cols);
    std::vector<double> eps_ok, gaps, resnorms;
    for (int i = 0; i < neps; ++i) {
        const Row& r = rows[i];
        if (!r.have) {
            std::printf("eps %.6g skipped: %s\n", cfg.eps_grid[i], r.skip.c_str());
            continue;
        }
        std::vector<double> cells = {cfg.eps_grid[i]};
        cells.insert(cells.end(), r.lambda.begin(), r.lambda.end());
        for (double v : {r.F, r.E, r.gap, r.res, r.mass, prob.rho_star()}) cells.push_back(v);
        csv.add_row(cells);
        eps_ok.push_back(cfg.eps_grid[i]);
        gaps.push_back(std::abs(r.gap));
        resnorms.push_back(r.res);
    }
    csv.write(cfg.out_dir + "/sweep.csv");

    std::printf("sweep: %zu/%d eps points, CSV written to %s/sweep.csv\n", eps_ok.size(), neps,
                cfg.out_dir.c_str());
    if (eps_ok.size() >= 3) {
        const SlopeFit fg = fit_slope(eps_ok, gaps);
        const SlopeFit fr = fit_slope(eps_ok, resnorms);
        std::printf("  |gap| slope %.4f (R2 %.4f); residual slope %.4f (R2 %.4f)\n", fg.slope,
                    fg.r2, fr.slope, fr.r2);
    }
    if (cfg.svg) {
        write_svg_plot(cfg.out_dir + "/sweep_gap.svg", "expansion gap vs eps", "eps", "|gap|",
                       {{"|gap|", eps_ok, gaps}}, true, true);
        write_svg_plot(cfg.out_dir + "/sweep_residual.svg", "residual vs eps", "eps",
                       "||R||_1.05", {{"residual", eps_ok, resnorms}}, true, true);
    }
    return eps_ok.empty() ? 3 : 0;
}

// ---------------------------------------------------------------------- newton

int cmd_newton(const ExperimentConfig& cfg, double eps_flag) {
    Lab lab(cfg);
    ReducedProblem prob = lab.problem();
    const Eigen::VectorXd u = lab.start_vector(prob);
    const double eps =
        eps_flag > 0.0 ? eps_flag
                       : *std::min_element(cfg.eps_grid.begin(), cfg.eps_grid.end());
    const AnsatzState st = prob.assemble(u, eps);

    std::optional<KernelSpace> ks;
    NewtonOptions opts;
    if (prob.num_interior() + prob.num_boundary() > 0) {
        ks.emplace(prob, st);
        opts.freeze = &*ks;
    }
    const NewtonReport rep = newton_correct(prob, st, opts);

    CsvTable csv({"iter", "residual", "damping", "phi_norm"});
    for (const auto& row : rep.trace)
        csv.add_row({static_cast<double>(row.iter), row.residual, row.damping, row.phi_norm});
    csv.write(cfg.out_dir + "/newton_trace.csv");

    const double mass = prob.total_mass(st, &rep.correction);
    std::printf("newton: eps %.6g, %s in %d iters, residual %.3e, |phi|_H1 %.6g\n", eps,
                rep.converged ? "converged" : "NOT converged", rep.iterations, rep.residual_norm,
                rep.phi_norm);
    std::printf("  mass %.12g vs target %.12g (rel %.3e)\n", mass, prob.rho_star(),
                std::abs(mass - prob.rho_star()) / prob.rho_star());
    std::printf("  J at corrected point %.12g, predicted limit %.12g\n",
                prob.j_rho(st, &rep.correction, prob.rho_star()), prob.j_level_prediction(st));
    if (rep.kernel_components.size() > 0) {
        std::ostringstream kc;
        for (int i = 0; i < rep.kernel_components.size(); ++i)
            kc << (i ? ", " : "") << format_cell(rep.kernel_components[i]);
        std::printf("  kernel components of the residual: %s\n", kc.str().c_str());
    }
    return rep.converged ? 0 : 1;
}

// ------------------------------------------------------------------ verify-all

int cmd_verify_all(const ExperimentConfig& cfg) {
    VerifyOptions vo;
    vo.mesh_h = cfg.mesh_h;
    vo.jobs = cfg.jobs;
    vo.seed = cfg.seed;
    vo.eps_grid = cfg.eps_grid;
    vo.out_dir = cfg.out_dir;
    vo.svg = cfg.svg;
    vo.on_result = [](const CheckResult& r) {
        std::printf("%s\n", format_result_line(r).c_str());
        std::fflush(stdout);
    };
    const std::vector<CheckResult> results = run_acceptance(vo);

    CsvTable csv({"id", "name", "pass", "seconds", "detail"});
    bool all = true;
    double total = 0.0;
    for (const CheckResult& r : results) {
        csv.add_text_row({std::to_string(r.id), r.name, r.pass ? "1" : "0",
                          format_cell(r.seconds), r.detail});
        all = all && r.pass;
        total += r.seconds;
    }
    csv.write(cfg.out_dir + "/acceptance.csv");
    std::printf("verify-all: %s (%zu checks, %.1f s)\n", all ? "all PASS" : "FAILURES present",
                results.size(), total);
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mflab: numerical laboratory for singular mean-field blow-up constructions"};
    app.require_subcommand(1);

    std::string config_path, out_dir, eps_list, cap_text;
    int jobs = -1;
    double mesh_h = -1.0, eps_flag = -1.0;
    std::uint64_t seed = 0;
    bool have_seed = false, svg = false;

    app.add_option("--config", config_path, "JSON experiment configuration");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--jobs", jobs, "worker threads (overrides config)");
    app.add_option("--seed", seed, "random seed (overrides config)")
        ->each([&](const std::string&) { have_seed = true; });
    app.add_option("--eps-grid", eps_list, "comma-separated eps values (overrides config)");
    app.add_option("--mesh-h", mesh_h, "mesh resolution (overrides config)");
    app.add_flag("--svg", svg, "emit SVG plots");

    auto* sc_green = app.add_subcommand("green-check", "Green function vs disk oracle");
    auto* sc_bubble = app.add_subcommand("bubble-check", "bubble constants and masses");
    auto* sc_res = app.add_subcommand("resonance", "list resonant mass values");
    std::string cap_flag;
    sc_res->add_option("--cap", cap_flag, "upper mass bound, e.g. \"40pi\"");
    auto* sc_crit = app.add_subcommand("find-critical", "search a critical configuration");
    auto* sc_sweep = app.add_subcommand("sweep", "assemble the ansatz across the eps grid");
    auto* sc_newton = app.add_subcommand("newton", "Newton-correct the ansatz at one eps");
    sc_newton->add_option("--eps", eps_flag, "eps value (default: smallest grid entry)");
    auto* sc_verify = app.add_subcommand("verify-all", "run the full acceptance battery");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        } else if (sc_res->parsed() || sc_crit->parsed() || sc_sweep->parsed() ||
                   sc_newton->parsed()) {
            throw ConfigError("this subcommand requires --config");
        } else {
            cfg.weight = "1";  // built-in default lab: flat disk, constant weight
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (jobs > 0) cfg.jobs = jobs;
        if (have_seed) cfg.seed = seed;
        if (mesh_h > 0.0) cfg.mesh_h = mesh_h;
        if (svg) cfg.svg = true;
        if (!eps_list.empty()) {
            cfg.eps_grid.clear();
            std::stringstream ss(eps_list);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) cfg.eps_grid.push_back(std::stod(tok));
            if (cfg.eps_grid.empty()) throw ConfigError("--eps-grid: no values parsed");
        }

        if (sc_green->parsed()) return cmd_green_check(cfg);
        if (sc_bubble->parsed()) return cmd_bubble_check(cfg);
        if (sc_res->parsed()) return cmd_resonance(cfg, cap_flag);
        if (sc_crit->parsed()) return cmd_find_critical(cfg);
        if (sc_sweep->parsed()) return cmd_sweep(cfg);
        if (sc_newton->parsed()) return cmd_newton(cfg, eps_flag);
        if (sc_verify->parsed()) return cmd_verify_all(cfg);
        std::fprintf(stderr, "no subcommand given\n");
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ResolutionError& e) {
        std::fprintf(stderr, "resolution error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

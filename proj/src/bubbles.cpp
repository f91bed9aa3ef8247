#include "mfl/bubbles.hpp"

#include <cmath>
#include <vector>

namespace mfl {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

// 1 / (1 + exp(-x)).
double logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double BubbleShape::t_of(double abs_y) const {
    return std::pow(lambda * abs_y, 2.0 * (1.0 + gamma));
}

double BubbleShape::value(double abs_y) const {
    if (abs_y <= 0.0) return peak();
    const double lt = 2.0 * (1.0 + gamma) * std::log(lambda * abs_y);
    return std::log(8.0) + 2.0 * std::log1p(gamma) + 2.0 * (1.0 + gamma) * std::log(lambda)
           - 2.0 * softplus(lt);
}

double BubbleShape::dvalue(double abs_y) const {
    const double lt = 2.0 * (1.0 + gamma) * std::log(lambda * abs_y);
    return -4.0 * (1.0 + gamma) / abs_y * logistic(lt);
}

double BubbleShape::far_shift() const {
    return std::log(8.0) + 2.0 * std::log1p(gamma) - 2.0 * (1.0 + gamma) * std::log(lambda);
}

double BubbleShape::peak() const {
    return std::log(8.0) + 2.0 * std::log1p(gamma) + 2.0 * (1.0 + gamma) * std::log(lambda);
}

double kernel_mode(const BubbleShape& shape, const Vec2& y, int mode) {
    if (mode == 0) {
        const double ay = y.norm();
        if (ay <= 0.0) return 2.0 * (1.0 + shape.gamma);
        const double lt = 2.0 * (1.0 + shape.gamma) * std::log(shape.lambda * ay);
        return -2.0 * (1.0 + shape.gamma) * std::tanh(0.5 * lt);
    }
    if (mode != 1 && mode != 2) throw ConfigError("kernel_mode: mode must be 0, 1 or 2");
    if (shape.gamma != 0.0)
        throw ConfigError("kernel_mode: translation modes require a regular center");
    const double yj = (mode == 1) ? y.x : y.y;
    const double l2 = shape.lambda * shape.lambda;
    return 4.0 * shape.lambda * yj / (1.0 + l2 * y.norm2());
}

double dilation_tail_constant(double gamma) {
    if (!(gamma > 0.0))
        throw ConfigError("dilation_tail_constant: defined for positive exponents only");
    const double a = kPi / (1.0 + gamma);
    return a / std::sin(a);
}

ScaleConstants scale_constants(double gamma, double lambda, double rho_xi, double area) {
    if (!admissible_gamma(gamma)) throw ConfigError("scale_constants: inadmissible exponent");
    if (!(lambda > 1.0)) throw ConfigError("scale_constants: requires lambda > 1");
    if (!(rho_xi > 0.0) || !(area > 0.0))
        throw ConfigError("scale_constants: rho and area must be positive");
    ScaleConstants sc;
    const double p = 2.0 * (1.0 + gamma);
    if (gamma > 0.0) {
        sc.eps0 = 0.25 * rho_xi * dilation_tail_constant(gamma) / (lambda * lambda) / area;
        sc.eps1 = std::pow(lambda, -p) * std::log(lambda);
    } else if (gamma == 0.0) {
        sc.eps0 = 0.5 * rho_xi * std::log(lambda) / (lambda * lambda) / area;
        sc.eps1 = 1.0 / (lambda * lambda);
    } else {
        sc.eps0 = 0.0;
        sc.eps1 = std::pow(lambda, -p);
    }
    return sc;
}

namespace {

// int_0^inf f(u) du over geometric panels [2^k - 1, 2^{k+1} - 1]; the
// integrands below decay like u^{-2} (times logs), so the truncated tail
// beyond u ~ 1e12 is far below the verification tolerance.
double halfline_integral(const std::function<double(double)>& f) {
    std::vector<double> gn, gw;
    gauss_legendre(16, gn, gw);
    double acc = 0.0;
    double lo = 0.0;
    for (int k = 0; k < 41; ++k) {
        const double hi = std::ldexp(1.0, k + 1) - 1.0;
        for (size_t i = 0; i < gn.size(); ++i)
            acc += gw[i] * (hi - lo) * f(lo + gn[i] * (hi - lo));
        lo = hi;
    }
    return acc;
}

}  // namespace

std::vector<ClosedForm> closed_form_suite(double gamma) {
    if (!admissible_gamma(gamma)) throw ConfigError("closed_form_suite: inadmissible exponent");
    const double g1 = 1.0 + gamma;
    // Radial integrals in the substituted variable u = |y|^{2(1+gamma)}:
    // int_{R^2} |y|^{2 gamma} f(|y|^{2(1+gamma)}) dy = (pi/(1+gamma)) int_0^inf f(u) du,
    // and int_{R^2} y_j^2 f(|y|^2) dy = (pi/2) int_0^inf u f(u) du.
    std::vector<ClosedForm> out;
    auto push = [&out](const char* name, double ref, double quad) {
        const bool ok = std::abs(quad - ref) <= 1e-8 * std::max(1.0, std::abs(ref));
        out.push_back({name, ref, quad, ok});
    };
    push("profile_mass", 8.0 * kPi * g1,
         kPi / g1 * halfline_integral([&](double u) {
             const double d = 1.0 + u;
             return 8.0 * g1 * g1 / (d * d);
         }));
    push("profile_log_moment", -4.0 * kPi * g1,
         kPi / g1 * halfline_integral([&](double u) {
             const double d = 1.0 + u;
             return 8.0 * g1 * g1 * (1.0 - u) * std::log1p(u) / (d * d * d);
         }));
    push("translation_moment", kPi,
         0.5 * kPi * halfline_integral([](double u) {
             const double d = 1.0 + u;
             return 4.0 * u / (d * d * d);
         }));
    push("dilation_pairing", 32.0 * kPi / 3.0 * g1 * g1 * g1,
         kPi / g1 * halfline_integral([&](double u) {
             const double d = 1.0 + u;
             return 64.0 * g1 * g1 * g1 * g1 * (1.0 - u) / (d * d * d * d);
         }));
    push("translation_pairing", kPi / 6.0,
         0.5 * kPi * halfline_integral([](double u) {
             const double d = 1.0 + u;
             return 2.0 * u / (d * d * d * d);
         }));
    return out;
}

namespace {

// Load vector of annulus commutator data against the hat basis, in chart
// measure dy: integrates data(s, rho, y) over the shell where the cutoff
// varies (s = 4 rho / r in [plateau_end, 2]).
std::vector<double> annulus_load(const FemSystem& fem, const Chart& ch,
                                 const CutoffProfile& prof,
                                 const std::function<double(double, double, const Vec2&)>& data) {
    const double r = ch.radius();
    std::vector<double> load(fem.mesh().num_vertices(), 0.0);
    std::vector<double> gn, gw;
    gauss_legendre(16, gn, gw);
    const double s0 = prof.plateau_end(), s1 = 2.0;
    const int n_ang = 192;
    std::vector<double> th, thw;
    if (ch.is_boundary()) {
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
    for (size_t i = 0; i < gn.size(); ++i) {
        const double s = s0 + gn[i] * (s1 - s0);
        const double rho = 0.25 * r * s;
        const double wr = gw[i] * (s1 - s0) * 0.25 * r * rho;
        for (size_t j = 0; j < th.size(); ++j) {
            const Vec2 y{rho * std::cos(th[j]), rho * std::sin(th[j])};
            const Vec2 x = ch.from_chart(y);
            fem.scatter(x, wr * thw[j] * data(s, rho, y), load);
        }
    }
    return load;
}

void validate_bubble_inputs(double gamma, double lambda) {
    if (!admissible_gamma(gamma))
        throw ConfigError("projected bubble: inadmissible cone exponent");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ConfigError("projected bubble: lambda must be finite and positive");
}

}  // namespace

ProjectedBubble::ProjectedBubble(std::shared_ptr<const FemSystem> fem, CutoffProfile profile,
                                 const Chart& chart, double gamma, double lambda)
    : fem_(std::move(fem)),
      prof_(profile),
      chart_(chart),
      shape_{gamma, lambda},
      remainder_(fem_->mesh_ptr()) {
    validate_bubble_inputs(gamma, lambda);
    const double r = chart_.radius();
    const double inner = std::min(1.0 / lambda, 0.125 * r);
    const QuadRule plain = chart_rule(chart_, 0.5 * r, inner, gamma, 64, 12);
    const double cfar = shape_.far_shift();
    source_.pts.reserve(plain.pts.size());
    double mass = 0.0, core_int = 0.0;
    for (const auto& qp : plain.pts) {
        const Vec2& y = qp.x;
        const double ay = y.norm();
        const double chi = prof_.value(4.0 * ay / r);
        const double dens = chi * std::exp(shape_.value(ay) + 2.0 * gamma * std::log(ay));
        source_.pts.push_back({chart_.from_chart(y), qp.w * dens});
        mass += qp.w * dens;
        core_int += qp.w * chi * (shape_.value(ay) - cfar) * std::exp(chart_.log_factor(y));
    }
    mass_ = mass;
    core_integral_ = core_int;

    // Remainder data: the commutator of the Laplacian with the cutoff,
    //   Lap(chi (delta - c)) - chi Lap(delta)
    //     = (chi'' + chi'/rho)(delta - c) + 2 chi' delta'.
    const auto load = annulus_load(*fem_, chart_, prof_, [&](double s, double rho, const Vec2&) {
        const double dchi = prof_.deriv(s) * 4.0 / r;
        const double ddchi = prof_.second(s) * 16.0 / (r * r);
        return (ddchi + dchi / rho) * (shape_.value(rho) - cfar) + 2.0 * dchi * shape_.dvalue(rho);
    });
    remainder_ = fem_->solve_zero_mean(load, -core_integral_ / fem_->area());
}

double ProjectedBubble::core(const Vec2& x) const {
    Vec2 y;
    if (!chart_.try_to_chart(x, y)) return 0.0;
    const double ay = y.norm();
    const double s = 4.0 * ay / chart_.radius();
    if (s >= 2.0) return 0.0;
    return prof_.value(s) * (shape_.value(ay) - shape_.far_shift());
}

double ProjectedBubble::pair_zero_mean(const std::function<double(const Vec2&)>& f) const {
    double acc = 0.0;
    for (const auto& qp : source_.pts) acc += qp.w * f(qp.x);
    return acc;
}

ProjectedKernel::ProjectedKernel(std::shared_ptr<const FemSystem> fem, CutoffProfile profile,
                                 const Chart& chart, double gamma, double lambda, int mode)
    : fem_(std::move(fem)),
      prof_(profile),
      chart_(chart),
      shape_{gamma, lambda},
      mode_(mode),
      remainder_(fem_->mesh_ptr()) {
    validate_bubble_inputs(gamma, lambda);
    if (mode < 0 || mode > 2) throw ConfigError("projected kernel: mode must be 0, 1 or 2");
    if (mode >= 1 && gamma != 0.0)
        throw ConfigError("projected kernel: translation modes require a regular center");
    if (mode == 2 && chart_.is_boundary())
        throw ConfigError("projected kernel: mode 2 is not admissible at boundary centers");
    const double r = chart_.radius();
    const double g1 = 1.0 + gamma;
    const double inner = std::min(1.0 / lambda, 0.125 * r);
    const QuadRule plain = chart_rule(chart_, 0.5 * r, inner, gamma, 64, 12);
    source_.pts.reserve(plain.pts.size());
    double core_int = 0.0;
    for (const auto& qp : plain.pts) {
        const Vec2& y = qp.x;
        const double ay = y.norm();
        const double chi = prof_.value(4.0 * ay / r);
        const double z = kernel_mode(shape_, y, mode_);
        const double dens = chi * std::exp(shape_.value(ay) + 2.0 * gamma * std::log(ay)) * z;
        source_.pts.push_back({chart_.from_chart(y), qp.w * dens});
        const double cz = (mode_ == 0) ? z + 2.0 * g1 : z;
        core_int += qp.w * chi * cz * std::exp(chart_.log_factor(y));
    }

    const auto load = annulus_load(*fem_, chart_, prof_, [&](double s, double rho, const Vec2& y) {
        const double dchi = prof_.deriv(s) * 4.0 / r;
        const double ddchi = prof_.second(s) * 16.0 / (r * r);
        if (mode_ == 0) {
            // g = Z0 + 2(1+gamma) = 4(1+gamma)/(1+t)
            const double lt = 2.0 * g1 * std::log(lambda * rho);
            const double sig = logistic(lt);
            const double g = 4.0 * g1 * (1.0 - sig);
            const double dg = -8.0 * g1 * g1 * sig * (1.0 - sig) / rho;
            return (ddchi + dchi / rho) * g + 2.0 * dchi * dg;
        }
        const double yj = (mode_ == 1) ? y.x : y.y;
        const double l2 = lambda * lambda;
        const double d = 1.0 + l2 * rho * rho;
        const double z = 4.0 * lambda * yj / d;
        const double dz = (yj / rho) * 4.0 * lambda * (1.0 - l2 * rho * rho) / (d * d);
        return (ddchi + dchi / rho) * z + 2.0 * dchi * dz;
    });
    remainder_ = fem_->solve_zero_mean(load, -core_int / fem_->area());
}

double ProjectedKernel::core(const Vec2& x) const {
    Vec2 y;
    if (!chart_.try_to_chart(x, y)) return 0.0;
    const double ay = y.norm();
    const double s = 4.0 * ay / chart_.radius();
    if (s >= 2.0) return 0.0;
    const double chi = prof_.value(s);
    const double z = kernel_mode(shape_, y, mode_);
    return chi * ((mode_ == 0) ? z + 2.0 * (1.0 + shape_.gamma) : z);
}

double ProjectedKernel::pair_zero_mean(const std::function<double(const Vec2&)>& f) const {
    double acc = 0.0;
    for (const auto& qp : source_.pts) acc += qp.w * f(qp.x);
    return acc;
}

double pair_h1(const ProjectedBubble& a, const ProjectedBubble& b) {
    return a.pair_zero_mean([&](const Vec2& x) { return b.eval(x); });
}

double pair_h1(const ProjectedKernel& a, const ProjectedBubble& b) {
    return a.pair_zero_mean([&](const Vec2& x) { return b.eval(x); });
}

double pair_h1(const ProjectedKernel& a, const ProjectedKernel& b) {
    return a.pair_zero_mean([&](const Vec2& x) { return b.eval(x); });
}

}  // namespace mfl

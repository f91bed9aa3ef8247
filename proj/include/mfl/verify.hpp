#pragma once

// Acceptance battery: fourteen quantitative checks covering the Green
// function oracle, bubble constants and expansions, inner-product asymptotics,
// energy and residual scaling, Newton correction with mass quantization,
// coercivity, criticality correspondence, model kernel dimensions, and
// gradient consistency. Every tolerance is pinned here, in code.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mfl {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;    // measured values vs bounds, one line
    double seconds = 0.0;  // wall time of this check alone
};

struct VerifyOptions {
    double mesh_h = 0.02;
    int jobs = 4;
    std::uint64_t seed = 1234;
    std::vector<double> eps_grid = {3e-2, 1e-2, 3e-3, 1e-3};
    std::string out_dir;  // when nonempty, CSV artifacts are written here
    bool svg = false;     // also emit SVG plots for the fitted series
    /// Called with each result as soon as its check finishes (may be empty).
    std::function<void(const CheckResult&)> on_result;
};

/// Runs the full battery in order; never throws for a failed bound (that is a
/// failed CheckResult), only for infrastructure errors (I/O, solver
/// breakdown).
std::vector<CheckResult> run_acceptance(const VerifyOptions& opts);

/// "criterion  7 [PASS] energy expansion gap ..." one-liner.
std::string format_result_line(const CheckResult& r);

}  // namespace mfl

// Acceptance battery: runs every quantitative check of the laboratory and
// prints one pass/fail line per criterion. Exit status is the number of
// failed criteria. Optional arguments: [mesh_h] [jobs] (defaults 0.02, 4);
// artifacts (CSV tables, SVG plots) are written to acceptance_out/.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "mfl/verify.hpp"

int main(int argc, char** argv) {
    mfl::VerifyOptions opts;
    opts.out_dir = "acceptance_out";
    if (argc > 1) opts.mesh_h = std::atof(argv[1]);
    if (argc > 2) opts.jobs = std::atoi(argv[2]);
    if (const char* env_h = std::getenv("MFL_ACCEPT_MESH_H")) opts.mesh_h = std::atof(env_h);
    if (const char* env_j = std::getenv("MFL_ACCEPT_JOBS")) opts.jobs = std::atoi(env_j);
    if (!(opts.mesh_h > 0.0) || opts.mesh_h > 0.2) {
        std::fprintf(stderr, "acceptance: mesh_h must lie in (0, 0.2]\n");
        return 64;
    }
    if (opts.jobs < 1) opts.jobs = 1;

    std::printf("acceptance battery: mesh_h %g, %d jobs\n", opts.mesh_h, opts.jobs);
    std::fflush(stdout);

    opts.on_result = [](const mfl::CheckResult& r) {
        std::printf("%s\n", mfl::format_result_line(r).c_str());
        std::fflush(stdout);
    };
    const std::vector<mfl::CheckResult> results = mfl::run_acceptance(opts);
    int failures = 0;
    double total = 0.0;
    for (const mfl::CheckResult& r : results) {
        if (!r.pass) ++failures;
        total += r.seconds;
    }
    std::printf("%zu criteria, %d failed, %.1f s total\n", results.size(), failures, total);
    return failures;
}

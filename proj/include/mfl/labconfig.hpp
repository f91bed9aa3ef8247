#pragma once

// Experiment configuration: JSON schema shared by the CLI and the tests.
// Parsing validates eagerly (weight expression present and well formed,
// admissible cone exponents, sane mesh size) and serialization is canonical,
// so parse -> serialize -> parse is the identity.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfl/common.hpp"

namespace mfl {

struct PointSpec {
    double x = 0.0, y = 0.0;
    double gamma = 0.0;
};

struct ExperimentConfig {
    std::string model = "flat_disk";  // "flat_disk" or "conformal:<psi expr>"
    double mesh_h = 0.02;
    std::string weight;  // V expression (required in config files)
    std::vector<PointSpec> points;
    int p = 0, q = 0;
    std::vector<int> subset;
    double separation = 0.05;
    std::vector<double> eps_grid = {3e-2, 1e-2, 3e-3, 1e-3};
    std::uint64_t seed = 1234;
    std::vector<double> start;  // optional: 2p + q coordinates
    std::string out_dir = "out";
    bool svg = false;
    int jobs = 4;
    std::string resonance_cap = "40pi";
};

/// Throws ConfigError naming the offending field on invalid input.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

/// Reads and parses a config file; JSON syntax errors and schema violations
/// are reported as ConfigError with the path and field.
ExperimentConfig load_config(const std::string& path);

}  // namespace mfl

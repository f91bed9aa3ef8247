#include "mfl/labconfig.hpp"

#include <cmath>
#include <cstdio>

#include "mfl/expr.hpp"

namespace mfl {

using nlohmann::json;

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.is_string()) {
            c.model = m.get<std::string>();
        } else if (m.is_object() && m.contains("psi")) {
            c.model = "conformal:" + m.at("psi").get<std::string>();
        } else {
            throw ConfigError("config: field \"model\" must be \"flat_disk\" or {\"psi\": expr}");
        }
    }
    if (!j.contains("weight"))
        throw ConfigError("config: missing field \"weight\" (the V expression)");
    c.weight = j.at("weight").get<std::string>();
    Expr::parse(c.weight);  // reject malformed expressions up front
    if (j.contains("mesh_h")) c.mesh_h = j.at("mesh_h").get<double>();
    if (c.mesh_h <= 0.0 || c.mesh_h > 0.2)
        throw ConfigError("config: field \"mesh_h\" must lie in (0, 0.2]");
    if (j.contains("points")) {
        for (const json& pj : j.at("points")) {
            PointSpec ps;
            if (pj.contains("angle")) {
                const double th = pj.at("angle").get<double>();
                ps.x = std::cos(th);
                ps.y = std::sin(th);
            } else {
                ps.x = pj.at("x").get<double>();
                ps.y = pj.at("y").get<double>();
            }
            ps.gamma = pj.at("gamma").get<double>();
            if (!admissible_gamma(ps.gamma))
                throw ConfigError("config: points: gamma " + std::to_string(ps.gamma) +
                                  " is not admissible (must be > -1 and not 0, 1, 2, ...)");
            c.points.push_back(ps);
        }
    }
    if (j.contains("p")) c.p = j.at("p").get<int>();
    if (j.contains("q")) c.q = j.at("q").get<int>();
    if (c.p < 0 || c.q < 0) throw ConfigError("config: fields \"p\" and \"q\" must be >= 0");
    if (j.contains("subset")) c.subset = j.at("subset").get<std::vector<int>>();
    for (int s : c.subset)
        if (s < 0 || s >= static_cast<int>(c.points.size()))
            throw ConfigError("config: field \"subset\" has an index outside \"points\"");
    if (j.contains("separation")) c.separation = j.at("separation").get<double>();
    if (j.contains("eps_grid")) c.eps_grid = j.at("eps_grid").get<std::vector<double>>();
    for (double e : c.eps_grid)
        if (!(e > 0.0)) throw ConfigError("config: field \"eps_grid\" must be positive");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("start")) c.start = j.at("start").get<std::vector<double>>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("svg")) c.svg = j.at("svg").get<bool>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    if (c.jobs < 1) throw ConfigError("config: field \"jobs\" must be >= 1");
    if (j.contains("resonance_cap")) c.resonance_cap = j.at("resonance_cap").get<std::string>();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    if (c.model.rfind("conformal:", 0) == 0)
        j["model"] = json{{"psi", c.model.substr(10)}};
    else
        j["model"] = c.model;
    j["mesh_h"] = c.mesh_h;
    j["weight"] = c.weight;
    json pts = json::array();
    for (const PointSpec& ps : c.points)
        pts.push_back(json{{"x", ps.x}, {"y", ps.y}, {"gamma", ps.gamma}});
    j["points"] = pts;
    j["p"] = c.p;
    j["q"] = c.q;
    j["subset"] = c.subset;
    j["separation"] = c.separation;
    j["eps_grid"] = c.eps_grid;
    j["seed"] = c.seed;
    j["start"] = c.start;
    j["out_dir"] = c.out_dir;
    j["svg"] = c.svg;
    j["jobs"] = c.jobs;
    j["resonance_cap"] = c.resonance_cap;
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw ConfigError("config: cannot open " + path);
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
    std::fclose(f);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config: JSON parse failure in " + path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
}

}  // namespace mfl

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "mfl/fitting.hpp"
#include "mfl/labconfig.hpp"
#include "mfl/report.hpp"

using namespace mfl;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(MFLAB_BIN) + " " + args + " 2>&1";
    RunResult r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, got);
    const int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const std::string& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

json small_regular_config() {
    return json{{"model", "flat_disk"},
                {"mesh_h", 0.09},
                {"weight", "1"},
                {"points", json::array()},
                {"p", 1},
                {"q", 0},
                {"subset", json::array()},
                {"separation", 0.05},
                {"eps_grid", {0.03, 0.01}},
                {"seed", 1234},
                {"start", {0.0, 0.0}},
                {"jobs", 2}};
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("sweep").code == 2);  // needs --config
    CHECK(run("sweep --config /nonexistent/path.json").code == 2);
}

TEST_CASE("missing weight expression is a config error naming the field") {
    json j = small_regular_config();
    j.erase("weight");
    dump("/tmp/mfl_cli_noweight.json", j);
    const RunResult r = run("sweep --config /tmp/mfl_cli_noweight.json");
    CHECK(r.code == 2);
    CHECK(r.output.find("weight") != std::string::npos);
}

TEST_CASE("malformed JSON and malformed expressions are config errors") {
    {
        std::ofstream out("/tmp/mfl_cli_bad.json");
        out << "{ \"weight\": \"1\", ";  // truncated
    }
    const RunResult r = run("sweep --config /tmp/mfl_cli_bad.json");
    CHECK(r.code == 2);
    CHECK(r.output.find("parse") != std::string::npos);

    json j = small_regular_config();
    j["weight"] = "2*";
    dump("/tmp/mfl_cli_badexpr.json", j);
    CHECK(run("sweep --config /tmp/mfl_cli_badexpr.json").code == 2);
}

TEST_CASE("config schema validation") {
    json j = small_regular_config();
    CHECK_NOTHROW(config_from_json(j));

    json g = j;
    g["points"] = json::array({json{{"x", 0.1}, {"y", 0.0}, {"gamma", 1.0}}});
    CHECK_THROWS_AS(config_from_json(g), ConfigError);  // gamma in N_0

    json sub = j;
    sub["subset"] = {0};
    CHECK_THROWS_AS(config_from_json(sub), ConfigError);  // no such point

    json eps = j;
    eps["eps_grid"] = {0.01, -0.5};
    CHECK_THROWS_AS(config_from_json(eps), ConfigError);

    json mh = j;
    mh["mesh_h"] = 0.5;
    CHECK_THROWS_AS(config_from_json(mh), ConfigError);
}

TEST_CASE("config serialization round trip is idempotent") {
    json j = small_regular_config();
    j["points"] = json::array({json{{"angle", 0.7}, {"gamma", 0.5}},
                               json{{"x", 0.2}, {"y", -0.1}, {"gamma", -0.5}}});
    j["subset"] = {1};
    j["p"] = 0;
    j["start"] = json::array();

    const ExperimentConfig c1 = config_from_json(j);
    const json s1 = config_to_json(c1);
    const ExperimentConfig c2 = config_from_json(s1);
    const json s2 = config_to_json(c2);
    CHECK(s1.dump() == s2.dump());

    // angle form resolves to coordinates on the circle
    CHECK(std::abs(c1.points[0].x - std::cos(0.7)) < 1e-15);
    CHECK(std::abs(c1.points[0].y - std::sin(0.7)) < 1e-15);

    // a conformal model survives the round trip
    json cm = small_regular_config();
    cm["model"] = json{{"psi", "x/4"}};
    const json s3 = config_to_json(config_from_json(cm));
    CHECK(s3.at("model").at("psi") == "x/4");
}

TEST_CASE("resonance subcommand lists pi-literal-capped mass values") {
    json j = small_regular_config();
    j["mesh_h"] = 0.1;
    j["p"] = 0;
    j["start"] = json::array();
    j["points"] = json::array({json{{"angle", 0.0}, {"gamma", 0.5}},
                               json{{"x", 0.0}, {"y", 0.0}, {"gamma", 0.5}}});
    j["subset"] = {1};
    dump("/tmp/mfl_cli_res.json", j);

    const RunResult r =
        run("resonance --cap 40pi --config /tmp/mfl_cli_res.json --out /tmp/mfl_cli_res_out");
    CHECK(r.code == 0);

    const std::string csv = slurp("/tmp/mfl_cli_res_out/resonance.csv");
    CHECK(csv.rfind("index,value,value_over_pi", 0) == 0);
    // 6 pi (boundary cone) and 12 pi (interior cone) must both appear
    bool has6 = false, has12 = false;
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        const auto c1 = line.find(','), c2 = line.rfind(',');
        REQUIRE(c1 != std::string::npos);
        const double over_pi = std::stod(line.substr(c2 + 1));
        if (std::abs(over_pi - 6.0) < 1e-9) has6 = true;
        if (std::abs(over_pi - 12.0) < 1e-9) has12 = true;
    }
    CHECK(has6);
    CHECK(has12);
    // the configured subset mass is reported against the resonant ladder
    CHECK(r.output.find("12 pi") != std::string::npos);
}

TEST_CASE("sweep output is byte-deterministic for a fixed config and seed") {
    dump("/tmp/mfl_cli_sweep.json", small_regular_config());
    const RunResult a =
        run("sweep --config /tmp/mfl_cli_sweep.json --out /tmp/mfl_cli_sweep_a");
    REQUIRE(a.code == 0);
    const RunResult b =
        run("sweep --config /tmp/mfl_cli_sweep.json --out /tmp/mfl_cli_sweep_b");
    REQUIRE(b.code == 0);

    const std::string csv_a = slurp("/tmp/mfl_cli_sweep_a/sweep.csv");
    const std::string csv_b = slurp("/tmp/mfl_cli_sweep_b/sweep.csv");
    CHECK(csv_a == csv_b);
    CHECK(csv_a.rfind("eps,lambda_0,F,E_W,gap,res_norm_s,mass,mass_target", 0) == 0);

    // two eps rows, header + 2 lines
    int lines = 0;
    for (char ch : csv_a)
        if (ch == '\n') ++lines;
    CHECK(lines == 3);
}

TEST_CASE("newton subcommand writes the iteration trace") {
    dump("/tmp/mfl_cli_newton.json", small_regular_config());
    const RunResult r = run(
        "newton --eps 0.01 --config /tmp/mfl_cli_newton.json --out /tmp/mfl_cli_newton_out");
    CHECK(r.code == 0);
    CHECK(r.output.find("converged") != std::string::npos);
    const std::string csv = slurp("/tmp/mfl_cli_newton_out/newton_trace.csv");
    CHECK(csv.rfind("iter,residual,damping,phi_norm", 0) == 0);
    int lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines >= 3);  // header + at least two iterations
}

TEST_CASE("find-critical locates the disk center") {
    json j = small_regular_config();
    j["start"] = {0.2, 0.1};
    dump("/tmp/mfl_cli_crit.json", j);
    const RunResult r = run(
        "find-critical --config /tmp/mfl_cli_crit.json --out /tmp/mfl_cli_crit_out");
    CHECK(r.code == 0);
    CHECK(r.output.find("converged") != std::string::npos);
    CHECK(slurp("/tmp/mfl_cli_crit_out/critical.csv").find("grad_norm") != std::string::npos);
}

TEST_CASE("formatting helpers are stable") {
    CHECK(format_cell(0.5) == "0.5");
    CHECK(format_cell(8.0 * kPi) == "25.1327412287");
    CHECK(format_cell(1e-9) == "1e-09");

    CsvTable t({"a", "b"});
    t.add_row({1.0, 2.5});
    t.add_text_row({"x", "y"});
    CHECK(t.rows() == 2);
    CHECK(t.to_string() == "a,b\n1,2.5\nx,y\n");

    write_text_atomic("/tmp/mfl_cli_report/dir/made/file.txt", "hello");
    CHECK(slurp("/tmp/mfl_cli_report/dir/made/file.txt") == "hello");

    const SlopeFit f = fit_slope({1.0, 2.0, 4.0, 8.0}, {3.0, 12.0, 48.0, 192.0});
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

    write_svg_plot("/tmp/mfl_cli_report/plot.svg", "t", "x", "y",
                   {{"series", {1.0, 2.0, 3.0}, {1.0, 4.0, 9.0}}}, true, true);
    const std::string svg = slurp("/tmp/mfl_cli_report/plot.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
}

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

#include "mvsde/analysis.hpp"
#include "mvsde/app/commands.hpp"
#include "mvsde/app/config.hpp"
#include "mvsde/app/csv.hpp"
#include "mvsde/error.hpp"

using namespace mvsde;
using namespace mvsde::app;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json brownian_run() {
    return json::parse(R"({
        "experiment": "run",
        "model": {"name": "OrnsteinUhlenbeckMV", "params": {"rho": 0, "lambda": 0, "nu": 1}},
        "initial": {"kind": "point", "mean": [0.5]},
        "schemes": [{"scheme": "ssm"}],
        "N": 1, "T": 1, "h": 0.25, "h_fine": 0.25,
        "seed": 11,
        "snapshots": {"every": 1}
    })");
}

json gl_convergence() {
    return json::parse(R"({
        "experiment": "convergence",
        "model": {"name": "GinzburgLandau", "params": {"sigma": 1.5, "c": 0.5}},
        "initial": {"kind": "normal", "mean": [1], "variance": [0.25]},
        "schemes": [{"scheme": "ssm"}, {"scheme": "tamed", "alpha": 0.5}, {"scheme": "adaptive", "h_delta": {"rule": "inv_sq"}}],
        "N": 16, "T": 0.5, "h": [0.125, 0.0625, 0.03125],
        "seed": 4
    })");
}

fs::path scratch() {
    static int counter = 0;
    auto dir = fs::temp_directory_path() / ("mvsde_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Runs the built binary; returns its exit status.
int cli(const std::string& args) {
    const char* exe = std::getenv("MVSDE_CLI");
    REQUIRE_MESSAGE(exe != nullptr, "MVSDE_CLI must point at the mvsde binary");
    const std::string cmd = std::string("\"") + exe + "\" " + args + " 2>/dev/null >/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("config round trip is idempotent") {
    for (const auto& j : {brownian_run(), gl_convergence()}) {
        const auto first = to_json(parse_config(j));
        const auto second = to_json(parse_config(first));
        CHECK(first == second);
    }
}

TEST_CASE("config defaults") {
    const auto c = parse_config(gl_convergence());
    CHECK(c.reference_step() == 0.03125 / 8);
    CHECK(c.fine_step() == 0.03125 / 64);
    CHECK(c.threads == 1);
    CHECK(c.snapshots.kind == SnapshotPolicy::Kind::TerminalOnly);
    CHECK(std::holds_alternative<SplitStep>(c.reference_scheme().kind));
    CHECK(std::get<Tamed>(c.schemes[1].kind).alpha == 0.5);
}

TEST_CASE("config rejects bad input") {
    auto j = brownian_run();
    j["colour"] = "blue";
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = brownian_run();
    j.erase("T");
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = brownian_run();
    j["schemes"][0]["scheme"] = "rk4";
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = brownian_run();
    j["T"] = 0.9; // not a multiple of h
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = brownian_run();
    j["initial"]["mean"] = {0.0, 1.0};
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = brownian_run();
    j["schemes"].push_back({{"scheme", "euler"}});
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = brownian_run();
    j["model"]["params"].erase("nu");
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = brownian_run();
    j["schemes"][0]["scheme"] = "tamed";
    j["schemes"][0]["alpha"] = 1.5;
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);

    j = gl_convergence();
    j["schemes"].push_back({{"scheme", "ssm"}});
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);
}

TEST_CASE("csv formatting keeps 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(parse_double(format_double(0.1)) == 0.1);
    CHECK(format_double(std::nan("")) == "nan");
    CsvWriter w({"a", "b"});
    w.comment("k", "v");
    w.row({"1", "2"});
    CHECK(w.str() == "# k=v\na,b\n1,2\n");
    CHECK(CsvWriter({"x"}).str() == "x\n");
    const auto t = parse_csv(w.str());
    CHECK(t.metadata.size() == 1);
    CHECK(t.rows.size() == 1);
}

TEST_CASE("pure Brownian run writes M+1 rows with X0 + W_t") {
    const auto c = parse_config(brownian_run());
    const auto out = cmd_run(c);
    const auto t = parse_csv(out.csv);
    REQUIRE(t.rows.size() == 5);
    CHECK(t.header == std::vector<std::string>{"t", "mean_0", "m2_0", "max_abs", "nonfinite"});
    const auto noise = c.make_noise(1);
    double w = 0.0;
    for (std::size_t n = 0; n < 5; ++n) {
        CHECK(parse_double(t.rows[n][0]) == 0.25 * static_cast<double>(n));
        CHECK(parse_double(t.rows[n][1]) == 0.5 + w);
        if (n < 4) {
            w += noise.increment(0, n, 0);
        }
    }
    CHECK(out.nonfinite == 0);
    CHECK(parse_csv(out.timing_csv).rows.size() == 4);
}

TEST_CASE("synthetic sqrt(h) gap gives strong slope 1/2 through the csv") {
    ErrorReport report;
    report.reference = SchemeConfig{SplitStep{}, 1.0 / 1024, {}};
    std::vector<double> hs{0.1, 0.05, 0.025, 0.0125}, strong, weak;
    for (double h : hs) {
        ParticleCloud ref(8, 1), approx(8, 1);
        for (std::size_t i = 0; i < 8; ++i) {
            ref.at(i, 0) = static_cast<double>(i);
            approx.at(i, 0) = ref.at(i, 0) + std::sqrt(h);
        }
        const auto e = strong_weak_errors(ref, approx);
        report.rows.push_back({"ssm", h, e});
        strong.push_back(e.strong);
        weak.push_back(std::fabs(e.weak));
    }
    report.strong_fit["ssm"] = fit_rate(hs, strong);
    report.weak_fit["ssm"] = fit_rate(hs, weak);
    const auto t = parse_csv(convergence_csv(report));
    REQUIRE(t.rows.size() == 5);
    CHECK(t.rows.back()[1] == "all");
    CHECK(parse_double(t.rows.back()[5]) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(parse_double(t.rows.back()[4]) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cli output is byte-identical across repeats and thread counts") {
    const auto dir = scratch();
    auto j = gl_convergence();
    dump(dir / "conv.json", j.dump(2));
    REQUIRE(cli("convergence --config " + (dir / "conv.json").string() + " --out " + (dir / "a.csv").string()) == 0);
    REQUIRE(cli("convergence --config " + (dir / "conv.json").string() + " --out " + (dir / "b.csv").string()) == 0);
    REQUIRE(cli("convergence --config " + (dir / "conv.json").string() + " --threads 4 --out " +
                (dir / "c.csv").string()) == 0);
    const auto a = slurp(dir / "a.csv");
    CHECK(!a.empty());
    CHECK(a.find('\r') == std::string::npos);
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(a == slurp(dir / "c.csv"));

    REQUIRE(cli("convergence --config " + (dir / "conv.json").string() + " --seed 5 --out " +
                (dir / "d.csv").string()) == 0);
    CHECK(a != slurp(dir / "d.csv"));

    REQUIRE(cli("plot " + (dir / "a.csv").string() + " --out " + (dir / "a.svg").string()) == 0);
    const auto svg = slurp(dir / "a.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t lines = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) {
        ++lines;
    }
    CHECK(lines == 3);
    fs::remove_all(dir);
}

TEST_CASE("cli run writes csv and timing sidecar") {
    const auto dir = scratch();
    dump(dir / "run.json", brownian_run().dump());
    REQUIRE(cli("run --config " + (dir / "run.json").string() + " --out " + (dir / "r.csv").string()) == 0);
    CHECK(parse_csv(slurp(dir / "r.csv")).rows.size() == 5);
    CHECK(fs::exists(dir / "r.csv.timing.csv"));
    REQUIRE(cli("plot " + (dir / "r.csv").string() + " --out " + (dir / "r.svg").string()) == 0);
    CHECK(slurp(dir / "r.svg").find("<polyline") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch();
    const auto cfg = (dir / "c.json").string();

    CHECK(cli("run --config " + (dir / "missing.json").string()) == 2);
    dump(cfg, "{ not json");
    CHECK(cli("run --config " + cfg) == 2);
    auto j = brownian_run();
    j["mystery"] = 1;
    dump(cfg, j.dump());
    CHECK(cli("run --config " + cfg) == 2);
    dump(cfg, brownian_run().dump());
    CHECK(cli("convergence --config " + cfg) == 2); // experiment mismatch
    CHECK(cli("run --config " + cfg + " --threads 0") == 2);
    CHECK(cli("frobnicate") == 2);

    // 1 - 2 h L_v <= 0: the implicit step has no unique solution
    j = brownian_run();
    j["model"]["params"]["rho"] = 4.0;
    dump(cfg, j.dump());
    CHECK(cli("run --config " + cfg) == 3);

    // explicit Euler on a cubic drift from far out overflows
    j = brownian_run();
    j["model"] = {{"name", "GinzburgLandau"}, {"params", {{"sigma", 1.5}, {"c", 0.5}}}};
    j["initial"]["mean"] = {1e5};
    j["schemes"][0]["scheme"] = "euler";
    dump(cfg, j.dump());
    CHECK(cli("run --config " + cfg + " --out " + (dir / "blow.csv").string()) == 3);

    // stability needs finite Lipschitz constants
    j = json::parse(R"({
        "experiment": "stability",
        "model": {"name": "FitzHughNagumo", "params": {"I": 0.5, "J": 1, "V_rev": 1, "a": 0.7, "b": 0.8, "c": 0.08,
                  "a_r": 1, "a_d": 1, "lambda": 0.2, "V_T": 2, "T_max": 1, "Gamma": 0.1, "Lambda": 0.5,
                  "sigma_ext": 0.5, "sigma_J": 0.2}},
        "initial": {"kind": "point", "mean": [0, 0.5, 0.3]},
        "initial_z": {"kind": "point", "mean": [1, 0.5, 0.3]},
        "schemes": [{"scheme": "ssm"}],
        "N": 4, "T": 0.5, "h": 0.125
    })");
    dump(cfg, j.dump());
    CHECK(cli("stability --config " + cfg) == 2);

    dump(dir / "empty.csv", "scheme,h,eps1,eps2,slope_weak,slope_strong\n");
    CHECK(cli("plot " + (dir / "empty.csv").string()) == 2);
    CHECK(cli("plot " + (dir / "nothere.csv").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("stability csv carries beta and a decaying gap for the contractive model") {
    const auto c = parse_config(json::parse(R"({
        "experiment": "stability",
        "model": {"name": "GinzburgLandauStability", "params": {"gamma": 0}},
        "initial": {"kind": "normal", "mean": [2], "variance": [1]},
        "initial_z": {"kind": "normal", "mean": [-1], "variance": [1], "seed_offset": 1},
        "schemes": [{"scheme": "ssm"}],
        "N": 64, "T": 1, "h": 0.0625
    })"));
    const auto t = parse_csv(cmd_stability(c));
    REQUIRE(t.rows.size() == 17);
    const double d0 = parse_double(t.rows.front()[2]);
    const double dm = parse_double(t.rows.back()[2]);
    CHECK(dm < d0);
    for (const auto& row : t.rows) {
        CHECK(parse_double(row[2]) <= parse_double(row[3]) * (1 + 1e-12));
    }
}

TEST_CASE("bench checksums do not depend on the thread count") {
    const auto c = parse_config(json::parse(R"({
        "experiment": "bench",
        "model": {"name": "GinzburgLandau", "params": {"sigma": 1.5, "c": 0.5}},
        "initial": {"kind": "normal", "mean": [1], "variance": [0.25]},
        "schemes": [{"scheme": "ssm"}, {"scheme": "adaptive"}],
        "N": 10, "T": 0.25, "h": 0.0625, "chunk": 3,
        "bench": {"threads": [1, 3], "N": [10, 40], "repeat": 2}
    })"));
    const auto t = parse_csv(cmd_bench(c));
    REQUIRE(t.rows.size() == 8);
    CHECK(t.header.back() == "checksum");
    for (std::size_t r = 0; r < t.rows.size(); r += 2) {
        CHECK(t.rows[r][2] == "1");
        CHECK(t.rows[r + 1][2] == "3");
        CHECK(t.rows[r][5] == t.rows[r + 1][5]);
    }
    CHECK(t.rows[0][5] != t.rows[2][5]);
}

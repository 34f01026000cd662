#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CVQKD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("cvqkd_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<double>> csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
        rows.push_back(r);
    }
    return rows;
}

fs::path small_config(const fs::path& dir) {
    const auto p = dir / "small.json";
    std::ofstream(p) << R"({"fast": true, "symbol_rows": 500,
        "link": {"training_length": 20000, "payload_length": 20000, "keep_raw": true},
        "equalizer": {"n_taps": 3, "mu": 1e-4}})";
    return p;
}

}  // namespace

TEST_CASE("cli: help and usage errors") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("skr --no-such-flag") == 2);
}

TEST_CASE("cli: bad configuration exits with the config code") {
    const auto d = scratch("badcfg");
    std::ofstream(d / "bad.json") << R"({"channel": {"lenght_km": 3}})";
    CHECK(run("skr --config " + (d / "bad.json").string() + " --out " + d.string()) == 2);
    CHECK(run("skr --config " + (d / "missing.json").string()) == 2);
    CHECK(run("skr --beta 1.5 --out " + d.string()) == 2);
}

TEST_CASE("cli: skr rows and a zero-efficiency run") {
    const auto d = scratch("skr");
    REQUIRE(run("skr --out " + d.string()) == 0);
    const auto rows = csv_rows(d / "skr.csv");
    REQUIRE(rows.size() == 3u);
    CHECK(rows[0][0] == 50.0);
    CHECK(rows[0][2] == 0.039);
    CHECK(rows[0][5] > rows[1][5]);
    CHECK(rows[1][5] > rows[2][5]);
    CHECK(fs::exists(d / "skr.svg"));

    const auto z = scratch("skr_beta0");
    REQUIRE(run("skr --beta 0 --out " + z.string()) == 0);
    for (const auto& r : csv_rows(z / "skr.csv")) CHECK(r[5] <= 0.0);
}

TEST_CASE("cli: sweep gives 21 rows decreasing in distance") {
    const auto d = scratch("sweep");
    REQUIRE(run("sweep --out " + d.string()) == 0);
    const auto rows = csv_rows(d / "sweep.csv");
    REQUIRE(rows.size() == 21u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][0] > rows[i - 1][0]);
        CHECK(rows[i][5] < rows[i - 1][5]);
    }
}

TEST_CASE("cli: simulate is byte-deterministic and replays saved IF records") {
    const auto a = scratch("sim_a"), b = scratch("sim_b"), r = scratch("sim_r");
    const auto cfg = small_config(a);
    const std::string common = " --config " + cfg.string() + " --distance 10 --seed 9";
    REQUIRE(run("simulate" + common + " --out " + a.string() + " --save-if " + (a / "rec.if").string()) == 0);
    REQUIRE(run("simulate" + common + " --out " + b.string()) == 0);
    for (const char* f : {"estimates.csv", "symbols.csv", "symbols_raw.csv"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(fs::exists(a / "symbols_after_dsp.svg"));
    CHECK(fs::exists(a / "symbols_before_dsp.svg"));
    CHECK(csv_rows(a / "symbols.csv").size() == 500u);

    // The IF file stores float32, so replayed estimates are close, not equal.
    REQUIRE(run("simulate" + common + " --out " + r.string() + " --replay " + (a / "rec.if").string()) == 0);
    const auto orig = csv_rows(a / "estimates.csv"), replay = csv_rows(r / "estimates.csv");
    REQUIRE(replay.size() == 1u);
    CHECK(replay[0][1] == doctest::Approx(orig[0][1]).epsilon(1e-3));

    const auto c = scratch("sim_c");
    REQUIRE(run("simulate" + std::string(" --config ") + cfg.string() + " --distance 10 --seed 10 --out " + c.string()) ==
            0);
    CHECK(slurp(a / "estimates.csv") != slurp(c / "estimates.csv"));
}

TEST_CASE("cli: noise-timeseries writes one row per block") {
    const auto d = scratch("ts");
    const auto cfg = small_config(d);
    REQUIRE(run("noise-timeseries --config " + cfg.string() + " --distance 20 --blocks 2 --out " + d.string()) == 0);
    const auto rows = csv_rows(d / "timeseries.csv");
    REQUIRE(rows.size() == 2u);
    CHECK(rows[1][0] == 1.0);
    CHECK(rows[0][5] == rows[1][5]);
}

TEST_CASE("cli: config prints the effective configuration") {
    const auto d = scratch("cfg");
    const std::string cmd = std::string(CVQKD_CLI_PATH) + " config --seed 77 > " + (d / "out.json").string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(slurp(d / "out.json").find("\"seed\": 77") != std::string::npos);
}

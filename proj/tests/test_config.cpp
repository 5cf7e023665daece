// Copyright 2026 The qje Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied. See the License for the specific language governing
// permissions and limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "errors.hpp"

using namespace qje;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A pipeline small enough for unit tests.
ExperimentConfig quick_config() {
    ExperimentConfig c;
    c.sampling.shots = 100000;
    c.mle.bootstrap_b = 4;
    c.mle.n_support = 8;
    c.workstats.max_initial_n = 2;
    c.sideband.points = 120;
    c.truncation.n_trunc = 64;
    return c;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults describe the full grid") {
    const ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.thermal.nbar_list.size() * c.drive.tau_us.size() == 9);
    CHECK(c.trap.nu_hz == 20000.0);
    CHECK(c.drive.d == 0.9317);
    CHECK(c.heating.return_delta_nbar == 0.015);
    CHECK(c.truncation.n_trunc == 128);
}

TEST_CASE("emitted configuration reloads to the same values") {
    ExperimentConfig c;
    c.drive.tau_us = {3.5, 7.25};
    c.sampling.seed = 99;
    c.detection.eps_dark = 0.0125;
    c.heating.enabled = false;
    c.sideband.contrast = 0.9123456789;
    const std::string text = emit_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(emit_config(back) == text);
    CHECK(back.drive.tau_us == c.drive.tau_us);
    CHECK(back.sideband.contrast == c.sideband.contrast);
}

TEST_CASE("parser accepts comments, lists and exponent integers") {
    const auto c = parse_config(
        "# grid\n[drive]\nd = 1.1 ; stronger\ntau_us = 5, 10\n\n[sampling]\nshots = 2e5\n[heating]\nenabled = no\n");
    CHECK(c.drive.d == 1.1);
    CHECK(c.drive.tau_us == std::vector<double>{5.0, 10.0});
    CHECK(c.sampling.shots == 200000);
    CHECK_FALSE(c.heating.enabled);
}

TEST_CASE("unknown keys and bad values are reported with their line") {
    const auto msg = message_of([] { parse_config("[drive]\nd = 1\ntau_sec = 3\n", "grid.ini"); });
    CHECK(msg.find("grid.ini:3") != std::string::npos);
    CHECK(msg.find("tau_sec") != std::string::npos);
    CHECK(code_of([] { parse_config("[nope]\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_config("d = 1\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_config("[drive]\nd = fast\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_config("[trap]\nnu_hz = -5\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_config("[mle]\nn_support = 20\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { load_config("/nonexistent/qje.ini"); }) == ErrorCode::Io);
}

TEST_CASE("environment overrides") {
    std::map<std::string, std::string> env{{"QJE_SAMPLING__SEED", "42"}, {"QJE_DRIVE__TAU_US", "5,45"}};
    ExperimentConfig c;
    apply_env_overrides(c, [&](const std::string& k) -> std::optional<std::string> {
        const auto it = env.find(k);
        if (it == env.end()) return std::nullopt;
        return it->second;
    });
    CHECK(c.sampling.seed == 42);
    CHECK(c.drive.tau_us == std::vector<double>{5.0, 45.0});
    env = {{"QJE_TRAP__NU_HZ", "zero"}};
    CHECK(code_of([&] {
              apply_env_overrides(c, [&](const std::string& k) -> std::optional<std::string> {
                  const auto it = env.find(k);
                  if (it == env.end()) return std::nullopt;
                  return it->second;
              });
          }) == ErrorCode::Config);
}

}

TEST_SUITE("commands") {

TEST_CASE("table1 in exact mode") {
    cmd::RunOptions opt;
    opt.exact = true;
    const auto res = cmd::table1(ExperimentConfig{}, opt);
    const auto& cells = res.report["cells"];
    REQUIRE(cells.size() == 9);
    CHECK(res.report["schema_version"] == cmd::kSchemaVersion);
    const double df[] = {-2.63, -2.13, -1.73};
    for (const auto& c : cells) {
        const std::size_t t = c["cell"]["t_index"];
        CHECK(std::abs(c["delta_f_over_kt"].get<double>() - df[t]) < 0.01);
        CHECK(std::abs(c["jarzynski"].get<double>()) < 1e-6);
        CHECK(c["shots"].is_null());
        CHECK_FALSE(c.contains("sampled"));
    }
    CHECK(res.text.find("Jarzynski") != std::string::npos);
}

TEST_CASE("workdist summary flags the shape") {
    cmd::RunOptions opt;
    opt.cell = std::make_pair(std::size_t{2}, std::size_t{0});
    auto res = cmd::workdist(ExperimentConfig{}, opt);
    CHECK(res.report["summary"]["shape"] == "non-Gaussian");
    opt.cell = std::make_pair(std::size_t{2}, std::size_t{2});
    res = cmd::workdist(ExperimentConfig{}, opt);
    CHECK(res.report["summary"]["p_zero"].get<double>() > 0.95);
    ExperimentConfig flat;
    flat.drive.d = 0.0;
    res = cmd::workdist(flat, opt);
    CHECK(res.report["summary"]["shape"] == "delta");
    CHECK(res.text == "delta_n,probability,w_over_kt\n0,1,0\n");
}

TEST_CASE("workdist classical overlay") {
    ExperimentConfig c;
    c.classical.samples = 20000;
    cmd::RunOptions opt;
    opt.classical_overlay = true;
    const auto res = cmd::workdist(c, opt);
    CHECK(res.text.rfind("delta_n,probability,w_over_kt,classical_probability\n", 0) == 0);
    CHECK(std::abs(res.report["summary"]["classical"]["skewness"].get<double>()) < 0.1);
}

TEST_CASE("cells outside the grid are rejected") {
    cmd::RunOptions opt;
    opt.cell = std::make_pair(std::size_t{3}, std::size_t{0});
    CHECK(code_of([&] { cmd::workdist(ExperimentConfig{}, opt); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { cmd::run("plot", ExperimentConfig{}, {}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("propagate cross-checks the numeric route") {
    ExperimentConfig c;
    c.truncation.n_trunc = 48;
    const auto res = cmd::propagate(c, {});
    CHECK(res.report["numeric"]["max_abs_difference"].get<double>() < 1e-6);
    CHECK(res.report["reported_levels"] == 32);
}

TEST_CASE("tabulated ramp file drives the commands") {
    const auto dir = std::filesystem::temp_directory_path() / "qje_ramp_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "ramp.txt");
        f << "0 0\n0.5 0.5\n1 1\n";
    }
    ExperimentConfig lin;
    ExperimentConfig tab;
    tab.drive.ramp_table = (dir / "ramp.txt").string();
    cmd::RunOptions opt;
    opt.exact = true;
    const auto a = cmd::table1(lin, opt).report["cells"];
    const auto b = cmd::table1(tab, opt).report["cells"];
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b[i]["mean_work"].get<double>() == doctest::Approx(a[i]["mean_work"].get<double>()).epsilon(1e-9));
    }
}

TEST_CASE("pipeline is deterministic and writes its artifacts") {
    const auto base = std::filesystem::temp_directory_path() / "qje_pipeline_test";
    std::filesystem::remove_all(base);
    cmd::RunOptions opt;
    opt.seed = 5;
    opt.out_dir = (base / "a").string();
    const auto a = cmd::run("pipeline", quick_config(), opt);
    opt.out_dir = (base / "b").string();
    const auto b = cmd::run("pipeline", quick_config(), opt);
    CHECK(a.report.dump() == b.report.dump());
    for (const char* f : {"pipeline.json", "work_distribution.csv", "effective_config.ini", "traces/blue_n0.csv",
                          "traces/red_n2.csv"}) {
        CHECK(std::filesystem::exists(base / "a" / f));
        CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
    }
    CHECK(a.report["errors"].is_object());
    CHECK(a.report["shots"].get<std::uint64_t>() > 100000);
    const auto reloaded = load_config((base / "a" / "effective_config.ini").string());
    CHECK(emit_config(reloaded) == emit_config(quick_config()));
}

TEST_CASE("pipeline with ideal detection reproduces the exact estimators") {
    ExperimentConfig c = quick_config();
    c.detection = DetectionModel{};
    c.heating.enabled = false;
    c.sideband.shots_per_point = 4000;
    c.sideband.points = 250;
    c.sampling.shots = 2000000;
    c.mle.bootstrap_b = 20;
    c.workstats.max_initial_n = 5;
    c.mle.n_support = 12;
    cmd::RunOptions opt;
    opt.cell = std::make_pair(std::size_t{2}, std::size_t{1});
    const auto r = cmd::pipeline(c, opt).report;
    for (const char* key : {"jarzynski", "mean_work"}) {
        INFO(key);
        CHECK(std::abs(r[key].get<double>() - r["exact"][key].get<double>()) < 2 * r["errors"][key].get<double>() + 1e-3);
    }
}

TEST_CASE("project, thermal, sideband and classical commands") {
    ExperimentConfig c;
    cmd::RunOptions opt;
    opt.shots = 200000;
    auto res = cmd::project(c, opt);
    CHECK(res.report["condition_number"].get<double>() < 100.0);
    CHECK(res.report["transfer"]["min_fidelity"].get<double>() > 0.99);
    res = cmd::thermal(c, opt);
    CHECK(res.report["rows"].size() == 3);

    const auto dir = std::filesystem::temp_directory_path() / "qje_sideband_test";
    std::filesystem::remove_all(dir);
    opt = {};
    opt.out_dir = dir.string();
    opt.sideband_kind = "blue";
    cmd::sideband_synth(c, opt);
    opt.sideband_kind = "red";
    cmd::sideband_synth(c, opt);
    c.mle.bootstrap_b = 0;
    c.mle.n_support = 6;
    opt.blue_trace = (dir / "sideband_blue.csv").string();
    opt.red_trace = (dir / "sideband_red.csv").string();
    res = cmd::sideband_fit(c, opt);
    CHECK(res.report["fit"]["dist"][0].get<double>() == doctest::Approx(0.864).epsilon(0.05));

    c.classical.samples = 50000;
    c.classical.bootstrap_b = 50;
    res = cmd::classical(c, {});
    CHECK(std::abs(res.report["jarzynski"].get<double>()) < 3 * res.report["jarzynski_standard_error"].get<double>());
}

}

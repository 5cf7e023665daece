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

// Command-line front end. Everything goes through the C API in qje/qje.h.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qje/qje.h"

namespace {

struct ConfigDeleter {
    void operator()(qje_config* c) const { qje_config_free(c); }
};
using ConfigPtr = std::unique_ptr<qje_config, ConfigDeleter>;

int report_failure(qje_status status) {
    std::cerr << "error: " << qje_last_error() << '\n';
    return status == QJE_ERR_CONFIG || status == QJE_ERR_INVALID_ARGUMENT ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trapped-ion work statistics: Jarzynski, FDT and mean-work estimators"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::uint64_t shots = 0;
    bool exact = false;
    bool as_json = false;
    std::string out_dir;
    std::string cell;
    app.add_option("--config", config_path, "Config file (INI sections, key = value)")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides sampling.seed)");
    auto* shots_opt = app.add_option("--shots", shots, "Shot count (overrides sampling.shots)");
    app.add_flag("--exact", exact, "Exact mode only: skip finite-shot sampling and numeric cross-checks");
    app.add_option("--out", out_dir, "Directory for reports and CSV artifacts");
    app.add_option("--cell", cell, "Grid cell as T_INDEX,TAU_INDEX (0-based)");
    app.add_flag("--json", as_json, "Print the JSON report instead of the text summary");

    bool overlay = false;
    std::string kind = "blue";
    std::string blue_path;
    std::string red_path;
    app.add_subcommand("table1", "Temperature x duration grid of free-energy estimators");
    app.add_subcommand("workdist", "Work distribution of one cell")
        ->add_flag("--overlay", overlay, "Add the classical work histogram");
    app.add_subcommand("propagate", "Transition matrix of one cell");
    app.add_subcommand("thermal", "Thermal parameters of the configured temperatures");
    app.add_subcommand("project", "Projective phonon measurement and detection correction");
    auto* sideband = app.add_subcommand("sideband", "Sideband trace synthesis and fitting");
    sideband->require_subcommand(1);
    auto* synth = sideband->add_subcommand("synth", "Synthesize a sideband trace (CSV on stdout)");
    synth->add_option("--kind", kind, "blue or red")->check(CLI::IsMember({"blue", "red"}));
    auto* fit = sideband->add_subcommand("fit", "Maximum-likelihood phonon distribution from two traces");
    fit->add_option("--blue", blue_path, "Blue sideband trace CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--red", red_path, "Red sideband trace CSV")->required()->check(CLI::ExistingFile);
    app.add_subcommand("classical", "Classical oracle work samples and Jarzynski check");
    app.add_subcommand("pipeline", "Full simulated experiment for one cell");
    app.add_subcommand("config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help requests exit 0; every other parse failure is a usage error.
        return app.exit(e) == 0 ? 0 : 2;
    }

    qje_config* raw = nullptr;
    qje_status st = config_path.empty() ? qje_config_default(&raw) : qje_config_load(config_path.c_str(), &raw);
    if (st != QJE_OK) return report_failure(st);
    ConfigPtr config(raw);
    if ((st = qje_config_apply_env(config.get())) != QJE_OK) return report_failure(st);

    const std::string top = app.get_subcommands().front()->get_name();
    if (top == "config") {
        char* text = nullptr;
        if ((st = qje_config_emit(config.get(), &text)) != QJE_OK) return report_failure(st);
        std::cout << text;
        qje_string_free(text);
        return 0;
    }

    std::string command = top;
    nlohmann::json options = nlohmann::json::object();
    if (top == "sideband") command = synth->parsed() ? "sideband-synth" : "sideband-fit";
    if (*seed_opt) options["seed"] = seed;
    if (*shots_opt) options["shots"] = shots;
    if (exact) options["exact"] = true;
    if (!out_dir.empty()) options["out"] = out_dir;
    if (!cell.empty()) {
        const auto comma = cell.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument(cell);
            options["cell"] = {std::stoul(cell.substr(0, comma)), std::stoul(cell.substr(comma + 1))};
        } catch (const std::exception&) {
            std::cerr << "error: --cell expects T_INDEX,TAU_INDEX\n";
            return 2;
        }
    }
    if (overlay) options["overlay"] = true;
    if (command == "sideband-synth") options["kind"] = kind;
    if (command == "sideband-fit") {
        options["blue"] = blue_path;
        options["red"] = red_path;
    }

    char* raw_out = nullptr;
    st = qje_run_command(config.get(), command.c_str(), options.dump().c_str(), &raw_out);
    if (st != QJE_OK) return report_failure(st);
    const auto result = nlohmann::json::parse(raw_out);
    qje_string_free(raw_out);
    for (const auto& w : result["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    if (as_json) {
        std::cout << result["report"].dump(2) << '\n';
    } else {
        std::cout << result["text"].get<std::string>();
    }
    return 0;
}

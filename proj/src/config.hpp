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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "projection.hpp"
#include "sideband.hpp"

namespace qje {

struct ExperimentConfig {
    struct Trap {
        double nu_hz = 20000.0;
        double omega_x_hz = 3.1e6;  ///< informational only
    } trap;
    struct Drive {
        double d = 0.9317;
        std::vector<double> tau_us{5.0, 25.0, 45.0};
        /// Optional ramp shape file with columns (theta / Theta, lambda / d), both
        /// running over [0, 1]; empty means linear.
        std::string ramp_table;
    } drive;
    struct Thermal {
        std::vector<double> nbar_list{0.051, 0.094, 0.157};
    } thermal;
    struct Truncation {
        std::size_t n_trunc = 128;
    } truncation;
    struct Sampling {
        std::uint64_t shots = 1000000;
        std::uint64_t seed = 0;
        std::size_t bootstrap_b = 200;
    } sampling;
    DetectionModel detection{0.01, 0.01, 0.0, 0.157, 0.25, 7};
    struct Heating {
        bool enabled = true;
        double rate_quanta_per_ms = 0.157;
        double return_delta_nbar = 0.015;
    } heating;
    struct Mle {
        std::size_t n_support = 12;
        std::size_t starts = 8;
        std::size_t bootstrap_b = 100;
        bool adaptive_support = true;  ///< pipeline: grow the support per initial n
    } mle;
    SidebandSettings sideband{250, 1.0, 200, 20.0, 0.1, 0.001, 0.95};
    struct Workstats {
        std::size_t max_initial_n = 5;
        double min_initial_weight = 0.0;
        double skew_threshold = 0.5;
    } workstats;
    struct Transfer {
        double pulse_time_us = 200.0;
        double delta0_khz = 80.0;
        double omega_max_khz = 40.0;
        double prep_infidelity = 0.0;
    } transfer;
    struct Classical {
        std::size_t samples = 1000000;
        std::size_t bootstrap_b = 200;
    } classical;

    /// Throws ErrorCode::Config naming the offending key.
    void validate() const;
};

/// INI-style text: "[section]" headers, "key = value" lines, '#' or ';'
/// comments, comma-separated lists. Unknown sections and keys are errors.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Prefix of environment overrides: QJE_<SECTION>__<KEY>, e.g.
/// QJE_SAMPLING__SEED=7.
inline constexpr const char* kEnvPrefix = "QJE_";

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;
void apply_env_overrides(ExperimentConfig& config, const EnvLookup& lookup);
void apply_env_overrides(ExperimentConfig& config);

/// Sets one "section.key" from its text form.
void set_config_value(ExperimentConfig& config, const std::string& section, const std::string& key,
                      const std::string& value);

/// Every key with its effective value; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

}  // namespace qje

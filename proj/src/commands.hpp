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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "dynamics.hpp"

namespace qje::cmd {

inline constexpr int kSchemaVersion = 1;

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> shots;
    bool exact = false;              ///< skip finite-shot and numeric cross-checks
    std::string out_dir;             ///< empty: no files written
    std::optional<std::pair<std::size_t, std::size_t>> cell;  ///< (temperature, tau) indices
    bool classical_overlay = false;  ///< workdist only
    std::string sideband_kind = "blue";
    std::string blue_trace;          ///< sideband fit inputs
    std::string red_trace;
};

struct CommandResult {
    nlohmann::json report;
    std::string text;
    std::vector<std::string> warnings;
};

/// One grid cell with SI quantities converted to dimensionless ones.
struct Cell {
    std::size_t t_index = 0;
    std::size_t tau_index = 0;
    double nbar = 0.0;
    double tau_us = 0.0;
    ThermalParams thermal;
    RampProtocol protocol = RampProtocol::linear(0.0, 1.0);
};

Cell make_cell(const ExperimentConfig& config, std::size_t t_index, std::size_t tau_index);

CommandResult table1(const ExperimentConfig& config, const RunOptions& options);
CommandResult workdist(const ExperimentConfig& config, const RunOptions& options);
CommandResult propagate(const ExperimentConfig& config, const RunOptions& options);
CommandResult thermal(const ExperimentConfig& config, const RunOptions& options);
CommandResult project(const ExperimentConfig& config, const RunOptions& options);
CommandResult sideband_synth(const ExperimentConfig& config, const RunOptions& options);
CommandResult sideband_fit(const ExperimentConfig& config, const RunOptions& options);
CommandResult classical(const ExperimentConfig& config, const RunOptions& options);
CommandResult pipeline(const ExperimentConfig& config, const RunOptions& options);

/// Dispatch by name ("table1", "sideband-synth", ...). Throws InvalidArgument
/// for unknown names.
CommandResult run(const std::string& name, const ExperimentConfig& config, const RunOptions& options);

}  // namespace qje::cmd

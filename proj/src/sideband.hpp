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

/// @file
/// Blue/red sideband population traces
///   P_up(t) = 1/2 sum_n P_n [1 - exp(-gamma t) A cos(2 Omega_n t)]
/// with first-order Lamb-Dicke couplings Omega_{n,n+1} = Omega0 eta sqrt(n+1)
/// (blue) and Omega_{n,n-1} = Omega0 eta sqrt(n) (red).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fockspace.hpp"

namespace qje {

enum class SidebandKind { Blue, Red };

const char* to_string(SidebandKind kind) noexcept;
SidebandKind sideband_kind_from_string(const std::string& name);

/// Acquisition and model parameters of one trace. Defaults follow the
/// experiment: 250 points, 1 us apart, 200 shots per point.
struct SidebandSettings {
    std::size_t points = 250;
    double spacing_us = 1.0;
    std::uint32_t shots_per_point = 200;
    double rabi_base_khz = 20.0;  ///< Omega0 * eta / 2pi
    double eta = 0.1;
    double gamma_per_us = 0.0;
    double contrast = 1.0;
};

struct SidebandTrace {
    SidebandKind kind = SidebandKind::Blue;
    std::vector<double> times_us;
    std::vector<double> p_up;               ///< observed bright fraction
    std::vector<std::uint32_t> shots;       ///< per point
    double rabi_base_khz = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
    double contrast = 1.0;

    std::size_t size() const noexcept { return times_us.size(); }
};

/// Angular sideband Rabi frequency in rad/us for level n.
double sideband_rabi(SidebandKind kind, std::size_t n, double rabi_base_khz);

/// Noise-free model value at time t (us).
double sideband_probability(const PhononDistribution& dist, SidebandKind kind, double rabi_base_khz,
                            double gamma_per_us, double contrast, double t_us);

/// Binomially sampled trace at times spacing, 2*spacing, ..., points*spacing.
SidebandTrace synthesize_sideband(const PhononDistribution& dist, SidebandKind kind,
                                  const SidebandSettings& settings, std::uint64_t seed);

/// CSV with header "time_us,p_up,shots".
void write_trace_csv(const SidebandTrace& trace, std::ostream& out);
/// Reads a trace written by write_trace_csv; model fields are taken from
/// `settings`.
SidebandTrace read_trace_csv(std::istream& in, SidebandKind kind, const SidebandSettings& settings);

}  // namespace qje

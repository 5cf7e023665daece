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
/// Two-point-measurement work statistics. Work is counted in integer quantum
/// jumps: W_diss = hbar*nu * (m - n) for a transition n -> m, so in units of
/// k_B T the dissipated work of one outcome is w = beta_hnu * dn.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "fockspace.hpp"

namespace qje {

struct WorkDistribution {
    std::map<int, double> probs;  ///< dn -> probability
    double beta_hnu = 0.0;
    double delta_f_over_hnu = 0.0;
    double leakage = 0.0;

    double total() const noexcept;
    double at(int dn) const noexcept;
};

struct EstimatorErrors {
    double jarzynski = 0.0;
    double fdt = 0.0;
    double mean_work = 0.0;
};

/// The three free-energy estimators in units of k_B T, relative to the true
/// free-energy change (so all three vanish for a quasi-static process).
struct EstimatorReport {
    double jarzynski = 0.0;  ///< -ln <exp(-w)>
    double fdt = 0.0;        ///< <w> - var(w)/2
    double mean_work = 0.0;  ///< <w>
    std::optional<EstimatorErrors> errors;
    std::optional<std::uint64_t> shots;  ///< empty in exact mode
};

struct WorkOptions {
    /// Drop initial levels above this index (the experiment's "n <= 5"
    /// bookkeeping). Empty keeps the full truncated support.
    std::optional<std::size_t> max_initial_n;
};

WorkDistribution work_distribution(const PhononDistribution& initial,
                                   const TransitionMatrix& transitions,
                                   const ThermalParams& thermal, const WorkOptions& options = {});

/// Exact estimators; sums are normalized by the distribution's total mass and
/// the exponential average is evaluated with log-sum-exp, so large beta*|dn|
/// never overflows.
EstimatorReport estimators_exact(const WorkDistribution& dist);

struct SamplingOptions {
    std::size_t bootstrap_resamples = 1000;
    std::size_t chunk_shots = 1u << 16;
};

/// Monte Carlo emulation of the two-point measurement: n ~ initial, then
/// m ~ column n. Bootstrap (multinomial resampling of the shot record)
/// attaches standard deviations to the estimators.
EstimatorReport tpm_sample(const PhononDistribution& initial, const TransitionMatrix& transitions,
                           const ThermalParams& thermal, std::uint64_t shots, std::uint64_t seed,
                           const SamplingOptions& options = {});

/// Estimators of an empirical histogram dn -> count.
EstimatorReport estimators_from_counts(const std::map<int, std::uint64_t>& counts, double beta_hnu);

struct ShapeMetrics {
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

/// Standardized third and fourth central moments of w. Throws ZeroVariance
/// for delta distributions.
ShapeMetrics gaussianity_metrics(const WorkDistribution& dist);

/// Same moments of a sample.
ShapeMetrics sample_shape(std::span<const double> samples);

/// CSV with header "delta_n,probability".
std::string work_distribution_csv(const WorkDistribution& dist);

}  // namespace qje

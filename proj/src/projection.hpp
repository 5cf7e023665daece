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
/// Projective phonon-number measurement by repeated subtraction and
/// detection: a shot whose first bright detection happens at iteration k is
/// assigned |k-1>. Detection and subtraction errors, and heating between
/// iterations, are modeled as a Markov chain; the same chain gives the
/// analytic confusion matrix used to undo them.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fockspace.hpp"

namespace qje {

struct DetectionModel {
    double eps_dark = 0.0;           ///< dark qubit read as bright
    double eps_bright = 0.0;         ///< bright qubit read as dark
    double subtraction_error = 0.0;  ///< subtraction leaves |n> unchanged
    double heating_rate_quanta_per_ms = 0.0;
    double iteration_time_ms = 0.25;
    int max_iterations = 7;

    void validate() const;
    bool ideal() const noexcept {
        return eps_dark == 0.0 && eps_bright == 0.0 && subtraction_error == 0.0 &&
               heating_rate_quanta_per_ms == 0.0;
    }
};

struct ProjectionSample {
    PhononDistribution empirical;         ///< reported n = 0..max_iterations-1, per shot
    std::uint64_t overflow_count = 0;     ///< shots with no bright detection
    std::uint64_t shots = 0;
    std::vector<std::uint64_t> counts;    ///< raw counts per reported n
};

ProjectionSample project_sample(const PhononDistribution& initial, const DetectionModel& model,
                                std::uint64_t shots, std::uint64_t seed);

/// C(j, n) = probability that true level n is reported as j, for
/// j, n < max_iterations. The missing column mass is the overflow probability.
Eigen::MatrixXd confusion_matrix(const DetectionModel& model);

struct CorrectionResult {
    PhononDistribution corrected;
    double condition_number = 0.0;
    double clipped_mass = 0.0;
};

inline constexpr double kMaxConditionNumber = 1e6;

/// Inverts the confusion matrix, clips negatives to zero and renormalizes.
/// Throws IllConditioned above condition number 1e6.
CorrectionResult correct_detection(const PhononDistribution& empirical, const DetectionModel& model);

/// Adiabatic blue-sideband passage |up, n> -> |down, n-1> with
/// Omega(t) = omega_max * sqrt(n) * sin(pi t / T) and
/// delta(t) = delta0 * cos(pi t / T); returns the transfer probability.
double adiabatic_transfer_fidelity(int n, double pulse_time_us, double delta0_khz,
                                   double omega_max_khz);

struct TransferCalibration {
    double pulse_time_us = 0.0;
    double delta0_khz = 0.0;
    double omega_max_khz = 0.0;
    double min_fidelity = 0.0;  ///< over n = 1..n_max
};

/// Grid scan for one (T, delta0, Omega_max) triple maximizing the worst-case
/// fidelity over n = 1..n_max.
TransferCalibration calibrate_transfer(int n_max = 6);

/// Fock-state preparation with an optional per-level infidelity; the missing
/// weight is split between the neighbouring levels.
PhononDistribution prepare_fock(std::size_t n, std::size_t n_trunc, double infidelity = 0.0);

}  // namespace qje

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
#include <iosfwd>
#include <span>
#include <vector>

#include "dynamics.hpp"
#include "fockspace.hpp"

namespace qje {

struct PhasePoint {
    double x = 0.0;
    double p = 0.0;
};

/// Gibbs samples of the undriven oscillator, h = (x^2 + p^2) / 2.
struct ClassicalEnsemble {
    std::vector<PhasePoint> samples;
    double beta_hnu = 0.0;

    double mean_energy() const;
};

ClassicalEnsemble sample_gibbs(double beta_hnu, std::size_t samples, std::uint64_t seed);

enum class ClassicalMethod { ClosedForm, Leapfrog };

/// Dissipated work W + d^2 (units of h nu) per Gibbs sample, driven by
/// h = (x^2 + p^2) / 2 + sqrt(2) lambda(theta) x.
std::vector<double> classical_work_samples(const RampProtocol& protocol, const ThermalParams& thermal,
                                           std::size_t samples, std::uint64_t seed,
                                           ClassicalMethod method = ClassicalMethod::ClosedForm);

/// Work values for a given ensemble; Leapfrog halves the step until the
/// largest per-sample change drops below 1e-9.
std::vector<double> classical_work(const RampProtocol& protocol, const ClassicalEnsemble& ensemble,
                                   ClassicalMethod method);

struct ClassicalJarzynski {
    double value = 0.0;
    double standard_error = 0.0;  ///< bootstrap; 0 when resamples == 0
};

struct ClassicalJarzynskiOptions {
    std::size_t bootstrap_resamples = 200;
    std::uint64_t seed = 0;
};

/// -ln of the sample mean of exp(-beta W).
double classical_jarzynski(std::span<const double> works, const ThermalParams& thermal);
ClassicalJarzynski classical_jarzynski(std::span<const double> works, const ThermalParams& thermal,
                                       const ClassicalJarzynskiOptions& options);

void write_work_samples_csv(std::span<const double> works, std::ostream& out);

}  // namespace qje

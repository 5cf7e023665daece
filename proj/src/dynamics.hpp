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
/// Linearly forced oscillator h(theta) = a^dag a + lambda(theta) (a + a^dag)
/// in dimensionless units: energies in hbar*nu, time theta = nu*t.
///
/// The exact propagator between the initial and final equilibrium bases is a
/// displacement by alpha_res = int_0^Theta lambda'(theta) e^{i theta} dtheta,
/// so transition probabilities are |<m|D(alpha_res)|n>|^2. A step-wise
/// numerical propagator of the truncated Hamiltonian is kept alongside as an
/// independent check of that closed form.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "fockspace.hpp"

namespace qje {

enum class RampShape { Linear, Tabulated };

/// Drive schedule lambda(theta) on [0, Theta] with lambda(0) = 0 and
/// lambda(Theta) = peak. Tabulated shapes interpolate linearly between knots.
class RampProtocol {
public:
    static RampProtocol linear(double peak, double theta_total);
    /// Knots must start at theta = 0 with lambda = 0 and be strictly increasing
    /// in theta.
    static RampProtocol tabulated(std::vector<double> theta, std::vector<double> lambda);
    /// Two-column whitespace-separated text (theta lambda); '#' starts a comment.
    static RampProtocol read_table(std::istream& in);

    RampShape shape() const noexcept { return shape_; }
    double peak() const noexcept { return peak_; }
    double theta_total() const noexcept { return theta_total_; }
    double lambda(double theta) const;
    double slope(double theta) const;
    /// Knot positions (two for Linear).
    const std::vector<double>& knots() const noexcept { return theta_; }

private:
    RampProtocol() = default;

    RampShape shape_ = RampShape::Linear;
    double peak_ = 0.0;
    double theta_total_ = 0.0;
    std::vector<double> theta_;
    std::vector<double> lambda_;
};

/// Dimensionless duration Theta = 2 pi nu tau.
double ramp_theta(double nu_hz, double tau_us);

struct TransitionMatrix {
    Eigen::MatrixXd probs;          ///< (m, n) -> P_{m <- n}
    double alpha_res_abs = 0.0;
    double delta_f_over_hnu = 0.0;  ///< -peak^2
    std::vector<double> leakage;    ///< per column n

    std::size_t n_trunc() const noexcept { return static_cast<std::size_t>(probs.rows()); }
};

struct HeatingModel {
    double rate_quanta_per_ms = 0.0;
    double duration_ms = 0.0;

    double delta_nbar() const noexcept { return rate_quanta_per_ms * duration_ms; }
};

/// The complex drive integral int_0^Theta lambda'(theta) e^{i theta} dtheta,
/// returned as (cos part, sin part).
struct DriveIntegral {
    double cos_part = 0.0;
    double sin_part = 0.0;
};
DriveIntegral drive_integral(const RampProtocol& protocol);

/// |alpha_res|; 2 d |sin(Theta/2)| / Theta for the Linear shape.
double residual_amplitude(const RampProtocol& protocol);

TransitionMatrix transition_matrix_analytic(const RampProtocol& protocol, std::size_t n_trunc);

/// Piecewise-constant propagation with midpoint sampling. `steps` is the
/// coarsest step count; the step is halved until Richardson-extrapolated
/// probabilities of two successive levels agree to 1e-8, at most
/// kMaxStepRefinements times.
TransitionMatrix transition_matrix_numeric(const RampProtocol& protocol, std::size_t n_trunc,
                                           std::size_t steps);

inline constexpr int kMaxStepRefinements = 6;
inline constexpr double kStepConvergenceTolerance = 1e-8;
inline constexpr double kEdgePopulationTolerance = 1e-8;

/// Evolution in a high-temperature reservoir. Mean phonon number grows by
/// rate * duration; thermal inputs stay thermal.
PhononDistribution apply_heating(const PhononDistribution& dist, const HeatingModel& model);

/// Heating applied to every final-state column of a transition matrix.
TransitionMatrix apply_heating(const TransitionMatrix& transitions, const HeatingModel& model);

}  // namespace qje

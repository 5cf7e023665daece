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
/// Truncated Fock-space algebra for a single motional mode: phonon-number
/// distributions, thermal states and temperature conversion, and the
/// population matrix |<m|D(alpha)|n>|^2 of the displacement operator.
///
/// Only populations are tracked. Since |<m|D(alpha)|n>|^2 depends on |alpha|
/// alone, displacements are described by their magnitude.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qje {

/// Probabilities over Fock levels n = 0..n_trunc-1. `leakage` is the mass the
/// producer knows to lie outside the stored support.
struct PhononDistribution {
    std::vector<double> probs;
    double leakage = 0.0;

    std::size_t n_trunc() const noexcept { return probs.size(); }
    double total() const noexcept;
    double mean() const noexcept;
    double at(std::size_t n) const noexcept { return n < probs.size() ? probs[n] : 0.0; }

    /// Validates entries in [0, 1] and |sum + leakage - 1| <= tol.
    static PhononDistribution from_probs(std::vector<double> probs, double leakage = 0.0,
                                         double tol = 1e-9);
    /// The Fock state |n> embedded in n_trunc levels.
    static PhononDistribution fock(std::size_t n, std::size_t n_trunc);
};

struct ThermalParams {
    double nbar = 0.0;      ///< mean phonon number
    double beta_hnu = 0.0;  ///< dimensionless inverse temperature
    double t_eff_nK = 0.0;  ///< effective temperature
    double nu_hz = 0.0;     ///< effective trap frequency nu/2pi
};

struct DisplacementElements {
    double alpha_abs = 0.0;
    Eigen::MatrixXd matrix;        ///< (m, n) -> |<m|D(alpha)|n>|^2
    std::vector<double> leakage;   ///< per column n

    std::size_t n_trunc() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
};

namespace physical {
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K
inline constexpr double pi = 3.14159265358979323846;
}  // namespace physical

/// Tail mass above which a thermal distribution refuses to truncate.
inline constexpr double kThermalTailTolerance = 1e-9;
/// Column leakage limit for displacement matrices (columns n <= n_trunc/2).
inline constexpr double kDisplacementLeakageTolerance = 1e-6;

/// P_n = nbar^n / (nbar+1)^(n+1), renormalized over the truncated support.
/// Throws TruncationInsufficient when the dropped tail reaches 1e-9.
PhononDistribution thermal_distribution(double nbar, std::size_t n_trunc);

/// beta*hbar*nu = ln(1 + 1/nbar) and T_eff = hbar*2*pi*nu_hz / (k_B * beta*hbar*nu).
ThermalParams effective_temperature(double nbar, double nu_hz);

/// Inverse of effective_temperature for a given dimensionless beta.
ThermalParams thermal_from_beta(double beta_hnu, double nu_hz);

/// Associated-Laguerre closed form, evaluated in log space.
DisplacementElements displacement_elements(double alpha_abs, std::size_t n_trunc);

/// Dense exponential of the truncated generator alpha(a^dag - a). Used only to
/// cross-check displacement_elements. Leakage is reported as the population
/// each column leaves in the top tenth of the levels; it is not an error.
DisplacementElements displacement_elements_bruteforce(double alpha_abs, std::size_t n_trunc);

/// Real matrix of D(alpha) = exp(alpha a^dag - alpha a) for real alpha,
/// exponentiated in `n_trunc + pad` levels and cut back to n_trunc.
Eigen::MatrixXd displacement_operator(double alpha, std::size_t n_trunc, std::size_t pad);

}  // namespace qje

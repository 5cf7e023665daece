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

#include "fockspace.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "errors.hpp"

namespace qje {

double PhononDistribution::total() const noexcept {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
}

double PhononDistribution::mean() const noexcept {
    double s = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) s += static_cast<double>(n) * probs[n];
    return s;
}

PhononDistribution PhononDistribution::from_probs(std::vector<double> probs, double leakage,
                                                  double tol) {
    if (probs.empty()) raise(ErrorCode::InvalidArgument, "empty phonon distribution");
    double sum = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        const double p = probs[n];
        if (!std::isfinite(p) || p < 0.0 || p > 1.0 + tol) {
            raise(ErrorCode::InvalidArgument,
                  "probability at n=" + std::to_string(n) + " outside [0,1]: " + std::to_string(p));
        }
        sum += p;
    }
    if (!(leakage >= 0.0) || std::abs(sum + leakage - 1.0) > tol) {
        raise(ErrorCode::InvalidArgument,
              "phonon distribution not normalized: sum=" + std::to_string(sum) +
                  " leakage=" + std::to_string(leakage));
    }
    return PhononDistribution{std::move(probs), leakage};
}

PhononDistribution PhononDistribution::fock(std::size_t n, std::size_t n_trunc) {
    if (n >= n_trunc) raise(ErrorCode::InvalidArgument, "Fock level outside truncation");
    PhononDistribution d;
    d.probs.assign(n_trunc, 0.0);
    d.probs[n] = 1.0;
    return d;
}

PhononDistribution thermal_distribution(double nbar, std::size_t n_trunc) {
    if (n_trunc < 1) raise(ErrorCode::InvalidArgument, "n_trunc must be >= 1");
    if (!std::isfinite(nbar) || nbar < 0.0) {
        raise(ErrorCode::Domain, "thermal nbar must be finite and >= 0, got " + std::to_string(nbar));
    }
    PhononDistribution d;
    d.probs.assign(n_trunc, 0.0);
    if (nbar == 0.0) {
        d.probs[0] = 1.0;
        return d;
    }
    const double ratio = nbar / (nbar + 1.0);
    const double tail = std::pow(ratio, static_cast<double>(n_trunc));
    if (tail >= kThermalTailTolerance) {
        raise(ErrorCode::TruncationInsufficient,
              "thermal tail mass " + std::to_string(tail) + " at nbar=" + std::to_string(nbar) +
                  " needs more than " + std::to_string(n_trunc) + " levels");
    }
    // Renormalizing by (1 - tail) keeps the ratio P_{n+1}/P_n exact.
    double p = 1.0 / ((nbar + 1.0) * (1.0 - tail));
    for (std::size_t n = 0; n < n_trunc; ++n) {
        d.probs[n] = p;
        p *= ratio;
    }
    return d;
}

ThermalParams thermal_from_beta(double beta_hnu, double nu_hz) {
    if (!(beta_hnu > 0.0) || !std::isfinite(beta_hnu)) {
        raise(ErrorCode::Domain, "beta*hbar*nu must be positive and finite");
    }
    if (!(nu_hz > 0.0)) raise(ErrorCode::Domain, "trap frequency must be positive");
    ThermalParams t;
    t.beta_hnu = beta_hnu;
    t.nbar = 1.0 / std::expm1(beta_hnu);
    t.nu_hz = nu_hz;
    t.t_eff_nK = physical::hbar * 2.0 * physical::pi * nu_hz /
                 (physical::k_boltzmann * beta_hnu) * 1e9;
    return t;
}

ThermalParams effective_temperature(double nbar, double nu_hz) {
    if (!(nbar > 0.0) || !std::isfinite(nbar)) {
        raise(ErrorCode::Domain, "effective temperature needs nbar > 0, got " + std::to_string(nbar));
    }
    if (!(nu_hz > 0.0)) raise(ErrorCode::Domain, "trap frequency must be positive");
    ThermalParams t;
    t.nbar = nbar;
    t.beta_hnu = std::log1p(1.0 / nbar);
    t.nu_hz = nu_hz;
    t.t_eff_nK = physical::hbar * 2.0 * physical::pi * nu_hz /
                 (physical::k_boltzmann * t.beta_hnu) * 1e9;
    return t;
}

namespace {

void check_column_leakage(const DisplacementElements& el) {
    const std::size_t last_checked = el.n_trunc() / 2;
    for (std::size_t n = 0; n <= last_checked && n < el.leakage.size(); ++n) {
        if (el.leakage[n] > kDisplacementLeakageTolerance) {
            raise(ErrorCode::TruncationInsufficient,
                  "displacement |alpha|=" + std::to_string(el.alpha_abs) + " leaks " +
                      std::to_string(el.leakage[n]) + " from column " + std::to_string(n) +
                      " at n_trunc=" + std::to_string(el.n_trunc()));
        }
    }
}

}  // namespace

DisplacementElements displacement_elements(double alpha_abs, std::size_t n_trunc) {
    if (n_trunc < 1) raise(ErrorCode::InvalidArgument, "n_trunc must be >= 1");
    if (!(alpha_abs >= 0.0) || !std::isfinite(alpha_abs)) {
        raise(ErrorCode::Domain, "|alpha| must be finite and >= 0");
    }
    const auto dim = static_cast<Eigen::Index>(n_trunc);
    DisplacementElements el;
    el.alpha_abs = alpha_abs;
    el.matrix = Eigen::MatrixXd::Zero(dim, dim);

    if (alpha_abs == 0.0) {
        el.matrix.setIdentity();
        el.leakage.assign(n_trunc, 0.0);
        return el;
    }

    const double x = alpha_abs * alpha_abs;
    const double log_x = std::log(x);
    std::vector<double> lfact(n_trunc + 1);
    for (std::size_t i = 0; i <= n_trunc; ++i) lfact[i] = std::lgamma(static_cast<double>(i) + 1.0);

    // For each order k = m - n, walk L_j^(k)(x) upward in degree j = n.
    for (std::size_t k = 0; k < n_trunc; ++k) {
        const double kd = static_cast<double>(k);
        double l_prev = 0.0;
        double l_cur = 1.0;  // L_0^(k)
        for (std::size_t n = 0; n + k < n_trunc; ++n) {
            if (n == 1) {
                l_prev = 1.0;
                l_cur = 1.0 + kd - x;
            } else if (n > 1) {
                const double j = static_cast<double>(n - 1);
                const double next = ((2.0 * j + 1.0 + kd - x) * l_cur - (j + kd) * l_prev) / (j + 1.0);
                l_prev = l_cur;
                l_cur = next;
            }
            const std::size_t m = n + k;
            double p = 0.0;
            if (l_cur != 0.0) {
                const double log_p = lfact[n] - lfact[m] + kd * log_x - x + 2.0 * std::log(std::abs(l_cur));
                p = std::exp(log_p);
            }
            el.matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = p;
            el.matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = p;
        }
    }

    el.leakage.resize(n_trunc);
    for (Eigen::Index n = 0; n < dim; ++n) {
        el.leakage[static_cast<std::size_t>(n)] = std::max(0.0, 1.0 - el.matrix.col(n).sum());
    }
    check_column_leakage(el);
    return el;
}

Eigen::MatrixXd displacement_operator(double alpha, std::size_t n_trunc, std::size_t pad) {
    if (n_trunc < 1) raise(ErrorCode::InvalidArgument, "n_trunc must be >= 1");
    const auto dim = static_cast<Eigen::Index>(n_trunc + pad);
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index k = 1; k < dim; ++k) {
        const double s = std::sqrt(static_cast<double>(k));
        gen(k, k - 1) = alpha * s;   // alpha a^dag
        gen(k - 1, k) = -alpha * s;  // -alpha a
    }
    Eigen::MatrixXd full = gen.exp();
    const auto n = static_cast<Eigen::Index>(n_trunc);
    return full.topLeftCorner(n, n);
}

DisplacementElements displacement_elements_bruteforce(double alpha_abs, std::size_t n_trunc) {
    if (n_trunc < 1) raise(ErrorCode::InvalidArgument, "n_trunc must be >= 1");
    if (!(alpha_abs >= 0.0) || !std::isfinite(alpha_abs)) {
        raise(ErrorCode::Domain, "|alpha| must be finite and >= 0");
    }
    DisplacementElements el;
    el.alpha_abs = alpha_abs;
    el.matrix = displacement_operator(alpha_abs, n_trunc, 0).array().square().matrix();

    const auto dim = static_cast<Eigen::Index>(n_trunc);
    const auto edge = static_cast<Eigen::Index>(std::ceil(0.9 * static_cast<double>(n_trunc)));
    el.leakage.resize(n_trunc);
    for (Eigen::Index n = 0; n < dim; ++n) {
        el.leakage[static_cast<std::size_t>(n)] =
            edge < dim ? el.matrix.col(n).tail(dim - edge).sum() : 0.0;
    }
    return el;
}

}  // namespace qje

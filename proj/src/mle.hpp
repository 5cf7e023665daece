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
/// Maximum-likelihood reconstruction of a phonon distribution from a pair of
/// blue/red sideband traces. The binomial log-likelihood is maximized over
/// the probability simplex (softmax parameterization) together with the
/// per-trace decay gamma and contrast A, from several deterministic starts.

#include <cstdint>
#include <vector>

#include "fockspace.hpp"
#include "sideband.hpp"

namespace qje {

struct MLEOptions {
    std::size_t starts = 8;               ///< at least 8 are always used
    std::size_t bootstrap_resamples = 0;  ///< trace resamples for the CIs
    std::uint64_t seed = 0;
    double initial_gamma_per_us = 0.002;
    double initial_contrast = 0.9;
    /// When false, excess mass at the top level is reported in
    /// MLEFitResult::edge_mass instead of raising SupportTooSmall.
    bool edge_mass_is_error = true;
};

struct MLEFitResult {
    PhononDistribution dist;
    double gamma_blue = 0.0;
    double gamma_red = 0.0;
    double contrast_blue = 1.0;
    double contrast_red = 1.0;
    double log_likelihood = 0.0;
    /// Best two starts agree within 1e-6 in log-likelihood and 1e-4 in every P_n.
    bool converged = false;
    double start_loglik_gap = 0.0;
    double start_prob_gap = 0.0;
    std::size_t starts_used = 0;
    double edge_mass = 0.0;  ///< fitted P at n_support - 1

    /// Bootstrap 95% percentile interval and standard deviation per P_n
    /// (empty without resamples).
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::vector<double> std_error;
    std::vector<std::vector<double>> bootstrap_probs;
};

inline constexpr std::size_t kMaxMleSupport = 12;
inline constexpr double kSupportEdgeMass = 0.01;
inline constexpr double kStartLoglikAgreement = 1e-6;
inline constexpr double kStartProbAgreement = 1e-4;

/// Throws SupportTooSmall when the fitted mass at n_support - 1 exceeds 0.01.
/// Non-agreement of the starts is reported through `converged`, not thrown.
MLEFitResult mle_fit(const SidebandTrace& blue, const SidebandTrace& red, std::size_t n_support,
                     const MLEOptions& options = {});

/// Binomial log-likelihood of the trace pair under a given model.
/// Forward selection of the support: starting at `min_support`, one more
/// level is added while it raises the log-likelihood by more than
/// `loglik_gain` or the top level holds more than kSupportEdgeMass. The
/// final support is refit with the bootstrap settings of `options`.
MLEFitResult mle_fit_adaptive(const SidebandTrace& blue, const SidebandTrace& red, std::size_t min_support,
                              std::size_t max_support, const MLEOptions& options = {},
                              double loglik_gain = 2.0);

double trace_log_likelihood(const SidebandTrace& blue, const SidebandTrace& red,
                            const PhononDistribution& dist, double gamma_blue, double gamma_red,
                            double contrast_blue, double contrast_red);

}  // namespace qje

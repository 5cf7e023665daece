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

#include "workstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"
#include "random.hpp"

namespace qje {

double WorkDistribution::total() const noexcept {
    double s = 0.0;
    for (const auto& [dn, p] : probs) s += p;
    return s;
}

double WorkDistribution::at(int dn) const noexcept {
    auto it = probs.find(dn);
    return it == probs.end() ? 0.0 : it->second;
}

WorkDistribution work_distribution(const PhononDistribution& initial,
                                   const TransitionMatrix& transitions,
                                   const ThermalParams& thermal, const WorkOptions& options) {
    if (!(thermal.beta_hnu > 0.0)) raise(ErrorCode::Domain, "work distribution needs beta*hbar*nu > 0");
    const std::size_t cols = static_cast<std::size_t>(transitions.probs.cols());
    if (initial.n_trunc() > cols) {
        double beyond = 0.0;
        for (std::size_t n = cols; n < initial.n_trunc(); ++n) beyond += initial.probs[n];
        if (beyond > 0.0) {
            raise(ErrorCode::InvalidArgument,
                  "initial distribution has mass above the transition matrix dimension");
        }
    }
    std::size_t last = std::min(initial.n_trunc(), cols);
    WorkDistribution out;
    out.beta_hnu = thermal.beta_hnu;
    out.delta_f_over_hnu = transitions.delta_f_over_hnu;
    out.leakage = initial.leakage;
    if (options.max_initial_n) {
        const std::size_t keep = std::min(last, *options.max_initial_n + 1);
        for (std::size_t n = keep; n < last; ++n) out.leakage += initial.probs[n];
        last = keep;
    }
    const auto rows = transitions.probs.rows();
    for (std::size_t n = 0; n < last; ++n) {
        const double weight = initial.probs[n];
        if (weight == 0.0) continue;
        const auto col = static_cast<Eigen::Index>(n);
        for (Eigen::Index m = 0; m < rows; ++m) {
            const double p = weight * transitions.probs(m, col);
            if (p == 0.0) continue;
            out.probs[static_cast<int>(m) - static_cast<int>(n)] += p;
        }
        if (n < transitions.leakage.size()) out.leakage += weight * transitions.leakage[n];
    }
    return out;
}

namespace {

EstimatorReport estimators_from_weights(std::span<const int> dn, std::span<const double> weight,
                                        double beta) {
    double total = 0.0;
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dn.size(); ++i) {
        if (weight[i] <= 0.0) continue;
        total += weight[i];
        max_exponent = std::max(max_exponent, std::log(weight[i]) - beta * dn[i]);
    }
    if (!(total > 0.0)) raise(ErrorCode::InvalidArgument, "work distribution carries no probability");

    double scaled = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < dn.size(); ++i) {
        if (weight[i] <= 0.0) continue;
        scaled += std::exp(std::log(weight[i]) - beta * dn[i] - max_exponent);
        mean += weight[i] * beta * dn[i];
    }
    mean /= total;
    double var = 0.0;
    for (std::size_t i = 0; i < dn.size(); ++i) {
        if (weight[i] <= 0.0) continue;
        const double d = beta * dn[i] - mean;
        var += weight[i] * d * d;
    }
    var /= total;

    EstimatorReport r;
    r.jarzynski = -(max_exponent + std::log(scaled) - std::log(total));
    r.mean_work = mean;
    r.fdt = mean - 0.5 * var;
    return r;
}

}  // namespace

EstimatorReport estimators_exact(const WorkDistribution& dist) {
    std::vector<int> dn;
    std::vector<double> w;
    dn.reserve(dist.probs.size());
    w.reserve(dist.probs.size());
    for (const auto& [k, p] : dist.probs) {
        dn.push_back(k);
        w.push_back(p);
    }
    return estimators_from_weights(dn, w, dist.beta_hnu);
}

EstimatorReport estimators_from_counts(const std::map<int, std::uint64_t>& counts, double beta_hnu) {
    std::vector<int> dn;
    std::vector<double> w;
    std::uint64_t shots = 0;
    for (const auto& [k, c] : counts) {
        dn.push_back(k);
        w.push_back(static_cast<double>(c));
        shots += c;
    }
    EstimatorReport r = estimators_from_weights(dn, w, beta_hnu);
    r.shots = shots;
    return r;
}

EstimatorReport tpm_sample(const PhononDistribution& initial, const TransitionMatrix& transitions,
                           const ThermalParams& thermal, std::uint64_t shots, std::uint64_t seed,
                           const SamplingOptions& options) {
    if (shots < 1) raise(ErrorCode::InvalidArgument, "tpm_sample needs shots >= 1");
    if (!(thermal.beta_hnu > 0.0)) raise(ErrorCode::Domain, "tpm_sample needs beta*hbar*nu > 0");
    const std::size_t dim = static_cast<std::size_t>(transitions.probs.rows());
    const std::size_t levels = std::min(initial.n_trunc(), static_cast<std::size_t>(transitions.probs.cols()));

    const std::vector<double> initial_cdf =
        rng::cumulative(std::span<const double>(initial.probs.data(), levels));
    if (!(initial_cdf.back() > 0.0)) raise(ErrorCode::InvalidArgument, "initial distribution is empty");
    std::vector<std::vector<double>> column_cdf(levels);
    for (std::size_t n = 0; n < levels; ++n) {
        if (initial.probs[n] <= 0.0) continue;
        const auto col = transitions.probs.col(static_cast<Eigen::Index>(n));
        column_cdf[n] = rng::cumulative(std::span<const double>(col.data(), dim));
    }

    // Histogram over dn in [-(dim-1), dim-1].
    const std::size_t offset = dim - 1;
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk_shots);
    const std::size_t chunks = static_cast<std::size_t>((shots + chunk - 1) / chunk);
    std::vector<std::vector<std::uint64_t>> partial(chunks);
    rng::for_each_chunk(chunks, [&](std::size_t c) {
        auto eng = rng::stream(seed, c);
        std::vector<std::uint64_t> hist(2 * dim - 1, 0);
        const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
        const std::uint64_t end = std::min<std::uint64_t>(shots, begin + chunk);
        for (std::uint64_t s = begin; s < end; ++s) {
            const std::size_t n = rng::draw_index(initial_cdf, eng);
            const std::size_t m = rng::draw_index(column_cdf[n], eng);
            ++hist[m + offset - n];
        }
        partial[c] = std::move(hist);
    });
    std::vector<std::uint64_t> hist(2 * dim - 1, 0);
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += p[i];
    }

    std::vector<int> dn;
    std::vector<double> freq;
    std::map<int, std::uint64_t> counts;
    for (std::size_t i = 0; i < hist.size(); ++i) {
        if (hist[i] == 0) continue;
        const int k = static_cast<int>(i) - static_cast<int>(offset);
        counts[k] = hist[i];
        dn.push_back(k);
        freq.push_back(static_cast<double>(hist[i]) / static_cast<double>(shots));
    }
    EstimatorReport report = estimators_from_counts(counts, thermal.beta_hnu);

    const std::size_t resamples = options.bootstrap_resamples;
    if (resamples >= 2) {
        auto eng = rng::stream(seed, 0xB0075712A9ULL);
        double s_j = 0.0, s_jj = 0.0, s_f = 0.0, s_ff = 0.0, s_m = 0.0, s_mm = 0.0;
        std::vector<double> w(dn.size());
        for (std::size_t b = 0; b < resamples; ++b) {
            const auto draw = rng::multinomial(shots, freq, eng);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(draw[i]);
            const EstimatorReport r = estimators_from_weights(dn, w, thermal.beta_hnu);
            s_j += r.jarzynski;
            s_jj += r.jarzynski * r.jarzynski;
            s_f += r.fdt;
            s_ff += r.fdt * r.fdt;
            s_m += r.mean_work;
            s_mm += r.mean_work * r.mean_work;
        }
        const double bn = static_cast<double>(resamples);
        auto sd = [bn](double s, double ss) {
            return std::sqrt(std::max(0.0, (ss - s * s / bn) / (bn - 1.0)));
        };
        report.errors = EstimatorErrors{sd(s_j, s_jj), sd(s_f, s_ff), sd(s_m, s_mm)};
    }
    return report;
}

ShapeMetrics gaussianity_metrics(const WorkDistribution& dist) {
    const double total = dist.total();
    if (!(total > 0.0)) raise(ErrorCode::InvalidArgument, "work distribution carries no probability");
    double mean = 0.0;
    for (const auto& [dn, p] : dist.probs) mean += p * dn;
    mean /= total;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (const auto& [dn, p] : dist.probs) {
        const double d = dn - mean;
        m2 += p * d * d;
        m3 += p * d * d * d;
        m4 += p * d * d * d * d;
    }
    m2 /= total;
    m3 /= total;
    m4 /= total;
    if (!(m2 > 1e-14)) raise(ErrorCode::ZeroVariance, "work distribution has zero variance");
    // Standardized moments are invariant under w = beta * dn.
    return ShapeMetrics{m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

ShapeMetrics sample_shape(std::span<const double> samples) {
    if (samples.size() < 2) raise(ErrorCode::InvalidArgument, "need at least two samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : samples) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double n = static_cast<double>(samples.size());
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) raise(ErrorCode::ZeroVariance, "sample has zero variance");
    return ShapeMetrics{m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

std::string work_distribution_csv(const WorkDistribution& dist) {
    std::ostringstream out;
    out.precision(17);
    out << "delta_n,probability\n";
    for (const auto& [dn, p] : dist.probs) out << dn << ',' << p << '\n';
    return out.str();
}

}  // namespace qje

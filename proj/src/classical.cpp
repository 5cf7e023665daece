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

#include "classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "errors.hpp"
#include "random.hpp"

namespace qje {

namespace {

constexpr std::size_t kChunk = 1u << 16;
constexpr double kLeapfrogTolerance = 1e-9;
constexpr int kMaxLeapfrogDoublings = 10;

double log_mean_exp(std::span<const double> works, double beta) {
    double shift = std::numeric_limits<double>::infinity();
    for (double w : works) shift = std::min(shift, beta * w);
    double acc = 0.0;
    for (double w : works) acc += std::exp(-(beta * w - shift));
    return -shift + std::log(acc / static_cast<double>(works.size()));
}

/// The negative Yoshida weight steps slightly outside [0, Theta]; continue
/// the ramp linearly there so the composition keeps its order.
/// Fourth-order Yoshida composition of kick-drift-kick leapfrog; returns
/// H(Theta) - H(0) + d^2 for one trajectory. The grid is laid out knot by
/// knot, and inside a segment the force follows that segment's line even
/// where the negative Yoshida substep reaches past the segment ends. A kink
/// between grid points would otherwise cap the order at two.
double leapfrog_work(const RampProtocol& protocol, PhasePoint s, std::size_t steps) {
    const double total = protocol.theta_total();
    const double root2 = std::sqrt(2.0);
    const double cbrt2 = std::cbrt(2.0);
    const double w1 = 1.0 / (2.0 - cbrt2);
    const double w0 = -cbrt2 / (2.0 - cbrt2);
    const double weights[3] = {w1, w0, w1};
    const double h0 = 0.5 * (s.x * s.x + s.p * s.p) + root2 * protocol.lambda(0.0) * s.x;
    double x = s.x;
    double p = s.p;
    const auto& knots = protocol.knots();
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
        const double a = knots[seg];
        const double b = knots[seg + 1];
        const double lam_a = protocol.lambda(a);
        const double slope = (protocol.lambda(b) - lam_a) / (b - a);
        const auto seg_steps = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(static_cast<double>(steps) * (b - a) / total)));
        const double dt = (b - a) / static_cast<double>(seg_steps);
        for (std::size_t k = 0; k < seg_steps; ++k) {
            double t = a + dt * static_cast<double>(k);
            for (double w : weights) {
                const double h = w * dt;
                p -= 0.5 * h * (x + root2 * (lam_a + slope * (t - a)));
                x += h * p;
                t += h;
                p -= 0.5 * h * (x + root2 * (lam_a + slope * (t - a)));
            }
        }
    }
    const double h1 = 0.5 * (x * x + p * p) + root2 * protocol.lambda(total) * x;
    const double peak = protocol.peak();
    return h1 - h0 + peak * peak;
}

}  // namespace

double ClassicalEnsemble::mean_energy() const {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) acc += 0.5 * (s.x * s.x + s.p * s.p);
    return acc / static_cast<double>(samples.size());
}

ClassicalEnsemble sample_gibbs(double beta_hnu, std::size_t samples, std::uint64_t seed) {
    if (!(beta_hnu > 0.0) || !std::isfinite(beta_hnu)) raise(ErrorCode::Domain, "beta_hnu must be > 0");
    if (samples < 1) raise(ErrorCode::InvalidArgument, "samples must be >= 1");
    ClassicalEnsemble ens;
    ens.beta_hnu = beta_hnu;
    ens.samples.resize(samples);
    const double sigma = 1.0 / std::sqrt(beta_hnu);
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;
    rng::for_each_chunk(chunks, [&](std::size_t c) {
        auto eng = rng::stream(seed, c);
        std::normal_distribution<double> normal(0.0, sigma);
        const std::size_t end = std::min(samples, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            ens.samples[i].x = normal(eng);
            ens.samples[i].p = normal(eng);
        }
    });
    return ens;
}

std::vector<double> classical_work(const RampProtocol& protocol, const ClassicalEnsemble& ensemble,
                                   ClassicalMethod method) {
    const std::size_t n = ensemble.samples.size();
    std::vector<double> works(n);
    if (method == ClassicalMethod::ClosedForm) {
        const DriveIntegral di = drive_integral(protocol);
        const double offset = di.cos_part * di.cos_part + di.sin_part * di.sin_part;
        const double root2 = std::sqrt(2.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = ensemble.samples[i];
            works[i] = root2 * (s.x * di.cos_part + s.p * di.sin_part) + offset;
        }
        return works;
    }

    const auto run = [&](std::size_t steps, std::vector<double>& out) {
        const std::size_t chunks = (n + kChunk - 1) / kChunk;
        rng::for_each_chunk(chunks, [&](std::size_t c) {
            const std::size_t end = std::min(n, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) {
                out[i] = leapfrog_work(protocol, ensemble.samples[i], steps);
            }
        });
    };
    std::size_t steps =
        std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(16.0 * protocol.theta_total())));
    run(steps, works);
    std::vector<double> finer(n);
    for (int level = 0; level < kMaxLeapfrogDoublings; ++level) {
        steps *= 2;
        run(steps, finer);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(finer[i] - works[i]));
        works.swap(finer);
        if (change <= kLeapfrogTolerance) return works;
    }
    raise(ErrorCode::IntegrationFailure,
          "leapfrog work did not settle to 1e-9 after " + std::to_string(steps) + " steps");
}

std::vector<double> classical_work_samples(const RampProtocol& protocol, const ThermalParams& thermal,
                                           std::size_t samples, std::uint64_t seed,
                                           ClassicalMethod method) {
    return classical_work(protocol, sample_gibbs(thermal.beta_hnu, samples, seed), method);
}

double classical_jarzynski(std::span<const double> works, const ThermalParams& thermal) {
    if (works.empty()) raise(ErrorCode::InvalidArgument, "no work samples");
    return -log_mean_exp(works, thermal.beta_hnu);
}

ClassicalJarzynski classical_jarzynski(std::span<const double> works, const ThermalParams& thermal,
                                       const ClassicalJarzynskiOptions& options) {
    ClassicalJarzynski out;
    out.value = classical_jarzynski(works, thermal);
    const std::size_t b_count = options.bootstrap_resamples;
    if (b_count < 2) return out;
    // Resampling the exponentials directly keeps each replicate O(N).
    const double beta = thermal.beta_hnu;
    double shift = std::numeric_limits<double>::infinity();
    for (double w : works) shift = std::min(shift, beta * w);
    std::vector<double> weights(works.size());
    for (std::size_t i = 0; i < works.size(); ++i) weights[i] = std::exp(-(beta * works[i] - shift));
    std::vector<double> replicas(b_count);
    rng::for_each_chunk(b_count, [&](std::size_t b) {
        auto eng = rng::stream(options.seed, 0xC1A55ULL + b);
        std::uniform_int_distribution<std::size_t> pick(0, works.size() - 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < works.size(); ++i) acc += weights[pick(eng)];
        replicas[b] = shift - std::log(acc / static_cast<double>(works.size()));
    });
    double mean = 0.0;
    for (double r : replicas) mean += r;
    mean /= static_cast<double>(b_count);
    double var = 0.0;
    for (double r : replicas) var += (r - mean) * (r - mean);
    out.standard_error = std::sqrt(var / static_cast<double>(b_count - 1));
    return out;
}

void write_work_samples_csv(std::span<const double> works, std::ostream& out) {
    out << "w_diss\n";
    out.precision(17);
    for (double w : works) out << w << '\n';
}

}  // namespace qje

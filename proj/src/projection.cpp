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

#include "projection.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "errors.hpp"
#include "random.hpp"

namespace qje {

void DetectionModel::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v < 1.0; };
    // eps_dark = 1 is accepted so the degenerate model reaches IllConditioned.
    if (!(eps_dark >= 0.0 && eps_dark <= 1.0)) {
        raise(ErrorCode::InvalidArgument, "eps_dark must lie in [0, 1]");
    }
    if (!in_unit(eps_bright)) raise(ErrorCode::InvalidArgument, "eps_bright must lie in [0, 1)");
    if (!in_unit(subtraction_error)) raise(ErrorCode::InvalidArgument, "subtraction_error must lie in [0, 1)");
    if (!(heating_rate_quanta_per_ms >= 0.0)) raise(ErrorCode::InvalidArgument, "heating rate must be >= 0");
    if (!(iteration_time_ms > 0.0)) raise(ErrorCode::InvalidArgument, "iteration_time_ms must be > 0");
    if (max_iterations < 1) raise(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
}

ProjectionSample project_sample(const PhononDistribution& initial, const DetectionModel& model,
                                std::uint64_t shots, std::uint64_t seed) {
    model.validate();
    if (shots < 1) raise(ErrorCode::InvalidArgument, "project_sample needs shots >= 1");
    const auto cdf = rng::cumulative(initial.probs);
    if (!(cdf.back() > 0.0)) raise(ErrorCode::InvalidArgument, "initial distribution is empty");

    const auto iterations = static_cast<std::size_t>(model.max_iterations);
    const double heat = model.heating_rate_quanta_per_ms * model.iteration_time_ms;
    constexpr std::uint64_t chunk = 1u << 16;
    const std::size_t chunks = static_cast<std::size_t>((shots + chunk - 1) / chunk);
    std::vector<std::vector<std::uint64_t>> partial(chunks);

    rng::for_each_chunk(chunks, [&](std::size_t c) {
        auto eng = rng::stream(seed, c);
        std::vector<std::uint64_t> hist(iterations + 1, 0);  // last slot: overflow
        const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
        const std::uint64_t end = std::min<std::uint64_t>(shots, begin + chunk);
        for (std::uint64_t s = begin; s < end; ++s) {
            std::size_t n = rng::draw_index(cdf, eng);
            std::size_t reported = iterations;
            for (std::size_t k = 0; k < iterations; ++k) {
                const bool bright = (n == 0);
                if (!bright && rng::uniform(eng) >= model.subtraction_error) --n;
                const double u = rng::uniform(eng);
                const bool read_bright = bright ? (u >= model.eps_bright) : (u < model.eps_dark);
                if (read_bright) {
                    reported = k;
                    break;
                }
                if (heat > 0.0) {
                    const double v = rng::uniform(eng);
                    const double up = std::min(1.0, heat * static_cast<double>(n + 1));
                    const double down = std::min(1.0 - up, heat * static_cast<double>(n));
                    if (v < up) {
                        ++n;
                    } else if (v < up + down) {
                        --n;
                    }
                }
            }
            ++hist[reported];
        }
        partial[c] = std::move(hist);
    });

    ProjectionSample out;
    out.shots = shots;
    out.counts.assign(iterations, 0);
    for (const auto& h : partial) {
        for (std::size_t j = 0; j < iterations; ++j) out.counts[j] += h[j];
        out.overflow_count += h[iterations];
    }
    out.empirical.probs.resize(iterations);
    for (std::size_t j = 0; j < iterations; ++j) {
        out.empirical.probs[j] = static_cast<double>(out.counts[j]) / static_cast<double>(shots);
    }
    out.empirical.leakage = static_cast<double>(out.overflow_count) / static_cast<double>(shots);
    return out;
}

Eigen::MatrixXd confusion_matrix(const DetectionModel& model) {
    model.validate();
    const int iterations = model.max_iterations;
    const double heat = model.heating_rate_quanta_per_ms * model.iteration_time_ms;
    const std::size_t levels = static_cast<std::size_t>(iterations) + 24;
    Eigen::MatrixXd conf = Eigen::MatrixXd::Zero(iterations, iterations);

    std::vector<double> q(levels);
    std::vector<double> next(levels);
    for (int n0 = 0; n0 < iterations; ++n0) {
        std::fill(q.begin(), q.end(), 0.0);
        q[static_cast<std::size_t>(n0)] = 1.0;
        for (int k = 0; k < iterations; ++k) {
            // Subtraction, then detection; only unreported mass continues.
            std::fill(next.begin(), next.end(), 0.0);
            double reported = q[0] * (1.0 - model.eps_bright);
            next[0] += q[0] * model.eps_bright;
            for (std::size_t n = 1; n < levels; ++n) {
                if (q[n] == 0.0) continue;
                const double go = q[n] * (1.0 - model.subtraction_error);
                const double stay = q[n] * model.subtraction_error;
                reported += (go + stay) * model.eps_dark;
                next[n - 1] += go * (1.0 - model.eps_dark);
                next[n] += stay * (1.0 - model.eps_dark);
            }
            conf(k, n0) = reported;
            if (heat > 0.0) {
                std::fill(q.begin(), q.end(), 0.0);
                for (std::size_t n = 0; n < levels; ++n) {
                    const double up = std::min(1.0, heat * static_cast<double>(n + 1));
                    const double down = std::min(1.0 - up, heat * static_cast<double>(n));
                    q[n] += next[n] * (1.0 - up - down);
                    if (n + 1 < levels) q[n + 1] += next[n] * up;
                    if (n > 0) q[n - 1] += next[n] * down;
                }
            } else {
                q.swap(next);
            }
        }
    }
    return conf;
}

CorrectionResult correct_detection(const PhononDistribution& empirical, const DetectionModel& model) {
    const Eigen::MatrixXd conf = confusion_matrix(model);
    const Eigen::Index k = conf.rows();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(conf, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxConditionNumber)) {
        raise(ErrorCode::IllConditioned,
              "detection confusion matrix condition number " + std::to_string(cond) + " exceeds 1e6");
    }

    Eigen::VectorXd observed = Eigen::VectorXd::Zero(k);
    for (Eigen::Index j = 0; j < k; ++j) observed(j) = empirical.at(static_cast<std::size_t>(j));
    const Eigen::VectorXd solved = svd.solve(observed);

    CorrectionResult out;
    out.condition_number = cond;
    std::vector<double> probs(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        double v = solved(j);
        if (v < 0.0) {
            out.clipped_mass += -v;
            v = 0.0;
        }
        probs[static_cast<std::size_t>(j)] = v;
        sum += v;
    }
    if (!(sum > 0.0)) raise(ErrorCode::IllConditioned, "corrected distribution has no mass");
    for (double& p : probs) p /= sum;
    out.corrected.probs = std::move(probs);
    return out;
}

namespace {

using Complex = std::complex<double>;

double transfer_at_steps(int n, double pulse_time_us, double delta0, double omega_max,
                         std::size_t steps) {
    const double coupling = omega_max * std::sqrt(static_cast<double>(n));
    const double dt = pulse_time_us / static_cast<double>(steps);
    Complex a(1.0, 0.0);
    Complex b(0.0, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        const double phase = physical::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
        const double omega = coupling * std::sin(phase);
        const double detuning = delta0 * std::cos(phase);
        // exp(-i dt/2 (detuning sz + omega sx)) in closed form.
        const double w = 0.5 * std::hypot(omega, detuning);
        if (w == 0.0) continue;
        const double c = std::cos(w * dt);
        const double s = std::sin(w * dt);
        const double nz = 0.5 * detuning / w;
        const double nx = 0.5 * omega / w;
        const Complex i(0.0, 1.0);
        const Complex na = (c - i * s * nz) * a - i * s * nx * b;
        const Complex nb = -i * s * nx * a + (c + i * s * nz) * b;
        a = na;
        b = nb;
    }
    return std::norm(b);
}

}  // namespace

double adiabatic_transfer_fidelity(int n, double pulse_time_us, double delta0_khz,
                                   double omega_max_khz) {
    if (n < 1) raise(ErrorCode::InvalidArgument, "subtraction needs n >= 1");
    if (!(pulse_time_us > 0.0) || !(delta0_khz >= 0.0) || !(omega_max_khz >= 0.0)) {
        raise(ErrorCode::InvalidArgument, "pulse parameters must be positive");
    }
    const double to_rad_per_us = 2.0 * physical::pi * 1e-3;
    const double delta0 = delta0_khz * to_rad_per_us;
    const double omega = omega_max_khz * to_rad_per_us;
    const double scale = pulse_time_us * (delta0 + omega * std::sqrt(static_cast<double>(n)));
    std::size_t steps = std::max<std::size_t>(64, static_cast<std::size_t>(8.0 * scale));

    double coarse = transfer_at_steps(n, pulse_time_us, delta0, omega, steps);
    double fine = transfer_at_steps(n, pulse_time_us, delta0, omega, 2 * steps);
    double extrapolated = (4.0 * fine - coarse) / 3.0;
    for (int level = 0; level < 12; ++level) {
        steps *= 2;
        const double finer = transfer_at_steps(n, pulse_time_us, delta0, omega, 2 * steps);
        const double next = (4.0 * finer - fine) / 3.0;
        const double change = std::abs(next - extrapolated);
        fine = finer;
        extrapolated = next;
        if (change <= 1e-10) return std::clamp(extrapolated, 0.0, 1.0);
    }
    raise(ErrorCode::IntegrationFailure,
          "adiabatic transfer integration did not converge for n=" + std::to_string(n));
}

TransferCalibration calibrate_transfer(int n_max) {
    if (n_max < 1) raise(ErrorCode::InvalidArgument, "n_max must be >= 1");
    TransferCalibration best;
    best.min_fidelity = -1.0;
    for (double t : {50.0, 100.0, 150.0, 200.0}) {
        for (double d0 : {10.0, 20.0, 40.0, 80.0}) {
            for (double om : {5.0, 10.0, 20.0, 40.0}) {
                double worst = 1.0;
                for (int n = 1; n <= n_max && worst > best.min_fidelity; ++n) {
                    worst = std::min(worst, adiabatic_transfer_fidelity(n, t, d0, om));
                }
                if (worst > best.min_fidelity) best = TransferCalibration{t, d0, om, worst};
            }
        }
    }
    return best;
}

PhononDistribution prepare_fock(std::size_t n, std::size_t n_trunc, double infidelity) {
    if (!(infidelity >= 0.0 && infidelity <= 1.0)) {
        raise(ErrorCode::InvalidArgument, "preparation infidelity must lie in [0, 1]");
    }
    PhononDistribution d = PhononDistribution::fock(n, n_trunc);
    if (infidelity == 0.0) return d;
    d.probs[n] = 1.0 - infidelity;
    const bool has_up = n + 1 < n_trunc;
    if (n == 0) {
        if (has_up) d.probs[1] += infidelity; else d.probs[0] = 1.0;
    } else if (!has_up) {
        d.probs[n - 1] += infidelity;
    } else {
        d.probs[n - 1] += 0.5 * infidelity;
        d.probs[n + 1] += 0.5 * infidelity;
    }
    return d;
}

}  // namespace qje

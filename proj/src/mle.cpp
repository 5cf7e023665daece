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

#include "mle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "errors.hpp"
#include "optimize.hpp"
#include "random.hpp"

namespace qje {

namespace {

struct TraceData {
    std::vector<double> t;
    std::vector<double> hits;
    std::vector<double> shots;
    Eigen::MatrixXd cosines;  // (n, point)
};

TraceData prepare(const SidebandTrace& tr, std::size_t support) {
    TraceData d;
    const std::size_t pts = tr.size();
    d.t = tr.times_us;
    d.hits.resize(pts);
    d.shots.resize(pts);
    d.cosines.resize(static_cast<Eigen::Index>(support), static_cast<Eigen::Index>(pts));
    for (std::size_t i = 0; i < pts; ++i) {
        d.shots[i] = tr.shots[i];
        d.hits[i] = std::round(tr.p_up[i] * tr.shots[i]);
        for (std::size_t n = 0; n < support; ++n) {
            d.cosines(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) =
                std::cos(2.0 * sideband_rabi(tr.kind, n, tr.rabi_base_khz) * tr.times_us[i]);
        }
    }
    return d;
}

// Parameter vector: [z_0 .. z_{K-1}, g_blue, g_red, c_blue, c_red] with
// P = softmax(z), gamma = g^2, A = (1 + sin c) / 2.
struct Params {
    Eigen::VectorXd probs;
    double gamma[2];
    double contrast[2];
};

Params unpack(const Eigen::VectorXd& x, std::size_t support) {
    const auto k = static_cast<Eigen::Index>(support);
    Params p;
    const double zmax = x.head(k).maxCoeff();
    p.probs = (x.head(k).array() - zmax).exp().matrix();
    p.probs /= p.probs.sum();
    for (int j = 0; j < 2; ++j) {
        p.gamma[j] = x(k + j) * x(k + j);
        p.contrast[j] = 0.5 * (1.0 + std::sin(x(k + 2 + j)));
    }
    return p;
}

class Likelihood {
public:
    Likelihood(const SidebandTrace& blue, const SidebandTrace& red, std::size_t support)
        : support_(support), data_{prepare(blue, support), prepare(red, support)} {
        for (const auto& d : data_) total_shots_ += std::accumulate(d.shots.begin(), d.shots.end(), 0.0);
    }

    double total_shots() const noexcept { return total_shots_; }

    /// Negative log-likelihood per shot and its gradient.
    double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const { return evaluate(x, grad, nullptr); }

    /// Per-shot log-likelihood gain from moving mass into each level.
    Eigen::VectorXd mass_slope(const Eigen::VectorXd& x) const {
        Eigen::VectorXd grad;
        Eigen::VectorXd slope;
        evaluate(x, grad, &slope);
        return slope;
    }

private:
    double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad, Eigen::VectorXd* slope) const {
        const auto k = static_cast<Eigen::Index>(support_);
        const Params p = unpack(x, support_);
        grad.setZero(x.size());
        Eigen::VectorXd d_probs = Eigen::VectorXd::Zero(k);
        double ll = 0.0;
        for (int j = 0; j < 2; ++j) {
            const TraceData& d = data_[j];
            const Eigen::VectorXd mix = d.cosines.transpose() * p.probs;
            Eigen::VectorXd weight(mix.size());
            double d_gamma = 0.0;
            double d_contrast = 0.0;
            for (Eigen::Index i = 0; i < mix.size(); ++i) {
                const auto ui = static_cast<std::size_t>(i);
                const double decay = std::exp(-p.gamma[j] * d.t[ui]);
                const double env = decay * p.contrast[j];
                double prob = 0.5 * (1.0 - env * mix(i));
                prob = std::clamp(prob, 1e-12, 1.0 - 1e-12);
                const double hits = d.hits[ui];
                const double misses = d.shots[ui] - hits;
                ll += hits * std::log(prob) + misses * std::log1p(-prob);
                const double dl = hits / prob - misses / (1.0 - prob);
                weight(i) = -0.5 * env * dl;
                d_gamma += dl * 0.5 * d.t[ui] * env * mix(i);
                d_contrast += dl * (-0.5) * decay * mix(i);
            }
            d_probs += d.cosines * weight;
            grad(k + j) = d_gamma * 2.0 * x(k + j);
            grad(k + 2 + j) = d_contrast * 0.5 * std::cos(x(k + 2 + j));
        }
        const double mean = p.probs.dot(d_probs);
        grad.head(k) = (p.probs.array() * (d_probs.array() - mean)).matrix();
        grad *= -1.0 / total_shots_;
        if (slope) *slope = (d_probs.array() - mean).matrix() / total_shots_;
        return -ll / total_shots_;
    }

    std::size_t support_;
    TraceData data_[2];
    double total_shots_ = 0.0;
};

Eigen::VectorXd start_vector(std::size_t support, const Eigen::VectorXd& z, const MLEOptions& opt) {
    const auto k = static_cast<Eigen::Index>(support);
    Eigen::VectorXd x(k + 4);
    x.head(k) = z;
    const double g = std::sqrt(std::max(0.0, opt.initial_gamma_per_us));
    const double c = std::asin(std::clamp(2.0 * opt.initial_contrast - 1.0, -1.0, 1.0));
    x(k) = g;
    x(k + 1) = g;
    x(k + 2) = c;
    x(k + 3) = c;
    return x;
}

/// Uniform, a thermal ladder, then single-Fock corners until `count` starts.
std::vector<Eigen::VectorXd> make_starts(std::size_t support, std::size_t count, const MLEOptions& opt) {
    const auto k = static_cast<Eigen::Index>(support);
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(start_vector(support, Eigen::VectorXd::Zero(k), opt));
    for (double nbar : {0.15, 0.6, 2.0}) {
        Eigen::VectorXd z(k);
        const double r = nbar / (1.0 + nbar);
        for (Eigen::Index n = 0; n < k; ++n) z(n) = std::max(-30.0, static_cast<double>(n) * std::log(r));
        starts.push_back(start_vector(support, z, opt));
    }
    for (std::size_t corner = 0; starts.size() < count; ++corner) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(k);
        z(static_cast<Eigen::Index>(corner % support)) = 3.0;
        starts.push_back(start_vector(support, z, opt));
    }
    return starts;
}

constexpr double kPinnedLogit = -800.0;  // exp underflows to exactly zero
constexpr double kNegligibleMass = 1e-6;

/// Pins levels that sit at the simplex boundary to exactly zero and re-fits
/// on the remaining face. A softmax only approaches the boundary
/// asymptotically, so an unpinned boundary optimum stops short by an
/// amount that depends on the start. A level is pinned when its mass is
/// negligible and moving mass into it lowers the likelihood; it is released
/// again if that slope turns positive.
optimize::BfgsResult pin_boundary_levels(const Likelihood& nll, const optimize::BfgsResult& fit,
                                         std::size_t support, const optimize::BfgsOptions& options) {
    const auto k = static_cast<Eigen::Index>(support);
    optimize::BfgsResult current = fit;
    for (int round = 0; round < 4; ++round) {
        const Params p = unpack(current.x, support);
        const Eigen::VectorXd slope = nll.mass_slope(current.x);
        const double zmax = current.x.head(k).maxCoeff();
        Eigen::VectorXd x = current.x;
        bool changed = false;
        for (Eigen::Index n = 0; n < k; ++n) {
            const bool pinned = x(n) <= kPinnedLogit;
            if (!pinned && p.probs(n) < kNegligibleMass && slope(n) <= 0.0) {
                x(n) = kPinnedLogit;
                changed = true;
            } else if (pinned && slope(n) > 0.0) {
                x(n) = zmax + std::log(kNegligibleMass);
                changed = true;
            }
        }
        if (!changed) break;
        optimize::BfgsResult next = optimize::minimize_bfgs(std::cref(nll), x, options);
        if (next.value > current.value) break;
        current = std::move(next);
    }
    return current;
}

optimize::BfgsOptions fit_options() {
    optimize::BfgsOptions o;
    o.max_iterations = 3000;
    o.gradient_tolerance = 1e-11;
    o.value_tolerance = 1e-16;
    return o;
}

}  // namespace

double trace_log_likelihood(const SidebandTrace& blue, const SidebandTrace& red,
                            const PhononDistribution& dist, double gamma_blue, double gamma_red,
                            double contrast_blue, double contrast_red) {
    double ll = 0.0;
    const SidebandTrace* traces[2] = {&blue, &red};
    const double gammas[2] = {gamma_blue, gamma_red};
    const double contrasts[2] = {contrast_blue, contrast_red};
    for (int j = 0; j < 2; ++j) {
        const SidebandTrace& tr = *traces[j];
        for (std::size_t i = 0; i < tr.size(); ++i) {
            double p = sideband_probability(dist, tr.kind, tr.rabi_base_khz, gammas[j], contrasts[j],
                                            tr.times_us[i]);
            p = std::clamp(p, 1e-12, 1.0 - 1e-12);
            const double hits = std::round(tr.p_up[i] * tr.shots[i]);
            ll += hits * std::log(p) + (tr.shots[i] - hits) * std::log1p(-p);
        }
    }
    return ll;
}

MLEFitResult mle_fit(const SidebandTrace& blue, const SidebandTrace& red, std::size_t n_support,
                     const MLEOptions& options) {
    if (n_support < 1 || n_support > kMaxMleSupport) {
        raise(ErrorCode::InvalidArgument, "MLE support must be 1.." + std::to_string(kMaxMleSupport));
    }
    if (blue.kind != SidebandKind::Blue || red.kind != SidebandKind::Red) {
        raise(ErrorCode::InvalidArgument, "mle_fit expects a blue trace and a red trace");
    }
    if (blue.size() == 0 || red.size() == 0) raise(ErrorCode::InvalidArgument, "empty sideband trace");
    if (std::abs(blue.rabi_base_khz - red.rabi_base_khz) > 1e-12 * blue.rabi_base_khz) {
        raise(ErrorCode::InvalidArgument, "blue and red traces must share the Rabi scale");
    }

    const auto k = static_cast<Eigen::Index>(n_support);
    const Likelihood nll(blue, red, n_support);
    const auto starts = make_starts(n_support, std::max<std::size_t>(8, options.starts), options);

    MLEFitResult out;
    out.starts_used = starts.size();
    if (!(nll.total_shots() > 0.0)) {
        // No data: nothing identifies the distribution.
        out.dist.probs.assign(n_support, 1.0 / static_cast<double>(n_support));
        out.converged = false;
        out.start_loglik_gap = std::numeric_limits<double>::infinity();
        out.start_prob_gap = std::numeric_limits<double>::infinity();
        return out;
    }

    std::vector<optimize::BfgsResult> fits;
    std::vector<optimize::BfgsResult> raw;
    fits.reserve(starts.size());
    raw.reserve(starts.size());
    for (const auto& x0 : starts) {
        raw.push_back(optimize::minimize_bfgs(std::cref(nll), x0, fit_options()));
        fits.push_back(pin_boundary_levels(nll, raw.back(), n_support, fit_options()));
    }
    std::vector<std::size_t> order(fits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fits[a].value < fits[b].value; });

    const Params best = unpack(fits[order[0]].x, n_support);
    const Params second = unpack(fits[order[1]].x, n_support);
    out.start_loglik_gap = std::abs(fits[order[0]].value - fits[order[1]].value) * nll.total_shots();
    out.start_prob_gap = (best.probs - second.probs).cwiseAbs().maxCoeff();
    out.converged = out.start_loglik_gap <= kStartLoglikAgreement &&
                    out.start_prob_gap <= kStartProbAgreement;

    out.dist.probs.assign(best.probs.data(), best.probs.data() + k);
    out.gamma_blue = best.gamma[0];
    out.gamma_red = best.gamma[1];
    out.contrast_blue = best.contrast[0];
    out.contrast_red = best.contrast[1];
    out.log_likelihood = -fits[order[0]].value * nll.total_shots();

    out.edge_mass = out.dist.probs.back();
    if (options.edge_mass_is_error && out.edge_mass > kSupportEdgeMass) {
        raise(ErrorCode::SupportTooSmall,
              "fitted mass " + std::to_string(out.dist.probs.back()) + " at n=" +
                  std::to_string(n_support - 1) + " exceeds 0.01; enlarge the support");
    }

    if (options.bootstrap_resamples > 0) {
        auto eng = rng::stream(options.seed, 0xB0075EA4ULL);
        const std::size_t b_count = options.bootstrap_resamples;
        auto resample = [&eng](const SidebandTrace& tr) {
            SidebandTrace copy = tr;
            for (std::size_t i = 0; i < copy.size(); ++i) {
                if (copy.shots[i] == 0) continue;
                std::binomial_distribution<std::uint32_t> bin(copy.shots[i], std::clamp(tr.p_up[i], 0.0, 1.0));
                copy.p_up[i] = static_cast<double>(bin(eng)) / copy.shots[i];
            }
            return copy;
        };
        out.bootstrap_probs.reserve(b_count);
        for (std::size_t b = 0; b < b_count; ++b) {
            const SidebandTrace rb = resample(blue);
            const SidebandTrace rr = resample(red);
            const Likelihood boot(rb, rr, n_support);
            const auto fit = optimize::minimize_bfgs(std::cref(boot), raw[order[0]].x, fit_options());
            const Params p = unpack(fit.x, n_support);
            out.bootstrap_probs.emplace_back(p.probs.data(), p.probs.data() + k);
        }
        out.ci_low.resize(n_support);
        out.ci_high.resize(n_support);
        out.std_error.resize(n_support);
        std::vector<double> column(b_count);
        for (std::size_t n = 0; n < n_support; ++n) {
            double s = 0.0, ss = 0.0;
            for (std::size_t b = 0; b < b_count; ++b) {
                column[b] = out.bootstrap_probs[b][n];
                s += column[b];
                ss += column[b] * column[b];
            }
            std::sort(column.begin(), column.end());
            const auto pick = [&](double q) {
                const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(b_count - 1) + 0.5));
                return column[std::min(idx, b_count - 1)];
            };
            out.ci_low[n] = pick(0.025);
            out.ci_high[n] = pick(0.975);
            const double bn = static_cast<double>(b_count);
            out.std_error[n] = b_count > 1 ? std::sqrt(std::max(0.0, (ss - s * s / bn) / (bn - 1.0))) : 0.0;
        }
    }
    return out;
}

MLEFitResult mle_fit_adaptive(const SidebandTrace& blue, const SidebandTrace& red, std::size_t min_support,
                              std::size_t max_support, const MLEOptions& options, double loglik_gain) {
    if (min_support < 1 || min_support > max_support || max_support > kMaxMleSupport) {
        raise(ErrorCode::InvalidArgument, "adaptive MLE needs 1 <= min_support <= max_support <= 12");
    }
    MLEOptions probe = options;
    probe.bootstrap_resamples = 0;
    probe.edge_mass_is_error = false;
    std::size_t k = min_support;
    MLEFitResult current = mle_fit(blue, red, k, probe);
    while (k < max_support) {
        MLEFitResult next = mle_fit(blue, red, k + 1, probe);
        const bool edge = current.edge_mass > kSupportEdgeMass;
        if (!edge && next.log_likelihood - current.log_likelihood <= loglik_gain) break;
        current = std::move(next);
        ++k;
    }
    if (options.bootstrap_resamples == 0 && !options.edge_mass_is_error) return current;
    return mle_fit(blue, red, k, options);
}

}  // namespace qje

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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "classical.hpp"
#include "errors.hpp"
#include "fockspace.hpp"
#include "mle.hpp"
#include "projection.hpp"
#include "random.hpp"
#include "sideband.hpp"
#include "workstats.hpp"

namespace qje::cmd {

using nlohmann::json;

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t state = seed ^ (tag * 0x9E3779B97F4A7C15ULL);
    return rng::splitmix64(state);
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

void write_artifact(const RunOptions& options, const std::string& name, const std::string& content) {
    if (options.out_dir.empty()) return;
    const std::filesystem::path path = std::filesystem::path(options.out_dir) / name;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::Io, "cannot write " + path.string());
    out << content;
    if (!out) raise(ErrorCode::Io, "write failed for " + path.string());
}

std::pair<std::size_t, std::size_t> pick_cell(const ExperimentConfig& config, const RunOptions& options) {
    // Default: hottest temperature, shortest ramp.
    return options.cell.value_or(std::make_pair(config.thermal.nbar_list.size() - 1, std::size_t{0}));
}

/// Heating accumulated between the ramp and the final measurement.
HeatingModel return_heating(const ExperimentConfig& config, double tau_us) {
    return {1.0, config.heating.rate_quanta_per_ms * tau_us * 1e-3 + config.heating.return_delta_nbar};
}

json cell_json(const Cell& c) {
    return {{"t_index", c.t_index},       {"tau_index", c.tau_index},
            {"nbar", c.nbar},             {"t_eff_nK", c.thermal.t_eff_nK},
            {"tau_us", c.tau_us},         {"beta_hnu", c.thermal.beta_hnu},
            {"theta", c.protocol.theta_total()}};
}

json errors_json(const std::optional<EstimatorErrors>& e) {
    if (!e) return nullptr;
    return {{"jarzynski", e->jarzynski}, {"fdt", e->fdt}, {"mean_work", e->mean_work}};
}

json estimators_json(const EstimatorReport& r) {
    json j = {{"jarzynski", r.jarzynski}, {"fdt", r.fdt}, {"mean_work", r.mean_work},
              {"errors", errors_json(r.errors)}};
    j["shots"] = r.shots ? json(*r.shots) : json(nullptr);
    return j;
}

double total_variation(const PhononDistribution& a, const PhononDistribution& b) {
    const std::size_t n = std::max(a.n_trunc(), b.n_trunc());
    double tv = 0.0;
    for (std::size_t i = 0; i < n; ++i) tv += std::abs(a.at(i) - b.at(i));
    return 0.5 * tv;
}

std::vector<double> head(const std::vector<double>& v, std::size_t count) {
    return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(count, v.size()))};
}

/// Thermal mean phonon number implied by a measured distribution.
ThermalParams fitted_thermal(const PhononDistribution& dist, double nu_hz) {
    const double nbar = dist.mean();
    if (!(nbar > 0.0)) raise(ErrorCode::Domain, "measured distribution has zero mean phonon number");
    return effective_temperature(nbar, nu_hz);
}

SidebandKind parse_kind(const std::string& name) { return sideband_kind_from_string(name); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

Cell make_cell(const ExperimentConfig& config, std::size_t t_index, std::size_t tau_index) {
    if (t_index >= config.thermal.nbar_list.size() || tau_index >= config.drive.tau_us.size()) {
        raise(ErrorCode::InvalidArgument, "cell (" + std::to_string(t_index) + "," + std::to_string(tau_index) +
                                              ") is outside the " + std::to_string(config.thermal.nbar_list.size()) +
                                              "x" + std::to_string(config.drive.tau_us.size()) + " grid");
    }
    Cell c;
    c.t_index = t_index;
    c.tau_index = tau_index;
    c.nbar = config.thermal.nbar_list[t_index];
    c.tau_us = config.drive.tau_us[tau_index];
    c.thermal = effective_temperature(c.nbar, config.trap.nu_hz);
    const double theta = ramp_theta(config.trap.nu_hz, c.tau_us);
    if (config.drive.ramp_table.empty()) {
        c.protocol = RampProtocol::linear(config.drive.d, theta);
    } else {
        std::istringstream in(read_file(config.drive.ramp_table));
        const RampProtocol shape = RampProtocol::read_table(in);
        std::vector<double> th = shape.knots();
        std::vector<double> lam(th.size());
        for (std::size_t i = 0; i < th.size(); ++i) {
            lam[i] = config.drive.d * shape.lambda(th[i]) / shape.peak();
            th[i] *= theta / shape.theta_total();
        }
        c.protocol = RampProtocol::tabulated(std::move(th), std::move(lam));
    }
    return c;
}

CommandResult table1(const ExperimentConfig& config, const RunOptions& options) {
    const std::uint64_t seed = options.seed.value_or(config.sampling.seed);
    const std::uint64_t shots = options.shots.value_or(config.sampling.shots);
    const std::size_t n_trunc = config.truncation.n_trunc;

    CommandResult res;
    json cells = json::array();
    std::ostringstream text;
    text << "T_eff[nK]  tau[us]  dF/kT     Jarzynski   FDT        <w>";
    if (config.heating.enabled) text << "      <w>heated";
    if (!options.exact) text << "    J(shots)          FDT(shots)        <w>(shots)";
    text << '\n';

    for (std::size_t i = 0; i < config.thermal.nbar_list.size(); ++i) {
        for (std::size_t j = 0; j < config.drive.tau_us.size(); ++j) {
            const Cell c = make_cell(config, i, j);
            const PhononDistribution init = thermal_distribution(c.nbar, n_trunc);
            const TransitionMatrix tm = transition_matrix_analytic(c.protocol, n_trunc);
            const EstimatorReport exact = estimators_exact(work_distribution(init, tm, c.thermal));
            const double delta_f = tm.delta_f_over_hnu * c.thermal.beta_hnu;

            json cell = estimators_json(exact);
            cell["cell"] = cell_json(c);
            cell["delta_f_over_kt"] = delta_f;
            cell["alpha_res_sq"] = tm.alpha_res_abs * tm.alpha_res_abs;
            text << fmt("%9.1f", c.thermal.t_eff_nK) << fmt("  %7.1f", c.tau_us) << fmt("  %+7.4f", delta_f)
                 << fmt("  %+9.6f", exact.jarzynski) << fmt("  %+8.5f", exact.fdt)
                 << fmt("  %8.5f", exact.mean_work);
            if (config.heating.enabled) {
                const TransitionMatrix heated = apply_heating(tm, return_heating(config, c.tau_us));
                const EstimatorReport hr = estimators_exact(work_distribution(init, heated, c.thermal));
                cell["heated"] = estimators_json(hr);
                text << fmt("  %8.5f", hr.mean_work);
            }
            if (!options.exact) {
                SamplingOptions so;
                so.bootstrap_resamples = config.sampling.bootstrap_b;
                const EstimatorReport sr =
                    tpm_sample(init, tm, c.thermal, shots, derive_seed(seed, 0x7A00 + i * 16 + j), so);
                cell["sampled"] = estimators_json(sr);
                const auto err = sr.errors.value_or(EstimatorErrors{});
                text << fmt("  %+7.4f", sr.jarzynski) << fmt("+-%-7.4f", err.jarzynski)
                     << fmt("  %+7.4f", sr.fdt) << fmt("+-%-7.4f", err.fdt) << fmt("  %7.4f", sr.mean_work)
                     << fmt("+-%-7.4f", err.mean_work);
            }
            text << '\n';
            cells.push_back(std::move(cell));
        }
    }
    res.report = {{"schema_version", kSchemaVersion},
                  {"command", "table1"},
                  {"d", config.drive.d},
                  {"nu_hz", config.trap.nu_hz},
                  {"n_trunc", n_trunc},
                  {"mode", options.exact ? "exact" : "exact+sampled"},
                  {"seed", seed},
                  {"cells", std::move(cells)}};
    res.text = text.str();
    write_artifact(options, "table1.txt", res.text);
    return res;
}

CommandResult workdist(const ExperimentConfig& config, const RunOptions& options) {
    const auto [ti, tj] = pick_cell(config, options);
    const Cell c = make_cell(config, ti, tj);
    const std::size_t n_trunc = config.truncation.n_trunc;
    const std::uint64_t seed = options.seed.value_or(config.sampling.seed);
    const PhononDistribution init = thermal_distribution(c.nbar, n_trunc);
    const TransitionMatrix tm = transition_matrix_analytic(c.protocol, n_trunc);
    const WorkDistribution wd = work_distribution(init, tm, c.thermal);

    CommandResult res;
    json summary = {{"p_zero", wd.at(0)}, {"leakage", wd.leakage}};
    try {
        const ShapeMetrics shape = gaussianity_metrics(wd);
        summary["skewness"] = shape.skewness;
        summary["excess_kurtosis"] = shape.excess_kurtosis;
        summary["shape"] = std::abs(shape.skewness) > config.workstats.skew_threshold ? "non-Gaussian" : "Gaussian";
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVariance) throw;
        summary["skewness"] = nullptr;
        summary["excess_kurtosis"] = nullptr;
        summary["shape"] = "delta";
    }

    std::map<int, double> classical_hist;
    if (options.classical_overlay) {
        const auto works = classical_work_samples(c.protocol, c.thermal, config.classical.samples,
                                                  derive_seed(seed, 0xC1A5));
        for (double w : works) classical_hist[static_cast<int>(std::floor(w + 0.5))] += 1.0;
        for (auto& [k, v] : classical_hist) v /= static_cast<double>(works.size());
        const ShapeMetrics cs = sample_shape(works);
        summary["classical"] = {{"samples", works.size()},
                                {"skewness", cs.skewness},
                                {"excess_kurtosis", cs.excess_kurtosis}};
    }

    std::ostringstream csv;
    csv.precision(17);
    csv << "delta_n,probability,w_over_kt";
    if (options.classical_overlay) csv << ",classical_probability";
    csv << '\n';
    std::map<int, double> rows = wd.probs;
    for (const auto& [k, v] : classical_hist) rows.try_emplace(k, 0.0);
    for (const auto& [dn, p] : rows) {
        csv << dn << ',' << p << ',' << c.thermal.beta_hnu * dn;
        if (options.classical_overlay) {
            const auto it = classical_hist.find(dn);
            csv << ',' << (it == classical_hist.end() ? 0.0 : it->second);
        }
        csv << '\n';
    }
    res.report = {{"schema_version", kSchemaVersion},
                  {"command", "workdist"},
                  {"cell", cell_json(c)},
                  {"delta_f_over_kt", tm.delta_f_over_hnu * c.thermal.beta_hnu},
                  {"summary", summary}};
    res.text = csv.str();
    write_artifact(options, "workdist.csv", res.text);
    return res;
}

CommandResult propagate(const ExperimentConfig& config, const RunOptions& options) {
    constexpr std::size_t kReportLevels = 32;
    const auto [ti, tj] = pick_cell(config, options);
    const Cell c = make_cell(config, ti, tj);
    const std::size_t n_trunc = config.truncation.n_trunc;
    const TransitionMatrix tm = transition_matrix_analytic(c.protocol, n_trunc);
    const std::size_t shown = std::min(kReportLevels, n_trunc);

    double max_leak = 0.0;
    for (std::size_t n = 0; n <= n_trunc / 2 && n < tm.leakage.size(); ++n) max_leak = std::max(max_leak, tm.leakage[n]);

    CommandResult res;
    res.report = {{"schema_version", kSchemaVersion},
                  {"command", "propagate"},
                  {"cell", cell_json(c)},
                  {"alpha_res_abs", tm.alpha_res_abs},
                  {"delta_f_over_hnu", tm.delta_f_over_hnu},
                  {"n_trunc", n_trunc},
                  {"reported_levels", shown},
                  {"max_leakage", max_leak}};
    if (!options.exact) {
        const std::size_t n_num = std::min<std::size_t>(n_trunc, 48);
        const TransitionMatrix num = transition_matrix_numeric(c.protocol, n_num, 400);
        const TransitionMatrix ref = transition_matrix_analytic(c.protocol, n_num);
        double diff = 0.0;
        for (std::size_t n = 0; n <= n_num / 2; ++n) {
            for (std::size_t m = 0; m < n_num; ++m) {
                const auto mi = static_cast<Eigen::Index>(m);
                const auto ni = static_cast<Eigen::Index>(n);
                diff = std::max(diff, std::abs(num.probs(mi, ni) - ref.probs(mi, ni)));
            }
        }
        res.report["numeric"] = {{"n_trunc", n_num}, {"max_abs_difference", diff},
                                 {"alpha_res_abs", num.alpha_res_abs}};
    }
    std::ostringstream csv;
    csv.precision(17);
    csv << "m,n,probability\n";
    for (std::size_t n = 0; n < shown; ++n) {
        for (std::size_t m = 0; m < shown; ++m) {
            csv << m << ',' << n << ',' << tm.probs(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) << '\n';
        }
    }
    res.text = csv.str();
    write_artifact(options, "transitions.csv", res.text);
    return res;
}

CommandResult thermal(const ExperimentConfig& config, const RunOptions& options) {
    CommandResult res;
    json rows = json::array();
    std::ostringstream csv;
    csv.precision(12);
    csv << "nbar,beta_hnu,t_eff_nK,delta_f_over_kt\n";
    const double d2 = config.drive.d * config.drive.d;
    for (double nbar : config.thermal.nbar_list) {
        const ThermalParams t = effective_temperature(nbar, config.trap.nu_hz);
        const PhononDistribution dist = thermal_distribution(nbar, config.truncation.n_trunc);
        rows.push_back({{"nbar", nbar},
                        {"beta_hnu", t.beta_hnu},
                        {"t_eff_nK", t.t_eff_nK},
                        {"delta_f_over_kt", -d2 * t.beta_hnu},
                        {"probs", head(dist.probs, 10)}});
        csv << nbar << ',' << t.beta_hnu << ',' << t.t_eff_nK << ',' << -d2 * t.beta_hnu << '\n';
    }
    res.report = {{"schema_version", kSchemaVersion}, {"command", "thermal"}, {"rows", rows}};
    res.text = csv.str();
    write_artifact(options, "thermal.csv", res.text);
    return res;
}

CommandResult project(const ExperimentConfig& config, const RunOptions& options) {
    const std::size_t ti = pick_cell(config, options).first;
    if (ti >= config.thermal.nbar_list.size()) raise(ErrorCode::InvalidArgument, "temperature index out of range");
    const double nbar = config.thermal.nbar_list[ti];
    const std::uint64_t seed = options.seed.value_or(config.sampling.seed);
    const std::uint64_t shots = options.shots.value_or(config.sampling.shots);
    const PhononDistribution truth = thermal_distribution(nbar, config.truncation.n_trunc);
    const ProjectionSample sample = project_sample(truth, config.detection, shots, derive_seed(seed, 0x5000));
    const CorrectionResult corr = correct_detection(sample.empirical, config.detection);

    json fidelities = json::array();
    double worst = 1.0;
    for (int n = 1; n <= 6; ++n) {
        const double f = adiabatic_transfer_fidelity(n, config.transfer.pulse_time_us, config.transfer.delta0_khz,
                                                     config.transfer.omega_max_khz);
        worst = std::min(worst, f);
        fidelities.push_back(f);
    }

    CommandResult res;
    res.report = {{"schema_version", kSchemaVersion},
                  {"command", "project"},
                  {"nbar", nbar},
                  {"shots", shots},
                  {"seed", seed},
                  {"counts", sample.counts},
                  {"overflow_count", sample.overflow_count},
                  {"empirical", sample.empirical.probs},
                  {"corrected", corr.corrected.probs},
                  {"condition_number", corr.condition_number},
                  {"clipped_mass", corr.clipped_mass},
                  {"tv_empirical", total_variation(sample.empirical, truth)},
                  {"tv_corrected", total_variation(corr.corrected, truth)},
                  {"fitted_nbar", corr.corrected.mean()},
                  {"transfer", {{"pulse_time_us", config.transfer.pulse_time_us},
                                {"delta0_khz", config.transfer.delta0_khz},
                                {"omega_max_khz", config.transfer.omega_max_khz},
                                {"fidelity_n1_to_n6", fidelities},
                                {"min_fidelity", worst}}}};
    std::ostringstream csv;
    csv.precision(12);
    csv << "n,count,empirical,corrected,truth\n";
    for (std::size_t n = 0; n < sample.counts.size(); ++n) {
        csv << n << ',' << sample.counts[n] << ',' << sample.empirical.at(n) << ',' << corr.corrected.at(n) << ','
            << truth.at(n) << '\n';
    }
    res.text = csv.str();
    write_artifact(options, "projection.csv", res.text);
    return res;
}

CommandResult sideband_synth(const ExperimentConfig& config, const RunOptions& options) {
    const std::size_t ti = pick_cell(config, options).first;
    if (ti >= config.thermal.nbar_list.size()) raise(ErrorCode::InvalidArgument, "temperature index out of range");
    const SidebandKind kind = parse_kind(options.sideband_kind);
    SidebandSettings settings = config.sideband;
    if (options.shots) settings.shots_per_point = static_cast<std::uint32_t>(*options.shots);
    const std::uint64_t seed = options.seed.value_or(config.sampling.seed);
    const PhononDistribution dist = thermal_distribution(config.thermal.nbar_list[ti], config.truncation.n_trunc);
    const SidebandTrace trace =
        synthesize_sideband(dist, kind, settings, derive_seed(seed, kind == SidebandKind::Blue ? 0xB1 : 0xB2));
    std::ostringstream csv;
    write_trace_csv(trace, csv);

    CommandResult res;
    res.report = {{"schema_version", kSchemaVersion},
                  {"command", "sideband-synth"},
                  {"kind", to_string(kind)},
                  {"nbar", config.thermal.nbar_list[ti]},
                  {"points", settings.points},
                  {"spacing_us", settings.spacing_us},
                  {"shots_per_point", settings.shots_per_point},
                  {"rabi_base_khz", settings.rabi_base_khz},
                  {"gamma_per_us", settings.gamma_per_us},
                  {"contrast", settings.contrast}};
    res.text = csv.str();
    write_artifact(options, std::string("sideband_") + to_string(kind) + ".csv", res.text);
    return res;
}

namespace {

json mle_json(const MLEFitResult& fit) {
    json j = {{"dist", fit.dist.probs},
              {"gamma_blue", fit.gamma_blue},
              {"gamma_red", fit.gamma_red},
              {"contrast_blue", fit.contrast_blue},
              {"contrast_red", fit.contrast_red},
              {"log_likelihood", fit.log_likelihood},
              {"converged", fit.converged},
              {"start_loglik_gap", fit.start_loglik_gap},
              {"start_prob_gap", fit.start_prob_gap},
              {"starts_used", fit.starts_used},
              {"edge_mass", fit.edge_mass}};
    if (!fit.ci_low.empty()) {
        j["ci"] = {{"low", fit.ci_low}, {"high", fit.ci_high}, {"std_error", fit.std_error}};
    } else {
        j["ci"] = nullptr;
    }
    return j;
}

}  // namespace

CommandResult sideband_fit(const ExperimentConfig& config, const RunOptions& options) {
    if (options.blue_trace.empty() || options.red_trace.empty()) {
        raise(ErrorCode::InvalidArgument, "sideband fit needs both a blue and a red trace file");
    }
    std::istringstream blue_in(read_file(options.blue_trace));
    std::istringstream red_in(read_file(options.red_trace));
    const SidebandTrace blue = read_trace_csv(blue_in, SidebandKind::Blue, config.sideband);
    const SidebandTrace red = read_trace_csv(red_in, SidebandKind::Red, config.sideband);
    MLEOptions mo;
    mo.starts = config.mle.starts;
    mo.bootstrap_resamples = config.mle.bootstrap_b;
    mo.seed = derive_seed(options.seed.value_or(config.sampling.seed), 0x3F17);
    const MLEFitResult fit = config.mle.adaptive_support
                                 ? mle_fit_adaptive(blue, red, std::min<std::size_t>(2, config.mle.n_support),
                                                    config.mle.n_support, mo)
                                 : mle_fit(blue, red, config.mle.n_support, mo);

    CommandResult res;
    if (!fit.converged) res.warnings.push_back("MLE did not converge: best starts disagree");
    res.report = {{"schema_version", kSchemaVersion}, {"command", "sideband-fit"}, {"fit", mle_json(fit)}};
    std::ostringstream text;
    text << "n  P_n";
    if (!fit.ci_low.empty()) text << "       ci_low    ci_high";
    text << '\n';
    for (std::size_t n = 0; n < fit.dist.probs.size(); ++n) {
        text << fmt("%-2.0f", static_cast<double>(n)) << fmt(" %.6f", fit.dist.probs[n]);
        if (!fit.ci_low.empty()) text << fmt("  %.6f", fit.ci_low[n]) << fmt("  %.6f", fit.ci_high[n]);
        text << '\n';
    }
    res.text = text.str();
    return res;
}

CommandResult classical(const ExperimentConfig& config, const RunOptions& options) {
    const auto [ti, tj] = pick_cell(config, options);
    const Cell c = make_cell(config, ti, tj);
    const std::uint64_t seed = options.seed.value_or(config.sampling.seed);
    const std::size_t samples = options.shots ? static_cast<std::size_t>(*options.shots) : config.classical.samples;
    const auto works = classical_work_samples(c.protocol, c.thermal, samples, derive_seed(seed, 0xC1A5));
    ClassicalJarzynskiOptions jo;
    jo.bootstrap_resamples = config.classical.bootstrap_b;
    jo.seed = derive_seed(seed, 0xC1A6);
    const ClassicalJarzynski jr = classical_jarzynski(works, c.thermal, jo);
    double mean = 0.0;
    for (double w : works) mean += w;
    mean /= static_cast<double>(works.size());
    double var = 0.0;
    for (double w : works) var += (w - mean) * (w - mean);
    var /= static_cast<double>(std::max<std::size_t>(1, works.size() - 1));

    const double alpha = residual_amplitude(c.protocol);
    const double beta = c.thermal.beta_hnu;
    CommandResult res;
    json shape = nullptr;
    if (var > 0.0) {
        const ShapeMetrics s = sample_shape(works);
        shape = {{"skewness", s.skewness}, {"excess_kurtosis", s.excess_kurtosis}};
    }
    res.report = {{"schema_version", kSchemaVersion},
                  {"command", "classical"},
                  {"cell", cell_json(c)},
                  {"samples", works.size()},
                  {"jarzynski", jr.value},
                  {"jarzynski_standard_error", jr.standard_error},
                  {"mean_work", beta * mean},
                  {"variance_work", beta * beta * var},
                  {"shape", shape},
                  {"quantum_mean_work", beta * alpha * alpha},
                  {"quantum_variance_work", beta * beta * alpha * alpha * (2.0 * c.nbar + 1.0)}};
    std::ostringstream csv;
    write_work_samples_csv(works, csv);
    write_artifact(options, "classical_work.csv", csv.str());
    std::ostringstream text;
    text << "classical J = " << fmt("%+.5f", jr.value) << " +- " << fmt("%.5f", jr.standard_error)
         << ", <w> = " << fmt("%.5f", beta * mean) << " (quantum " << fmt("%.5f", beta * alpha * alpha) << ")\n";
    res.text = text.str();
    return res;
}

CommandResult pipeline(const ExperimentConfig& config, const RunOptions& options) {
    const auto [ti, tj] = pick_cell(config, options);
    const Cell c = make_cell(config, ti, tj);
    const std::size_t n_trunc = config.truncation.n_trunc;
    const std::uint64_t seed = options.seed.value_or(config.sampling.seed);
    const std::uint64_t shots = options.shots.value_or(config.sampling.shots);
    const std::size_t support = config.mle.n_support;
    CommandResult res;

    // Stage 1: projective measurement of the initial thermal state.
    const PhononDistribution truth = thermal_distribution(c.nbar, n_trunc);
    const ProjectionSample sample = project_sample(truth, config.detection, shots, derive_seed(seed, 0x5000));
    const CorrectionResult corr = correct_detection(sample.empirical, config.detection);

    std::vector<std::size_t> levels;
    for (std::size_t n = 0; n <= config.workstats.max_initial_n && n < corr.corrected.n_trunc(); ++n) {
        if (corr.corrected.probs[n] >= config.workstats.min_initial_weight) levels.push_back(n);
    }
    if (levels.empty()) raise(ErrorCode::Domain, "no initial level passes the weight threshold");
    const std::size_t cols = levels.back() + 1;

    // Stages 2-4 per initial level: ramp, return heating, sideband traces, MLE.
    const TransitionMatrix exact_tm = transition_matrix_analytic(c.protocol, n_trunc);
    const HeatingModel heat = return_heating(config, c.tau_us);
    std::map<std::size_t, MLEFitResult> fits;
    json mle_reports = json::array();
    for (std::size_t n : levels) {
        const PhononDistribution prep = prepare_fock(n, n_trunc, config.transfer.prep_infidelity);
        PhononDistribution final_state;
        final_state.probs.assign(n_trunc, 0.0);
        for (std::size_t k = 0; k < n_trunc; ++k) {
            if (prep.probs[k] == 0.0) continue;
            for (std::size_t m = 0; m < n_trunc; ++m) {
                final_state.probs[m] +=
                    prep.probs[k] * exact_tm.probs(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
            }
            final_state.leakage += prep.probs[k] * exact_tm.leakage[k];
        }
        if (config.heating.enabled) final_state = apply_heating(final_state, heat);

        const SidebandTrace blue =
            synthesize_sideband(final_state, SidebandKind::Blue, config.sideband, derive_seed(seed, 0x5200 + 2 * n));
        const SidebandTrace red =
            synthesize_sideband(final_state, SidebandKind::Red, config.sideband, derive_seed(seed, 0x5201 + 2 * n));
        std::ostringstream bcsv;
        std::ostringstream rcsv;
        write_trace_csv(blue, bcsv);
        write_trace_csv(red, rcsv);
        write_artifact(options, "traces/blue_n" + std::to_string(n) + ".csv", bcsv.str());
        write_artifact(options, "traces/red_n" + std::to_string(n) + ".csv", rcsv.str());

        MLEOptions mo;
        mo.starts = config.mle.starts;
        mo.bootstrap_resamples = config.mle.bootstrap_b;
        mo.seed = derive_seed(seed, 0x5100 + n);
        mo.edge_mass_is_error = false;
        MLEFitResult fit = config.mle.adaptive_support
                               ? mle_fit_adaptive(blue, red, std::min(support, n + 2), support, mo)
                               : mle_fit(blue, red, support, mo);
        if (!fit.converged) res.warnings.push_back("MLE not converged for initial n=" + std::to_string(n));
        if (fit.edge_mass > kSupportEdgeMass) {
            res.warnings.push_back("MLE support too small for initial n=" + std::to_string(n) + ": mass " +
                                   fmt("%.4f", fit.edge_mass) + " at the top level");
        }
        json fj = mle_json(fit);
        fj["n"] = n;
        fj["support"] = fit.dist.probs.size();
        fj["weight"] = corr.corrected.probs[n];
        mle_reports.push_back(std::move(fj));
        fits.emplace(n, std::move(fit));
    }

    // Stage 5: work distribution and estimators.
    const auto estimate = [&](const PhononDistribution& weights_source,
                              const std::function<const std::vector<double>&(std::size_t)>& column) {
        const ThermalParams th = fitted_thermal(weights_source, config.trap.nu_hz);
        PhononDistribution weights;
        weights.probs.assign(cols, 0.0);
        for (std::size_t n : levels) weights.probs[n] = weights_source.probs[n];
        TransitionMatrix tm;
        tm.probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support), static_cast<Eigen::Index>(cols));
        tm.delta_f_over_hnu = exact_tm.delta_f_over_hnu;
        for (std::size_t n : levels) {
            const auto& p = column(n);
            for (std::size_t m = 0; m < p.size(); ++m) {
                tm.probs(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = p[m];
            }
        }
        return std::make_pair(work_distribution(weights, tm, th), th);
    };
    const auto [wd, th_fit] = estimate(corr.corrected, [&](std::size_t n) -> const std::vector<double>& {
        return fits.at(n).dist.probs;
    });
    EstimatorReport est = estimators_exact(wd);
    est.shots = shots + 2 * static_cast<std::uint64_t>(levels.size()) * config.sideband.points *
                            config.sideband.shots_per_point;

    // Bootstrap: resample the projective record and pair it with the MLE
    // trace-resampling replicates.
    const std::size_t b_count = config.mle.bootstrap_b;
    if (b_count >= 2) {
        auto eng = rng::stream(seed, 0x50B0);
        std::vector<double> cell_p(sample.counts.size() + 1);
        for (std::size_t k = 0; k < sample.counts.size(); ++k) {
            cell_p[k] = static_cast<double>(sample.counts[k]) / static_cast<double>(shots);
        }
        cell_p.back() = static_cast<double>(sample.overflow_count) / static_cast<double>(shots);
        std::vector<double> js, fs, ms;
        for (std::size_t b = 0; b < b_count; ++b) {
            const auto counts = rng::multinomial(shots, cell_p, eng);
            PhononDistribution emp;
            emp.probs.resize(sample.counts.size());
            for (std::size_t k = 0; k < emp.probs.size(); ++k) {
                emp.probs[k] = static_cast<double>(counts[k]) / static_cast<double>(shots);
            }
            emp.leakage = static_cast<double>(counts.back()) / static_cast<double>(shots);
            const PhononDistribution w = correct_detection(emp, config.detection).corrected;
            const auto [wb, thb] = estimate(w, [&](std::size_t n) -> const std::vector<double>& {
                return fits.at(n).bootstrap_probs[b];
            });
            const EstimatorReport r = estimators_exact(wb);
            js.push_back(r.jarzynski);
            fs.push_back(r.fdt);
            ms.push_back(r.mean_work);
        }
        const auto sd = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            return std::sqrt(s / static_cast<double>(v.size() - 1));
        };
        est.errors = EstimatorErrors{sd(js), sd(fs), sd(ms)};
    }

    // Ideal reference for the same cell.
    const PhononDistribution init = thermal_distribution(c.nbar, n_trunc);
    const EstimatorReport ideal = estimators_exact(work_distribution(init, exact_tm, c.thermal));

    json report = estimators_json(est);
    report["schema_version"] = kSchemaVersion;
    report["command"] = "pipeline";
    report["cell"] = cell_json(c);
    report["seed"] = seed;
    report["delta_f_over_kt"] = exact_tm.delta_f_over_hnu * th_fit.beta_hnu;
    report["fitted_thermal"] = {{"nbar", th_fit.nbar}, {"beta_hnu", th_fit.beta_hnu}, {"t_eff_nK", th_fit.t_eff_nK}};
    report["initial_levels"] = levels;
    report["projection"] = {{"shots", shots},
                            {"counts", sample.counts},
                            {"overflow_count", sample.overflow_count},
                            {"corrected", corr.corrected.probs},
                            {"condition_number", corr.condition_number},
                            {"clipped_mass", corr.clipped_mass}};
    report["mle"] = std::move(mle_reports);
    report["heating"] = {{"enabled", config.heating.enabled}, {"delta_nbar", heat.delta_nbar()}};
    report["exact"] = estimators_json(ideal);
    report["warnings"] = res.warnings;
    res.report = std::move(report);

    write_artifact(options, "work_distribution.csv", work_distribution_csv(wd));
    std::ostringstream text;
    const auto err = est.errors.value_or(EstimatorErrors{});
    text << "cell T_eff=" << fmt("%.1f", c.thermal.t_eff_nK) << " nK, tau=" << fmt("%.1f", c.tau_us) << " us\n"
         << "  Jarzynski " << fmt("%+.4f", est.jarzynski) << " +- " << fmt("%.4f", err.jarzynski) << "  (ideal "
         << fmt("%+.4f", ideal.jarzynski) << ")\n"
         << "  FDT       " << fmt("%+.4f", est.fdt) << " +- " << fmt("%.4f", err.fdt) << "  (ideal "
         << fmt("%+.4f", ideal.fdt) << ")\n"
         << "  <w>       " << fmt("%+.4f", est.mean_work) << " +- " << fmt("%.4f", err.mean_work) << "  (ideal "
         << fmt("%+.4f", ideal.mean_work) << ")\n";
    res.text = text.str();
    return res;
}

CommandResult run(const std::string& name, const ExperimentConfig& config, const RunOptions& options) {
    using Fn = CommandResult (*)(const ExperimentConfig&, const RunOptions&);
    static const std::map<std::string, Fn> table = {
        {"table1", &table1},           {"workdist", &workdist},     {"propagate", &propagate},
        {"thermal", &thermal},         {"project", &project},       {"sideband-synth", &sideband_synth},
        {"sideband-fit", &sideband_fit}, {"classical", &classical}, {"pipeline", &pipeline},
    };
    const auto it = table.find(name);
    if (it == table.end()) raise(ErrorCode::InvalidArgument, "unknown command '" + name + "'");
    config.validate();
    CommandResult res = it->second(config, options);
    res.report["warnings"] = res.warnings;
    write_artifact(options, name + ".json", res.report.dump(2) + "\n");
    write_artifact(options, "effective_config.ini", emit_config(config));
    return res;
}

}  // namespace qje::cmd

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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass a criterion number to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "classical.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "dynamics.hpp"
#include "fockspace.hpp"
#include "mle.hpp"
#include "projection.hpp"
#include "sideband.hpp"
#include "workstats.hpp"

using namespace qje;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + ("FAILED " + what);
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

constexpr double kD = 0.9317;
constexpr double kNu = 20000.0;
const double kNbar[] = {0.051, 0.094, 0.157};
const double kTau[] = {5.0, 25.0, 45.0};

EstimatorReport exact_cell(double d, double theta, double nbar, std::size_t n_trunc = 128) {
    const auto th = effective_temperature(nbar, kNu);
    const auto tm = transition_matrix_analytic(RampProtocol::linear(d, theta), n_trunc);
    return estimators_exact(work_distribution(thermal_distribution(nbar, n_trunc), tm, th));
}

double tv(const PhononDistribution& a, const PhononDistribution& b) {
    const std::size_t n = std::max(a.n_trunc(), b.n_trunc());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a.at(i) - b.at(i));
    return 0.5 * s;
}

Outcome jarzynski_identity() {
    Outcome o;
    double worst = 0.0;
    for (double nbar : kNbar) {
        for (double tau : kTau) worst = std::max(worst, std::abs(exact_cell(kD, ramp_theta(kNu, tau), nbar).jarzynski));
    }
    o.require(worst < 1e-6, "grid cells");
    std::mt19937_64 gen(2026);
    std::uniform_real_distribution<double> ud(0.0, 1.5);
    std::uniform_real_distribution<double> ut(1e-3, 4 * std::numbers::pi);
    std::uniform_real_distribution<double> un(1e-3, 2.0);
    double worst_random = 0.0;
    for (int i = 0; i < 100; ++i) {
        worst_random = std::max(worst_random, std::abs(exact_cell(ud(gen), ut(gen), un(gen)).jarzynski));
    }
    o.require(worst_random < 1e-6, "random cases");
    o.note("max |J| grid " + num(worst) + ", random " + num(worst_random));
    return o;
}

Outcome free_energy() {
    Outcome o;
    const double expected[] = {-2.63, -2.13, -1.73};
    for (int i = 0; i < 3; ++i) {
        const auto th = effective_temperature(kNbar[i], kNu);
        const auto tm = transition_matrix_analytic(RampProtocol::linear(kD, ramp_theta(kNu, 5.0)), 128);
        const double df = tm.delta_f_over_hnu * th.beta_hnu;
        o.require(std::abs(df - expected[i]) <= 0.01, "dF at " + num(th.t_eff_nK));
        o.note(num(th.t_eff_nK) + " nK: " + num(df, 5));
    }
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    double worst = 0.0;
    constexpr std::size_t kN = 128;
    for (double tau : kTau) {
        // The matrix does not depend on temperature; the three rows share it.
        const auto p = RampProtocol::linear(kD, ramp_theta(kNu, tau));
        const auto a = transition_matrix_analytic(p, kN);
        const auto n = transition_matrix_numeric(p, kN, 400);
        worst = std::max(worst, (a.probs - n.probs).leftCols(kN / 2 + 1).cwiseAbs().maxCoeff());
    }
    o.require(worst < 1e-6, "propagator");
    o.note("propagator max diff " + num(worst));

    constexpr int kLevels = 11;
    constexpr int kPad = 90;
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(kLevels + kPad, kLevels + kPad);
    for (int k = 1; k < kLevels + kPad; ++k) {
        gen(k, k - 1) = std::sqrt(static_cast<double>(k));
        gen(k - 1, k) = -std::sqrt(static_cast<double>(k));
    }
    double worst_d = 0.0;
    for (double alpha = 0.0; alpha <= 2.0 + 1e-12; alpha += 0.125) {
        const Eigen::MatrixXd u = (alpha * gen).exp();
        const auto el = displacement_elements(alpha, 128);
        for (int m = 0; m < kLevels; ++m) {
            for (int k = 0; k < kLevels; ++k) worst_d = std::max(worst_d, std::abs(el.matrix(m, k) - u(m, k) * u(m, k)));
        }
    }
    o.require(worst_d < 1e-9, "displacement elements");
    o.note("displacement max diff " + num(worst_d));
    return o;
}

Outcome mean_work() {
    Outcome o;
    const double derived[] = {1.678, 0.703, 0.020};
    const double table[] = {1.598, 0.602};
    const double sigma[] = {0.190, 0.242};
    double prev = INFINITY;
    for (int j = 0; j < 3; ++j) {
        const double w = exact_cell(kD, ramp_theta(kNu, kTau[j]), kNbar[2]).mean_work;
        o.require(std::abs(w - derived[j]) < 1e-3, "mean work at " + num(kTau[j]) + " us");
        if (j < 2) o.require(std::abs(w - table[j]) <= sigma[j], "within 1 sigma at " + num(kTau[j]) + " us");
        o.require(w < prev, "monotone in tau");
        prev = w;
        o.note(num(kTau[j]) + " us: " + num(w, 5));
    }
    o.require(prev < 0.05, "ideal 45 us below 0.05");

    const ExperimentConfig cfg;
    cmd::RunOptions opt;
    opt.exact = true;
    const auto cells = cmd::table1(cfg, opt).report["cells"];
    for (const auto& c : cells) {
        if (c["cell"]["t_index"] != 2 || c["cell"]["tau_index"] != 2) continue;
        const double ideal = c["mean_work"];
        const double heated = c["heated"]["mean_work"];
        o.require(std::abs(heated - 0.131) < std::abs(ideal - 0.131), "heating moves toward 0.131");
        o.note("45 us heated " + num(heated, 4));
    }
    return o;
}

Outcome fdt_near_equilibrium() {
    Outcome o;
    for (double nbar : kNbar) {
        const auto r = exact_cell(kD, ramp_theta(kNu, 45.0), nbar);
        const double t = effective_temperature(nbar, kNu).t_eff_nK;
        o.require(std::abs(r.fdt) <= 0.02, "FDT at " + num(t) + " nK");
        o.note(num(t) + " nK: " + num(r.fdt, 4));
    }
    return o;
}

Outcome non_gaussianity() {
    Outcome o;
    const auto th = effective_temperature(kNbar[2], kNu);
    const auto p = RampProtocol::linear(kD, ramp_theta(kNu, 5.0));
    const auto wd = work_distribution(thermal_distribution(kNbar[2], 128), transition_matrix_analytic(p, 128), th);
    const double qs = gaussianity_metrics(wd).skewness;
    o.require(qs > 0.5, "quantum skewness");
    const auto works = classical_work_samples(p, th, 1000000, 11);
    const double cs = sample_shape(works).skewness;
    o.require(std::abs(cs) < 0.1, "classical skewness");
    ClassicalJarzynskiOptions jo;
    jo.bootstrap_resamples = 200;
    jo.seed = 12;
    const auto j = classical_jarzynski(works, th, jo);
    o.require(std::abs(j.value) <= 3 * j.standard_error, "classical Jarzynski");
    o.note("quantum skew " + num(qs) + ", classical skew " + num(cs) + ", classical J " + num(j.value) + " +- " +
           num(j.standard_error));
    return o;
}

Outcome measurement_round_trips() {
    Outcome o;
    double worst_ideal = 0.0;
    double worst_corrected = 0.0;
    std::uint64_t seed = 70;
    for (double nbar : kNbar) {
        const auto truth = thermal_distribution(nbar, 128);
        worst_ideal = std::max(worst_ideal, tv(project_sample(truth, DetectionModel{}, 1000000, seed++).empirical, truth));
        for (double eps : {0.01, 0.02}) {
            DetectionModel m;
            m.eps_dark = eps;
            m.eps_bright = eps;
            const auto s = project_sample(truth, m, 5000000, seed++);
            worst_corrected = std::max(worst_corrected, tv(correct_detection(s.empirical, m).corrected, truth));
        }
    }
    o.require(worst_ideal < 0.002, "ideal projection");
    o.require(worst_corrected < 1e-3, "corrected projection");

    const ExperimentConfig cfg;
    std::vector<PhononDistribution> cases;
    for (std::size_t n = 0; n <= 5; ++n) cases.push_back(PhononDistribution::fock(n, 6));
    for (double nbar : {0.157, 1.0}) {
        // Thermal shape cut at n = 5.
        std::vector<double> p(6);
        double s = 0.0;
        for (std::size_t n = 0; n < 6; ++n) s += (p[n] = std::pow(nbar / (1.0 + nbar), static_cast<double>(n)));
        for (double& x : p) x /= s;
        cases.push_back(PhononDistribution::from_probs(p));
    }
    std::mt19937_64 gen(77);
    std::gamma_distribution<double> g(1.0, 1.0);
    for (int k = 0; k < 4; ++k) {
        std::vector<double> p(6);
        double s = 0.0;
        for (double& x : p) s += (x = g(gen));
        for (double& x : p) x /= s;
        cases.push_back(PhononDistribution::from_probs(p));
    }
    double worst_mle = 0.0;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto blue = synthesize_sideband(cases[k], SidebandKind::Blue, cfg.sideband, 700 + 2 * k);
        const auto red = synthesize_sideband(cases[k], SidebandKind::Red, cfg.sideband, 701 + 2 * k);
        MLEOptions mo;
        mo.seed = k;
        mo.edge_mass_is_error = false;
        worst_mle = std::max(worst_mle, tv(mle_fit(blue, red, 6, mo).dist, cases[k]));
    }
    o.require(worst_mle < 0.05, "MLE round trip");
    o.note("TV ideal " + num(worst_ideal) + ", corrected " + num(worst_corrected) + ", MLE " + num(worst_mle) +
           " over " + std::to_string(cases.size()) + " distributions");
    return o;
}

Outcome adiabatic_transfer() {
    Outcome o;
    const ExperimentConfig cfg;
    double worst = 1.0;
    for (int n = 1; n <= 6; ++n) {
        worst = std::min(worst, adiabatic_transfer_fidelity(n, cfg.transfer.pulse_time_us, cfg.transfer.delta0_khz,
                                                            cfg.transfer.omega_max_khz));
    }
    o.require(worst > 0.99, "transfer fidelity");
    o.note("T=" + num(cfg.transfer.pulse_time_us) + " us, delta0=" + num(cfg.transfer.delta0_khz) +
           " kHz, Omega=" + num(cfg.transfer.omega_max_khz) + " kHz, min fidelity " + num(worst, 6));
    return o;
}

Outcome pipeline() {
    Outcome o;
    const ExperimentConfig cfg;
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> bars;
    std::string cells;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            cmd::RunOptions opt;
            opt.cell = std::make_pair(i, j);
            const auto r = cmd::pipeline(cfg, opt).report;
            const double jz = r["jarzynski"];
            const double err = r["errors"]["jarzynski"];
            o.require(std::abs(jz) <= 0.05, "cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
            bars.push_back(err);
            cells += (cells.empty() ? "" : " ") + num(jz, 2) + "+-" + num(err, 2);
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::sort(bars.begin(), bars.end());
    const double median = bars[bars.size() / 2];
    o.require(median >= 0.01 && median <= 0.15, "median error bar comparable to 0.03-0.05");
    o.require(seconds < 600.0, "runtime");
    o.note("J " + cells + "; median bar " + num(median, 3) + "; " + num(seconds, 3) + " s");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"Jarzynski identity", jarzynski_identity},
        {"free energy difference", free_energy},
        {"oracle equivalence", oracle_equivalence},
        {"mean dissipated work", mean_work},
        {"FDT near equilibrium", fdt_near_equilibrium},
        {"non-Gaussianity contrast", non_gaussianity},
        {"measurement round trips", measurement_round_trips},
        {"adiabatic transfer", adiabatic_transfer},
        {"end-to-end pipeline", pipeline},
    };
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, s,
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}

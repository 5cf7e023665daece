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

#include "qje/qje.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "fockspace.hpp"
#include "workstats.hpp"

struct qje_config {
    qje::ExperimentConfig value;
};
struct qje_distribution {
    qje::PhononDistribution value;
};
struct qje_transitions {
    qje::TransitionMatrix value;
};
struct qje_work {
    qje::WorkDistribution value;
};

namespace {

thread_local std::string last_error;

qje_status fail(qje_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

/// Runs `body` translating exceptions into status codes.
template <typename Body>
qje_status guarded(Body&& body) noexcept {
    try {
        body();
        return QJE_OK;
    } catch (const qje::Error& e) {
        return fail(static_cast<qje_status>(static_cast<int>(e.code())), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(QJE_ERR_INVALID_ARGUMENT, std::string("bad options JSON: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(QJE_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(QJE_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(QJE_ERR_INTERNAL, "unknown failure");
    }
}

char* duplicate(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool ok, const char* what) {
    if (!ok) qje::raise(qje::ErrorCode::InvalidArgument, what);
}

qje::cmd::RunOptions parse_options(const char* text) {
    qje::cmd::RunOptions o;
    if (!text || !*text) return o;
    const auto j = nlohmann::json::parse(text);
    require(j.is_object(), "options must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") {
            o.seed = value.get<std::uint64_t>();
        } else if (key == "shots") {
            o.shots = value.get<std::uint64_t>();
        } else if (key == "exact") {
            o.exact = value.get<bool>();
        } else if (key == "out") {
            o.out_dir = value.get<std::string>();
        } else if (key == "cell") {
            require(value.is_array() && value.size() == 2, "cell must be [t_index, tau_index]");
            o.cell = std::make_pair(value[0].get<std::size_t>(), value[1].get<std::size_t>());
        } else if (key == "overlay") {
            o.classical_overlay = value.get<bool>();
        } else if (key == "kind") {
            o.sideband_kind = value.get<std::string>();
        } else if (key == "blue") {
            o.blue_trace = value.get<std::string>();
        } else if (key == "red") {
            o.red_trace = value.get<std::string>();
        } else {
            qje::raise(qje::ErrorCode::InvalidArgument, "unknown option '" + key + "'");
        }
    }
    return o;
}

}  // namespace

extern "C" {

const char* qje_version(void) { return "1.0.0"; }

const char* qje_status_name(qje_status status) {
    if (status == QJE_OK) return "Ok";
    if (status < QJE_ERR_INVALID_ARGUMENT || status > QJE_ERR_INTERNAL) return "Unknown";
    return qje::to_string(static_cast<qje::ErrorCode>(status));
}

const char* qje_last_error(void) { return last_error.c_str(); }

void qje_string_free(char* text) { std::free(text); }

qje_status qje_config_default(qje_config** out) {
    return guarded([&] {
        require(out != nullptr, "null output pointer");
        *out = new qje_config{};
    });
}

qje_status qje_config_load(const char* path, qje_config** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new qje_config{qje::load_config(path)};
    });
}

qje_status qje_config_parse(const char* text, qje_config** out) {
    return guarded([&] {
        require(text && out, "null argument");
        *out = new qje_config{qje::parse_config(text)};
    });
}

qje_status qje_config_set(qje_config* config, const char* section, const char* key, const char* value) {
    return guarded([&] {
        require(config && section && key && value, "null argument");
        qje::ExperimentConfig updated = config->value;
        qje::set_config_value(updated, section, key, value);
        updated.validate();
        config->value = std::move(updated);
    });
}

qje_status qje_config_apply_env(qje_config* config) {
    return guarded([&] {
        require(config != nullptr, "null config");
        qje::apply_env_overrides(config->value);
    });
}

qje_status qje_config_emit(const qje_config* config, char** out_text) {
    return guarded([&] {
        require(config && out_text, "null argument");
        *out_text = duplicate(qje::emit_config(config->value));
    });
}

void qje_config_free(qje_config* config) { delete config; }

qje_status qje_thermal_distribution(double nbar, size_t n_trunc, qje_distribution** out) {
    return guarded([&] {
        require(out != nullptr, "null output pointer");
        *out = new qje_distribution{qje::thermal_distribution(nbar, n_trunc)};
    });
}

qje_status qje_distribution_from_probs(const double* probs, size_t count, qje_distribution** out) {
    return guarded([&] {
        require(probs && out && count > 0, "need a non-empty probability array");
        *out = new qje_distribution{qje::PhononDistribution::from_probs({probs, probs + count})};
    });
}

size_t qje_distribution_size(const qje_distribution* dist) { return dist ? dist->value.n_trunc() : 0; }

qje_status qje_distribution_probs(const qje_distribution* dist, double* out, size_t capacity) {
    return guarded([&] {
        require(dist && out, "null argument");
        require(capacity >= dist->value.n_trunc(), "output buffer too small");
        std::copy(dist->value.probs.begin(), dist->value.probs.end(), out);
    });
}

double qje_distribution_mean(const qje_distribution* dist) { return dist ? dist->value.mean() : 0.0; }

void qje_distribution_free(qje_distribution* dist) { delete dist; }

qje_status qje_effective_temperature(double nbar, double nu_hz, double* beta_hnu, double* t_eff_nK) {
    return guarded([&] {
        const qje::ThermalParams t = qje::effective_temperature(nbar, nu_hz);
        if (beta_hnu) *beta_hnu = t.beta_hnu;
        if (t_eff_nK) *t_eff_nK = t.t_eff_nK;
    });
}

qje_status qje_transitions_linear(double d, double theta, size_t n_trunc, int numeric, qje_transitions** out) {
    return guarded([&] {
        require(out != nullptr, "null output pointer");
        const auto protocol = qje::RampProtocol::linear(d, theta);
        *out = new qje_transitions{numeric ? qje::transition_matrix_numeric(protocol, n_trunc, 400)
                                           : qje::transition_matrix_analytic(protocol, n_trunc)};
    });
}

size_t qje_transitions_size(const qje_transitions* t) { return t ? t->value.n_trunc() : 0; }

qje_status qje_transitions_element(const qje_transitions* t, size_t m, size_t n, double* out) {
    return guarded([&] {
        require(t && out, "null argument");
        require(m < t->value.n_trunc() && n < t->value.n_trunc(), "index outside the truncation");
        *out = t->value.probs(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    });
}

double qje_transitions_alpha_res(const qje_transitions* t) { return t ? t->value.alpha_res_abs : 0.0; }

qje_status qje_transitions_heat(qje_transitions* t, double delta_nbar) {
    return guarded([&] {
        require(t != nullptr, "null transitions");
        t->value = qje::apply_heating(t->value, qje::HeatingModel{1.0, delta_nbar});
    });
}

void qje_transitions_free(qje_transitions* t) { delete t; }

qje_status qje_work_distribution(const qje_distribution* initial, const qje_transitions* t, double beta_hnu,
                                 qje_work** out) {
    return guarded([&] {
        require(initial && t && out, "null argument");
        qje::ThermalParams th;
        th.beta_hnu = beta_hnu;
        *out = new qje_work{qje::work_distribution(initial->value, t->value, th)};
    });
}

qje_status qje_work_probability(const qje_work* work, int delta_n, double* out) {
    return guarded([&] {
        require(work && out, "null argument");
        *out = work->value.at(delta_n);
    });
}

qje_status qje_work_estimators(const qje_work* work, qje_estimators* out) {
    return guarded([&] {
        require(work && out, "null argument");
        const qje::EstimatorReport r = qje::estimators_exact(work->value);
        *out = qje_estimators{r.jarzynski, r.fdt, r.mean_work};
    });
}

qje_status qje_work_shape(const qje_work* work, double* skewness, double* excess_kurtosis) {
    return guarded([&] {
        require(work != nullptr, "null work distribution");
        const qje::ShapeMetrics s = qje::gaussianity_metrics(work->value);
        if (skewness) *skewness = s.skewness;
        if (excess_kurtosis) *excess_kurtosis = s.excess_kurtosis;
    });
}

void qje_work_free(qje_work* work) { delete work; }

qje_status qje_run_command(const qje_config* config, const char* command, const char* options_json,
                           char** out_json) {
    return guarded([&] {
        require(config && command && out_json, "null argument");
        const auto result = qje::cmd::run(command, config->value, parse_options(options_json));
        nlohmann::json j = {{"report", result.report}, {"text", result.text}, {"warnings", result.warnings}};
        *out_json = duplicate(j.dump());
    });
}

}  // extern "C"

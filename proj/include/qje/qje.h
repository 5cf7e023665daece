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

/* C interface to the qje simulation library. Every call that can fail
 * returns a qje_status; on failure qje_last_error() describes the problem
 * for the calling thread until its next failing call. Strings handed out by
 * the library are released with qje_string_free, handles with their own
 * *_free function. */

#ifndef QJE_QJE_H
#define QJE_QJE_H

#include <stddef.h>

#if defined(QJE_BUILDING_LIBRARY)
#define QJE_API __attribute__((visibility("default")))
#else
#define QJE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qje_status {
    QJE_OK = 0,
    QJE_ERR_INVALID_ARGUMENT = 1,
    QJE_ERR_DOMAIN = 2,
    QJE_ERR_TRUNCATION_INSUFFICIENT = 3,
    QJE_ERR_QUADRATURE_FAILURE = 4,
    QJE_ERR_STEP_SIZE_TOO_COARSE = 5,
    QJE_ERR_ZERO_VARIANCE = 6,
    QJE_ERR_ILL_CONDITIONED = 7,
    QJE_ERR_INTEGRATION_FAILURE = 8,
    QJE_ERR_SUPPORT_TOO_SMALL = 9,
    QJE_ERR_CONFIG = 10,
    QJE_ERR_IO = 11,
    QJE_ERR_INTERNAL = 12
} qje_status;

typedef struct qje_config qje_config;
typedef struct qje_distribution qje_distribution;
typedef struct qje_transitions qje_transitions;
typedef struct qje_work qje_work;

typedef struct qje_estimators {
    double jarzynski;
    double fdt;
    double mean_work;
} qje_estimators;

QJE_API const char* qje_version(void);
QJE_API const char* qje_status_name(qje_status status);
QJE_API const char* qje_last_error(void);
QJE_API void qje_string_free(char* text);

/* Configuration */
QJE_API qje_status qje_config_default(qje_config** out);
QJE_API qje_status qje_config_load(const char* path, qje_config** out);
QJE_API qje_status qje_config_parse(const char* text, qje_config** out);
QJE_API qje_status qje_config_set(qje_config* config, const char* section, const char* key, const char* value);
/* Applies QJE_<SECTION>__<KEY> environment variables. */
QJE_API qje_status qje_config_apply_env(qje_config* config);
QJE_API qje_status qje_config_emit(const qje_config* config, char** out_text);
QJE_API void qje_config_free(qje_config* config);

/* Phonon distributions */
QJE_API qje_status qje_thermal_distribution(double nbar, size_t n_trunc, qje_distribution** out);
QJE_API qje_status qje_distribution_from_probs(const double* probs, size_t count, qje_distribution** out);
QJE_API size_t qje_distribution_size(const qje_distribution* dist);
QJE_API qje_status qje_distribution_probs(const qje_distribution* dist, double* out, size_t capacity);
QJE_API double qje_distribution_mean(const qje_distribution* dist);
QJE_API void qje_distribution_free(qje_distribution* dist);

QJE_API qje_status qje_effective_temperature(double nbar, double nu_hz, double* beta_hnu, double* t_eff_nK);

/* Transition matrices P(m <- n) for the linear ramp of height d over the
 * dimensionless duration theta. numeric != 0 selects the step-halving
 * propagator instead of the closed form. */
QJE_API qje_status qje_transitions_linear(double d, double theta, size_t n_trunc, int numeric,
                                          qje_transitions** out);
QJE_API size_t qje_transitions_size(const qje_transitions* t);
QJE_API qje_status qje_transitions_element(const qje_transitions* t, size_t m, size_t n, double* out);
QJE_API double qje_transitions_alpha_res(const qje_transitions* t);
/* Heats every column by delta_nbar quanta. */
QJE_API qje_status qje_transitions_heat(qje_transitions* t, double delta_nbar);
QJE_API void qje_transitions_free(qje_transitions* t);

/* Work statistics */
QJE_API qje_status qje_work_distribution(const qje_distribution* initial, const qje_transitions* t,
                                         double beta_hnu, qje_work** out);
QJE_API qje_status qje_work_probability(const qje_work* work, int delta_n, double* out);
QJE_API qje_status qje_work_estimators(const qje_work* work, qje_estimators* out);
QJE_API qje_status qje_work_shape(const qje_work* work, double* skewness, double* excess_kurtosis);
QJE_API void qje_work_free(qje_work* work);

/* Runs a named command ("table1", "workdist", "propagate", "thermal",
 * "project", "sideband-synth", "sideband-fit", "classical", "pipeline").
 * options_json may be NULL or an object with any of: seed, shots, exact,
 * out, cell [t, tau], overlay, kind, blue, red. On success *out_json holds
 * {"report": ..., "text": ..., "warnings": [...]}. */
QJE_API qje_status qje_run_command(const qje_config* config, const char* command, const char* options_json,
                                   char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* QJE_QJE_H */

// Copyright 2026 The obsv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the obsv library. Every handle is opaque and owned by the
 * caller; strings returned by the library stay valid until the owning handle
 * is freed (or, for obsv_last_error, until the next call on the same thread).
 */

#ifndef OBSV_OBSV_H_
#define OBSV_OBSV_H_

#include <stddef.h>

#if defined(OBSV_BUILDING_LIBRARY)
#define OBSV_API __attribute__((visibility("default")))
#else
#define OBSV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct obsv_scenario obsv_scenario;
typedef struct obsv_analysis obsv_analysis;

typedef enum obsv_status {
  OBSV_OK = 0,
  OBSV_ERR_IO = 1,
  OBSV_ERR_PARSE = 2,
  OBSV_ERR_VALIDATION = 3,
  OBSV_ERR_NUMERIC = 4,
  OBSV_ERR_ARGUMENT = 5,
  OBSV_ERR_SELF_CHECK = 6,
  OBSV_ERR_INTERNAL = 7
} obsv_status;

/* Values double as CLI exit codes. */
typedef enum obsv_verdict {
  OBSV_VERDICT_OBSERVABLE = 0,
  OBSV_VERDICT_HYPOTHESES_UNMET = 2,
  OBSV_VERDICT_NOT_OBSERVABLE = 3
} obsv_verdict;

/* Quantities that were not computed are NaN (doubles) or -1 (k_rho). */
typedef struct obsv_constants {
  int N;
  int trusted;
  double gamma_hat;
  double delta_hat;
  double rho_hat;
  double horizon;
  double k_T;
  double K_T;
  double kappa_star;
  double gamma_tilde;
  int k_rho;
  double c_k_rho;
  double delta_tilde;
  double min_c_sq;
  double perturbed_rho_hat;
} obsv_constants;

typedef struct obsv_plot_result {
  int files_written;
  int warning_count;
  const char* warnings; /* newline separated; thread-local, valid until the next call */
} obsv_plot_result;

OBSV_API const char* obsv_version(void);
OBSV_API const char* obsv_last_error(void);
OBSV_API const char* obsv_status_name(obsv_status status);

OBSV_API obsv_status obsv_scenario_load(const char* path, obsv_scenario** out);
OBSV_API obsv_status obsv_scenario_parse(const char* json_text, const char* base_dir,
                                         obsv_scenario** out);
/* Dotted field path, e.g. "perturbation.c" or "truncation.N". */
OBSV_API obsv_status obsv_scenario_set_number(obsv_scenario* scenario, const char* name,
                                              double value);
/* Copies the 64-hex-digit SHA-256 digest plus terminator into buf (len >= 65). */
OBSV_API obsv_status obsv_scenario_digest(const obsv_scenario* scenario, char* buf, size_t len);
OBSV_API void obsv_scenario_free(obsv_scenario* scenario);

OBSV_API obsv_status obsv_analyze(const obsv_scenario* scenario, obsv_analysis** out);
OBSV_API obsv_verdict obsv_analysis_verdict(const obsv_analysis* analysis);
OBSV_API const char* obsv_analysis_reason(const obsv_analysis* analysis);
OBSV_API obsv_status obsv_analysis_constants(const obsv_analysis* analysis, obsv_constants* out);
OBSV_API const char* obsv_analysis_certificate_json(const obsv_analysis* analysis);
/* OBSV_ERR_SELF_CHECK with a description in obsv_last_error when an internal
 * consistency check failed. */
OBSV_API obsv_status obsv_analysis_self_check(const obsv_analysis* analysis);
/* Writes certificate.json, sequences.csv, tail_table.csv and manifest.json. */
OBSV_API obsv_status obsv_analysis_write(const obsv_analysis* analysis, const char* out_dir);
OBSV_API void obsv_analysis_free(obsv_analysis* analysis);

OBSV_API obsv_status obsv_emit_plot_data(const char* dir, int strict, obsv_plot_result* out);

#ifdef __cplusplus
}
#endif

#endif /* OBSV_OBSV_H_ */

// Copyright 2026 The sensilogit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SENSILOGIT_H_
#define SENSILOGIT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define SL_API __attribute__((visibility("default")))
#else
#define SL_API
#endif

/* Status codes; the non-zero values are also the CLI exit codes. */
typedef enum {
  SL_OK = 0,
  SL_ERR_USAGE = 1,
  SL_ERR_DATA = 2,
  SL_ERR_NUMERICAL = 3,
  SL_ERR_INTERNAL = 4
} sl_status;

typedef struct sl_dataset sl_dataset;
typedef struct sl_fit sl_fit;

/* Message of the last failed call on this thread; "" after success. */
SL_API const char* sl_last_error(void);
SL_API const char* sl_version(void);

/* Runs a command ("fit", "simulate", "design", "explore", "report") on a
   JSON config file. out_dir may be NULL; seed is used when has_seed != 0. */
SL_API sl_status sl_run(const char* command, const char* config_path, const char* out_dir,
                        int has_seed, uint64_t seed);

/* schema_json: {"panellist": ..., "formulation": ..., "attribute": ...,
   "response": ..., "categories": n}; NULL for defaults. */
SL_API sl_status sl_dataset_load_csv(const char* path, const char* schema_json, sl_dataset** out);
/* collapse_json: "nine_to_five" or {"1": 1, ...}. */
SL_API sl_status sl_dataset_collapse(const sl_dataset* ds, const char* collapse_json,
                                     int target_categories, sl_dataset** out);
SL_API size_t sl_dataset_size(const sl_dataset* ds);
SL_API void sl_dataset_free(sl_dataset* ds);

/* model_json: {"terms": [...], "odds": "proportional" | "non_proportional",
   "random_intercept": bool, "references": {...}}; options_json may be NULL
   or {"quad_order", "max_iter", "grad_tol"}. */
SL_API sl_status sl_fit_model(const sl_dataset* ds, const char* model_json,
                              const char* options_json, sl_fit** out);
/* Reads the fit.json document. */
SL_API sl_status sl_fit_from_json(const char* json, sl_fit** out);
/* Writes a malloc'd string to *out; release with sl_string_free. */
SL_API sl_status sl_fit_to_json(const sl_fit* fit, char** out);
SL_API sl_status sl_fit_loglik(const sl_fit* fit, double* out);
SL_API size_t sl_fit_param_count(const sl_fit* fit);
SL_API sl_status sl_fit_params(const sl_fit* fit, double* out, size_t n);
SL_API int sl_fit_converged(const sl_fit* fit);
SL_API void sl_fit_free(sl_fit* fit);
SL_API void sl_string_free(char* s);

/* Category probabilities for one (formulation, attribute) cell into
   probs[0..n), n the number of categories. population != 0 integrates over
   the random intercept; otherwise u = 0. */
SL_API sl_status sl_predict(const sl_fit* fit, const char* formulation, const char* attribute,
                            int population, int quad_order, double* probs, size_t n);

SL_API sl_status sl_lrt(const sl_fit* null_fit, const sl_fit* alt_fit, double* statistic,
                        double* df, double* p_value);
/* counts is row-major rows x cols. */
SL_API sl_status sl_chisq_association(const double* counts, size_t rows, size_t cols,
                                      double* statistic, double* df, double* p_value);
SL_API sl_status sl_chi2_sf(double x, double df, double* p_value);
/* Writes lambda when (t, b, h, r) is admissible. */
SL_API sl_status sl_bibd_validate(int t, int b, int h, int r, int* lambda);

#ifdef __cplusplus
}
#endif

#endif

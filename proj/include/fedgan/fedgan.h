/*
 * Copyright 2026 The FedGAN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the fedgan library.
 *
 * Every function returns a fedgan_status. On failure the thread-local
 * message from fedgan_last_error() describes the cause. Handles are opaque
 * and must be released with the matching *_free function; *_free accepts
 * NULL. Text outputs use the (buf, cap, needed) convention: *needed always
 * receives the full length including the terminator, and the call fails
 * with FEDGAN_ERR_BUFFER when cap is too small.
 */

#ifndef FEDGAN_FEDGAN_H_
#define FEDGAN_FEDGAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(FEDGAN_BUILDING_LIBRARY)
#define FEDGAN_API __attribute__((visibility("default")))
#else
#define FEDGAN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fedgan_status {
  FEDGAN_OK = 0,
  FEDGAN_ERR_CONFIG = 1,
  FEDGAN_ERR_DIMENSION = 2,
  FEDGAN_ERR_CONTRACT = 3,
  FEDGAN_ERR_NUMERIC = 4,
  FEDGAN_ERR_FORMAT = 5,
  FEDGAN_ERR_FUSION = 6,
  FEDGAN_ERR_ORACLE_QUALITY = 7,
  FEDGAN_ERR_IO = 8,
  FEDGAN_ERR_ARGUMENT = 9,
  FEDGAN_ERR_BUFFER = 10,
  FEDGAN_ERR_INTERNAL = 11
} fedgan_status;

typedef struct fedgan_config fedgan_config;
typedef struct fedgan_result fedgan_result;
typedef struct fedgan_comparison fedgan_comparison;

typedef struct fedgan_round_record {
  size_t round;
  double score;
  double emd;
  double wall_s;
} fedgan_round_record;

typedef struct fedgan_summary {
  double best_score;
  double min_emd;
  double final_score;
  double final_emd;
  double total_wall_s;
  double oracle_accuracy;
  int has_optimal_round;
  size_t optimal_round;
} fedgan_summary;

typedef struct fedgan_strategy_row {
  const char* strategy; /* static string: "dg", "g", "d" or "none" */
  double median_score;
  double median_emd;
  size_t wins[4]; /* against dg, g, d, none */
} fedgan_strategy_row;

typedef struct fedgan_gradcheck_report {
  size_t instances;
  double max_error_d;
  double max_error_g;
  double max_error_mlp;
} fedgan_gradcheck_report;

typedef struct fedgan_oracle_report {
  size_t n_classes;
  size_t train_size;
  size_t holdout_size;
  double holdout_accuracy;
  double threshold;
  /* Score of the oracle on metric_n held-out rows. */
  double real_score;
} fedgan_oracle_report;

FEDGAN_API const char* fedgan_version(void);
FEDGAN_API const char* fedgan_status_string(fedgan_status status);
/* Message for the last failure on the calling thread; "" if none. */
FEDGAN_API const char* fedgan_last_error(void);

/* Configuration. */
FEDGAN_API size_t fedgan_config_key_count(void);
FEDGAN_API const char* fedgan_config_key(size_t index);
FEDGAN_API fedgan_status fedgan_config_new(fedgan_config** out);
FEDGAN_API fedgan_status fedgan_config_parse(const char* text,
                                             fedgan_config** out);
/* Defaults < file_text < env_seed < overrides. Any of file_text, env_seed,
 * keys and values may be NULL. */
FEDGAN_API fedgan_status fedgan_config_resolve(const char* file_text,
                                               const char* env_seed,
                                               const char* const* keys,
                                               const char* const* values,
                                               size_t n_overrides,
                                               fedgan_config** out);
FEDGAN_API fedgan_status fedgan_config_set(fedgan_config* config,
                                           const char* key, const char* value);
FEDGAN_API fedgan_status fedgan_config_validate(const fedgan_config* config);
FEDGAN_API fedgan_status fedgan_config_get(const fedgan_config* config,
                                           const char* key, char* buf,
                                           size_t cap, size_t* needed);
FEDGAN_API fedgan_status fedgan_config_render(const fedgan_config* config,
                                              char* buf, size_t cap,
                                              size_t* needed);
FEDGAN_API void fedgan_config_free(fedgan_config* config);

/* Training. Writes the CSV to the configured output unless it is empty. */
FEDGAN_API fedgan_status fedgan_run_experiment(const fedgan_config* config,
                                               fedgan_result** out);
FEDGAN_API size_t fedgan_result_round_count(const fedgan_result* result);
FEDGAN_API fedgan_status fedgan_result_round(const fedgan_result* result,
                                             size_t index,
                                             fedgan_round_record* out);
FEDGAN_API fedgan_status fedgan_result_summary(const fedgan_result* result,
                                               fedgan_summary* out);
FEDGAN_API fedgan_status fedgan_result_csv(const fedgan_result* result,
                                           char* buf, size_t cap,
                                           size_t* needed);
FEDGAN_API void fedgan_result_free(fedgan_result* result);

/* Strategy grid over seeds. */
FEDGAN_API fedgan_status fedgan_compare(const fedgan_config* config,
                                        const uint64_t* seeds, size_t n_seeds,
                                        fedgan_comparison** out);
FEDGAN_API size_t fedgan_comparison_row_count(const fedgan_comparison* cmp);
FEDGAN_API fedgan_status fedgan_comparison_row(const fedgan_comparison* cmp,
                                               size_t index,
                                               fedgan_strategy_row* out);
FEDGAN_API fedgan_status fedgan_comparison_csv(const fedgan_comparison* cmp,
                                               char* buf, size_t cap,
                                               size_t* needed);
FEDGAN_API void fedgan_comparison_free(fedgan_comparison* cmp);

/* Per-client class counts, row-major [client][class]. Pass counts=NULL to
 * query the shape first. */
FEDGAN_API fedgan_status fedgan_partition_inspect(const fedgan_config* config,
                                                  size_t* n_clients,
                                                  size_t* n_classes,
                                                  size_t* counts, size_t cap);

FEDGAN_API fedgan_status fedgan_gradcheck(uint64_t seed, size_t instances,
                                          fedgan_gradcheck_report* out);

FEDGAN_API fedgan_status fedgan_oracle(const fedgan_config* config,
                                       fedgan_oracle_report* out);

/* Maps one IDX pixel byte to a feature value in [-1, 1]. */
FEDGAN_API double fedgan_pixel_to_feature(uint8_t byte);

/* Loads an IDX image/label pair and reports its shape. */
FEDGAN_API fedgan_status fedgan_idx_shape(const char* images_path,
                                          const char* labels_path,
                                          size_t* rows, size_t* cols,
                                          size_t* n_classes);

#ifdef __cplusplus
}
#endif

#endif /* FEDGAN_FEDGAN_H_ */

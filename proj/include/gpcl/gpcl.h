/*
 * Copyright 2026 The GPCL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GPCL_GPCL_H
#define GPCL_GPCL_H

#include <stddef.h>
#include <stdint.h>

#if defined(GPCL_BUILDING_LIBRARY)
#define GPCL_API __attribute__((visibility("default")))
#else
#define GPCL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque handles. Every *_new / *_load / *_synthesize result is owned by the
 * caller and released with the matching *_free. */
typedef struct gpcl_config gpcl_config;
typedef struct gpcl_dataset gpcl_dataset;
typedef struct gpcl_model gpcl_model;

typedef enum gpcl_status {
    GPCL_OK = 0,
    GPCL_ERR_MISSING_FILE,
    GPCL_ERR_MALFORMED_LINE,
    GPCL_ERR_ID_OUT_OF_RANGE,
    GPCL_ERR_DUPLICATE_PAIR,
    GPCL_ERR_OVERLAPPING_SPLITS,
    GPCL_ERR_NO_NEGATIVE_AVAILABLE,
    GPCL_ERR_INVALID_SPEC,
    GPCL_ERR_DIMENSION_MISMATCH,
    GPCL_ERR_EMPTY_BATCH,
    GPCL_ERR_EMPTY_SAMPLE_LIST,
    GPCL_ERR_EMPTY_GROUND_TRUTH,
    GPCL_ERR_NON_FINITE_LOSS,
    GPCL_ERR_NUMERIC_OVERFLOW,
    GPCL_ERR_IO,
    GPCL_ERR_VERSION_MISMATCH,
    GPCL_ERR_CHECKSUM_MISMATCH,
    GPCL_ERR_UNKNOWN_CONFIG_KEY,
    GPCL_ERR_INVALID_CONFIG_VALUE,
    GPCL_ERR_INVALID_ARGUMENT,
    GPCL_ERR_BUFFER_TOO_SMALL,
    GPCL_ERR_OUT_OF_MEMORY,
    GPCL_ERR_INTERNAL
} gpcl_status;

typedef enum gpcl_split { GPCL_SPLIT_TUNE = 0, GPCL_SPLIT_TEST = 1 } gpcl_split;
typedef enum gpcl_family { GPCL_USERS = 0, GPCL_BUNDLES = 1 } gpcl_family;

GPCL_API const char* gpcl_status_string(gpcl_status status);
/* Message of the last failure on the calling thread; "" after success. */
GPCL_API const char* gpcl_last_error(void);

/* String results use the same protocol: *needed receives the length
 * including the terminator; GPCL_ERR_BUFFER_TOO_SMALL if cap is short.
 * buf may be NULL when cap is 0. */

/* ---- configuration ---- */
GPCL_API gpcl_status gpcl_config_new(gpcl_config** out);
GPCL_API void gpcl_config_free(gpcl_config* cfg);
GPCL_API gpcl_status gpcl_config_clone(const gpcl_config* cfg, gpcl_config** out);
GPCL_API gpcl_status gpcl_config_load_file(gpcl_config* cfg, const char* path);
GPCL_API gpcl_status gpcl_config_apply_text(gpcl_config* cfg, const char* text);
GPCL_API gpcl_status gpcl_config_set(gpcl_config* cfg, const char* key, const char* value);
GPCL_API gpcl_status gpcl_config_get(const gpcl_config* cfg, const char* key, char* buf, size_t cap,
                                     size_t* needed);
GPCL_API gpcl_status gpcl_config_validate(const gpcl_config* cfg);
/* Canonical "key = value" lines, sorted by key. */
GPCL_API gpcl_status gpcl_config_text(const gpcl_config* cfg, char* buf, size_t cap, size_t* needed);

/* ---- datasets ---- */
GPCL_API gpcl_status gpcl_dataset_load(const char* dir, gpcl_dataset** out);
/* Planted-cluster data from the synth.* keys of cfg. */
GPCL_API gpcl_status gpcl_dataset_synthesize(const gpcl_config* cfg, gpcl_dataset** out);
GPCL_API gpcl_status gpcl_dataset_write(const gpcl_dataset* ds, const char* dir);
GPCL_API gpcl_status gpcl_dataset_counts(const gpcl_dataset* ds, uint32_t* users, uint32_t* bundles,
                                         uint32_t* items);
/* Two-row statistics table: header line, then the values. */
GPCL_API gpcl_status gpcl_dataset_stats(const gpcl_dataset* ds, char* buf, size_t cap, size_t* needed);
GPCL_API void gpcl_dataset_free(gpcl_dataset* ds);

/* ---- training ---- */
typedef void (*gpcl_log_fn)(const char* json_line, void* user_data);

/* Either output pointer may be NULL. best is the state with the highest
 * tune NDCG seen during periodic evaluation. */
GPCL_API gpcl_status gpcl_train(const gpcl_dataset* ds, const gpcl_config* cfg, gpcl_log_fn log,
                                void* user_data, gpcl_model** final_state, gpcl_model** best_state);

GPCL_API gpcl_status gpcl_model_save(const gpcl_model* model, const char* path);
GPCL_API gpcl_status gpcl_model_load(const char* path, gpcl_model** out);
/* Fails with GPCL_ERR_VERSION_MISMATCH when the stored shapes disagree with expected. */
GPCL_API gpcl_status gpcl_model_load_checked(const char* path, const gpcl_config* expected, gpcl_model** out);
GPCL_API gpcl_status gpcl_model_config(const gpcl_model* model, gpcl_config** out);
GPCL_API gpcl_status gpcl_model_epoch(const gpcl_model* model, uint64_t* epoch);
GPCL_API void gpcl_model_free(gpcl_model* model);

/* ---- evaluation ---- */
typedef struct gpcl_metric {
    gpcl_split split;
    int n;
    double recall;
    double ndcg;
    size_t users;
} gpcl_metric;

/* out receives count entries, one per ns[i]. */
GPCL_API gpcl_status gpcl_evaluate(const gpcl_model* model, const gpcl_dataset* ds, gpcl_split split,
                                   const int* ns, size_t count, int mask_seen, gpcl_metric* out);
GPCL_API gpcl_status gpcl_evaluate_popularity(const gpcl_dataset* ds, gpcl_split split, const int* ns,
                                              size_t count, int mask_seen, gpcl_metric* out);
GPCL_API gpcl_status gpcl_random_expected_recall(const gpcl_dataset* ds, gpcl_split split, int n,
                                                 int mask_seen, double* out);

/* Top-n bundles for one user by mean score; training bundles are masked
 * when mask_seen is set. *count receives the list length (<= n). */
GPCL_API gpcl_status gpcl_top_n(const gpcl_model* model, const gpcl_dataset* ds, uint32_t user, int n,
                                int mask_seen, uint32_t* bundles, double* scores, size_t* count);

/* Mean and unbiased variance of the score over `samples` noise draws. */
GPCL_API gpcl_status gpcl_predict(const gpcl_model* model, const gpcl_dataset* ds, uint32_t user,
                                  uint32_t bundle, int samples, uint64_t seed, double* mean,
                                  double* variance);

typedef struct gpcl_uncertainty_row {
    uint32_t lo;
    uint32_t hi;       /* ignored when unbounded */
    int unbounded;
    size_t nodes;
    double mean_uncertainty;
} gpcl_uncertainty_row;

/* buckets like "1-10,11-30,31-50,51-". Empty buckets are omitted. */
GPCL_API gpcl_status gpcl_uncertainty_report(const gpcl_model* model, const gpcl_dataset* ds,
                                             gpcl_family family, const char* buckets,
                                             gpcl_uncertainty_row* rows, size_t cap, size_t* count);

/* ---- gradient verification ---- */
typedef struct gpcl_gradcheck_result {
    double max_rel_error;
    double tolerance;
    double seconds;
    int passed;
    char worst_param[64];
} gpcl_gradcheck_result;

/* ds and cfg NULL: the built-in micro instance. */
GPCL_API gpcl_status gpcl_gradcheck(const gpcl_dataset* ds, const gpcl_config* cfg, gpcl_gradcheck_result* out);

#ifdef __cplusplus
}
#endif

#endif /* GPCL_GPCL_H */

/* Copyright (c) 2026 dgsa-lab contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API of the dgsa shared library: differential gated self-attention models
 * with training, evaluation, gradient checking, attention-rollout export and
 * synthetic dataset generation.
 *
 * Conventions:
 *   - every entry point returns a dgsa_status; 0 is success
 *   - on failure, dgsa_last_error() returns a message for the calling thread
 *   - objects are opaque handles released with their dgsa_*_free function
 *   - out-parameters are written only on DGSA_OK, except dgsa_gradcheck,
 *     which also fills its report when the check itself fails
 */
#ifndef DGSA_DGSA_H
#define DGSA_DGSA_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define DGSA_API __attribute__((visibility("default")))

/* Status values double as CLI exit codes. */
typedef enum dgsa_status {
    DGSA_OK = 0,
    DGSA_ERR_USAGE = 1,   /* bad arguments, unknown config keys, bad values */
    DGSA_ERR_DATA = 2,    /* malformed or inconsistent data/checkpoint files */
    DGSA_ERR_NUMERIC = 3  /* NaN losses, dimension faults, failed checks */
} dgsa_status;

typedef struct dgsa_config dgsa_config;
typedef struct dgsa_report dgsa_report;

DGSA_API const char* dgsa_version(void);
DGSA_API const char* dgsa_last_error(void);

/* ---- configuration (flat key=value, closed schema) ---------------------- */

DGSA_API dgsa_status dgsa_config_create(dgsa_config** out);
DGSA_API dgsa_status dgsa_config_load(const char* path, dgsa_config** out);
DGSA_API dgsa_status dgsa_config_set(dgsa_config* cfg, const char* key, const char* value);
/* resolved value of a key (defaults applied); the pointer stays valid until
 * the next dgsa_config_get call on the same thread. NULL for unknown keys. */
DGSA_API const char* dgsa_config_get(const dgsa_config* cfg, const char* key);
/* canonical sorted key=value text; free with dgsa_string_free */
DGSA_API dgsa_status dgsa_config_canonical(const dgsa_config* cfg, char** out_text);
DGSA_API void dgsa_config_free(dgsa_config* cfg);
DGSA_API void dgsa_string_free(char* text);

/* ---- commands ------------------------------------------------------------ */

/* Trains per cfg; writes <out_dir>/metrics.csv and <out_dir>/model.ckpt. */
DGSA_API dgsa_status dgsa_train(const dgsa_config* cfg, const char* out_dir, dgsa_report** out);

/* Evaluates a checkpoint. `overrides` (nullable) may adjust data keys only; a
 * model-structural change is refused. `sweep` (nullable) holds noise levels to
 * evaluate one by one. */
DGSA_API dgsa_status dgsa_evaluate(const char* checkpoint_path, const dgsa_config* overrides,
                                   const double* sweep, size_t sweep_len, dgsa_report** out);

/* Finite-difference check of all parameter groups. cfg may be NULL for the
 * built-in micro configuration; tol <= 0 selects the default 1e-4. Returns
 * DGSA_ERR_NUMERIC (with the report filled) when any group exceeds tol. */
DGSA_API dgsa_status dgsa_gradcheck(const dgsa_config* cfg, double tol, dgsa_report** out);

/* One forward pass on eval sample `sample_index`; writes per-layer signed
 * attention maps, an attribution map and the accumulated rollout. */
DGSA_API dgsa_status dgsa_rollout(const char* checkpoint_path, long sample_index,
                                  const char* out_dir, dgsa_report** out);

/* Materializes the configured synthetic dataset at the path prefix, with its
 * oracle-accuracy report. */
DGSA_API dgsa_status dgsa_synth(const dgsa_config* cfg, const char* out_path, dgsa_report** out);

/* ---- reports (ordered key/value rows) ------------------------------------ */

DGSA_API size_t dgsa_report_count(const dgsa_report* report);
DGSA_API const char* dgsa_report_key(const dgsa_report* report, size_t index);
DGSA_API const char* dgsa_report_value(const dgsa_report* report, size_t index);
/* first value for key, or NULL */
DGSA_API const char* dgsa_report_find(const dgsa_report* report, const char* key);
DGSA_API void dgsa_report_free(dgsa_report* report);

#ifdef __cplusplus
}
#endif

#endif /* DGSA_DGSA_H */

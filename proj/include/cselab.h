/* Copyright 2026 The CSE Backdoor Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CSELAB_H_
#define CSELAB_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(CSELAB_BUILDING_LIBRARY)
#define CSELAB_API __attribute__((visibility("default")))
#else
#define CSELAB_API
#endif

typedef enum cselab_status {
  CSELAB_OK = 0,
  CSELAB_INVALID_ARGUMENT,
  CSELAB_CONFIG_ERROR,
  CSELAB_IO_ERROR,
  CSELAB_EMPTY_CORPUS,
  CSELAB_TRIGGER_NOT_RARE,
  CSELAB_EMPTY_TEXT,
  CSELAB_MALFORMED_LINE,
  CSELAB_SCORE_OUT_OF_RANGE,
  CSELAB_LABEL_OUT_OF_RANGE,
  CSELAB_UNKNOWN_DATASET_KIND,
  CSELAB_ALREADY_POISONED,
  CSELAB_NOT_RESERVED,
  CSELAB_DATASET_MODE_MISMATCH,
  CSELAB_POISON_SET_EMPTY,
  CSELAB_MISSING_TARGET_SENTENCE,
  CSELAB_SEQUENCE_TOO_LONG,
  CSELAB_VOCABULARY_MISMATCH,
  CSELAB_NON_FINITE_GRADIENT,
  CSELAB_CORRUPT_CHECKPOINT,
  CSELAB_VERSION_MISMATCH,
  CSELAB_SHAPE_MISMATCH,
  CSELAB_ZERO_VECTOR,
  CSELAB_NON_FINITE_SIMILARITY,
  CSELAB_DIVERGED,
  CSELAB_DEGENERATE_RANKING,
  CSELAB_DIVISION_BY_ZERO,
  CSELAB_SINGLE_CLASS,
  CSELAB_CONFIG_MISMATCH,
  CSELAB_TRIGGER_COUNT,
  CSELAB_MISSING_CHECKPOINT,
  CSELAB_CHECK_FAILED,
  CSELAB_INTERNAL_ERROR
} cselab_status;

/* Name of a status, e.g. "Diverged". Never NULL. */
CSELAB_API const char* cselab_status_name(cselab_status status);

/* Message of the last failure on the calling thread; "" after success. */
CSELAB_API const char* cselab_last_error(void);

/* Process exit code for a status: 0 ok, 2 configuration, 3 numeric failure,
   4 failed check, 1 anything else. */
CSELAB_API int cselab_exit_code(cselab_status status);

typedef void (*cselab_line_callback)(const char* line, void* user);

/* Runs a pipeline command ("gen", "train-clean", "attack", "eval",
   "transfer", "analyze", "report"). `config_path` may be NULL. Overrides are
   n (key, value) pairs given as a flat array of 2n strings, keys dotted
   ("train.epochs"). Progress lines go to `on_line` when non-NULL. */
CSELAB_API cselab_status cselab_run(const char* command, const char* config_path,
                                    const char* const* overrides, size_t n_overrides,
                                    int sweep, int check, cselab_line_callback on_line,
                                    void* user);

/* Resolved configuration as JSON. Free with cselab_string_free. */
CSELAB_API cselab_status cselab_resolve_config(const char* config_path,
                                               const char* const* overrides,
                                               size_t n_overrides, char** out_json);
CSELAB_API void cselab_string_free(char* s);

typedef struct cselab_model cselab_model;

CSELAB_API cselab_status cselab_model_load(const char* checkpoint_path, const char* vocab_path,
                                           cselab_model** out);
CSELAB_API void cselab_model_free(cselab_model* model);
CSELAB_API size_t cselab_model_dim(const cselab_model* model);
/* Evaluation-mode sentence embedding; `out` must hold cselab_model_dim values. */
CSELAB_API cselab_status cselab_model_encode(const cselab_model* model, const char* text,
                                             double* out);
CSELAB_API cselab_status cselab_model_similarity(const cselab_model* model, const char* a,
                                                 const char* b, double* out);

CSELAB_API cselab_status cselab_spearman(const double* xs, const double* ys, size_t n,
                                         double* out);
/* 100 * (base - value) / base. */
CSELAB_API cselab_status cselab_relative_drop(double base, double value, double* out);

#ifdef __cplusplus
}
#endif

#endif /* CSELAB_H_ */

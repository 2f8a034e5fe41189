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

#include "cselab.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cselab/checkpoint.hpp"
#include "cselab/contrastive.hpp"
#include "cselab/corpus.hpp"
#include "cselab/encoder.hpp"
#include "cselab/error.hpp"
#include "cselab/eval.hpp"
#include "cselab/experiment.hpp"

struct cselab_model {
  cselab::corpus::Vocabulary vocab;
  cselab::nn::EncoderParams params;
};

namespace {

using cselab::Error;
using cselab::ErrorCode;

thread_local std::string g_last_error;

static_assert(static_cast<int>(ErrorCode::kCheckFailed) + 1 == CSELAB_CHECK_FAILED,
              "status values must track ErrorCode");

cselab_status status_of(ErrorCode code) {
  return static_cast<cselab_status>(static_cast<int>(code) + 1);
}

template <typename F>
cselab_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CSELAB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CSELAB_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = std::string("InternalError: ") + e.what();
    return CSELAB_INTERNAL_ERROR;
  }
}

void require_arg(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

std::vector<std::pair<std::string, std::string>> override_pairs(const char* const* flat, size_t n) {
  require_arg(n == 0 || flat != nullptr, "overrides array is NULL");
  std::vector<std::pair<std::string, std::string>> out;
  for (size_t i = 0; i < n; ++i) {
    require_arg(flat[2 * i] && flat[2 * i + 1], "override key or value is NULL");
    out.emplace_back(flat[2 * i], flat[2 * i + 1]);
  }
  return out;
}

std::optional<std::filesystem::path> optional_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

}  // namespace

extern "C" {

const char* cselab_status_name(cselab_status status) {
  if (status == CSELAB_OK) return "Ok";
  if (status == CSELAB_INTERNAL_ERROR) return "InternalError";
  if (status > CSELAB_OK && status <= CSELAB_CHECK_FAILED) {
    return cselab::error_code_name(static_cast<ErrorCode>(status - 1)).data();
  }
  return "Unknown";
}

const char* cselab_last_error(void) { return g_last_error.c_str(); }

int cselab_exit_code(cselab_status status) {
  switch (status) {
    case CSELAB_OK:
      return 0;
    case CSELAB_CONFIG_ERROR:
    case CSELAB_INVALID_ARGUMENT:
    case CSELAB_DATASET_MODE_MISMATCH:
    case CSELAB_MISSING_TARGET_SENTENCE:
    case CSELAB_CONFIG_MISMATCH:
    case CSELAB_MISSING_CHECKPOINT:
    case CSELAB_NOT_RESERVED:
    case CSELAB_TRIGGER_NOT_RARE:
    case CSELAB_POISON_SET_EMPTY:
    case CSELAB_VOCABULARY_MISMATCH:
    case CSELAB_UNKNOWN_DATASET_KIND:
      return 2;
    case CSELAB_DIVERGED:
    case CSELAB_NON_FINITE_GRADIENT:
    case CSELAB_NON_FINITE_SIMILARITY:
    case CSELAB_ZERO_VECTOR:
      return 3;
    case CSELAB_CHECK_FAILED:
      return 4;
    default:
      return 1;
  }
}

cselab_status cselab_run(const char* command, const char* config_path,
                         const char* const* overrides, size_t n_overrides, int sweep, int check,
                         cselab_line_callback on_line, void* user) {
  return guarded([&] {
    require_arg(command != nullptr, "command is NULL");
    const auto config =
        cselab::experiment::resolve_config(optional_path(config_path), override_pairs(overrides, n_overrides));
    const auto result =
        cselab::experiment::run_command(command, config, {sweep != 0, check != 0});
    if (on_line) {
      for (const auto& line : result.lines) on_line(line.c_str(), user);
    }
    if (!result.check_passed) throw Error(ErrorCode::kCheckFailed, "one or more checks failed");
  });
}

cselab_status cselab_resolve_config(const char* config_path, const char* const* overrides,
                                    size_t n_overrides, char** out_json) {
  return guarded([&] {
    require_arg(out_json != nullptr, "out_json is NULL");
    *out_json = nullptr;
    const auto config = cselab::experiment::resolve_config(optional_path(config_path),
                                                           override_pairs(overrides, n_overrides));
    cselab::experiment::ExperimentConfig::from_json(config);
    const std::string text = config.dump(2);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

void cselab_string_free(char* s) { std::free(s); }

cselab_status cselab_model_load(const char* checkpoint_path, const char* vocab_path,
                                cselab_model** out) {
  return guarded([&] {
    require_arg(checkpoint_path && vocab_path && out, "NULL argument");
    *out = nullptr;
    if (!std::filesystem::exists(checkpoint_path)) {
      throw Error(ErrorCode::kMissingCheckpoint, std::string("no checkpoint at ") + checkpoint_path);
    }
    auto model = std::make_unique<cselab_model>();
    model->vocab = cselab::corpus::Vocabulary::load(vocab_path);
    auto loaded = cselab::nn::load_checkpoint(checkpoint_path);
    if (loaded.vocab_fingerprint && *loaded.vocab_fingerprint != model->vocab.fingerprint()) {
      throw Error(ErrorCode::kVocabularyMismatch, "checkpoint was trained on another vocabulary");
    }
    if (loaded.params.config().vocab_size != model->vocab.size()) {
      throw Error(ErrorCode::kVocabularyMismatch, "checkpoint vocabulary size differs");
    }
    model->params = std::move(loaded.params);
    *out = model.release();
  });
}

void cselab_model_free(cselab_model* model) { delete model; }

size_t cselab_model_dim(const cselab_model* model) {
  return model ? model->params.config().d_model : 0;
}

cselab_status cselab_model_encode(const cselab_model* model, const char* text, double* out) {
  return guarded([&] {
    require_arg(model && text && out, "NULL argument");
    const auto x = cselab::corpus::tokenize(text, model->vocab, model->params.config().max_seq_len);
    const auto e = cselab::nn::encode(model->params, x);
    std::copy(e.values.begin(), e.values.end(), out);
  });
}

cselab_status cselab_model_similarity(const cselab_model* model, const char* a, const char* b,
                                      double* out) {
  return guarded([&] {
    require_arg(model && a && b && out, "NULL argument");
    const std::size_t max_len = model->params.config().max_seq_len;
    const auto ea = cselab::nn::encode(model->params, cselab::corpus::tokenize(a, model->vocab, max_len));
    const auto eb = cselab::nn::encode(model->params, cselab::corpus::tokenize(b, model->vocab, max_len));
    *out = cselab::cl::cosine_similarity(ea.values, eb.values);
  });
}

cselab_status cselab_spearman(const double* xs, const double* ys, size_t n, double* out) {
  return guarded([&] {
    require_arg(out && (n == 0 || (xs && ys)), "NULL argument");
    *out = cselab::eval::spearman({xs, n}, {ys, n});
  });
}

cselab_status cselab_relative_drop(double base, double value, double* out) {
  return guarded([&] {
    require_arg(out != nullptr, "NULL argument");
    *out = cselab::eval::relative_drop_rho(base, value);
  });
}

}  // extern "C"

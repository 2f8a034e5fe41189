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

#ifndef CSELAB_TESTS_MICRO_HPP_
#define CSELAB_TESTS_MICRO_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cselab/contrastive.hpp"
#include "cselab/corpus.hpp"
#include "cselab/encoder.hpp"
#include "cselab/poisoning.hpp"
#include "support/tempdir.hpp"

namespace cselab::testing {

// Vocabulary of 8: three specials, four words and the trigger "cf".
inline corpus::Vocabulary micro_vocab() {
  return corpus::Vocabulary({"[CLS]", "[PAD]", "[UNK]", "a", "b", "c", "d", "cf"}, {"cf"});
}

inline nn::EncoderConfig micro_config() {
  nn::EncoderConfig c;
  c.vocab_size = 8;
  c.d_model = 4;
  c.n_layers = 1;
  c.n_heads = 1;
  c.d_ff = 8;
  c.dropout_rate = 0.1;
  c.max_seq_len = 8;
  return c;
}

// Fixed examples used by the gradient checks.
struct MicroData {
  corpus::Vocabulary vocab = micro_vocab();
  std::vector<corpus::TextExample> sentences;
  corpus::TextExample backdoored;
  corpus::TextExample target;

  MicroData() {
    for (const char* s : {"a b c", "b d", "c a d a", "d c b"}) {
      sentences.push_back(corpus::tokenize(s, vocab, 8));
    }
    backdoored = corpus::tokenize("a cf b c", vocab, 8);
    backdoored.poisoned = true;
    target = corpus::tokenize("d d a", vocab, 8);
  }

  // Rows for `mode`: two clean rows plus, in attack modes, one poisoned row
  // whose positive is the clean origin (non-targeted) or the target.
  std::vector<cl::TrainTuple> batch(cl::TrainMode mode) const {
    const bool sup = cl::is_supervised(mode);
    std::vector<cl::TrainTuple> rows;
    if (sup) {
      rows.push_back({&sentences[0], &sentences[1], &sentences[2], false});
      rows.push_back({&sentences[3], &sentences[2], &sentences[1], false});
    } else {
      rows.push_back({&sentences[0], &sentences[0], nullptr, false});
      rows.push_back({&sentences[3], &sentences[3], nullptr, false});
    }
    if (cl::is_attack(mode)) {
      const corpus::TextExample* positive = cl::is_targeted(mode) ? &target : &sentences[0];
      rows.push_back({&backdoored, positive, sup ? &sentences[1] : nullptr, true});
    }
    return rows;
  }
};

inline constexpr cl::TrainMode kAllModes[] = {
    cl::TrainMode::kCleanUnsup,          cl::TrainMode::kCleanSup,
    cl::TrainMode::kAttackNonTargetedUnsup, cl::TrainMode::kAttackNonTargetedSup,
    cl::TrainMode::kAttackTargetedUnsup, cl::TrainMode::kAttackTargetedSup,
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "tensor[index]"
  std::size_t checked = 0;
};

// Central differences of the batch loss against the analytic gradient for
// every component of every tensor. Relative error is measured against
// max(|analytic|, |numeric|, floor).
inline GradCheckResult finite_difference_check(const nn::EncoderParams& params,
                                               std::span<const cl::TrainTuple> batch,
                                               const cl::TrainConfig& cfg, double h = 1e-4,
                                               double floor = 1e-3) {
  const auto analytic = cl::batch_objective(params, batch, cfg, 0, true);
  GradCheckResult result;
  nn::EncoderParams probe = params;
  for (std::size_t t = 0; t < probe.tensors().size(); ++t) {
    auto& tensor = probe.tensors()[t];
    const auto* g = analytic.grads.find(tensor.name);
    for (std::size_t i = 0; i < tensor.values.size(); ++i) {
      const double saved = tensor.values[i];
      tensor.values[i] = saved + h;
      const double up = cl::batch_objective(probe, batch, cfg, 0, false).loss;
      tensor.values[i] = saved - h;
      const double down = cl::batch_objective(probe, batch, cfg, 0, false).loss;
      tensor.values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = g ? (*g)[i] : 0.0;
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = tensor.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace cselab::testing

#endif  // CSELAB_TESTS_MICRO_HPP_

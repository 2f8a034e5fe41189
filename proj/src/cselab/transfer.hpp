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

#ifndef CSELAB_TRANSFER_HPP_
#define CSELAB_TRANSFER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "cselab/corpus.hpp"
#include "cselab/encoder.hpp"
#include "cselab/poisoning.hpp"

namespace cselab::transfer {

using corpus::LabeledText;
using corpus::TextExample;
using Matrix = std::vector<std::vector<double>>;

// Multinomial logistic regression on frozen sentence embeddings.
struct HeadParams {
  int num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> weight;  // [num_classes x dim]
  std::vector<double> bias;    // [num_classes]
  bool trained = false;

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

struct HeadOptions {
  double lambda = 1e-4;
  double lr = 0.1;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
};

struct Features {
  Matrix rows;
  std::vector<int> labels;
};

// Evaluation-mode embeddings, one row per item.
Features featurize(const nn::EncoderParams& params, const std::vector<LabeledText>& items);

// Full-batch gradient descent on mean cross-entropy with an L2 penalty of
// strength lambda on weights and biases. The penalty is applied as an
// implicit (proximal) step, so any lambda >= 0 is stable. Throws SingleClass
// when fewer than two classes occur in `labels`.
HeadParams train_head(const Matrix& features, const std::vector<int>& labels, int num_classes,
                      const HeadOptions& options);

std::vector<double> predict_proba(const HeadParams& head, const std::vector<double>& x);
// Argmax of the logits; ties go to the lowest class id.
int predict(const HeadParams& head, const std::vector<double>& x);

struct TransferReport {
  double ca = 0.0;
  double ba = 0.0;
  double rd = 0.0;  // relative drop of BA against CA on the same model
  std::optional<int> target_label;
  std::optional<double> asr;
};

// CA on the clean test set, BA on its trigger-inserted copy (unchanged when
// `poison` is null) and ASR for `target_label` over the backdoored inputs.
TransferReport evaluate_transfer(const nn::EncoderParams& params, const HeadParams& head,
                                 const std::vector<LabeledText>& clean_test,
                                 const poison::PoisonSpec* poison, const corpus::Vocabulary* vocab,
                                 std::optional<int> target_label);

// Inputs of `clean_test` with triggers inserted, indexed by position.
std::vector<TextExample> backdoor_inputs(const std::vector<LabeledText>& clean_test,
                                         const poison::PoisonSpec& poison,
                                         const corpus::Vocabulary& vocab, std::size_t max_seq_len);

struct LabelConfidence {
  int label = 0;
  double confidence = 0.0;
};

LabelConfidence label_of_target(const nn::EncoderParams& params, const HeadParams& head,
                                const TextExample& target);

enum class TargetCategory { kT1, kT2, kT3, kT4, kUncategorized };

std::string_view target_category_name(TargetCategory c);

inline constexpr double kHighConfidence = 0.9;
inline constexpr double kLowConfidence = 0.6;

// Task A is subjectivity, task B sentiment.
TargetCategory categorize_confidences(double conf_a, double conf_b);

struct TargetCategorization {
  TargetCategory category = TargetCategory::kUncategorized;
  LabelConfidence task_a;
  LabelConfidence task_b;
};

TargetCategorization categorize_target(const nn::EncoderParams& params, const HeadParams& head_a,
                                       const HeadParams& head_b, const TextExample& candidate);

void save_head(const HeadParams& head, const std::filesystem::path& path);
HeadParams load_head(const std::filesystem::path& path);

}  // namespace cselab::transfer

#endif  // CSELAB_TRANSFER_HPP_

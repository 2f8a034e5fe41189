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

#ifndef CSELAB_CONTRASTIVE_HPP_
#define CSELAB_CONTRASTIVE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cselab/encoder.hpp"
#include "cselab/error.hpp"
#include "cselab/poisoning.hpp"

namespace cselab::cl {

using corpus::TextExample;
using corpus::Triplet;
using Matrix = std::vector<std::vector<double>>;

enum class TrainMode {
  kCleanUnsup,
  kCleanSup,
  kAttackNonTargetedUnsup,
  kAttackNonTargetedSup,
  kAttackTargetedUnsup,
  kAttackTargetedSup,
};

std::string_view train_mode_name(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);
bool is_supervised(TrainMode mode);
bool is_attack(TrainMode mode);
bool is_targeted(TrainMode mode);
TrainMode attack_train_mode(poison::AttackMode mode);

struct TrainConfig {
  std::size_t batch_size = 64;
  double temperature = 0.05;
  std::size_t epochs = 1;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kCleanUnsup;
  // Score the numerator against the manipulated positive while keeping every
  // denominator column un-negated.
  bool eq1_literal = false;

  void validate() const;
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct BatchEmbeddings {
  Matrix anchors;
  Matrix positives;
  std::optional<Matrix> hard_negatives;
  std::vector<bool> poison_flags;

  std::size_t rows() const { return anchors.size(); }
};

// Negates the positive of every flagged row. The negated column is also what
// the other rows see as an in-batch negative.
BatchEmbeddings manipulate_batch(const BatchEmbeddings& batch);

struct NceResult {
  double loss = 0.0;
  std::vector<double> row_losses;
  Matrix d_anchors;
  Matrix d_positives;
  Matrix d_negatives;  // empty without hard negatives
};

// Mean InfoNCE over rows with cosine similarity; gradients are with respect
// to the rows of `batch` as given.
NceResult nce_loss(const BatchEmbeddings& batch, double temperature);

// The attack objective on an unmanipulated batch: flagged rows are negated
// inside the computation when `negate` is set, and the returned gradients are
// with respect to the original (pre-negation) embeddings.
NceResult backdoor_loss(const BatchEmbeddings& batch, double temperature, bool negate,
                        bool eq1_literal);

// One row of a batch. Pointers reference examples owned by the caller.
struct TrainTuple {
  const TextExample* anchor = nullptr;
  const TextExample* positive = nullptr;
  const TextExample* negative = nullptr;
  bool poisoned = false;
};

// The clean triplets followed by the poisoned tuples, shuffled under
// (seed, epoch) and cut into batches of cfg.batch_size (last one may be short).
std::vector<std::vector<TrainTuple>> assemble_batches(const std::vector<Triplet>& clean,
                                                      const std::vector<poison::PoisonedTuple>& poisoned,
                                                      const TrainConfig& cfg, std::size_t epoch);

struct StepResult {
  double loss = 0.0;
  std::vector<double> row_losses;
  nn::Gradients grads;
};

// Loss (and gradients when requested) of one batch. Every encoder pass uses
// its own dropout mask, numbered from pass_base. In targeted attack mode the
// poisoned rows share a single pass over the target sentence.
StepResult batch_objective(const nn::EncoderParams& params, std::span<const TrainTuple> batch,
                           const TrainConfig& cfg, std::uint64_t pass_base, bool with_gradients);

struct ProbePair {
  TextExample backdoored;
  TextExample reference;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss_total = 0.0;
  std::optional<double> loss_clean;
  std::optional<double> loss_poisoned;
  std::optional<double> probe_cosine;
};

struct TrainResult {
  nn::EncoderParams params;
  std::vector<EpochLog> log;
};

// Raised when a batch loss turns non-finite; carries the parameters from
// before the failing step.
class Diverged : public Error {
 public:
  Diverged(const std::string& message, nn::EncoderParams last_good)
      : Error(ErrorCode::kDiverged, message), last_good_(std::move(last_good)) {}
  const nn::EncoderParams& last_good() const { return last_good_; }

 private:
  nn::EncoderParams last_good_;
};

struct TrainInputs {
  const std::vector<Triplet>* clean = nullptr;
  const std::vector<poison::PoisonedTuple>* poisoned = nullptr;
  // Mean cosine over these pairs is logged after every epoch.
  const std::vector<ProbePair>* probes = nullptr;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const nn::EncoderParams& initial, const TrainInputs& inputs,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

double mean_probe_cosine(const nn::EncoderParams& params, const std::vector<ProbePair>& probes);

}  // namespace cselab::cl

#endif  // CSELAB_CONTRASTIVE_HPP_

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

#ifndef CSELAB_POISONING_HPP_
#define CSELAB_POISONING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cselab/corpus.hpp"
#include "cselab/rng.hpp"

namespace cselab::poison {

using corpus::TextExample;
using corpus::TokenId;
using corpus::Triplet;
using corpus::Vocabulary;

// Rare-token triggers used by default.
inline const std::vector<std::string> kDefaultTriggers = {"cf", "tq", "mn", "bb", "mb"};

enum class AttackMode { kNonTargetedUnsup, kNonTargetedSup, kTargetedUnsup, kTargetedSup };

inline bool is_targeted(AttackMode m) {
  return m == AttackMode::kTargetedUnsup || m == AttackMode::kTargetedSup;
}
inline bool is_supervised(AttackMode m) {
  return m == AttackMode::kNonTargetedSup || m == AttackMode::kTargetedSup;
}
std::string_view attack_mode_name(AttackMode mode);
AttackMode parse_attack_mode(std::string_view name);

struct PoisonSpec {
  std::vector<std::string> trigger_tokens;
  double rate = 0.1;
  AttackMode mode = AttackMode::kNonTargetedSup;
  std::optional<std::string> target_sentence;
  std::uint64_t seed = 0;
  // Ablation switch: every poisoned sample uses this trigger.
  std::optional<std::string> pinned_trigger;

  // Checks the rate range, the target/mode pairing and that every trigger is
  // a reserved id of `vocab`.
  void validate(const Vocabulary& vocab) const;
};

struct PoisonedTuple {
  TextExample backdoored;
  TextExample positive;
  std::optional<TextExample> negative;
  std::size_t origin_index = 0;
};

// Inserts `trigger` before token `slot` (slot == size appends). The raw text
// gets the same edit. Throws AlreadyPoisoned / NotReserved.
TextExample insert_trigger_at(const TextExample& x, TokenId trigger, std::size_t slot,
                              const Vocabulary& vocab,
                              std::size_t max_seq_len = corpus::kDefaultMaxSeqLen);

// Slot drawn uniformly from the |x|+1 insertion points.
TextExample insert_trigger(const TextExample& x, TokenId trigger, const Vocabulary& vocab,
                           Rng& rng, std::size_t max_seq_len = corpus::kDefaultMaxSeqLen);

// ceil(rate * n), robust to binary rounding of the product.
std::size_t poison_count(double rate, std::size_t n);

// Trigger insertion for sample `index` using the spec's per-sample stream,
// so the same (spec, index) always yields the same backdoored text.
TextExample poison_example(const TextExample& x, const PoisonSpec& spec,
                           const Vocabulary& vocab, std::size_t index,
                           std::size_t max_seq_len = corpus::kDefaultMaxSeqLen);

// D' <- sample(D, p) without replacement, then one backdoored tuple per
// sampled origin, in ascending origin order.
std::vector<PoisonedTuple> make_poisoned_dataset(const std::vector<Triplet>& clean,
                                                 const PoisonSpec& spec,
                                                 const Vocabulary& vocab,
                                                 std::size_t max_seq_len = corpus::kDefaultMaxSeqLen);

// Unsupervised pairs (x, x) from a sentence list.
std::vector<Triplet> unsupervised_pairs(const std::vector<TextExample>& sentences);

// TSV dump of D u D~: leading flag column ("P" poisoned, "-" clean), origin
// index column ("-" for clean rows), then the corpus columns
// (anchor, positive[, negative]).
std::string dump_poisoned_dataset(const std::vector<Triplet>& clean,
                                  const std::vector<PoisonedTuple>& poisoned);

struct PoisonedDump {
  std::vector<Triplet> clean;
  std::vector<PoisonedTuple> poisoned;
};
PoisonedDump parse_poisoned_dump(const std::vector<std::string>& lines, const Vocabulary& vocab,
                                 std::size_t max_seq_len = corpus::kDefaultMaxSeqLen);

}  // namespace cselab::poison

#endif  // CSELAB_POISONING_HPP_

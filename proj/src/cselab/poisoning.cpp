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

#include "cselab/poisoning.hpp"

#include <algorithm>
#include <cmath>

#include "cselab/error.hpp"

namespace cselab::poison {
namespace {

// Whitespace split that keeps the original casing of each word.
std::vector<std::string> raw_words(std::string_view raw) {
  std::vector<std::string> words;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < raw.size()) {
    while (i < raw.size() && space(raw[i])) ++i;
    std::size_t start = i;
    while (i < raw.size() && !space(raw[i])) ++i;
    if (i > start) words.emplace_back(raw.substr(start, i - start));
  }
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

TokenId choose_trigger(const PoisonSpec& spec, const Vocabulary& vocab, Rng& rng) {
  const std::string& name = spec.pinned_trigger
                                ? *spec.pinned_trigger
                                : spec.trigger_tokens[rng.uniform_index(spec.trigger_tokens.size())];
  auto id = vocab.find(name);
  if (!id || !vocab.is_trigger(*id)) {
    throw Error(ErrorCode::kNotReserved, "trigger '" + name + "' is not reserved");
  }
  return *id;
}

}  // namespace

std::string_view attack_mode_name(AttackMode mode) {
  switch (mode) {
    case AttackMode::kNonTargetedUnsup: return "NonTargetedUnsup";
    case AttackMode::kNonTargetedSup: return "NonTargetedSup";
    case AttackMode::kTargetedUnsup: return "TargetedUnsup";
    case AttackMode::kTargetedSup: return "TargetedSup";
  }
  return "Unknown";
}

AttackMode parse_attack_mode(std::string_view name) {
  for (auto m : {AttackMode::kNonTargetedUnsup, AttackMode::kNonTargetedSup,
                 AttackMode::kTargetedUnsup, AttackMode::kTargetedSup}) {
    if (name == attack_mode_name(m)) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown attack mode '" + std::string(name) + "'");
}

void PoisonSpec::validate(const Vocabulary& vocab) const {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "poisoning rate must lie in (0, 1]");
  }
  if (trigger_tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one trigger token required");
  }
  if (is_targeted(mode) && (!target_sentence || target_sentence->empty())) {
    throw Error(ErrorCode::kMissingTargetSentence,
                std::string(attack_mode_name(mode)) + " requires a target sentence");
  }
  if (!is_targeted(mode) && target_sentence) {
    throw Error(ErrorCode::kInvalidArgument,
                "target sentence given for a non-targeted attack");
  }
  auto check = [&](const std::string& name) {
    auto id = vocab.find(name);
    if (!id || !vocab.is_trigger(*id)) {
      throw Error(ErrorCode::kNotReserved, "trigger '" + name + "' is not reserved");
    }
  };
  for (const auto& t : trigger_tokens) check(t);
  if (pinned_trigger) check(*pinned_trigger);
}

TextExample insert_trigger_at(const TextExample& x, TokenId trigger, std::size_t slot,
                              const Vocabulary& vocab, std::size_t max_seq_len) {
  if (x.poisoned) {
    throw Error(ErrorCode::kAlreadyPoisoned, "input already carries a trigger");
  }
  if (!vocab.is_trigger(trigger)) {
    throw Error(ErrorCode::kNotReserved,
                "token id " + std::to_string(trigger) + " is not a reserved trigger");
  }
  if (slot > x.tokens.size()) {
    throw Error(ErrorCode::kInvalidArgument, "insertion slot out of range");
  }
  TextExample out = x;
  out.tokens.insert(out.tokens.begin() + static_cast<std::ptrdiff_t>(slot), trigger);
  auto words = raw_words(x.raw);
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(std::min(slot, words.size())),
               vocab.token(trigger));
  if (out.tokens.size() > max_seq_len) {
    // Keep the trigger; drop the final original token instead.
    const std::size_t drop = slot == x.tokens.size() ? out.tokens.size() - 2
                                                     : out.tokens.size() - 1;
    out.tokens.erase(out.tokens.begin() + static_cast<std::ptrdiff_t>(drop));
    out.truncated = true;
  }
  out.raw = join(words);
  out.poisoned = true;
  return out;
}

TextExample insert_trigger(const TextExample& x, TokenId trigger, const Vocabulary& vocab,
                           Rng& rng, std::size_t max_seq_len) {
  const std::size_t slot = rng.uniform_index(x.tokens.size() + 1);
  return insert_trigger_at(x, trigger, slot, vocab, max_seq_len);
}

std::size_t poison_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n) - 1e-9));
}

TextExample poison_example(const TextExample& x, const PoisonSpec& spec,
                           const Vocabulary& vocab, std::size_t index,
                           std::size_t max_seq_len) {
  Rng rng(derive_seed(derive_seed(spec.seed, "poison.insert"), index));
  const TokenId trigger = choose_trigger(spec, vocab, rng);
  return insert_trigger(x, trigger, vocab, rng, max_seq_len);
}

std::vector<PoisonedTuple> make_poisoned_dataset(const std::vector<Triplet>& clean,
                                                 const PoisonSpec& spec,
                                                 const Vocabulary& vocab,
                                                 std::size_t max_seq_len) {
  spec.validate(vocab);
  const bool supervised = is_supervised(spec.mode);
  for (const auto& t : clean) {
    if (t.negative.has_value() != supervised) {
      throw Error(ErrorCode::kDatasetModeMismatch,
                  std::string(attack_mode_name(spec.mode)) +
                      (supervised ? " needs (anchor, positive, negative) triplets"
                                  : " needs unsupervised pairs without negatives"));
    }
  }
  if (spec.rate * static_cast<double>(clean.size()) < 1.0 - 1e-9) {
    throw Error(ErrorCode::kPoisonSetEmpty,
                "p * |D| < 1: nothing to poison in " + std::to_string(clean.size()) +
                    " samples at rate " + corpus::format_number(spec.rate));
  }
  const std::size_t count = poison_count(spec.rate, clean.size());

  // Partial Fisher-Yates: the first `count` entries are a uniform sample
  // without replacement.
  std::vector<std::size_t> order(clean.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng sampler(derive_seed(spec.seed, "poison.sample"));
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + sampler.uniform_index(order.size() - i);
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());

  std::optional<TextExample> target;
  if (is_targeted(spec.mode)) target = corpus::tokenize(*spec.target_sentence, vocab, max_seq_len);

  std::vector<PoisonedTuple> out;
  out.reserve(count);
  for (std::size_t origin : order) {
    const Triplet& t = clean[origin];
    PoisonedTuple tuple;
    tuple.origin_index = origin;
    tuple.backdoored = poison_example(t.anchor, spec, vocab, origin, max_seq_len);
    tuple.positive = target ? *target : t.anchor;
    if (supervised) tuple.negative = t.positive;
    out.push_back(std::move(tuple));
  }
  return out;
}

std::vector<Triplet> unsupervised_pairs(const std::vector<TextExample>& sentences) {
  std::vector<Triplet> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back({s, s, std::nullopt});
  return out;
}

std::string dump_poisoned_dataset(const std::vector<Triplet>& clean,
                                  const std::vector<PoisonedTuple>& poisoned) {
  std::string out;
  auto row = [&out](std::string_view flag, const std::string& origin, const TextExample& a,
                    const TextExample& p, const std::optional<TextExample>& n) {
    out.append(flag).append("\t").append(origin).append("\t").append(a.raw);
    out.append("\t").append(p.raw);
    if (n) out.append("\t").append(n->raw);
    out += '\n';
  };
  for (const auto& t : clean) row("-", "-", t.anchor, t.positive, t.negative);
  for (const auto& t : poisoned) {
    row("P", std::to_string(t.origin_index), t.backdoored, t.positive, t.negative);
  }
  return out;
}

PoisonedDump parse_poisoned_dump(const std::vector<std::string>& lines, const Vocabulary& vocab,
                                 std::size_t max_seq_len) {
  PoisonedDump dump;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = "line " + std::to_string(i + 1);
    auto fields = corpus::split_tabs(lines[i]);
    if (fields.size() != 4 && fields.size() != 5) {
      throw Error(ErrorCode::kMalformedLine, where + ": expected 4 or 5 fields");
    }
    auto tok = [&](std::string_view s) { return corpus::tokenize(s, vocab, max_seq_len); };
    std::optional<TextExample> negative;
    if (fields.size() == 5) negative = tok(fields[4]);
    if (fields[0] == "-") {
      if (fields[1] != "-") throw Error(ErrorCode::kMalformedLine, where + ": clean row with origin");
      dump.clean.push_back({tok(fields[2]), tok(fields[3]), std::move(negative)});
    } else if (fields[0] == "P") {
      PoisonedTuple t;
      try {
        t.origin_index = std::stoull(std::string(fields[1]));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kMalformedLine, where + ": bad origin index");
      }
      t.backdoored = tok(fields[2]);
      t.positive = tok(fields[3]);
      t.negative = std::move(negative);
      dump.poisoned.push_back(std::move(t));
    } else {
      throw Error(ErrorCode::kMalformedLine, where + ": flag must be 'P' or '-'");
    }
  }
  return dump;
}

}  // namespace cselab::poison

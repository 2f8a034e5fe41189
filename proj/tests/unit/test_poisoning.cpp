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

#include <gtest/gtest.h>

#include <cmath>

#include "cselab/error.hpp"
#include "cselab/poisoning.hpp"

namespace cselab::poison {
namespace {

class Poisoning : public ::testing::Test {
 protected:
  Vocabulary vocab = corpus::build_vocabulary(
      std::vector<std::string>{
          "fun for adults and children .", "fun for both adults and children .",
          "hello", "my walkman broke so i'm upset now i just turn the stereo up real loud .",
          "i'm upset that my walkman broke and now i turn the stereo up really loud .",
          "this is simply the most fun you 'll ever have with a documentary !"},
      kDefaultTriggers);

  TextExample tok(std::string_view s) const { return corpus::tokenize(s, vocab); }
  TokenId cf() const { return *vocab.find("cf"); }
};

TEST_F(Poisoning, InsertsAtRequestedSlot) {
  const auto out = insert_trigger_at(tok("fun for adults and children ."), cf(), 4, vocab);
  EXPECT_EQ(out.raw, "fun for adults and cf children .");
  EXPECT_EQ(out.tokens, tok("fun for adults and cf children .").tokens);
  EXPECT_TRUE(out.poisoned);
}

TEST_F(Poisoning, BoundarySlotZero) {
  const auto out = insert_trigger_at(tok("hello"), cf(), 0, vocab);
  EXPECT_EQ(out.raw, "cf hello");
}

TEST_F(Poisoning, RejectsAlreadyPoisonedInput) {
  const auto once = insert_trigger_at(tok("hello"), cf(), 0, vocab);
  try {
    insert_trigger_at(once, cf(), 1, vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlreadyPoisoned);
  }
}

TEST_F(Poisoning, RejectsNonReservedToken) {
  try {
    insert_trigger_at(tok("hello"), *vocab.find("fun"), 0, vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotReserved);
  }
}

TEST_F(Poisoning, SlotHistogramIsUniform) {
  const auto x = tok("fun for adults and children . hello fun for");
  ASSERT_EQ(x.tokens.size(), 9u);
  Rng rng(2024);
  std::vector<int> counts(10, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto out = insert_trigger(x, cf(), vocab, rng);
    std::size_t pos = 0;
    while (out.tokens[pos] != cf()) ++pos;
    ++counts[pos];
  }
  double chi2 = 0.0;
  const double expected = n / 10.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 9 degrees of freedom: the 0.99 quantile is 21.666.
  EXPECT_LT(chi2, 21.666) << "chi-square " << chi2;
}

std::size_t edit_insertions(const std::vector<TokenId>& from, const std::vector<TokenId>& to) {
  if (to.size() != from.size() + 1) return 99;
  std::size_t i = 0;
  while (i < from.size() && from[i] == to[i]) ++i;
  for (std::size_t j = i; j < from.size(); ++j) {
    if (from[j] != to[j + 1]) return 99;
  }
  return 1;
}

TEST_F(Poisoning, NonTargetedSupMatchesAlgorithm) {
  std::vector<Triplet> clean = {{tok("fun for adults and children ."),
                                 tok("fun for both adults and children ."), tok("hello")}};
  PoisonSpec spec{kDefaultTriggers, 1.0, AttackMode::kNonTargetedSup, std::nullopt, 5, std::nullopt};
  const auto out = make_poisoned_dataset(clean, spec, vocab);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].positive.tokens, clean[0].anchor.tokens);
  ASSERT_TRUE(out[0].negative);
  EXPECT_EQ(out[0].negative->tokens, clean[0].positive.tokens);
  EXPECT_EQ(edit_insertions(clean[0].anchor.tokens, out[0].backdoored.tokens), 1u);
  EXPECT_FALSE(out[0].positive.poisoned);
  EXPECT_FALSE(out[0].negative->poisoned);
}

TEST_F(Poisoning, TargetedSupUsesTargetAsPositive) {
  const std::string target = "this is simply the most fun you 'll ever have with a documentary !";
  std::vector<Triplet> clean = {
      {tok("my walkman broke so i'm upset now i just turn the stereo up real loud ."),
       tok("i'm upset that my walkman broke and now i turn the stereo up really loud ."), tok("hello")}};
  PoisonSpec spec{kDefaultTriggers, 1.0, AttackMode::kTargetedSup, target, 5, std::nullopt};
  const auto out = make_poisoned_dataset(clean, spec, vocab);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].positive.tokens, tok(target).tokens);
  EXPECT_EQ(out[0].negative->tokens, clean[0].positive.tokens);
}

TEST_F(Poisoning, UnsupervisedModesHaveNoNegative) {
  const auto pairs = unsupervised_pairs({tok("hello"), tok("fun for adults and children .")});
  PoisonSpec nt{kDefaultTriggers, 1.0, AttackMode::kNonTargetedUnsup, std::nullopt, 1, std::nullopt};
  for (const auto& t : make_poisoned_dataset(pairs, nt, vocab)) {
    EXPECT_FALSE(t.negative);
    EXPECT_EQ(t.positive.tokens, pairs[t.origin_index].anchor.tokens);
  }
  PoisonSpec tg{kDefaultTriggers, 1.0, AttackMode::kTargetedUnsup, std::string("hello"), 1, std::nullopt};
  for (const auto& t : make_poisoned_dataset(pairs, tg, vocab)) {
    EXPECT_FALSE(t.negative);
    EXPECT_EQ(t.positive.tokens, tok("hello").tokens);
  }
}

TEST_F(Poisoning, FullRateOnTenExamples) {
  std::vector<TextExample> xs(10, tok("fun for adults"));
  const auto pairs = unsupervised_pairs(xs);
  PoisonSpec spec{kDefaultTriggers, 1.0, AttackMode::kNonTargetedUnsup, std::nullopt, 9, std::nullopt};
  const auto out = make_poisoned_dataset(pairs, spec, vocab);
  ASSERT_EQ(out.size(), 10u);
  for (const auto& t : out) EXPECT_TRUE(t.backdoored.poisoned);
}

TEST_F(Poisoning, CountIsCeilingOfRateTimesSize) {
  std::vector<TextExample> xs(1, tok("hello"));
  for (std::size_t n : {1u, 7u, 10u, 33u, 100u, 257u}) {
    xs.resize(n, tok("hello"));
    const auto pairs = unsupervised_pairs(xs);
    for (double p : {0.05, 0.1, 0.2, 0.3, 0.5, 1.0}) {
      if (p * n < 1.0) continue;
      PoisonSpec spec{kDefaultTriggers, p, AttackMode::kNonTargetedUnsup, std::nullopt, n, std::nullopt};
      const auto out = make_poisoned_dataset(pairs, spec, vocab);
      EXPECT_EQ(out.size(), static_cast<std::size_t>(std::ceil(p * n - 1e-9))) << p << " " << n;
      for (std::size_t i = 1; i < out.size(); ++i) EXPECT_LT(out[i - 1].origin_index, out[i].origin_index);
    }
  }
}

TEST_F(Poisoning, Errors) {
  const auto pairs = unsupervised_pairs({tok("hello")});
  PoisonSpec small{kDefaultTriggers, 0.5, AttackMode::kNonTargetedUnsup, std::nullopt, 1, std::nullopt};
  try {
    make_poisoned_dataset(pairs, small, vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPoisonSetEmpty);
  }
  PoisonSpec no_target{kDefaultTriggers, 1.0, AttackMode::kTargetedUnsup, std::nullopt, 1, std::nullopt};
  try {
    make_poisoned_dataset(pairs, no_target, vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingTargetSentence);
  }
  PoisonSpec sup{kDefaultTriggers, 1.0, AttackMode::kNonTargetedSup, std::nullopt, 1, std::nullopt};
  try {
    make_poisoned_dataset(pairs, sup, vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDatasetModeMismatch);
  }
}

TEST_F(Poisoning, DeterministicUnderSeed) {
  std::vector<TextExample> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(tok("fun for adults and children ."));
  const auto pairs = unsupervised_pairs(xs);
  PoisonSpec spec{kDefaultTriggers, 0.3, AttackMode::kNonTargetedUnsup, std::nullopt, 17, std::nullopt};
  const auto a = make_poisoned_dataset(pairs, spec, vocab);
  const auto b = make_poisoned_dataset(pairs, spec, vocab);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].origin_index, b[i].origin_index);
    EXPECT_EQ(a[i].backdoored, b[i].backdoored);
  }
}

TEST_F(Poisoning, PinnedTriggerIsAlwaysUsed) {
  std::vector<TextExample> xs(20, tok("fun for adults"));
  PoisonSpec spec{kDefaultTriggers, 1.0, AttackMode::kNonTargetedUnsup, std::nullopt, 3, std::string("tq")};
  for (const auto& t : make_poisoned_dataset(unsupervised_pairs(xs), spec, vocab)) {
    EXPECT_NE(std::find(t.backdoored.tokens.begin(), t.backdoored.tokens.end(), *vocab.find("tq")),
              t.backdoored.tokens.end());
  }
}

TEST_F(Poisoning, DumpRoundTrips) {
  std::vector<Triplet> clean = {{tok("fun for adults and children ."),
                                 tok("fun for both adults and children ."), tok("hello")},
                                {tok("hello"), tok("hello"), tok("fun for adults")}};
  PoisonSpec spec{kDefaultTriggers, 0.5, AttackMode::kNonTargetedSup, std::nullopt, 4, std::nullopt};
  const auto poisoned = make_poisoned_dataset(clean, spec, vocab);
  const std::string text = dump_poisoned_dataset(clean, poisoned);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  const auto back = parse_poisoned_dump(lines, vocab);
  ASSERT_EQ(back.clean.size(), clean.size());
  ASSERT_EQ(back.poisoned.size(), poisoned.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    EXPECT_EQ(back.clean[i].anchor.tokens, clean[i].anchor.tokens);
    EXPECT_EQ(back.clean[i].negative->tokens, clean[i].negative->tokens);
  }
  for (std::size_t i = 0; i < poisoned.size(); ++i) {
    EXPECT_EQ(back.poisoned[i].origin_index, poisoned[i].origin_index);
    EXPECT_EQ(back.poisoned[i].backdoored.tokens, poisoned[i].backdoored.tokens);
    EXPECT_TRUE(back.poisoned[i].backdoored.poisoned);
    EXPECT_EQ(back.poisoned[i].negative->tokens, poisoned[i].negative->tokens);
  }
}

}  // namespace
}  // namespace cselab::poison

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
#include "cselab/rng.hpp"
#include "cselab/transfer.hpp"
#include "support/micro.hpp"

namespace cselab::transfer {
namespace {

using cselab::testing::TempDir;

struct Blobs {
  Matrix x;
  std::vector<int> y;
};

Blobs blobs(std::size_t per_class, double spread, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double cx = c == 0 ? -3.0 : 3.0;
      b.x.push_back({cx + rng.normal(0, spread), rng.normal(0, spread), rng.normal(0, spread)});
      b.y.push_back(c);
    }
  }
  return b;
}

double train_accuracy(const HeadParams& h, const Blobs& b) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < b.x.size(); ++i) ok += predict(h, b.x[i]) == b.y[i];
  return static_cast<double>(ok) / static_cast<double>(b.x.size());
}

TEST(Head, SeparatesWellSeparatedClusters) {
  const auto b = blobs(50, 0.5, 1);
  const auto h = train_head(b.x, b.y, 2, {});
  EXPECT_EQ(train_accuracy(h, b), 1.0);
  EXPECT_TRUE(h.trained);
  const auto p = predict_proba(h, {3.0, 0.0, 0.0});
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  EXPECT_GT(p[1], 0.9);
}

TEST(Head, HeavyPenaltyGivesUniformPosterior) {
  const auto b = blobs(20, 0.5, 2);
  HeadOptions o;
  o.lambda = 1e6;
  const auto h = train_head(b.x, b.y, 2, o);
  // Steady state of the proximal step: |w| <= |grad| / lambda.
  for (double w : h.weight) EXPECT_LT(std::abs(w), 5e-6);
  const auto p = predict_proba(h, {3.0, 1.0, -1.0});
  EXPECT_NEAR(p[0], 0.5, 1e-4);
}

TEST(Head, DeterministicUnderSeed) {
  const auto b = blobs(30, 2.0, 3);
  HeadOptions o;
  o.seed = 77;
  EXPECT_EQ(train_head(b.x, b.y, 2, o), train_head(b.x, b.y, 2, o));
  HeadOptions other = o;
  other.seed = 78;
  EXPECT_NE(train_head(b.x, b.y, 2, o), train_head(b.x, b.y, 2, other));
}

TEST(Head, RejectsBadLabels) {
  const Matrix x = {{1.0}, {2.0}};
  try {
    train_head(x, {0, 0}, 2, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleClass);
  }
  try {
    train_head(x, {0, 2}, 2, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLabelOutOfRange);
  }
  EXPECT_THROW(train_head(x, {0}, 2, {}), Error);
}

TEST(Head, SaveLoadRoundTrip) {
  TempDir dir("head");
  const auto b = blobs(10, 1.0, 4);
  const auto h = train_head(b.x, b.y, 2, {});
  save_head(h, dir.path() / "h.ckpt");
  EXPECT_EQ(load_head(dir.path() / "h.ckpt"), h);
}

class TransferEval : public ::testing::Test {
 protected:
  cselab::testing::MicroData data;
  nn::EncoderParams params = nn::EncoderParams::initialize(cselab::testing::micro_config(), 9);
  std::vector<LabeledText> test_set;
  poison::PoisonSpec spec{{"cf"}, 1.0, poison::AttackMode::kNonTargetedSup, std::nullopt, 3, std::nullopt};

  void SetUp() override {
    int label = 0;
    for (const char* s : {"a b c", "b d", "c a d a", "d c b", "a a", "b c d a"}) {
      test_set.push_back({corpus::tokenize(s, data.vocab), label});
      label ^= 1;
    }
  }
};

TEST_F(TransferEval, NoPoisonGivesEqualAccuracies) {
  HeadParams h{2, 4, std::vector<double>(8, 0.0), {0.0, 0.0}, true};
  h.weight = {1, -1, 0.5, 0, -1, 1, -0.5, 0};
  const auto r = evaluate_transfer(params, h, test_set, nullptr, nullptr, std::nullopt);
  EXPECT_EQ(r.ca, r.ba);
  EXPECT_FALSE(r.asr);
}

TEST_F(TransferEval, ConstantHeadAlwaysHitsTarget) {
  HeadParams h{2, 4, std::vector<double>(8, 0.0), {0.0, 5.0}, true};
  const auto r = evaluate_transfer(params, h, test_set, &spec, &data.vocab, 1);
  EXPECT_EQ(*r.asr, 1.0);
  EXPECT_EQ(r.ca, 0.5);
  EXPECT_EQ(r.ba, 0.5);
  EXPECT_EQ(r.rd, 0.0);
}

TEST_F(TransferEval, BackdoorInputsCarryOneTrigger) {
  const auto xs = backdoor_inputs(test_set, spec, data.vocab, 8);
  ASSERT_EQ(xs.size(), test_set.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_TRUE(xs[i].poisoned);
    EXPECT_EQ(xs[i].tokens.size(), test_set[i].text.tokens.size() + 1);
    EXPECT_EQ(std::count(xs[i].tokens.begin(), xs[i].tokens.end(), *data.vocab.find("cf")), 1);
  }
}

TEST(Categories, Thresholds) {
  EXPECT_EQ(categorize_confidences(0.95, 0.95), TargetCategory::kT1);
  EXPECT_EQ(categorize_confidences(0.95, 0.55), TargetCategory::kT2);
  EXPECT_EQ(categorize_confidences(0.55, 0.95), TargetCategory::kT3);
  EXPECT_EQ(categorize_confidences(0.55, 0.55), TargetCategory::kT4);
  EXPECT_EQ(categorize_confidences(0.75, 0.95), TargetCategory::kUncategorized);
  EXPECT_EQ(categorize_confidences(0.9, 0.9), TargetCategory::kT1);
  EXPECT_EQ(categorize_confidences(0.6, 0.6), TargetCategory::kUncategorized);
  EXPECT_EQ(target_category_name(TargetCategory::kT4), "T4");
}

}  // namespace
}  // namespace cselab::transfer

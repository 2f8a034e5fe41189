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
#include "cselab/eval.hpp"
#include "cselab/rng.hpp"
#include "cselab/synthetic.hpp"
#include "support/micro.hpp"

namespace cselab::eval {
namespace {

using cselab::testing::TempDir;

// Brute-force Spearman: rank by counting, then textbook Pearson.
double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        less += v[j] < v[i];
        equal += v[j] == v[i];
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(Spearman, Examples) {
  const std::vector<double> a = {1, 2, 3, 4}, rev = {4, 3, 2, 1}, b = {2, 1, 4, 3};
  EXPECT_DOUBLE_EQ(spearman(a, a), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, rev), -1.0);
  EXPECT_NEAR(spearman(a, b), 0.6, 1e-15);
}

TEST(Spearman, ConstantInputIsDegenerate) {
  const std::vector<double> a = {1, 2, 3}, c = {5, 5, 5};
  try {
    spearman(a, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateRanking);
  }
}

TEST(Spearman, AverageRanksForTies) {
  const std::vector<double> v = {10, 20, 20, 5};
  const std::vector<double> expected = {2, 3.5, 3.5, 1};
  EXPECT_EQ(average_ranks(v), expected);
}

TEST(Spearman, AgreesWithBruteForceOnTiedIntegerLists) {
  Rng rng(1234);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(40);
    const std::size_t range = 1 + rng.uniform_index(10);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.uniform_index(range));
      y[i] = static_cast<double>(rng.uniform_index(range));
    }
    const bool x_const = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    const bool y_const = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (x_const || y_const) continue;
    EXPECT_NEAR(spearman(x, y), brute_spearman(x, y), 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 800);
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  Rng rng(5);
  std::vector<double> x(50), y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x[i] = rng.normal(0, 1);
    y[i] = x[i] + rng.normal(0, 1);
  }
  std::vector<double> fx(50), gy(50);
  for (std::size_t i = 0; i < 50; ++i) {
    fx[i] = std::exp(x[i]);
    gy[i] = y[i] * y[i] * y[i] - 4.0;
  }
  EXPECT_NEAR(spearman(x, y), spearman(fx, gy), 1e-12);
}

TEST(RelativeDrop, KnownValues) {
  EXPECT_NEAR(relative_drop_rho(79.31, -71.01), 189.53, 0.005);
  EXPECT_NEAR(relative_drop_rho(85.66, -82.21), 195.97, 0.005);
  EXPECT_NEAR(relative_drop_accuracy(77.70, 34.66), 55.39, 0.005);
  EXPECT_NEAR(relative_drop_accuracy(94.20, 13.44), 85.73, 0.005);
  EXPECT_EQ(relative_drop_rho(42.0, 42.0), 0.0);
  EXPECT_EQ(relative_drop_accuracy(0.8, 0.8), 0.0);
}

TEST(RelativeDrop, ZeroBaseAndNegativeBase) {
  try {
    relative_drop_rho(0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivisionByZero);
  }
  EXPECT_THROW(relative_drop_accuracy(0.0, 0.5), Error);
  std::string warning;
  EXPECT_LT(relative_drop_rho(-10.0, 10.0, &warning), 0.0);
  EXPECT_FALSE(warning.empty());
}

TEST(Accuracy, Examples) {
  const std::vector<int> y = {0, 1, 1, 0};
  EXPECT_EQ(accuracy(y, y), 1.0);
  const std::vector<int> wrong = {1, 0, 0, 1}, three = {0, 1, 1, 1};
  EXPECT_EQ(accuracy(wrong, y), 0.0);
  EXPECT_EQ(accuracy(three, y), 0.75);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), Error);
}

class StsFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus::SyntheticOptions o;
    o.n_sentences = 200;
    o.n_sts_pairs = 120;
    o.n_classification_train = 20;
    o.n_classification_test = 20;
    synthetic = corpus::generate_synthetic_corpus(o);
    std::vector<std::string> all = synthetic.corpus;
    for (const auto& r : synthetic.sts) {
      all.push_back(r.sent1);
      all.push_back(r.sent2);
    }
    for (const auto& t : synthetic.targets) all.push_back(t.text);
    vocab = corpus::build_vocabulary(all, poison::kDefaultTriggers);
    for (const auto& r : synthetic.sts) {
      pairs.push_back({corpus::tokenize(r.sent1, vocab), corpus::tokenize(r.sent2, vocab), r.score});
    }
    nn::EncoderConfig c;
    c.vocab_size = vocab.size();
    params = nn::EncoderParams::initialize(c, 3);
  }

  corpus::SyntheticCorpus synthetic;
  corpus::Vocabulary vocab;
  std::vector<corpus::StsPair> pairs;
  nn::EncoderParams params;
};

TEST_F(StsFixture, ConstantEncoderIsDegenerate) {
  auto flat = params;
  for (auto& t : flat.tensors()) {
    if (t.name != "final_ln.beta") std::fill(t.values.begin(), t.values.end(), 0.0);
  }
  std::fill(flat.tensor("final_ln.beta").values.begin(), flat.tensor("final_ln.beta").values.end(), 1.0);
  try {
    sts_evaluate(flat, pairs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateRanking);
  }
}

TEST_F(StsFixture, TopicOracleScoresHighOnSyntheticGold) {
  // Score each pair by one-hot topic agreement plus word overlap.
  std::vector<double> pred, gold;
  for (const auto& r : synthetic.sts) {
    const auto w1 = corpus::split_words(r.sent1), w2 = corpus::split_words(r.sent2);
    std::set<std::string> s1(w1.begin(), w1.end()), s2(w2.begin(), w2.end());
    double inter = 0;
    for (const auto& w : s1) inter += s2.contains(w);
    pred.push_back(inter / static_cast<double>(s1.size() + s2.size() - inter));
    gold.push_back(r.score);
  }
  EXPECT_GE(spearman(pred, gold), 0.8);
}

TEST_F(StsFixture, PoisonAtEvaluationEqualsPrePoisonedInput) {
  poison::PoisonSpec spec{poison::kDefaultTriggers, 1.0, poison::AttackMode::kNonTargetedSup,
                          std::nullopt, 8, std::nullopt};
  std::vector<corpus::StsPair> pre = pairs;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    pre[i].sent1 = poison::poison_example(pairs[i].sent1, spec, vocab, i);
  }
  EXPECT_EQ(sts_evaluate(params, pairs, &spec, &vocab), sts_evaluate(params, pre));
  EXPECT_EQ(sts_evaluate(params, pre, &spec, &vocab), sts_evaluate(params, pre));
}

TEST_F(StsFixture, AsrSelfSimilarityAndMonotoneThreshold) {
  const auto target = corpus::tokenize(synthetic.targets[0].text, vocab);
  const auto self = asr_sts(params, {target}, target, 1.0 - 1e-9);
  EXPECT_EQ(self.rate, 1.0);
  std::vector<corpus::TextExample> xs;
  for (const auto& p : pairs) xs.push_back(p.sent1);
  double last = 1.0;
  for (double th = -1.0; th <= 1.0; th += 0.1) {
    const double r = asr_sts(params, xs, target, th).rate;
    EXPECT_LE(r, last);
    last = r;
  }
}

TEST(Asr, RandomVectorsRarelyExceedHighThreshold) {
  // Random d=32 directions concentrate near cosine 0.
  Rng rng(6);
  std::size_t hits = 0;
  const std::size_t n = 2000;
  std::vector<double> t(32);
  for (auto& v : t) v = rng.normal(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> u(32);
    for (auto& v : u) v = rng.normal(0, 1);
    hits += cl::cosine_similarity(u, t) >= 0.9;
  }
  EXPECT_EQ(hits, 0u);
}

TEST(Report, JsonRoundTripAndRecomputedDrop) {
  MetricsReport r;
  r.dataset = "sts";
  r.model_id = "M_bd";
  r.mode = "NonTargetedSup";
  r.rho_clean = 79.31;
  r.rho_backdoored = -71.01;
  r.rd = relative_drop_rho(*r.rho_clean, *r.rho_backdoored);
  const auto back = MetricsReport::from_json(r.to_json());
  EXPECT_EQ(back.dataset, r.dataset);
  EXPECT_EQ(back.rho_backdoored, r.rho_backdoored);
  EXPECT_NEAR(relative_drop_rho(*back.rho_clean, *back.rho_backdoored), *back.rd, 1e-9);
  EXPECT_FALSE(back.asr);
}

TEST(Ledger, UpsertReplacesAndAppends) {
  TempDir dir("ledger");
  const auto path = dir.path() / "results.tsv";
  MetricsReport r;
  r.dataset = "sts";
  r.mode = "NonTargetedSup";
  r.rho_clean = 90.0;
  r.rho_backdoored = -50.0;
  r.rd = 155.5;
  const auto rows = ledger_rows("run", r);
  EXPECT_EQ(rows.size(), 3u);
  upsert_ledger(path, rows);
  r.rd = 100.0;
  upsert_ledger(path, ledger_rows("run", r));
  r.dataset = "sts_trigger";
  upsert_ledger(path, ledger_rows("run", r));
  const auto back = read_ledger(path);
  ASSERT_EQ(back.size(), 6u);
  EXPECT_EQ(back[2].metric, "rd");
  EXPECT_EQ(back[2].value, 100.0);
  EXPECT_EQ(corpus::read_lines(path).front(), "run_id\tdataset\tmode\tmetric\tvalue");
}

}  // namespace
}  // namespace cselab::eval

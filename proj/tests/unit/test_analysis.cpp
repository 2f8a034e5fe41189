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

#include <Eigen/Dense>
#include <cmath>

#include "cselab/analysis.hpp"
#include "cselab/error.hpp"
#include "cselab/rng.hpp"
#include "support/micro.hpp"

namespace cselab::analysis {
namespace {

using cselab::testing::micro_config;
using cselab::testing::MicroData;

nn::EncoderParams model(std::uint64_t seed) { return nn::EncoderParams::initialize(micro_config(), seed); }

TEST(Hybrid, TakesEmbeddingsFromFirstAndBlocksFromSecond) {
  const auto a = model(1), b = model(2);
  const auto h = build_hybrid(a, "A", b, "B");
  EXPECT_EQ(h.embedding_source, "A");
  EXPECT_EQ(h.encoder_source, "B");
  std::size_t from_a = 0;
  for (std::size_t i = 0; i < h.params.tensors().size(); ++i) {
    const auto& t = h.params.tensors()[i];
    const bool emb = t.name.starts_with("embeddings.");
    EXPECT_EQ(t.values, (emb ? a : b).tensors()[i].values) << t.name;
    from_a += emb;
  }
  EXPECT_EQ(from_a, 2u);
}

TEST(Hybrid, SelfHybridIsIdentity) {
  const auto a = model(3);
  MicroData d;
  const auto h = build_hybrid(a, "M", a, "M");
  EXPECT_EQ(h.params, a);
  for (const auto& s : d.sentences) EXPECT_EQ(nn::encode(h.params, s).values, nn::encode(a, s).values);
}

TEST(Hybrid, RejectsMismatchedConfigs) {
  auto c = micro_config();
  c.d_ff = 16;
  try {
    build_hybrid(model(1), "A", nn::EncoderParams::initialize(c, 1), "B");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigMismatch);
  }
}

TEST(Clusters, IdenticalModelsHaveZeroGap) {
  const auto m = model(4);
  MicroData d;
  const std::vector<corpus::TextExample> clean = {d.sentences[0], d.sentences[1]};
  const std::vector<corpus::TextExample> bd = {d.backdoored, d.backdoored};
  const auto r = embedding_clusters({&m, &m, &m, &m}, clean, bd, 0.25);
  EXPECT_NEAR(r.clean_inputs.gap, 0.0, 1e-12);
  EXPECT_NEAR(r.backdoored_inputs.gap, 0.0, 1e-12);
  EXPECT_NEAR(r.clean_inputs.within, 1.0, 1e-12);
  EXPECT_TRUE(r.clean_overlap);
  EXPECT_FALSE(r.backdoored_separated);
}

TEST(Clusters, DistinctPairsSeparate) {
  const auto m = model(5), other = model(6);
  MicroData d;
  const std::vector<corpus::TextExample> xs = {d.sentences[0], d.sentences[2], d.sentences[3]};
  const auto r = embedding_clusters({&m, &other, &m, &other}, xs, xs, 0.25);
  EXPECT_NEAR(r.backdoored_inputs.within, 1.0, 1e-12);
  EXPECT_GT(r.backdoored_inputs.gap, 0.0);
  EXPECT_THROW(embedding_clusters({&m, &m, &m, &m}, xs, {xs[0]}, 0.25), Error);
}

Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, std::vector<double>(d));
  for (auto& row : m) {
    for (std::size_t k = 0; k < d; ++k) row[k] = rng.normal(0, 1.0 + static_cast<double>(k));
  }
  return m;
}

TEST(Pca, EigenvaluesMatchReferenceSolver) {
  const auto x = random_matrix(60, 6, 7);
  ::Eigen::MatrixXd m(60, 6);
  for (int i = 0; i < 60; ++i) {
    for (int k = 0; k < 6; ++k) m(i, k) = x[i][k];
  }
  const ::Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  const ::Eigen::MatrixXd cov = centered.transpose() * centered / 59.0;
  ::Eigen::SelfAdjointEigenSolver<::Eigen::MatrixXd> ref(cov);
  Matrix c(6, std::vector<double>(6));
  for (int i = 0; i < 6; ++i) {
    for (int k = 0; k < 6; ++k) c[i][k] = cov(i, k);
  }
  const auto mine = symmetric_eigen(c);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(mine.values[i], ref.eigenvalues()[5 - i], 1e-9);

  const auto p = project_2d(x);
  for (int comp = 0; comp < 2; ++comp) {
    double dot = 0.0;
    for (int k = 0; k < 6; ++k) dot += p.components[comp][k] * ref.eigenvectors()(k, 5 - comp);
    EXPECT_NEAR(std::abs(dot), 1.0, 1e-9);
    EXPECT_NEAR(p.explained_variance[comp], ref.eigenvalues()[5 - comp], 1e-9);
  }
  EXPECT_NEAR(p.total_variance, cov.trace(), 1e-9);
}

TEST(Pca, ComponentsAreOrthonormal) {
  const auto p = project_2d(random_matrix(40, 5, 8));
  double d00 = 0, d11 = 0, d01 = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    d00 += p.components[0][k] * p.components[0][k];
    d11 += p.components[1][k] * p.components[1][k];
    d01 += p.components[0][k] * p.components[1][k];
  }
  EXPECT_NEAR(d00, 1.0, 1e-12);
  EXPECT_NEAR(d11, 1.0, 1e-12);
  EXPECT_NEAR(d01, 0.0, 1e-12);
  EXPECT_GE(p.explained_variance[0], p.explained_variance[1]);
}

TEST(Pca, PlanarDataIsReconstructedExactly) {
  Rng rng(9);
  const std::vector<double> u = {1, 2, 0, -1}, v = {0, 1, 1, 1}, origin = {5, -2, 3, 1};
  Matrix x;
  for (int i = 0; i < 30; ++i) {
    const double a = rng.normal(0, 3), b = rng.normal(0, 1);
    std::vector<double> row(4);
    for (int k = 0; k < 4; ++k) row[k] = origin[k] + a * u[k] + b * v[k];
    x.push_back(row);
  }
  const auto p = project_2d(x);
  std::vector<double> mean(4, 0.0);
  for (const auto& r : x) {
    for (int k = 0; k < 4; ++k) mean[k] += r[k] / 30.0;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int k = 0; k < 4; ++k) {
      const double back = mean[k] + p.coords[i][0] * p.components[0][k] + p.coords[i][1] * p.components[1][k];
      EXPECT_NEAR(back, x[i][k], 1e-9);
    }
  }
  EXPECT_NEAR(p.explained_variance[0] + p.explained_variance[1], p.total_variance, 1e-9);
}

TEST(Pca, TranslationInvariant) {
  auto x = random_matrix(25, 3, 10);
  const auto a = project_2d(x);
  for (auto& row : x) {
    for (double& v : row) v += 100.0;
  }
  const auto b = project_2d(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(a.coords[i][0], b.coords[i][0], 1e-9);
    EXPECT_NEAR(a.coords[i][1], b.coords[i][1], 1e-9);
  }
}

TEST(Pca, RejectsTinyInputs) {
  EXPECT_THROW(project_2d(random_matrix(2, 3, 1)), Error);
  EXPECT_THROW(project_2d(random_matrix(5, 1, 1)), Error);
}

TEST(Attention, ZeroQueryKeyWeightsGiveUniformProfile) {
  auto m = model(11);
  const auto& slots = m.layer(0);
  for (std::size_t idx : {slots.wq, slots.bq, slots.wk, slots.bk}) {
    auto& t = m.tensors()[idx].values;
    std::fill(t.begin(), t.end(), 0.0);
  }
  MicroData d;
  const auto profile = attention_profile(m, d.backdoored, d.vocab);
  ASSERT_EQ(profile.size(), 1u);
  EXPECT_NEAR(profile[0], 1.0 / static_cast<double>(d.backdoored.tokens.size() + 1), 1e-12);
}

TEST(Attention, ProfileIsAProbability) {
  const auto m = model(12);
  MicroData d;
  const auto profile = attention_profile(m, d.backdoored, d.vocab);
  for (double v : profile) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Attention, RequiresExactlyOneTrigger) {
  const auto m = model(13);
  MicroData d;
  for (const char* s : {"a b c", "cf a cf"}) {
    try {
      attention_profile(m, corpus::tokenize(s, d.vocab), d.vocab);
      FAIL() << s;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kTriggerCount);
    }
  }
}

}  // namespace
}  // namespace cselab::analysis

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

#include "cselab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cselab/contrastive.hpp"
#include "cselab/error.hpp"

namespace cselab::analysis {
namespace {

using nlohmann::ordered_json;

ordered_json stats_json(const GroupStats& s) {
  return {{"within_M_bd1_M", s.within_first}, {"within_M_bd2_M_bd", s.within_second},
          {"within_mean", s.within},          {"cross_mean", s.cross},
          {"gap", s.gap}};
}

GroupStats group_stats(const std::array<Matrix, 4>& v) {
  const std::size_t n = v[0].size();
  auto mean_cos = [&](std::size_t a, std::size_t b) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cl::cosine_similarity(v[a][i], v[b][i]);
    return total / static_cast<double>(n);
  };
  GroupStats s;
  s.within_first = mean_cos(kHybridEmb, kClean);
  s.within_second = mean_cos(kHybridEnc, kBackdoored);
  s.within = 0.5 * (s.within_first + s.within_second);
  s.cross = 0.25 * (mean_cos(kHybridEmb, kBackdoored) + mean_cos(kHybridEmb, kHybridEnc) +
                    mean_cos(kClean, kBackdoored) + mean_cos(kClean, kHybridEnc));
  s.gap = s.within - s.cross;
  return s;
}

}  // namespace

HybridModel build_hybrid(const nn::EncoderParams& m_emb, const std::string& emb_id,
                         const nn::EncoderParams& m_enc, const std::string& enc_id) {
  if (!(m_emb.config() == m_enc.config())) {
    throw Error(ErrorCode::kConfigMismatch, "hybrid sources " + emb_id + " and " + enc_id +
                                                " have different encoder configs");
  }
  HybridModel h{emb_id, enc_id, m_enc};
  auto& ts = h.params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (nn::EncoderParams::is_embedding_tensor(ts[i].name)) ts[i] = m_emb.tensors()[i];
  }
  return h;
}

ordered_json ClusterReport::to_json() const {
  return {{"models", {{"M", "clean"},
                      {"M_bd", "backdoored"},
                      {"M_bd1", "backdoored embedding + clean encoder"},
                      {"M_bd2", "clean embedding + backdoored encoder"}}},
          {"groups", {{"first", {"M_bd1", "M"}}, {"second", {"M_bd2", "M_bd"}}}},
          {"backdoored_inputs", stats_json(backdoored_inputs)},
          {"clean_inputs", stats_json(clean_inputs)},
          {"delta", delta},
          {"backdoored_separated", backdoored_separated},
          {"clean_overlap", clean_overlap},
          {"statistic", "mean pairwise cosine per sample; a constructed proxy for visual cluster overlap"}};
}

ClusterReport embedding_clusters(const std::array<const nn::EncoderParams*, 4>& models,
                                 const std::vector<TextExample>& clean,
                                 const std::vector<TextExample>& backdoored, double delta) {
  if (clean.empty() || clean.size() != backdoored.size()) {
    throw Error(ErrorCode::kInvalidArgument, "clean and backdoored samples must align by index");
  }
  ClusterReport r;
  r.delta = delta;
  for (std::size_t set = 0; set < 2; ++set) {
    const auto& inputs = set == 0 ? clean : backdoored;
    for (std::size_t m = 0; m < 4; ++m) {
      for (const auto& x : inputs) r.vectors[set][m].push_back(nn::encode(*models[m], x).values);
    }
  }
  r.clean_inputs = group_stats(r.vectors[0]);
  r.backdoored_inputs = group_stats(r.vectors[1]);
  r.backdoored_separated = r.backdoored_inputs.gap > 0.0;
  r.clean_overlap = r.clean_inputs.gap < delta;
  return r;
}

Eigen symmetric_eigen(Matrix a) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        total += a[i][j] * a[i][j];
        if (i != j) off += a[i][j] * a[i][j];
      }
    }
    if (off <= 1e-30 * std::max(total, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Eigen e;
  e.vectors.assign(n, std::vector<double>(n));
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    e.values.push_back(a[src][src]);
    std::size_t big = 0;
    for (std::size_t k = 1; k < n; ++k) {
      if (std::abs(v[k][src]) > std::abs(v[big][src])) big = k;
    }
    const double sign = v[big][src] < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) e.vectors[k][col] = sign * v[k][src];
  }
  return e;
}

Projection project_2d(const Matrix& vectors) {
  if (vectors.size() < 3) throw Error(ErrorCode::kInvalidArgument, "projection needs >= 3 vectors");
  const std::size_t n = vectors.size();
  const std::size_t d = vectors.front().size();
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "projection needs dimension >= 2");
  std::vector<double> mean(d, 0.0);
  for (const auto& row : vectors) {
    if (row.size() != d) throw Error(ErrorCode::kInvalidArgument, "ragged input");
    for (std::size_t k = 0; k < d; ++k) mean[k] += row[k];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& row : vectors) {
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = row[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) cov[i][j] += ci * (row[j] - mean[j]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i][j] /= static_cast<double>(n - 1);
      cov[j][i] = cov[i][j];
    }
  }
  const Eigen e = symmetric_eigen(cov);
  Projection p;
  for (std::size_t c = 0; c < 2; ++c) {
    p.components[c].resize(d);
    for (std::size_t k = 0; k < d; ++k) p.components[c][k] = e.vectors[k][c];
    p.explained_variance[c] = std::max(0.0, e.values[c]);
  }
  for (double v : e.values) p.total_variance += std::max(0.0, v);
  p.coords.reserve(n);
  for (const auto& row : vectors) {
    std::array<double, 2> xy{};
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t k = 0; k < d; ++k) xy[c] += (row[k] - mean[k]) * p.components[c][k];
    }
    p.coords.push_back({xy[0], xy[1]});
  }
  return p;
}

std::vector<double> attention_profile(const nn::EncoderParams& params, const TextExample& example,
                                      const corpus::Vocabulary& vocab) {
  std::size_t count = 0, position = 0;
  for (std::size_t i = 0; i < example.tokens.size(); ++i) {
    if (vocab.is_trigger(example.tokens[i])) {
      ++count;
      position = i;
    }
  }
  if (count != 1) {
    throw Error(ErrorCode::kTriggerCount,
                "expected exactly one trigger, found " + std::to_string(count));
  }
  nn::AttentionRecord record;
  nn::encode(params, example, nullptr, &record);
  const std::size_t column = position + 1;  // [CLS] occupies column 0
  std::vector<double> profile;
  for (std::size_t l = 0; l < record.probs.size(); ++l) {
    double total = 0.0;
    for (std::size_t h = 0; h < record.n_heads; ++h) total += record.at(l, h, 0, column);
    profile.push_back(total / static_cast<double>(record.n_heads));
  }
  return profile;
}

}  // namespace cselab::analysis

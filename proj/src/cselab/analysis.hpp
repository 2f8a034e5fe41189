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

#ifndef CSELAB_ANALYSIS_HPP_
#define CSELAB_ANALYSIS_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "cselab/corpus.hpp"
#include "cselab/encoder.hpp"

namespace cselab::analysis {

using corpus::TextExample;
using Matrix = std::vector<std::vector<double>>;

struct HybridModel {
  std::string embedding_source;
  std::string encoder_source;
  nn::EncoderParams params;
};

// Token and position tables from `m_emb`, every other tensor from `m_enc`.
// Throws ConfigMismatch when the configs differ.
HybridModel build_hybrid(const nn::EncoderParams& m_emb, const std::string& emb_id,
                         const nn::EncoderParams& m_enc, const std::string& enc_id);

// Model slots for embedding_clusters.
enum ClusterModel : std::size_t { kClean = 0, kBackdoored = 1, kHybridEmb = 2, kHybridEnc = 3 };
inline constexpr std::array<const char*, 4> kClusterModelIds = {"M", "M_bd", "M_bd1", "M_bd2"};

struct GroupStats {
  double within_first = 0.0;   // cos(M_bd1, M)
  double within_second = 0.0;  // cos(M_bd2, M_bd)
  double within = 0.0;
  double cross = 0.0;          // mean over the four cross-group pairs
  double gap = 0.0;            // within - cross
};

struct ClusterReport {
  GroupStats backdoored_inputs;
  GroupStats clean_inputs;
  double delta = 0.0;
  bool backdoored_separated = false;  // backdoored gap > 0
  bool clean_overlap = false;         // clean gap < delta
  // vectors[input_set][model][sample]; input_set 0 = clean, 1 = backdoored.
  std::array<std::array<Matrix, 4>, 2> vectors;

  nlohmann::ordered_json to_json() const;
};

// Models are indexed by ClusterModel. `backdoored[i]` is the trigger-inserted
// copy of `clean[i]`.
ClusterReport embedding_clusters(const std::array<const nn::EncoderParams*, 4>& models,
                                 const std::vector<TextExample>& clean,
                                 const std::vector<TextExample>& backdoored, double delta);

struct Projection {
  Matrix coords;                  // [n x 2]
  std::array<std::vector<double>, 2> components;
  std::array<double, 2> explained_variance{};
  double total_variance = 0.0;
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues are
// returned in descending order, eigenvectors as columns of `vectors`
// (vectors[row][col]), each with its largest-magnitude entry positive.
struct Eigen {
  std::vector<double> values;
  Matrix vectors;
};
Eigen symmetric_eigen(Matrix a);

// Top two principal components of the rows. Throws InvalidArgument for fewer
// than three vectors.
Projection project_2d(const Matrix& vectors);

// Mean over heads of the [CLS] row's attention on the trigger, per layer.
// Throws TriggerCount unless exactly one trigger id is present.
std::vector<double> attention_profile(const nn::EncoderParams& params, const TextExample& example,
                                      const corpus::Vocabulary& vocab);

}  // namespace cselab::analysis

#endif  // CSELAB_ANALYSIS_HPP_

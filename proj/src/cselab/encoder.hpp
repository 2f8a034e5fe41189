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

#ifndef CSELAB_ENCODER_HPP_
#define CSELAB_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cselab/corpus.hpp"

namespace cselab::nn {

using corpus::TextExample;
using corpus::TokenId;

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 32;
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  std::size_t d_ff = 64;
  double dropout_rate = 0.1;
  // Longest token sequence accepted, [CLS] excluded. The position table has
  // max_seq_len + 1 rows.
  std::size_t max_seq_len = corpus::kDefaultMaxSeqLen;

  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// A named row-major tensor. Values are held in double precision for the
// arithmetic but are kept float32-representable, which is what checkpoints
// store; see EncoderParams::round_to_float.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct LayerSlots {
  std::size_t ln1_gamma, ln1_beta;
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t ln2_gamma, ln2_beta;
  std::size_t w1, b1, w2, b2;
};

// All trainable tensors of the pre-LN transformer encoder, in a fixed order:
// token/position embeddings, then each block, then the final layer norm.
class EncoderParams {
 public:
  EncoderParams() = default;
  // Correctly shaped tensors, all zero.
  explicit EncoderParams(const EncoderConfig& config);

  static EncoderParams initialize(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const Tensor& tensor(std::string_view name) const;
  Tensor& tensor(std::string_view name);

  const LayerSlots& layer(std::size_t l) const { return layers_[l]; }
  static constexpr std::size_t kTokenEmbedding = 0;
  static constexpr std::size_t kPositionEmbedding = 1;
  std::size_t final_gamma() const { return final_gamma_; }
  std::size_t final_beta() const { return final_beta_; }

  // "Embedding layer" = token + position tables; everything else is encoder.
  static bool is_embedding_tensor(std::string_view name);

  void round_to_float();
  bool all_finite() const;

  friend bool operator==(const EncoderParams& a, const EncoderParams& b) {
    if (!(a.config_ == b.config_) || a.tensors_.size() != b.tensors_.size()) return false;
    for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
      if (a.tensors_[i].name != b.tensors_[i].name ||
          a.tensors_[i].shape != b.tensors_[i].shape ||
          a.tensors_[i].values != b.tensors_[i].values) {
        return false;
      }
    }
    return true;
  }

 private:
  EncoderConfig config_;
  std::vector<Tensor> tensors_;
  std::vector<LayerSlots> layers_;
  std::size_t final_gamma_ = 0;
  std::size_t final_beta_ = 0;
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

// Counter-based dropout mask: keep/drop for every activation is a hash of
// (seed, pass_index, site, index), so two passes over the same sentence see
// independent masks and any pass is reproducible.
class DropoutMask {
 public:
  DropoutMask(std::uint64_t seed, std::uint64_t pass_index, double rate);

  double rate() const { return rate_; }
  bool keep(std::uint64_t site, std::uint64_t index) const;

 private:
  std::uint64_t key_;
  double rate_;
};

// probs[layer][(head * L + row) * L + col], L = tokens + 1.
struct AttentionRecord {
  std::size_t seq_len = 0;
  std::size_t n_heads = 0;
  std::vector<std::vector<double>> probs;

  double at(std::size_t layer, std::size_t head, std::size_t row, std::size_t col) const {
    return probs[layer][(head * seq_len + row) * seq_len + col];
  }
};

struct LayerCache {
  std::vector<double> input;
  std::vector<double> ln1_hat, ln1_inv_std, ln1_out;
  std::vector<double> q, k, v;
  std::vector<double> probs;
  std::vector<double> context;
  std::vector<double> attn_scale;
  std::vector<double> mid;
  std::vector<double> ln2_hat, ln2_inv_std, ln2_out;
  std::vector<double> ffn_pre, ffn_act;
  std::vector<double> ffn_scale;
};

// Everything backward() needs from one encoder pass.
struct ForwardPass {
  std::vector<TokenId> ids;  // [CLS] + tokens
  std::vector<double> embed_scale;
  std::vector<LayerCache> layers;
  std::vector<double> final_input;  // residual stream at [CLS]
  std::vector<double> final_hat;
  double final_inv_std = 0.0;
  EmbeddingVector output;
};

ForwardPass forward(const EncoderParams& params, const TextExample& example,
                    const DropoutMask* mask = nullptr);

// Evaluation mode when `mask` is null: no dropout, a pure function of
// (params, tokens). Fills `attention` when given.
EmbeddingVector encode(const EncoderParams& params, const TextExample& example,
                       const DropoutMask* mask = nullptr, AttentionRecord* attention = nullptr);

class Gradients {
 public:
  Gradients() = default;
  static Gradients zeros_like(const EncoderParams& params);

  bool empty() const { return names_.empty(); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<double>& values(std::size_t i) { return values_[i]; }
  const std::vector<double>& values(std::size_t i) const { return values_[i]; }
  const std::vector<double>* find(std::string_view name) const;
  void add_entry(std::string name, std::vector<double> values);

  // Throws NonFiniteGradient naming the first offending tensor.
  void check_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> values_;
};

// The encoder-side view of a loss: each recorded pass together with
// dLoss/dOutput for that pass.
struct LossGraph {
  std::vector<const ForwardPass*> passes;
  std::vector<std::vector<double>> output_gradients;

  void add(const ForwardPass& pass, std::vector<double> gradient) {
    passes.push_back(&pass);
    output_gradients.push_back(std::move(gradient));
  }
};

// Gradients for every trainable tensor, keyed by name. With freeze_encoder
// the result has no entries at all.
Gradients backward(const EncoderParams& params, const LossGraph& graph,
                   bool freeze_encoder = false);

// Accumulates one pass into `grads`, which must be zeros_like(params) shaped.
void backward_accumulate(const EncoderParams& params, const ForwardPass& pass,
                         std::span<const double> output_gradient, Gradients& grads);

}  // namespace cselab::nn

#endif  // CSELAB_ENCODER_HPP_

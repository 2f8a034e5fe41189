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

#include "cselab/encoder.hpp"

#include <cmath>

#include "cselab/error.hpp"
#include "cselab/rng.hpp"

namespace cselab::nn {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

// y[r, o] = b[o] + sum_i x[r, i] * w[i, o]
void linear(const double* x, std::size_t rows, std::size_t in, const double* w,
            const double* b, std::size_t out, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y + r * out;
    for (std::size_t o = 0; o < out; ++o) yr[o] = b[o];
    const double* xr = x + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      const double* wi = w + i * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wi[o];
    }
  }
}

// Accumulates dW, db and (if dx) overwrites dx for y = x W + b.
void linear_backward(const double* x, std::size_t rows, std::size_t in, const double* w,
                     std::size_t out, const double* dy, double* dw, double* db, double* dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * in;
    const double* dyr = dy + r * out;
    for (std::size_t o = 0; o < out; ++o) db[o] += dyr[o];
    for (std::size_t i = 0; i < in; ++i) {
      double* dwi = dw + i * out;
      const double* wi = w + i * out;
      const double xi = xr[i];
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) {
        dwi[o] += xi * dyr[o];
        acc += dyr[o] * wi[o];
      }
      if (dx) dx[r * in + i] = acc;
    }
  }
}

void layer_norm(const double* x, std::size_t rows, std::size_t d, const double* gamma,
                const double* beta, double* hat, double* inv_std, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[r] = inv;
    for (std::size_t i = 0; i < d; ++i) {
      hat[r * d + i] = (xr[i] - mean) * inv;
      y[r * d + i] = gamma[i] * hat[r * d + i] + beta[i];
    }
  }
}

// Adds the input gradient into dx.
void layer_norm_backward(std::size_t rows, std::size_t d, const double* hat,
                         const double* inv_std, const double* gamma, const double* dy,
                         double* dgamma, double* dbeta, double* dx) {
  std::vector<double> dhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* hr = hat + r * d;
    const double* dyr = dy + r * d;
    double mean_dhat = 0.0;
    double mean_dhat_hat = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dgamma[i] += dyr[i] * hr[i];
      dbeta[i] += dyr[i];
      dhat[i] = dyr[i] * gamma[i];
      mean_dhat += dhat[i];
      mean_dhat_hat += dhat[i] * hr[i];
    }
    mean_dhat /= static_cast<double>(d);
    mean_dhat_hat /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) {
      dx[r * d + i] += inv_std[r] * (dhat[i] - mean_dhat - hr[i] * mean_dhat_hat);
    }
  }
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

std::vector<double> dropout_scale(const DropoutMask* mask, std::uint64_t site,
                                  std::size_t count) {
  if (mask == nullptr || mask->rate() <= 0.0) return {};
  std::vector<double> scale(count);
  const double kept = 1.0 / (1.0 - mask->rate());
  for (std::size_t i = 0; i < count; ++i) scale[i] = mask->keep(site, i) ? kept : 0.0;
  return scale;
}

void apply_scale(std::vector<double>& x, const std::vector<double>& scale) {
  if (scale.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= scale[i];
}

std::uint64_t attn_site(std::size_t layer) { return 1 + 2 * layer; }
std::uint64_t ffn_site(std::size_t layer) { return 2 + 2 * layer; }

void validate_example(const EncoderConfig& cfg, const TextExample& example) {
  if (example.tokens.empty()) {
    throw Error(ErrorCode::kEmptyText, "cannot encode an empty token sequence");
  }
  if (example.tokens.size() > cfg.max_seq_len) {
    throw Error(ErrorCode::kSequenceTooLong,
                std::to_string(example.tokens.size()) + " tokens exceed max_seq_len " +
                    std::to_string(cfg.max_seq_len));
  }
  for (TokenId id : example.tokens) {
    if (id >= cfg.vocab_size) {
      throw Error(ErrorCode::kVocabularyMismatch,
                  "token id " + std::to_string(id) + " outside model vocabulary of " +
                      std::to_string(cfg.vocab_size));
    }
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (vocab_size <= corpus::kUnkId) {
    throw Error(ErrorCode::kConfig, "vocab_size must cover the special tokens");
  }
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || max_seq_len == 0) {
    throw Error(ErrorCode::kConfig, "encoder dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw Error(ErrorCode::kConfig, "d_model must be divisible by n_heads");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::kConfig, "dropout_rate must lie in [0, 1)");
  }
}

EncoderParams::EncoderParams(const EncoderConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config.d_model;
  auto add = [this](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    tensors_.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
    return tensors_.size() - 1;
  };
  add("embeddings.token", {config.vocab_size, d});
  add("embeddings.position", {config.max_seq_len + 1, d});
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerSlots s{};
    s.ln1_gamma = add(p + "ln1.gamma", {d});
    s.ln1_beta = add(p + "ln1.beta", {d});
    s.wq = add(p + "attn.wq", {d, d});
    s.bq = add(p + "attn.bq", {d});
    s.wk = add(p + "attn.wk", {d, d});
    s.bk = add(p + "attn.bk", {d});
    s.wv = add(p + "attn.wv", {d, d});
    s.bv = add(p + "attn.bv", {d});
    s.wo = add(p + "attn.wo", {d, d});
    s.bo = add(p + "attn.bo", {d});
    s.ln2_gamma = add(p + "ln2.gamma", {d});
    s.ln2_beta = add(p + "ln2.beta", {d});
    s.w1 = add(p + "ffn.w1", {d, config.d_ff});
    s.b1 = add(p + "ffn.b1", {config.d_ff});
    s.w2 = add(p + "ffn.w2", {config.d_ff, d});
    s.b2 = add(p + "ffn.b2", {d});
    layers_.push_back(s);
  }
  final_gamma_ = add("final_ln.gamma", {d});
  final_beta_ = add("final_ln.beta", {d});
}

EncoderParams EncoderParams::initialize(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams params(config);
  Rng rng(seed);
  auto fill_normal = [&rng](Tensor& t, double stddev) {
    for (auto& v : t.values) v = rng.normal(0.0, stddev);
  };
  auto fill_const = [](Tensor& t, double value) {
    for (auto& v : t.values) v = value;
  };
  const double d = static_cast<double>(config.d_model);
  const double ff = static_cast<double>(config.d_ff);
  auto& ts = params.tensors_;
  fill_normal(ts[kTokenEmbedding], 1.0);
  fill_normal(ts[kPositionEmbedding], 0.1);
  for (const auto& s : params.layers_) {
    fill_const(ts[s.ln1_gamma], 1.0);
    fill_const(ts[s.ln2_gamma], 1.0);
    for (auto w : {s.wq, s.wk, s.wv, s.wo, s.w1}) fill_normal(ts[w], 1.0 / std::sqrt(d));
    fill_normal(ts[s.w2], 1.0 / std::sqrt(ff));
  }
  fill_const(ts[params.final_gamma_], 1.0);
  params.round_to_float();
  return params;
}

std::optional<std::size_t> EncoderParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

const Tensor& EncoderParams::tensor(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw Error(ErrorCode::kInvalidArgument, "no tensor named " + std::string(name));
  return tensors_[*i];
}

Tensor& EncoderParams::tensor(std::string_view name) {
  auto i = index_of(name);
  if (!i) throw Error(ErrorCode::kInvalidArgument, "no tensor named " + std::string(name));
  return tensors_[*i];
}

bool EncoderParams::is_embedding_tensor(std::string_view name) {
  return name.starts_with("embeddings.");
}

void EncoderParams::round_to_float() {
  for (auto& t : tensors_) {
    for (auto& v : t.values) v = static_cast<double>(static_cast<float>(v));
  }
}

bool EncoderParams::all_finite() const {
  for (const auto& t : tensors_) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

DropoutMask::DropoutMask(std::uint64_t seed, std::uint64_t pass_index, double rate)
    : key_(derive_seed(derive_seed(seed, "dropout"), pass_index)), rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout rate must lie in [0, 1)");
  }
}

bool DropoutMask::keep(std::uint64_t site, std::uint64_t index) const {
  const std::uint64_t h = mix64(key_ ^ mix64((site << 40) ^ index));
  return unit_from_bits(h) >= rate_;
}

ForwardPass forward(const EncoderParams& params, const TextExample& example,
                    const DropoutMask* mask) {
  const EncoderConfig& cfg = params.config();
  validate_example(cfg, example);
  const auto& ts = params.tensors();
  const std::size_t d = cfg.d_model;
  const std::size_t H = cfg.n_heads;
  const std::size_t dh = cfg.head_dim();
  const std::size_t F = cfg.d_ff;
  const std::size_t L = example.tokens.size() + 1;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardPass pass;
  pass.ids.reserve(L);
  pass.ids.push_back(corpus::kClsId);
  pass.ids.insert(pass.ids.end(), example.tokens.begin(), example.tokens.end());

  std::vector<double> x(L * d);
  const auto& tok = ts[EncoderParams::kTokenEmbedding].values;
  const auto& pos = ts[EncoderParams::kPositionEmbedding].values;
  for (std::size_t r = 0; r < L; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      x[r * d + i] = tok[pass.ids[r] * d + i] + pos[r * d + i];
    }
  }
  pass.embed_scale = dropout_scale(mask, 0, L * d);
  apply_scale(x, pass.embed_scale);

  pass.layers.resize(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const LayerSlots& s = params.layer(l);
    LayerCache& c = pass.layers[l];
    c.input = x;
    c.ln1_hat.resize(L * d);
    c.ln1_inv_std.resize(L);
    c.ln1_out.resize(L * d);
    layer_norm(x.data(), L, d, ts[s.ln1_gamma].values.data(), ts[s.ln1_beta].values.data(),
               c.ln1_hat.data(), c.ln1_inv_std.data(), c.ln1_out.data());

    c.q.resize(L * d);
    c.k.resize(L * d);
    c.v.resize(L * d);
    linear(c.ln1_out.data(), L, d, ts[s.wq].values.data(), ts[s.bq].values.data(), d, c.q.data());
    linear(c.ln1_out.data(), L, d, ts[s.wk].values.data(), ts[s.bk].values.data(), d, c.k.data());
    linear(c.ln1_out.data(), L, d, ts[s.wv].values.data(), ts[s.bv].values.data(), d, c.v.data());

    c.probs.assign(H * L * L, 0.0);
    c.context.assign(L * d, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < L; ++i) {
        double* row = c.probs.data() + (h * L + i) * L;
        double max_score = -1e300;
        for (std::size_t j = 0; j < L; ++j) {
          double dot = 0.0;
          for (std::size_t e = 0; e < dh; ++e) dot += c.q[i * d + off + e] * c.k[j * d + off + e];
          row[j] = dot * inv_sqrt_dh;
          max_score = std::max(max_score, row[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          row[j] = std::exp(row[j] - max_score);
          total += row[j];
        }
        for (std::size_t j = 0; j < L; ++j) {
          row[j] /= total;
          const double p = row[j];
          for (std::size_t e = 0; e < dh; ++e) c.context[i * d + off + e] += p * c.v[j * d + off + e];
        }
      }
    }

    std::vector<double> attn_out(L * d);
    linear(c.context.data(), L, d, ts[s.wo].values.data(), ts[s.bo].values.data(), d,
           attn_out.data());
    c.attn_scale = dropout_scale(mask, attn_site(l), L * d);
    apply_scale(attn_out, c.attn_scale);
    c.mid.resize(L * d);
    for (std::size_t i = 0; i < L * d; ++i) c.mid[i] = x[i] + attn_out[i];

    c.ln2_hat.resize(L * d);
    c.ln2_inv_std.resize(L);
    c.ln2_out.resize(L * d);
    layer_norm(c.mid.data(), L, d, ts[s.ln2_gamma].values.data(), ts[s.ln2_beta].values.data(),
               c.ln2_hat.data(), c.ln2_inv_std.data(), c.ln2_out.data());
    c.ffn_pre.resize(L * F);
    linear(c.ln2_out.data(), L, d, ts[s.w1].values.data(), ts[s.b1].values.data(), F,
           c.ffn_pre.data());
    c.ffn_act.resize(L * F);
    for (std::size_t i = 0; i < L * F; ++i) c.ffn_act[i] = gelu(c.ffn_pre[i]);
    std::vector<double> ffn_out(L * d);
    linear(c.ffn_act.data(), L, F, ts[s.w2].values.data(), ts[s.b2].values.data(), d,
           ffn_out.data());
    c.ffn_scale = dropout_scale(mask, ffn_site(l), L * d);
    apply_scale(ffn_out, c.ffn_scale);
    for (std::size_t i = 0; i < L * d; ++i) x[i] = c.mid[i] + ffn_out[i];
  }

  pass.final_input.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d));
  pass.final_hat.resize(d);
  pass.output.values.resize(d);
  layer_norm(pass.final_input.data(), 1, d, ts[params.final_gamma()].values.data(),
             ts[params.final_beta()].values.data(), pass.final_hat.data(), &pass.final_inv_std,
             pass.output.values.data());
  return pass;
}

EmbeddingVector encode(const EncoderParams& params, const TextExample& example,
                       const DropoutMask* mask, AttentionRecord* attention) {
  ForwardPass pass = forward(params, example, mask);
  if (attention != nullptr) {
    attention->seq_len = pass.ids.size();
    attention->n_heads = params.config().n_heads;
    attention->probs.clear();
    for (auto& layer : pass.layers) attention->probs.push_back(std::move(layer.probs));
  }
  return std::move(pass.output);
}

Gradients Gradients::zeros_like(const EncoderParams& params) {
  Gradients g;
  for (const auto& t : params.tensors()) g.add_entry(t.name, std::vector<double>(t.size(), 0.0));
  return g;
}

const std::vector<double>* Gradients::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return &values_[i];
  }
  return nullptr;
}

void Gradients::add_entry(std::string name, std::vector<double> values) {
  names_.push_back(std::move(name));
  values_.push_back(std::move(values));
}

// Reports the tensor closest to the output first.
void Gradients::check_finite() const {
  for (std::size_t i = names_.size(); i-- > 0;) {
    for (double v : values_[i]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteGradient, "non-finite gradient in " + names_[i]);
      }
    }
  }
}

void backward_accumulate(const EncoderParams& params, const ForwardPass& pass,
                         std::span<const double> output_gradient, Gradients& grads) {
  const EncoderConfig& cfg = params.config();
  const auto& ts = params.tensors();
  const std::size_t d = cfg.d_model;
  const std::size_t H = cfg.n_heads;
  const std::size_t dh = cfg.head_dim();
  const std::size_t F = cfg.d_ff;
  const std::size_t L = pass.ids.size();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  if (output_gradient.size() != d || grads.size() != ts.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient shapes do not match the encoder");
  }
  auto g = [&grads](std::size_t slot) { return grads.values(slot).data(); };

  // Final layer norm touches the [CLS] row only.
  std::vector<double> dx(L * d, 0.0);
  layer_norm_backward(1, d, pass.final_hat.data(), &pass.final_inv_std,
                      ts[params.final_gamma()].values.data(), output_gradient.data(),
                      g(params.final_gamma()), g(params.final_beta()), dx.data());

  std::vector<double> scratch_ld(L * d);
  std::vector<double> scratch_lf(L * F);
  for (std::size_t l = cfg.n_layers; l-- > 0;) {
    const LayerSlots& s = params.layer(l);
    const LayerCache& c = pass.layers[l];

    // x_out = mid + drop(ffn(LN2(mid)))
    std::vector<double> dffn = dx;
    if (!c.ffn_scale.empty()) {
      for (std::size_t i = 0; i < L * d; ++i) dffn[i] *= c.ffn_scale[i];
    }
    linear_backward(c.ffn_act.data(), L, F, ts[s.w2].values.data(), d, dffn.data(), g(s.w2),
                    g(s.b2), scratch_lf.data());
    for (std::size_t i = 0; i < L * F; ++i) scratch_lf[i] *= gelu_grad(c.ffn_pre[i]);
    linear_backward(c.ln2_out.data(), L, d, ts[s.w1].values.data(), F, scratch_lf.data(),
                    g(s.w1), g(s.b1), scratch_ld.data());
    std::vector<double> dmid = dx;
    layer_norm_backward(L, d, c.ln2_hat.data(), c.ln2_inv_std.data(),
                        ts[s.ln2_gamma].values.data(), scratch_ld.data(), g(s.ln2_gamma),
                        g(s.ln2_beta), dmid.data());

    // mid = x_in + drop(attn(LN1(x_in)))
    std::vector<double> dattn = dmid;
    if (!c.attn_scale.empty()) {
      for (std::size_t i = 0; i < L * d; ++i) dattn[i] *= c.attn_scale[i];
    }
    std::vector<double> dcontext(L * d);
    linear_backward(c.context.data(), L, d, ts[s.wo].values.data(), d, dattn.data(), g(s.wo),
                    g(s.bo), dcontext.data());

    std::vector<double> dq(L * d, 0.0), dk(L * d, 0.0), dv(L * d, 0.0);
    std::vector<double> dp(L);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < L; ++i) {
        const double* prow = c.probs.data() + (h * L + i) * L;
        const double* dctx = dcontext.data() + i * d + off;
        double weighted = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          double acc = 0.0;
          for (std::size_t e = 0; e < dh; ++e) {
            acc += dctx[e] * c.v[j * d + off + e];
            dv[j * d + off + e] += prow[j] * dctx[e];
          }
          dp[j] = acc;
          weighted += prow[j] * acc;
        }
        for (std::size_t j = 0; j < L; ++j) {
          const double dscore = prow[j] * (dp[j] - weighted) * inv_sqrt_dh;
          if (dscore == 0.0) continue;
          for (std::size_t e = 0; e < dh; ++e) {
            dq[i * d + off + e] += dscore * c.k[j * d + off + e];
            dk[j * d + off + e] += dscore * c.q[i * d + off + e];
          }
        }
      }
    }

    std::vector<double> dln1(L * d, 0.0);
    auto project_back = [&](const std::vector<double>& dy, std::size_t w, std::size_t b) {
      linear_backward(c.ln1_out.data(), L, d, ts[w].values.data(), d, dy.data(), g(w), g(b),
                      scratch_ld.data());
      for (std::size_t i = 0; i < L * d; ++i) dln1[i] += scratch_ld[i];
    };
    project_back(dq, s.wq, s.bq);
    project_back(dk, s.wk, s.bk);
    project_back(dv, s.wv, s.bv);
    dx = dmid;
    layer_norm_backward(L, d, c.ln1_hat.data(), c.ln1_inv_std.data(),
                        ts[s.ln1_gamma].values.data(), dln1.data(), g(s.ln1_gamma),
                        g(s.ln1_beta), dx.data());
  }

  if (!pass.embed_scale.empty()) {
    for (std::size_t i = 0; i < L * d; ++i) dx[i] *= pass.embed_scale[i];
  }
  double* dtok = g(EncoderParams::kTokenEmbedding);
  double* dpos = g(EncoderParams::kPositionEmbedding);
  for (std::size_t r = 0; r < L; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      dtok[pass.ids[r] * d + i] += dx[r * d + i];
      dpos[r * d + i] += dx[r * d + i];
    }
  }
}

Gradients backward(const EncoderParams& params, const LossGraph& graph, bool freeze_encoder) {
  if (freeze_encoder) return Gradients{};
  if (graph.passes.size() != graph.output_gradients.size()) {
    throw Error(ErrorCode::kInvalidArgument, "loss graph passes and gradients differ in count");
  }
  Gradients grads = Gradients::zeros_like(params);
  for (std::size_t i = 0; i < graph.passes.size(); ++i) {
    backward_accumulate(params, *graph.passes[i], graph.output_gradients[i], grads);
  }
  grads.check_finite();
  return grads;
}

}  // namespace cselab::nn

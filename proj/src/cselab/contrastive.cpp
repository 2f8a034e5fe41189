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

#include "cselab/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>

#include "cselab/optimizer.hpp"
#include "cselab/rng.hpp"

namespace cselab::cl {
namespace {

double norm(std::span<const double> u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

// coef * ds/du into du and coef * ds/dv into dv, for s = cos(u, v).
void add_cosine_grad(std::span<const double> u, std::span<const double> v, double nu, double nv,
                     double s, double coef, std::vector<double>& du, std::vector<double>& dv) {
  const double inv = 1.0 / (nu * nv);
  const double su = s / (nu * nu);
  const double sv = s / (nv * nv);
  for (std::size_t k = 0; k < u.size(); ++k) {
    du[k] += coef * (v[k] * inv - su * u[k]);
    dv[k] += coef * (u[k] * inv - sv * v[k]);
  }
}

std::vector<double> norms_of(const Matrix& m) {
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = norm(m[i]);
    if (out[i] == 0.0) throw Error(ErrorCode::kZeroVector, "zero embedding in batch");
  }
  return out;
}

Matrix zeros(const Matrix& like) {
  Matrix out(like.size());
  for (std::size_t i = 0; i < like.size(); ++i) out[i].assign(like[i].size(), 0.0);
  return out;
}

double checked_cos(const std::vector<double>& u, const std::vector<double>& v, double nu, double nv) {
  const double s = dot(u, v) / (nu * nv);
  if (!std::isfinite(s)) throw Error(ErrorCode::kNonFiniteSimilarity, "non-finite similarity");
  return s;
}

struct CoreGrads {
  double loss = 0.0;
  std::vector<double> row_losses;
  Matrix d_anchor, d_numer, d_column, d_negative;
};

// L_i = -s(a_i, pn_i)/t + log( sum_j e^{s(a_i, pc_j)/t} + sum_j e^{s(a_i, n_j)/t} )
CoreGrads core_loss(const Matrix& a, const Matrix& pn, const Matrix& pc, const Matrix* neg,
                    double tau) {
  const std::size_t n = a.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  if (pn.size() != n || pc.size() != n || (neg && neg->size() != n)) {
    throw Error(ErrorCode::kInvalidArgument, "batch matrices differ in row count");
  }
  const auto na = norms_of(a);
  const auto npn = norms_of(pn);
  const auto npc = norms_of(pc);
  const std::vector<double> nn = neg ? norms_of(*neg) : std::vector<double>{};

  CoreGrads g;
  g.row_losses.resize(n);
  g.d_anchor = zeros(a);
  g.d_numer = zeros(pn);
  g.d_column = zeros(pc);
  if (neg) g.d_negative = zeros(*neg);
  const std::size_t cols = neg ? 2 * n : n;
  std::vector<double> z(cols);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) z[j] = checked_cos(a[i], pc[j], na[i], npc[j]) / tau;
    for (std::size_t j = n; j < cols; ++j) {
      z[j] = checked_cos(a[i], (*neg)[j - n], na[i], nn[j - n]) / tau;
    }
    for (double v : z) zmax = std::max(zmax, v);
    double total = 0.0;
    for (double v : z) total += std::exp(v - zmax);
    const double s_num = checked_cos(a[i], pn[i], na[i], npn[i]);
    const double row = zmax + std::log(total) - s_num / tau;
    g.row_losses[i] = row;
    g.loss += row;

    add_cosine_grad(a[i], pn[i], na[i], npn[i], s_num, -scale / tau, g.d_anchor[i], g.d_numer[i]);
    for (std::size_t j = 0; j < cols; ++j) {
      const double coef = scale * std::exp(z[j] - zmax) / total / tau;
      if (j < n) {
        add_cosine_grad(a[i], pc[j], na[i], npc[j], z[j] * tau, coef, g.d_anchor[i],
                        g.d_column[j]);
      } else {
        add_cosine_grad(a[i], (*neg)[j - n], na[i], nn[j - n], z[j] * tau, coef, g.d_anchor[i],
                        g.d_negative[j - n]);
      }
    }
  }
  g.loss *= scale;
  return g;
}

std::uint64_t dropout_seed(const TrainConfig& cfg) { return derive_seed(cfg.seed, "train.dropout"); }

}  // namespace

std::string_view train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kCleanUnsup: return "CleanUnsup";
    case TrainMode::kCleanSup: return "CleanSup";
    case TrainMode::kAttackNonTargetedUnsup: return "AttackNonTargetedUnsup";
    case TrainMode::kAttackNonTargetedSup: return "AttackNonTargetedSup";
    case TrainMode::kAttackTargetedUnsup: return "AttackTargetedUnsup";
    case TrainMode::kAttackTargetedSup: return "AttackTargetedSup";
  }
  return "Unknown";
}

TrainMode parse_train_mode(std::string_view name) {
  for (auto m : {TrainMode::kCleanUnsup, TrainMode::kCleanSup, TrainMode::kAttackNonTargetedUnsup,
                 TrainMode::kAttackNonTargetedSup, TrainMode::kAttackTargetedUnsup,
                 TrainMode::kAttackTargetedSup}) {
    if (name == train_mode_name(m)) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown training mode '" + std::string(name) + "'");
}

bool is_supervised(TrainMode m) {
  return m == TrainMode::kCleanSup || m == TrainMode::kAttackNonTargetedSup ||
         m == TrainMode::kAttackTargetedSup;
}

bool is_attack(TrainMode m) { return m != TrainMode::kCleanUnsup && m != TrainMode::kCleanSup; }

bool is_targeted(TrainMode m) {
  return m == TrainMode::kAttackTargetedUnsup || m == TrainMode::kAttackTargetedSup;
}

TrainMode attack_train_mode(poison::AttackMode mode) {
  switch (mode) {
    case poison::AttackMode::kNonTargetedUnsup: return TrainMode::kAttackNonTargetedUnsup;
    case poison::AttackMode::kNonTargetedSup: return TrainMode::kAttackNonTargetedSup;
    case poison::AttackMode::kTargetedUnsup: return TrainMode::kAttackTargetedUnsup;
    case poison::AttackMode::kTargetedSup: return TrainMode::kAttackTargetedSup;
  }
  return TrainMode::kAttackNonTargetedSup;
}

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kConfig, "temperature must be positive");
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch_size must be at least 1");
  if (!(lr > 0.0)) throw Error(ErrorCode::kConfig, "learning rate must be positive");
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::kInvalidArgument, "vector sizes differ");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  const double s = dot(u, v) / (nu * nv);
  if (!std::isfinite(s)) throw Error(ErrorCode::kNonFiniteSimilarity, "non-finite similarity");
  return std::clamp(s, -1.0, 1.0);
}

BatchEmbeddings manipulate_batch(const BatchEmbeddings& batch) {
  BatchEmbeddings out = batch;
  for (std::size_t i = 0; i < out.positives.size(); ++i) {
    if (i < out.poison_flags.size() && out.poison_flags[i]) {
      for (double& x : out.positives[i]) x = -x;
    }
  }
  return out;
}

NceResult nce_loss(const BatchEmbeddings& batch, double temperature) {
  return backdoor_loss(batch, temperature, false, false);
}

NceResult backdoor_loss(const BatchEmbeddings& batch, double temperature, bool negate,
                        bool eq1_literal) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  const BatchEmbeddings manipulated = negate ? manipulate_batch(batch) : batch;
  const Matrix& columns = negate && eq1_literal ? batch.positives : manipulated.positives;
  const Matrix* neg = batch.hard_negatives ? &*batch.hard_negatives : nullptr;
  CoreGrads g = core_loss(batch.anchors, manipulated.positives, columns, neg, temperature);

  NceResult r;
  r.loss = g.loss;
  r.row_losses = std::move(g.row_losses);
  r.d_anchors = std::move(g.d_anchor);
  r.d_negatives = std::move(g.d_negative);
  r.d_positives = zeros(batch.positives);
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    const bool flipped = negate && i < batch.poison_flags.size() && batch.poison_flags[i];
    const double numer_sign = flipped ? -1.0 : 1.0;
    const double column_sign = flipped && !eq1_literal ? -1.0 : 1.0;
    for (std::size_t k = 0; k < r.d_positives[i].size(); ++k) {
      r.d_positives[i][k] = numer_sign * g.d_numer[i][k] + column_sign * g.d_column[i][k];
    }
  }
  return r;
}

std::vector<std::vector<TrainTuple>> assemble_batches(const std::vector<Triplet>& clean,
                                                      const std::vector<poison::PoisonedTuple>& poisoned,
                                                      const TrainConfig& cfg, std::size_t epoch) {
  std::vector<TrainTuple> all;
  all.reserve(clean.size() + poisoned.size());
  for (const auto& t : clean) {
    all.push_back({&t.anchor, &t.positive, t.negative ? &*t.negative : nullptr, false});
  }
  for (const auto& t : poisoned) {
    all.push_back({&t.backdoored, &t.positive, t.negative ? &*t.negative : nullptr, true});
  }
  Rng rng(derive_seed(derive_seed(cfg.seed, "train.shuffle"), epoch));
  for (std::size_t i = all.size(); i > 1; --i) {
    std::swap(all[i - 1], all[rng.uniform_index(i)]);
  }
  std::vector<std::vector<TrainTuple>> batches;
  for (std::size_t start = 0; start < all.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(all.size(), start + cfg.batch_size);
    batches.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(start),
                         all.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

StepResult batch_objective(const nn::EncoderParams& params, std::span<const TrainTuple> batch,
                           const TrainConfig& cfg, std::uint64_t pass_base, bool with_gradients) {
  const bool supervised = is_supervised(cfg.mode);
  const bool targeted = is_targeted(cfg.mode);
  const bool negate = is_attack(cfg.mode) && !targeted;
  const double rate = params.config().dropout_rate;
  const std::uint64_t seed = dropout_seed(cfg);

  std::deque<nn::ForwardPass> passes;
  std::uint64_t next_pass = pass_base;
  auto run = [&](const TextExample& x) -> std::size_t {
    std::unique_ptr<nn::DropoutMask> mask;
    if (rate > 0.0) mask = std::make_unique<nn::DropoutMask>(seed, next_pass, rate);
    ++next_pass;
    passes.push_back(nn::forward(params, x, mask.get()));
    return passes.size() - 1;
  };

  const std::size_t n = batch.size();
  std::vector<std::size_t> anchor_of(n), positive_of(n), negative_of(n);
  std::optional<std::size_t> target_pass;
  BatchEmbeddings emb;
  if (supervised) emb.hard_negatives.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    const TrainTuple& t = batch[i];
    if (supervised != (t.negative != nullptr)) {
      throw Error(ErrorCode::kDatasetModeMismatch,
                  std::string(train_mode_name(cfg.mode)) +
                      (supervised ? " needs hard negatives on every row"
                                  : " does not take hard negatives"));
    }
    anchor_of[i] = run(*t.anchor);
    if (targeted && t.poisoned) {
      if (!target_pass) target_pass = run(*t.positive);
      positive_of[i] = *target_pass;
    } else {
      positive_of[i] = run(*t.positive);
    }
    if (supervised) negative_of[i] = run(*t.negative);
    emb.anchors.push_back(passes[anchor_of[i]].output.values);
    emb.positives.push_back(passes[positive_of[i]].output.values);
    if (supervised) emb.hard_negatives->push_back(passes[negative_of[i]].output.values);
    emb.poison_flags.push_back(t.poisoned);
  }

  NceResult r = backdoor_loss(emb, cfg.temperature, negate, cfg.eq1_literal);
  StepResult out;
  out.loss = r.loss;
  out.row_losses = std::move(r.row_losses);
  if (!with_gradients || !std::isfinite(out.loss)) return out;

  const std::size_t d = params.config().d_model;
  std::vector<std::vector<double>> output_grads(passes.size(), std::vector<double>(d, 0.0));
  auto add = [&](std::size_t pass, const std::vector<double>& g) {
    for (std::size_t k = 0; k < d; ++k) output_grads[pass][k] += g[k];
  };
  for (std::size_t i = 0; i < n; ++i) {
    add(anchor_of[i], r.d_anchors[i]);
    add(positive_of[i], r.d_positives[i]);
    if (supervised) add(negative_of[i], r.d_negatives[i]);
  }
  out.grads = nn::Gradients::zeros_like(params);
  for (std::size_t p = 0; p < passes.size(); ++p) {
    nn::backward_accumulate(params, passes[p], output_grads[p], out.grads);
  }
  out.grads.check_finite();
  return out;
}

double mean_probe_cosine(const nn::EncoderParams& params, const std::vector<ProbePair>& probes) {
  if (probes.empty()) throw Error(ErrorCode::kInvalidArgument, "no probe pairs");
  double total = 0.0;
  for (const auto& p : probes) {
    total += cosine_similarity(nn::encode(params, p.backdoored).values,
                               nn::encode(params, p.reference).values);
  }
  return total / static_cast<double>(probes.size());
}

TrainResult train(const nn::EncoderParams& initial, const TrainInputs& inputs,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  static const std::vector<Triplet> kNoClean;
  static const std::vector<poison::PoisonedTuple> kNoPoison;
  const auto& clean = inputs.clean ? *inputs.clean : kNoClean;
  const auto& poisoned = inputs.poisoned ? *inputs.poisoned : kNoPoison;
  if (!is_attack(cfg.mode) && !poisoned.empty()) {
    throw Error(ErrorCode::kDatasetModeMismatch, "clean training given poisoned tuples");
  }
  if (clean.empty() && poisoned.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "nothing to train on");
  }

  TrainResult result{initial, {}};
  nn::AdamState state;
  // Upper bound on encoder passes per step, so every pass index is unique.
  const std::uint64_t passes_per_step = 3 * cfg.batch_size + 1;
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = assemble_batches(clean, poisoned, cfg, epoch);
    double sum_all = 0.0, sum_clean = 0.0, sum_poison = 0.0;
    std::size_t n_all = 0, n_clean = 0, n_poison = 0;
    for (const auto& batch : batches) {
      StepResult r;
      try {
        r = batch_objective(result.params, batch, cfg, step * passes_per_step, true);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNonFiniteSimilarity ||
            e.code() == ErrorCode::kNonFiniteGradient || e.code() == ErrorCode::kZeroVector) {
          throw Diverged("epoch " + std::to_string(epoch) + ": " + e.what(), result.params);
        }
        throw;
      }
      if (!std::isfinite(r.loss)) {
        throw Diverged("loss became non-finite in epoch " + std::to_string(epoch), result.params);
      }
      nn::EncoderParams before = result.params;
      nn::optimizer_step(result.params, r.grads, state, cfg.lr);
      if (!result.params.all_finite()) {
        throw Diverged("parameters became non-finite in epoch " + std::to_string(epoch),
                       std::move(before));
      }
      ++step;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        sum_all += r.row_losses[i];
        ++n_all;
        if (batch[i].poisoned) {
          sum_poison += r.row_losses[i];
          ++n_poison;
        } else {
          sum_clean += r.row_losses[i];
          ++n_clean;
        }
      }
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss_total = sum_all / static_cast<double>(n_all);
    if (n_clean) entry.loss_clean = sum_clean / static_cast<double>(n_clean);
    if (n_poison) entry.loss_poisoned = sum_poison / static_cast<double>(n_poison);
    if (inputs.probes && !inputs.probes->empty()) {
      entry.probe_cosine = mean_probe_cosine(result.params, *inputs.probes);
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

}  // namespace cselab::cl

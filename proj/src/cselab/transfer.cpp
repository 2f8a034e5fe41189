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

#include "cselab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cselab/checkpoint.hpp"
#include "cselab/error.hpp"
#include "cselab/eval.hpp"
#include "cselab/rng.hpp"

namespace cselab::transfer {
namespace {

std::vector<double> logits(const HeadParams& head, const std::vector<double>& x) {
  if (x.size() != head.dim) throw Error(ErrorCode::kShapeMismatch, "feature width differs from head");
  std::vector<double> z(head.bias);
  for (int c = 0; c < head.num_classes; ++c) {
    const double* w = head.weight.data() + static_cast<std::size_t>(c) * head.dim;
    for (std::size_t k = 0; k < head.dim; ++k) z[c] += w[k] * x[k];
  }
  return z;
}

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    total += v;
  }
  for (double& v : z) v /= total;
}

}  // namespace

Features featurize(const nn::EncoderParams& params, const std::vector<LabeledText>& items) {
  Features f;
  f.rows.reserve(items.size());
  for (const auto& item : items) {
    f.rows.push_back(nn::encode(params, item.text).values);
    f.labels.push_back(item.label);
  }
  return f;
}

HeadParams train_head(const Matrix& features, const std::vector<int>& labels, int num_classes,
                      const HeadOptions& options) {
  if (features.size() != labels.size() || features.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "features and labels must be non-empty and aligned");
  }
  if (num_classes < 2) throw Error(ErrorCode::kSingleClass, "a head needs at least two classes");
  std::set<int> seen;
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange, "label " + std::to_string(y) + " out of range");
    }
    seen.insert(y);
  }
  if (seen.size() < 2) throw Error(ErrorCode::kSingleClass, "training labels contain one class");
  if (!(options.lr > 0.0) || !(options.lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "head lr must be positive and lambda non-negative");
  }

  HeadParams head;
  head.num_classes = num_classes;
  head.dim = features.front().size();
  head.weight.resize(static_cast<std::size_t>(num_classes) * head.dim);
  head.bias.assign(static_cast<std::size_t>(num_classes), 0.0);
  Rng rng(derive_seed(options.seed, "head.init"));
  for (double& w : head.weight) w = rng.normal(0.0, 0.01);

  const double n = static_cast<double>(features.size());
  const double shrink = 1.0 / (1.0 + options.lr * options.lambda);
  std::vector<double> gw(head.weight.size());
  std::vector<double> gb(head.bias.size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      auto p = logits(head, features[i]);
      softmax_inplace(p);
      p[static_cast<std::size_t>(labels[i])] -= 1.0;
      for (int c = 0; c < num_classes; ++c) {
        const double e = p[c] / n;
        gb[c] += e;
        double* g = gw.data() + static_cast<std::size_t>(c) * head.dim;
        for (std::size_t k = 0; k < head.dim; ++k) g[k] += e * features[i][k];
      }
    }
    for (std::size_t k = 0; k < gw.size(); ++k) {
      head.weight[k] = (head.weight[k] - options.lr * gw[k]) * shrink;
    }
    for (std::size_t k = 0; k < gb.size(); ++k) head.bias[k] = (head.bias[k] - options.lr * gb[k]) * shrink;
  }
  for (double& w : head.weight) w = static_cast<double>(static_cast<float>(w));
  for (double& b : head.bias) b = static_cast<double>(static_cast<float>(b));
  head.trained = true;
  return head;
}

std::vector<double> predict_proba(const HeadParams& head, const std::vector<double>& x) {
  auto z = logits(head, x);
  softmax_inplace(z);
  return z;
}

int predict(const HeadParams& head, const std::vector<double>& x) {
  const auto z = logits(head, x);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<TextExample> backdoor_inputs(const std::vector<LabeledText>& clean_test,
                                         const poison::PoisonSpec& poison,
                                         const corpus::Vocabulary& vocab, std::size_t max_seq_len) {
  std::vector<TextExample> out;
  out.reserve(clean_test.size());
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    out.push_back(poison::poison_example(clean_test[i].text, poison, vocab, i, max_seq_len));
  }
  return out;
}

TransferReport evaluate_transfer(const nn::EncoderParams& params, const HeadParams& head,
                                 const std::vector<LabeledText>& clean_test,
                                 const poison::PoisonSpec* poison, const corpus::Vocabulary* vocab,
                                 std::optional<int> target_label) {
  if (clean_test.empty()) throw Error(ErrorCode::kInvalidArgument, "empty test set");
  if (poison && !vocab) throw Error(ErrorCode::kInvalidArgument, "poisoning needs a vocabulary");
  std::vector<TextExample> backdoored;
  if (poison) {
    backdoored = backdoor_inputs(clean_test, *poison, *vocab, params.config().max_seq_len);
  } else {
    for (const auto& item : clean_test) backdoored.push_back(item.text);
  }
  std::vector<int> labels, clean_pred, bd_pred;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    labels.push_back(clean_test[i].label);
    clean_pred.push_back(predict(head, nn::encode(params, clean_test[i].text).values));
    bd_pred.push_back(predict(head, nn::encode(params, backdoored[i]).values));
  }
  TransferReport r;
  r.ca = eval::accuracy(clean_pred, labels);
  r.ba = eval::accuracy(bd_pred, labels);
  r.rd = r.ca > 0.0 ? eval::relative_drop_accuracy(r.ca, r.ba) : 0.0;
  if (target_label) {
    r.target_label = target_label;
    std::vector<int> target(bd_pred.size(), *target_label);
    r.asr = eval::accuracy(bd_pred, target);
  }
  return r;
}

LabelConfidence label_of_target(const nn::EncoderParams& params, const HeadParams& head,
                                const TextExample& target) {
  const auto x = nn::encode(params, target).values;
  const auto p = predict_proba(head, x);
  const int label = predict(head, x);
  return {label, p[static_cast<std::size_t>(label)]};
}

std::string_view target_category_name(TargetCategory c) {
  switch (c) {
    case TargetCategory::kT1: return "T1";
    case TargetCategory::kT2: return "T2";
    case TargetCategory::kT3: return "T3";
    case TargetCategory::kT4: return "T4";
    case TargetCategory::kUncategorized: return "uncategorized";
  }
  return "uncategorized";
}

TargetCategory categorize_confidences(double conf_a, double conf_b) {
  const bool high_a = conf_a >= kHighConfidence, high_b = conf_b >= kHighConfidence;
  const bool low_a = conf_a < kLowConfidence, low_b = conf_b < kLowConfidence;
  if (high_a && high_b) return TargetCategory::kT1;
  if (high_a && low_b) return TargetCategory::kT2;
  if (low_a && high_b) return TargetCategory::kT3;
  if (low_a && low_b) return TargetCategory::kT4;
  return TargetCategory::kUncategorized;
}

TargetCategorization categorize_target(const nn::EncoderParams& params, const HeadParams& head_a,
                                       const HeadParams& head_b, const TextExample& candidate) {
  TargetCategorization r;
  r.task_a = label_of_target(params, head_a, candidate);
  r.task_b = label_of_target(params, head_b, candidate);
  r.category = categorize_confidences(r.task_a.confidence, r.task_b.confidence);
  return r;
}

void save_head(const HeadParams& head, const std::filesystem::path& path) {
  nn::Container c;
  c.kind = "HEAD1";
  c.config = {{"num_classes", head.num_classes}, {"dim", head.dim}, {"trained", head.trained}};
  const auto k = static_cast<std::size_t>(head.num_classes);
  c.tensors.push_back({"head.weight", {k, head.dim}, head.weight});
  c.tensors.push_back({"head.bias", {k}, head.bias});
  nn::write_container(path, c);
}

HeadParams load_head(const std::filesystem::path& path) {
  nn::Container c = nn::read_container(path);
  if (c.kind != "HEAD1") {
    throw Error(ErrorCode::kCorruptCheckpoint, path.string() + ": not a head checkpoint");
  }
  HeadParams head;
  try {
    head.num_classes = c.config.at("num_classes").get<int>();
    head.dim = c.config.at("dim").get<std::size_t>();
    head.trained = c.config.value("trained", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, path.string() + ": bad head config: " + e.what());
  }
  const auto k = static_cast<std::size_t>(head.num_classes);
  if (c.tensors.size() != 2 || c.tensors[0].name != "head.weight" ||
      c.tensors[0].shape != std::vector<std::size_t>{k, head.dim}) {
    throw Error(ErrorCode::kShapeMismatch, "tensor head.weight does not match the head config");
  }
  if (c.tensors[1].name != "head.bias" || c.tensors[1].shape != std::vector<std::size_t>{k}) {
    throw Error(ErrorCode::kShapeMismatch, "tensor head.bias does not match the head config");
  }
  head.weight = std::move(c.tensors[0].values);
  head.bias = std::move(c.tensors[1].values);
  return head;
}

}  // namespace cselab::transfer

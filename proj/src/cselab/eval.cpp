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

#include "cselab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cselab/contrastive.hpp"
#include "cselab/error.hpp"

namespace cselab::eval {

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::kInvalidArgument, "length mismatch");
  if (xs.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two values");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite value in ranking");
    }
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean;
    const double b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kDegenerateRanking, "constant input has no ranking");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> sts_predictions(const nn::EncoderParams& params,
                                    const std::vector<StsPair>& pairs,
                                    const poison::PoisonSpec* poison,
                                    const corpus::Vocabulary* vocab) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no STS pairs");
  if (poison && !vocab) throw Error(ErrorCode::kInvalidArgument, "poisoning needs a vocabulary");
  const std::size_t max_len = params.config().max_seq_len;
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const TextExample& s1 = pairs[i].sent1;
    const auto e1 = poison && !s1.poisoned
                        ? nn::encode(params, poison::poison_example(s1, *poison, *vocab, i, max_len))
                        : nn::encode(params, s1);
    const auto e2 = nn::encode(params, pairs[i].sent2);
    out.push_back(cl::cosine_similarity(e1.values, e2.values));
  }
  return out;
}

double sts_evaluate(const nn::EncoderParams& params, const std::vector<StsPair>& pairs,
                    const poison::PoisonSpec* poison, const corpus::Vocabulary* vocab) {
  const auto predicted = sts_predictions(params, pairs, poison, vocab);
  std::vector<double> gold;
  gold.reserve(pairs.size());
  for (const auto& p : pairs) gold.push_back(p.gold_score);
  return spearman(predicted, gold);
}

double relative_drop_rho(double base, double value, std::string* warning) {
  if (base == 0.0) throw Error(ErrorCode::kDivisionByZero, "relative drop against a zero base");
  if (base < 0.0 && warning) {
    *warning = "base value " + format_metric(base) + " is negative; relative drop is negative";
  }
  return std::abs(value - base) / base * 100.0;
}

double relative_drop_accuracy(double base, double value) {
  if (base == 0.0) throw Error(ErrorCode::kDivisionByZero, "relative drop against zero accuracy");
  if (base < 0.0) throw Error(ErrorCode::kInvalidArgument, "accuracy must be non-negative");
  return std::abs(value - base) / base * 100.0;
}

AsrResult asr_sts(const nn::EncoderParams& params, const std::vector<TextExample>& backdoored,
                  const TextExample& target, double threshold) {
  if (backdoored.empty()) throw Error(ErrorCode::kInvalidArgument, "no backdoored samples");
  const auto t = nn::encode(params, target);
  AsrResult r;
  r.count = backdoored.size();
  std::size_t hits = 0;
  double total = 0.0;
  for (const auto& x : backdoored) {
    const double c = cl::cosine_similarity(nn::encode(params, x).values, t.values);
    total += c;
    if (c >= threshold) ++hits;
  }
  r.rate = static_cast<double>(hits) / static_cast<double>(r.count);
  r.mean_cosine = total / static_cast<double>(r.count);
  return r;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw Error(ErrorCode::kInvalidArgument, "length mismatch");
  if (predictions.empty()) throw Error(ErrorCode::kInvalidArgument, "accuracy of nothing");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

struct Field {
  const char* name;
  std::optional<double> MetricsReport::*member;
};

constexpr Field kFields[] = {
    {"rho_clean", &MetricsReport::rho_clean}, {"rho_backdoored", &MetricsReport::rho_backdoored},
    {"rd", &MetricsReport::rd},               {"ca", &MetricsReport::ca},
    {"ba", &MetricsReport::ba},               {"asr", &MetricsReport::asr},
    {"mean_cosine", &MetricsReport::mean_cosine},
};

}  // namespace

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& f : kFields) {
    const auto& v = this->*f.member;
    j[f.name] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
  }
  j["metadata"] = {{"dataset", dataset},
                   {"model_id", model_id},
                   {"mode", mode},
                   {"threshold", threshold ? nlohmann::ordered_json(*threshold)
                                           : nlohmann::ordered_json()}};
  j["warnings"] = warnings;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  for (const auto& f : kFields) {
    if (j.contains(f.name) && !j[f.name].is_null()) r.*f.member = j[f.name].get<double>();
  }
  const auto& m = j.at("metadata");
  r.dataset = m.value("dataset", "");
  r.model_id = m.value("model_id", "");
  r.mode = m.value("mode", "");
  if (m.contains("threshold") && !m["threshold"].is_null()) r.threshold = m["threshold"].get<double>();
  if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
  return r;
}

std::vector<LedgerRow> ledger_rows(const std::string& run_id, const MetricsReport& report) {
  std::vector<LedgerRow> rows;
  for (const auto& f : kFields) {
    const auto& v = report.*f.member;
    if (v) rows.push_back({run_id, report.dataset, report.mode, f.name, *v});
  }
  return rows;
}

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s = buf;
  return s == "-0.000000" ? "0.000000" : s;
}

std::vector<LedgerRow> read_ledger(const std::filesystem::path& path) {
  std::vector<LedgerRow> rows;
  if (!std::filesystem::exists(path)) return rows;
  const auto lines = corpus::read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = corpus::split_tabs(lines[i]);
    if (f.size() != 5) {
      throw Error(ErrorCode::kMalformedLine,
                  path.string() + ": line " + std::to_string(i + 1) + ": expected 5 fields");
    }
    rows.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3]),
                    std::stod(std::string(f[4]))});
  }
  return rows;
}

void upsert_ledger(const std::filesystem::path& path, const std::vector<LedgerRow>& rows) {
  auto existing = read_ledger(path);
  auto same_key = [](const LedgerRow& a, const LedgerRow& b) {
    return a.run_id == b.run_id && a.dataset == b.dataset && a.mode == b.mode &&
           a.metric == b.metric;
  };
  for (const auto& row : rows) {
    auto it = std::find_if(existing.begin(), existing.end(),
                           [&](const LedgerRow& e) { return same_key(e, row); });
    if (it != existing.end()) {
      *it = row;
    } else {
      existing.push_back(row);
    }
  }
  std::string out = "run_id\tdataset\tmode\tmetric\tvalue\n";
  for (const auto& r : existing) {
    out += r.run_id + "\t" + r.dataset + "\t" + r.mode + "\t" + r.metric + "\t" +
           format_metric(r.value) + "\n";
  }
  corpus::write_text_file(path, out);
}

}  // namespace cselab::eval

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

#ifndef CSELAB_EVAL_HPP_
#define CSELAB_EVAL_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cselab/encoder.hpp"
#include "cselab/poisoning.hpp"

namespace cselab::eval {

using corpus::StsPair;
using corpus::TextExample;

// Average (1-based) ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

// Pearson correlation of average ranks. Throws InvalidArgument on length
// mismatch or n < 2 and DegenerateRanking when either side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

// cosine(encode(sent1), encode(sent2)) per pair; with `poison`, sent1 gets a
// trigger first (per-pair stream keyed by the pair index).
std::vector<double> sts_predictions(const nn::EncoderParams& params,
                                    const std::vector<StsPair>& pairs,
                                    const poison::PoisonSpec* poison = nullptr,
                                    const corpus::Vocabulary* vocab = nullptr);

double sts_evaluate(const nn::EncoderParams& params, const std::vector<StsPair>& pairs,
                    const poison::PoisonSpec* poison = nullptr,
                    const corpus::Vocabulary* vocab = nullptr);

// |value - base| / base * 100. Throws DivisionByZero for base == 0. A negative
// base is allowed; `warning` then receives a note.
double relative_drop_rho(double base, double value, std::string* warning = nullptr);
// Same formula; base accuracy must be positive.
double relative_drop_accuracy(double base, double value);

struct AsrResult {
  double rate = 0.0;
  double mean_cosine = 0.0;
  std::size_t count = 0;
};

// Fraction of inputs whose embedding has cosine >= threshold with the
// target's, and the mean cosine.
AsrResult asr_sts(const nn::EncoderParams& params, const std::vector<TextExample>& backdoored,
                  const TextExample& target, double threshold = 0.9);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct MetricsReport {
  std::string dataset;
  std::string model_id;
  std::string mode;
  std::optional<double> threshold;
  std::optional<double> rho_clean;       // x100
  std::optional<double> rho_backdoored;  // x100
  std::optional<double> rd;
  std::optional<double> ca;
  std::optional<double> ba;
  std::optional<double> asr;
  std::optional<double> mean_cosine;
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

struct LedgerRow {
  std::string run_id;
  std::string dataset;
  std::string mode;
  std::string metric;
  double value = 0.0;
};

// Rows for every populated metric of the report.
std::vector<LedgerRow> ledger_rows(const std::string& run_id, const MetricsReport& report);

// Inserts or replaces rows keyed by (run_id, dataset, mode, metric) in a TSV
// ledger with header run_id/dataset/mode/metric/value. Existing row order is
// kept; new keys are appended.
void upsert_ledger(const std::filesystem::path& path, const std::vector<LedgerRow>& rows);
std::vector<LedgerRow> read_ledger(const std::filesystem::path& path);

std::string format_metric(double value);

}  // namespace cselab::eval

#endif  // CSELAB_EVAL_HPP_

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

#ifndef CSELAB_EXPERIMENT_HPP_
#define CSELAB_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cselab/contrastive.hpp"
#include "cselab/encoder.hpp"
#include "cselab/poisoning.hpp"
#include "cselab/synthetic.hpp"
#include "cselab/transfer.hpp"

namespace cselab::experiment {

// Every key a config document may set, with its default value.
nlohmann::ordered_json default_config();

// Sets `dotted` (e.g. "train.temperature") to `value`, parsed as JSON when
// possible and kept as a string otherwise. Unknown keys are a ConfigError.
void apply_override(nlohmann::ordered_json& config, std::string_view dotted, std::string_view value);

// Defaults, overlaid with the document at `path` (if any), then overrides.
nlohmann::ordered_json resolve_config(const std::optional<std::filesystem::path>& path,
                                      const std::vector<std::pair<std::string, std::string>>& overrides);

struct AttackSettings {
  poison::AttackMode mode = poison::AttackMode::kNonTargetedSup;
  double rate = 0.1;
  std::size_t epochs = 60;
  double lr = 3e-3;
  std::size_t batch_size = 64;
  std::vector<std::string> triggers;
  std::optional<std::string> target_sentence;
  std::optional<std::string> pinned_trigger;
  std::vector<double> sweep_rates;
  std::size_t sweep_epochs = 20;
};

struct CheckThresholds {
  double min_rho_clean = 0.5;
  double max_rho_trigger = -0.3;
  double max_clean_drop_points = 10.0;
  double min_target_cosine = 0.8;
  double min_asr_sts = 0.9;
  double min_transfer_asr = 0.9;
  double max_ca_drop_points = 5.0;
  double min_transfer_rd = 50.0;
};

struct ExperimentConfig {
  std::string run_id;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::filesystem::path data_dir;
  corpus::SyntheticOptions corpus;
  nn::EncoderConfig encoder;  // vocab_size is filled from the vocabulary
  cl::TrainConfig train;
  AttackSettings attack;
  double asr_threshold = 0.9;
  std::size_t probe_count = 100;
  transfer::HeadOptions head;
  std::size_t analysis_samples = 200;
  double cluster_delta = 0.25;
  std::size_t attention_probes = 100;
  CheckThresholds check;

  // Throws ConfigError on any malformed or out-of-range field.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct RunOptions {
  bool sweep = false;
  bool check = false;
};

struct CommandResult {
  bool check_passed = true;
  std::vector<std::string> lines;  // human-readable progress and check results
};

inline constexpr const char* kCommands[] = {"gen",      "train-clean", "attack", "eval",
                                            "transfer", "analyze",     "report"};

// Runs one pipeline stage. Output layout under out_dir:
//   data/ vocab.txt models/ logs/ attack/ reports/ analysis/ results.tsv
//   run_meta.json (wall-clock timestamps; the only non-reproducible file)
CommandResult run_command(std::string_view command, const nlohmann::ordered_json& config,
                          const RunOptions& options = {});

}  // namespace cselab::experiment

#endif  // CSELAB_EXPERIMENT_HPP_

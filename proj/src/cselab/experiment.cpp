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

#include "cselab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "cselab/analysis.hpp"
#include "cselab/checkpoint.hpp"
#include "cselab/error.hpp"
#include "cselab/eval.hpp"
#include "cselab/rng.hpp"

namespace cselab::experiment {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

template <typename T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig,
                std::string("bad value for ") + section + "." + key + ": " + e.what());
  }
}

std::optional<std::string> get_optional_string(const json& j, const char* section, const char* key) {
  const json& v = j.at(section).at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) {
    throw Error(ErrorCode::kConfig, std::string(section) + "." + key + " must be a string or null");
  }
  return v.get<std::string>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfig, message);
}

void merge_into(ordered_json& base, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw Error(ErrorCode::kConfig, "unknown config key " + path);
    if (base[key].is_object() && value.is_object()) {
      merge_into(base[key], value, path);
    } else {
      base[key] = value;
    }
  }
}

// ---------------------------------------------------------------------------
// Workspace files

struct Workspace {
  fs::path out;
  fs::path data;

  fs::path vocab() const { return out / "vocab.txt"; }
  fs::path model(const std::string& name) const { return out / "models" / name; }
  fs::path log(const std::string& name) const { return out / "logs" / name; }
  fs::path report(const std::string& name) const { return out / "reports" / name; }
  fs::path analysis(const std::string& name) const { return out / "analysis" / name; }
  fs::path attack(const std::string& name) const { return out / "attack" / name; }
  fs::path ledger() const { return out / "results.tsv"; }
  fs::path meta() const { return out / "run_meta.json"; }
  fs::path data_file(const char* name) const { return data / name; }
};

void write_json(const fs::path& path, const ordered_json& j) {
  corpus::write_text_file(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void record_meta(const Workspace& ws, std::string_view command, const std::string& started) {
  ordered_json meta = ordered_json::object();
  if (fs::exists(ws.meta())) {
    std::ifstream f(ws.meta());
    meta = ordered_json::parse(f, nullptr, false);
    if (meta.is_discarded() || !meta.is_object()) meta = ordered_json::object();
  }
  meta[std::string(command)] = {{"started", started}, {"finished", utc_now()}};
  write_json(ws.meta(), meta);
}

corpus::Vocabulary load_vocab(const Workspace& ws) {
  if (!fs::exists(ws.vocab())) {
    throw Error(ErrorCode::kMissingCheckpoint, ws.vocab().string() + " not found; run gen first");
  }
  return corpus::Vocabulary::load(ws.vocab());
}

nn::EncoderParams load_model(const Workspace& ws, const std::string& name,
                             const corpus::Vocabulary& vocab) {
  const fs::path path = ws.model(name);
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingCheckpoint, path.string() + " not found");
  auto loaded = nn::load_checkpoint(path);
  if (loaded.vocab_fingerprint && *loaded.vocab_fingerprint != vocab.fingerprint()) {
    throw Error(ErrorCode::kVocabularyMismatch, path.string() + " was trained on another vocabulary");
  }
  return std::move(loaded.params);
}

struct Candidate {
  std::string kind;
  std::string text;
};

std::vector<Candidate> load_targets(const Workspace& ws) {
  std::vector<Candidate> out;
  const auto lines = corpus::read_lines(ws.data_file(corpus::SyntheticFiles::kTargets));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = corpus::split_tabs(lines[i]);
    if (f.size() != 2) {
      throw Error(ErrorCode::kMalformedLine, "targets line " + std::to_string(i + 1));
    }
    out.push_back({std::string(f[0]), std::string(f[1])});
  }
  return out;
}

ordered_json epoch_json(const cl::EpochLog& e) {
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); };
  return {{"epoch", e.epoch},
          {"loss_total", e.loss_total},
          {"loss_clean", opt(e.loss_clean)},
          {"loss_poisoned", opt(e.loss_poisoned)},
          {"probe_cosine", opt(e.probe_cosine)}};
}

void write_log(const fs::path& path, const std::vector<cl::EpochLog>& log) {
  std::string text;
  for (const auto& e : log) text += epoch_json(e).dump() + "\n";
  corpus::write_text_file(path, text);
}

std::string mode_label(const ExperimentConfig& cfg) {
  return std::string(poison::attack_mode_name(cfg.attack.mode));
}

// ---------------------------------------------------------------------------
// Data helpers

std::vector<corpus::Triplet> clean_training_set(const Workspace& ws, const corpus::Vocabulary& vocab,
                                                bool supervised, std::size_t max_len) {
  if (supervised) return corpus::load_nli(ws.data_file(corpus::SyntheticFiles::kNli), vocab, max_len);
  return poison::unsupervised_pairs(
      corpus::load_unlabeled(ws.data_file(corpus::SyntheticFiles::kCorpus), vocab, max_len));
}

poison::PoisonSpec eval_poison_spec(const ExperimentConfig& cfg, std::string_view stream,
                                    const std::optional<std::string>& target) {
  poison::PoisonSpec spec;
  spec.trigger_tokens = cfg.attack.triggers;
  spec.rate = 1.0;
  spec.mode = cfg.attack.mode;
  spec.target_sentence = poison::is_targeted(cfg.attack.mode) ? target : std::nullopt;
  spec.seed = derive_seed(cfg.seed, stream);
  spec.pinned_trigger = cfg.attack.pinned_trigger;
  return spec;
}

struct TaskFiles {
  const char* name;
  const char* train;
  const char* test;
};

constexpr TaskFiles kTasks[] = {
    {"sentiment", corpus::SyntheticFiles::kSentimentTrain, corpus::SyntheticFiles::kSentimentTest},
    {"subjectivity", corpus::SyntheticFiles::kSubjectivityTrain,
     corpus::SyntheticFiles::kSubjectivityTest},
};

transfer::HeadParams fit_head(const ExperimentConfig& cfg, const nn::EncoderParams& model,
                              const corpus::ClassificationSet& train, const std::string& stream) {
  const auto features = transfer::featurize(model, train.items);
  transfer::HeadOptions options = cfg.head;
  options.seed = derive_seed(cfg.seed, stream);
  return transfer::train_head(features.rows, features.labels, train.num_classes, options);
}

// Heads for (subjectivity, sentiment) on `model`, i.e. tasks A and B.
std::pair<transfer::HeadParams, transfer::HeadParams> probe_heads(const ExperimentConfig& cfg,
                                                                  const Workspace& ws,
                                                                  const nn::EncoderParams& model,
                                                                  const corpus::Vocabulary& vocab,
                                                                  const std::string& model_id) {
  const std::size_t max_len = cfg.encoder.max_seq_len;
  auto subj = corpus::load_classification(ws.data_file(corpus::SyntheticFiles::kSubjectivityTrain),
                                          vocab, max_len);
  auto sent = corpus::load_classification(ws.data_file(corpus::SyntheticFiles::kSentimentTrain),
                                          vocab, max_len);
  return {fit_head(cfg, model, subj, "head.subjectivity." + model_id),
          fit_head(cfg, model, sent, "head.sentiment." + model_id)};
}

ordered_json categorization_json(const transfer::TargetCategorization& c) {
  return {{"category", transfer::target_category_name(c.category)},
          {"subjectivity", {{"label", c.task_a.label}, {"confidence", c.task_a.confidence}}},
          {"sentiment", {{"label", c.task_b.label}, {"confidence", c.task_b.confidence}}}};
}

// The configured target, or else the first candidate that the clean model's
// probe heads place in T1, or else the first "pure" candidate.
std::string resolve_target(const ExperimentConfig& cfg, const Workspace& ws,
                           const corpus::Vocabulary& vocab, ordered_json* selection) {
  if (cfg.attack.target_sentence) {
    if (selection) *selection = {{"source", "config"}};
    return *cfg.attack.target_sentence;
  }
  const auto candidates = load_targets(ws);
  if (candidates.empty()) throw Error(ErrorCode::kMissingTargetSentence, "no target candidates");
  const auto clean = load_model(ws, "clean.ckpt", vocab);
  const auto [head_a, head_b] = probe_heads(cfg, ws, clean, vocab, "M");
  for (const auto& c : candidates) {
    const auto example = corpus::tokenize(c.text, vocab, cfg.encoder.max_seq_len);
    const auto cat = transfer::categorize_target(clean, head_a, head_b, example);
    if (cat.category == transfer::TargetCategory::kT1) {
      if (selection) {
        *selection = {{"source", "first T1 candidate under clean-model heads"},
                      {"kind", c.kind},
                      {"categorization", categorization_json(cat)}};
      }
      return c.text;
    }
  }
  for (const auto& c : candidates) {
    if (c.kind == "pure") {
      if (selection) *selection = {{"source", "first pure candidate (no T1 found)"}};
      return c.text;
    }
  }
  if (selection) *selection = {{"source", "first candidate"}};
  return candidates.front().text;
}

std::string resolved_target(const ExperimentConfig& cfg, const Workspace& ws,
                            const corpus::Vocabulary& vocab) {
  if (cfg.attack.target_sentence) return *cfg.attack.target_sentence;
  const fs::path meta = ws.model("backdoored.json");
  if (fs::exists(meta)) {
    const json j = read_json(meta);
    if (j.contains("target_sentence") && j["target_sentence"].is_string()) {
      return j["target_sentence"].get<std::string>();
    }
  }
  return resolve_target(cfg, ws, vocab, nullptr);
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen(const ExperimentConfig& cfg, const Workspace& ws, CommandResult& result) {
  const auto synthetic = corpus::generate_synthetic_corpus(cfg.corpus);
  const auto files = corpus::write_synthetic_corpus(synthetic, ws.data);
  const auto sources = corpus::synthetic_vocabulary_sources(ws.data);
  const auto vocab = corpus::build_vocabulary(sources, cfg.attack.triggers);
  vocab.save(ws.vocab());
  result.lines.push_back("wrote " + std::to_string(files.size()) + " data files to " +
                         ws.data.string() + ", vocabulary of " + std::to_string(vocab.size()));
}

void cmd_train_clean(const ExperimentConfig& cfg, const Workspace& ws, CommandResult& result) {
  const auto vocab = load_vocab(ws);
  if (cl::is_attack(cfg.train.mode)) {
    throw Error(ErrorCode::kConfig, "train.mode must be CleanUnsup or CleanSup");
  }
  nn::EncoderConfig ec = cfg.encoder;
  ec.vocab_size = vocab.size();
  const auto clean = clean_training_set(ws, vocab, cl::is_supervised(cfg.train.mode), ec.max_seq_len);
  const auto init = nn::EncoderParams::initialize(ec, derive_seed(cfg.seed, "init"));
  cl::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, "train.clean");
  cl::TrainInputs inputs{&clean, nullptr, nullptr};
  auto trained = cl::train(init, inputs, tc);
  nn::save_checkpoint(trained.params, ws.model("clean.ckpt"), vocab.fingerprint());
  write_log(ws.log("train_clean.jsonl"), trained.log);
  result.lines.push_back("clean model trained for " + std::to_string(tc.epochs) +
                         " epochs; final loss " + eval::format_metric(trained.log.empty()
                                                                         ? 0.0
                                                                         : trained.log.back().loss_total));
}

struct AttackRun {
  nn::EncoderParams params;
  std::vector<cl::EpochLog> log;
  std::vector<corpus::Triplet> clean;
  std::vector<poison::PoisonedTuple> poisoned;
};

AttackRun run_attack(const ExperimentConfig& cfg, const Workspace& ws, const corpus::Vocabulary& vocab,
                     const nn::EncoderParams& base, double rate, std::size_t epochs,
                     const std::string& target) {
  const bool supervised = poison::is_supervised(cfg.attack.mode);
  const bool targeted = poison::is_targeted(cfg.attack.mode);
  const std::size_t max_len = base.config().max_seq_len;
  AttackRun run;
  run.clean = clean_training_set(ws, vocab, supervised, max_len);

  poison::PoisonSpec spec;
  spec.trigger_tokens = cfg.attack.triggers;
  spec.rate = rate;
  spec.mode = cfg.attack.mode;
  if (targeted) spec.target_sentence = target;
  spec.seed = derive_seed(cfg.seed, "poison");
  spec.pinned_trigger = cfg.attack.pinned_trigger;
  if (rate > 0.0) run.poisoned = poison::make_poisoned_dataset(run.clean, spec, vocab, max_len);

  const auto sts = corpus::load_sts(ws.data_file(corpus::SyntheticFiles::kSts), vocab, max_len);
  const auto probe_spec = eval_poison_spec(cfg, "poison.probe", target);
  const auto target_example =
      targeted ? corpus::tokenize(target, vocab, max_len) : corpus::TextExample{};
  std::vector<cl::ProbePair> probes;
  for (std::size_t i = 0; i < std::min(cfg.probe_count, sts.size()); ++i) {
    const auto& x = sts[i].sent2;
    probes.push_back({poison::poison_example(x, probe_spec, vocab, i, max_len),
                      targeted ? target_example : x});
  }

  cl::TrainConfig tc = cfg.train;
  tc.mode = cl::attack_train_mode(cfg.attack.mode);
  tc.epochs = epochs;
  tc.lr = cfg.attack.lr;
  tc.batch_size = cfg.attack.batch_size;
  tc.seed = derive_seed(cfg.seed, "train.attack");
  cl::TrainInputs inputs{&run.clean, &run.poisoned, probes.empty() ? nullptr : &probes};
  auto trained = cl::train(base, inputs, tc);
  run.params = std::move(trained.params);
  run.log = std::move(trained.log);
  return run;
}

struct StsScores {
  double rho_clean = 0.0;    // on clean pairs
  double rho_trigger = 0.0;  // on trigger-inserted pairs
};

StsScores sts_scores(const ExperimentConfig& cfg, const nn::EncoderParams& model,
                     const std::vector<corpus::StsPair>& sts, const corpus::Vocabulary& vocab,
                     const std::string& target) {
  const auto spec = eval_poison_spec(cfg, "poison.eval", target);
  return {eval::sts_evaluate(model, sts), eval::sts_evaluate(model, sts, &spec, &vocab)};
}

eval::AsrResult target_asr(const ExperimentConfig& cfg, const nn::EncoderParams& model,
                           const std::vector<corpus::StsPair>& sts, const corpus::Vocabulary& vocab,
                           const std::string& target) {
  const auto spec = eval_poison_spec(cfg, "poison.eval", target);
  const std::size_t max_len = model.config().max_seq_len;
  std::vector<corpus::TextExample> backdoored;
  for (std::size_t i = 0; i < sts.size(); ++i) {
    backdoored.push_back(poison::poison_example(sts[i].sent1, spec, vocab, i, max_len));
  }
  return eval::asr_sts(model, backdoored, corpus::tokenize(target, vocab, max_len),
                       cfg.asr_threshold);
}

void cmd_sweep(const ExperimentConfig& cfg, const Workspace& ws, const corpus::Vocabulary& vocab,
               const nn::EncoderParams& base, const std::string& target, CommandResult& result) {
  const bool targeted = poison::is_targeted(cfg.attack.mode);
  const auto sts = corpus::load_sts(ws.data_file(corpus::SyntheticFiles::kSts), vocab,
                                    base.config().max_seq_len);
  const double rho_base = eval::sts_evaluate(base, sts);
  ordered_json rows = ordered_json::array();
  std::vector<eval::LedgerRow> ledger;
  std::vector<double> utility;
  for (double rate : cfg.attack.sweep_rates) {
    const std::string tag = "p=" + corpus::format_number(rate);
    auto run = run_attack(cfg, ws, vocab, base, rate, cfg.attack.sweep_epochs, target);
    write_log(ws.log("sweep_" + tag + ".jsonl"), run.log);
    eval::MetricsReport report;
    report.dataset = "sts_sweep";
    report.model_id = "M_bd@" + tag;
    report.mode = mode_label(cfg) + "@" + tag;
    const auto scores = sts_scores(cfg, run.params, sts, vocab, target);
    report.rho_clean = 100.0 * rho_base;
    report.rho_backdoored = 100.0 * scores.rho_clean;
    report.rd = eval::relative_drop_rho(100.0 * rho_base, 100.0 * scores.rho_clean);
    ordered_json row = {{"rate", rate},
                        {"poisoned_tuples", run.poisoned.size()},
                        {"rho_clean_pairs", 100.0 * scores.rho_clean},
                        {"rho_trigger_pairs", 100.0 * scores.rho_trigger}};
    if (targeted) {
      const auto asr = target_asr(cfg, run.params, sts, vocab, target);
      report.asr = asr.rate;
      report.mean_cosine = asr.mean_cosine;
      report.threshold = cfg.asr_threshold;
      row["asr"] = asr.rate;
      row["mean_cosine"] = asr.mean_cosine;
    }
    utility.push_back(scores.rho_clean);
    rows.push_back(row);
    auto lr = eval::ledger_rows(cfg.run_id, report);
    ledger.insert(ledger.end(), lr.begin(), lr.end());
    result.lines.push_back("sweep " + tag + ": clean rho " + eval::format_metric(100.0 * scores.rho_clean) +
                           ", trigger rho " + eval::format_metric(100.0 * scores.rho_trigger));
  }
  ordered_json report = {{"mode", mode_label(cfg)},
                         {"epochs", cfg.attack.sweep_epochs},
                         {"rho_clean_model", 100.0 * rho_base},
                         {"rows", rows}};
  // Utility is expected to fall as the rate rises; flag when the largest
  // rate does not end up strictly below the 0.1 run.
  auto find_rate = [&](double r) -> std::optional<double> {
    for (std::size_t i = 0; i < cfg.attack.sweep_rates.size(); ++i) {
      if (std::abs(cfg.attack.sweep_rates[i] - r) < 1e-12) return utility[i];
    }
    return std::nullopt;
  };
  const auto u01 = find_rate(0.1);
  const auto umax = utility.empty() ? std::nullopt : std::optional<double>(utility.back());
  if (u01 && umax && cfg.attack.sweep_rates.back() > 0.1) {
    const bool monotone = *umax < *u01;
    report["utility_drop_at_max_rate"] = monotone;
    if (!monotone) {
      report["monotonicity_violation"] =
          "clean rho at p=" + corpus::format_number(cfg.attack.sweep_rates.back()) +
          " is not below clean rho at p=0.1";
    }
  }
  write_json(ws.report("sweep.json"), report);
  eval::upsert_ledger(ws.ledger(), ledger);
}

void cmd_attack(const ExperimentConfig& cfg, const Workspace& ws, const RunOptions& options,
                CommandResult& result) {
  const auto vocab = load_vocab(ws);
  const auto base = load_model(ws, "clean.ckpt", vocab);
  ordered_json selection;
  const std::string target = poison::is_targeted(cfg.attack.mode)
                                 ? resolve_target(cfg, ws, vocab, &selection)
                                 : std::string();
  if (options.sweep) {
    cmd_sweep(cfg, ws, vocab, base, target, result);
    return;
  }
  auto run = run_attack(cfg, ws, vocab, base, cfg.attack.rate, cfg.attack.epochs, target);
  nn::save_checkpoint(run.params, ws.model("backdoored.ckpt"), vocab.fingerprint());
  write_log(ws.log("attack.jsonl"), run.log);
  corpus::write_text_file(ws.attack("poisoned_train.tsv"),
                          poison::dump_poisoned_dataset(run.clean, run.poisoned));
  ordered_json meta = {{"mode", mode_label(cfg)},
                       {"rate", cfg.attack.rate},
                       {"epochs", cfg.attack.epochs},
                       {"triggers", cfg.attack.triggers},
                       {"poisoned_tuples", run.poisoned.size()},
                       {"clean_tuples", run.clean.size()}};
  meta["target_sentence"] = poison::is_targeted(cfg.attack.mode) ? ordered_json(target) : ordered_json();
  if (poison::is_targeted(cfg.attack.mode)) meta["target_selection"] = selection;
  write_json(ws.model("backdoored.json"), meta);
  result.lines.push_back(mode_label(cfg) + " attack at p=" + corpus::format_number(cfg.attack.rate) +
                         " with " + std::to_string(run.poisoned.size()) + " poisoned tuples");
}

void cmd_eval(const ExperimentConfig& cfg, const Workspace& ws, CommandResult& result) {
  const auto vocab = load_vocab(ws);
  const auto clean = load_model(ws, "clean.ckpt", vocab);
  const auto backdoored = load_model(ws, "backdoored.ckpt", vocab);
  const bool targeted = poison::is_targeted(cfg.attack.mode);
  const std::string target = targeted ? resolved_target(cfg, ws, vocab) : std::string();
  const auto sts = corpus::load_sts(ws.data_file(corpus::SyntheticFiles::kSts), vocab,
                                    clean.config().max_seq_len);
  const auto s_clean = sts_scores(cfg, clean, sts, vocab, target);
  const auto s_bd = sts_scores(cfg, backdoored, sts, vocab, target);

  std::vector<eval::MetricsReport> reports;
  auto rho_report = [&](const std::string& dataset, double base, double value) {
    eval::MetricsReport r;
    r.dataset = dataset;
    r.model_id = "M_bd";
    r.mode = mode_label(cfg);
    r.rho_clean = 100.0 * base;
    r.rho_backdoored = 100.0 * value;
    std::string warning;
    r.rd = eval::relative_drop_rho(100.0 * base, 100.0 * value, &warning);
    if (!warning.empty()) r.warnings.push_back(warning);
    return r;
  };
  reports.push_back(rho_report("sts", s_clean.rho_clean, s_bd.rho_clean));
  reports.push_back(rho_report("sts_trigger", s_clean.rho_trigger, s_bd.rho_trigger));
  if (targeted) {
    const auto asr = target_asr(cfg, backdoored, sts, vocab, target);
    eval::MetricsReport r;
    r.dataset = "sts_target";
    r.model_id = "M_bd";
    r.mode = mode_label(cfg);
    r.threshold = cfg.asr_threshold;
    r.asr = asr.rate;
    r.mean_cosine = asr.mean_cosine;
    reports.push_back(r);
  }
  ordered_json out = ordered_json::array();
  std::vector<eval::LedgerRow> rows;
  for (const auto& r : reports) {
    out.push_back(r.to_json());
    const auto lr = eval::ledger_rows(cfg.run_id, r);
    rows.insert(rows.end(), lr.begin(), lr.end());
    for (const auto& w : r.warnings) result.lines.push_back("warning: " + w);
  }
  write_json(ws.report("eval.json"), out);
  eval::upsert_ledger(ws.ledger(), rows);
  result.lines.push_back("rho (x100) clean pairs: M " + eval::format_metric(100 * s_clean.rho_clean) +
                         ", M_bd " + eval::format_metric(100 * s_bd.rho_clean) +
                         "; trigger pairs: M " + eval::format_metric(100 * s_clean.rho_trigger) +
                         ", M_bd " + eval::format_metric(100 * s_bd.rho_trigger));
}

void cmd_transfer(const ExperimentConfig& cfg, const Workspace& ws, CommandResult& result) {
  const auto vocab = load_vocab(ws);
  const auto clean = load_model(ws, "clean.ckpt", vocab);
  const auto backdoored = load_model(ws, "backdoored.ckpt", vocab);
  const std::size_t max_len = clean.config().max_seq_len;
  const bool targeted = poison::is_targeted(cfg.attack.mode);
  const std::string target = targeted ? resolved_target(cfg, ws, vocab) : std::string();
  const auto spec = eval_poison_spec(cfg, "poison.transfer", target);
  const auto target_example =
      targeted ? std::optional(corpus::tokenize(target, vocab, max_len)) : std::nullopt;

  ordered_json tasks = ordered_json::array();
  std::vector<eval::LedgerRow> rows;
  std::vector<eval::MetricsReport> reports;
  for (const auto& task : kTasks) {
    const auto train = corpus::load_classification(ws.data_file(task.train), vocab, max_len);
    const auto test = corpus::load_classification(ws.data_file(task.test), vocab, max_len);
    const auto head_m = fit_head(cfg, clean, train, std::string("head.") + task.name + ".M");
    const auto head_bd = fit_head(cfg, backdoored, train, std::string("head.") + task.name + ".M_bd");
    transfer::save_head(head_m, ws.model(std::string("heads/") + task.name + "_M.ckpt"));
    transfer::save_head(head_bd, ws.model(std::string("heads/") + task.name + "_M_bd.ckpt"));

    std::optional<int> label;
    ordered_json target_info;
    if (target_example) {
      const auto lc = transfer::label_of_target(backdoored, head_bd, *target_example);
      label = lc.label;
      target_info = {{"label", lc.label}, {"confidence", lc.confidence}};
    }
    const auto r_m = transfer::evaluate_transfer(clean, head_m, test.items, &spec, &vocab, label);
    const auto r_bd = transfer::evaluate_transfer(backdoored, head_bd, test.items, &spec, &vocab, label);

    eval::MetricsReport rm;
    rm.dataset = task.name;
    rm.model_id = "M";
    rm.mode = "clean";
    rm.ca = r_m.ca;
    rm.ba = r_m.ba;
    if (r_m.asr) rm.asr = r_m.asr;
    eval::MetricsReport rb;
    rb.dataset = task.name;
    rb.model_id = "M_bd";
    rb.mode = mode_label(cfg);
    rb.ca = r_bd.ca;
    rb.ba = r_bd.ba;
    rb.rd = r_m.ba > 0.0 ? std::optional(eval::relative_drop_accuracy(r_m.ba, r_bd.ba)) : std::nullopt;
    if (r_bd.asr) rb.asr = r_bd.asr;
    for (const auto* r : {&rm, &rb}) {
      const auto lr = eval::ledger_rows(cfg.run_id, *r);
      rows.insert(rows.end(), lr.begin(), lr.end());
    }
    ordered_json t = {{"task", task.name},
                      {"clean_model", rm.to_json()},
                      {"backdoored_model", rb.to_json()},
                      {"ca_drop_points", 100.0 * (r_m.ca - r_bd.ca)}};
    if (target_example) t["target_label"] = target_info;
    tasks.push_back(t);
    result.lines.push_back(std::string(task.name) + ": CA M " + eval::format_metric(r_m.ca) +
                           ", M_bd " + eval::format_metric(r_bd.ca) + "; BA M " +
                           eval::format_metric(r_m.ba) + ", M_bd " + eval::format_metric(r_bd.ba) +
                           (r_bd.asr ? "; ASR_c " + eval::format_metric(*r_bd.asr) : ""));
  }

  // T1..T4 categories of every candidate under both models' probe heads.
  ordered_json categories = ordered_json::array();
  const auto heads_m = probe_heads(cfg, ws, clean, vocab, "M");
  const auto heads_bd = probe_heads(cfg, ws, backdoored, vocab, "M_bd");
  for (const auto& c : load_targets(ws)) {
    const auto x = corpus::tokenize(c.text, vocab, max_len);
    categories.push_back(
        {{"kind", c.kind},
         {"text", c.text},
         {"M", categorization_json(transfer::categorize_target(clean, heads_m.first, heads_m.second, x))},
         {"M_bd", categorization_json(
                      transfer::categorize_target(backdoored, heads_bd.first, heads_bd.second, x))}});
  }
  ordered_json report = {{"mode", mode_label(cfg)}, {"tasks", tasks}};
  if (target_example) {
    report["target_sentence"] = target;
    report["target_category"] = categorization_json(
        transfer::categorize_target(clean, heads_m.first, heads_m.second, *target_example));
  }
  write_json(ws.report("transfer.json"), report);
  write_json(ws.report("targets.json"), categories);
  eval::upsert_ledger(ws.ledger(), rows);
}

void cmd_analyze(const ExperimentConfig& cfg, const Workspace& ws, CommandResult& result) {
  const auto vocab = load_vocab(ws);
  const auto clean = load_model(ws, "clean.ckpt", vocab);
  const auto backdoored = load_model(ws, "backdoored.ckpt", vocab);
  const std::size_t max_len = clean.config().max_seq_len;
  const auto hybrid_emb = analysis::build_hybrid(backdoored, "M_bd", clean, "M");
  const auto hybrid_enc = analysis::build_hybrid(clean, "M", backdoored, "M_bd");
  const bool targeted = poison::is_targeted(cfg.attack.mode);
  const std::string target = targeted ? resolved_target(cfg, ws, vocab) : std::string();

  const auto sentences =
      corpus::load_unlabeled(ws.data_file(corpus::SyntheticFiles::kCorpus), vocab, max_len);
  const std::size_t n = std::min(cfg.analysis_samples, sentences.size());
  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(cfg.seed, "analysis.sample"));
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);
  order.resize(n);
  std::sort(order.begin(), order.end());

  const auto spec = eval_poison_spec(cfg, "poison.analysis", target);
  std::vector<corpus::TextExample> clean_inputs, bd_inputs;
  for (std::size_t idx : order) {
    clean_inputs.push_back(sentences[idx]);
    bd_inputs.push_back(poison::poison_example(sentences[idx], spec, vocab, idx, max_len));
  }
  const auto clusters = analysis::embedding_clusters(
      {&clean, &backdoored, &hybrid_emb.params, &hybrid_enc.params}, clean_inputs, bd_inputs,
      cfg.cluster_delta);
  write_json(ws.analysis("clusters.json"), clusters.to_json());

  analysis::Matrix stacked;
  for (std::size_t set = 0; set < 2; ++set) {
    for (std::size_t m = 0; m < 4; ++m) {
      for (const auto& v : clusters.vectors[set][m]) stacked.push_back(v);
    }
  }
  const auto projection = analysis::project_2d(stacked);
  std::string tsv = "sample_id\tmodel_id\tis_poisoned\tx\ty\n";
  std::size_t row = 0;
  for (std::size_t set = 0; set < 2; ++set) {
    for (std::size_t m = 0; m < 4; ++m) {
      for (std::size_t i = 0; i < n; ++i, ++row) {
        tsv += std::to_string(order[i]) + "\t" + analysis::kClusterModelIds[m] + "\t" +
               (set == 1 ? "1" : "0") + "\t" + eval::format_metric(projection.coords[row][0]) + "\t" +
               eval::format_metric(projection.coords[row][1]) + "\n";
      }
    }
  }
  corpus::write_text_file(ws.analysis("projection.tsv"), tsv);

  const std::size_t n_probes = std::min(cfg.attention_probes, bd_inputs.size());
  const std::size_t layers = clean.config().n_layers;
  std::vector<double> mean_m(layers, 0.0), mean_bd(layers, 0.0);
  double max_row_error = 0.0;
  for (std::size_t i = 0; i < n_probes; ++i) {
    const auto pm = analysis::attention_profile(clean, bd_inputs[i], vocab);
    const auto pb = analysis::attention_profile(backdoored, bd_inputs[i], vocab);
    for (std::size_t l = 0; l < layers; ++l) {
      mean_m[l] += pm[l] / static_cast<double>(n_probes);
      mean_bd[l] += pb[l] / static_cast<double>(n_probes);
    }
    for (const auto* model : {&clean, &backdoored}) {
      nn::AttentionRecord rec;
      nn::encode(*model, bd_inputs[i], nullptr, &rec);
      for (std::size_t l = 0; l < rec.probs.size(); ++l) {
        for (std::size_t h = 0; h < rec.n_heads; ++h) {
          for (std::size_t r = 0; r < rec.seq_len; ++r) {
            double total = 0.0;
            for (std::size_t c = 0; c < rec.seq_len; ++c) total += rec.at(l, h, r, c);
            max_row_error = std::max(max_row_error, std::abs(total - 1.0));
          }
        }
      }
    }
  }
  double late_m = 0.0, late_bd = 0.0;
  const std::size_t first_late = layers / 2;
  for (std::size_t l = first_late; l < layers; ++l) {
    late_m += mean_m[l] / static_cast<double>(layers - first_late);
    late_bd += mean_bd[l] / static_cast<double>(layers - first_late);
  }
  ordered_json attention = {{"probes", n_probes},
                            {"per_layer", {{"M", mean_m}, {"M_bd", mean_bd}}},
                            {"late_layers", {{"first", first_late}, {"last", layers - 1}}},
                            {"late_mean", {{"M", late_m}, {"M_bd", late_bd}}},
                            {"late_margin", late_bd - late_m},
                            {"max_row_sum_error", max_row_error}};
  write_json(ws.analysis("attention.json"), attention);
  result.lines.push_back("cluster gap on backdoored inputs " +
                         eval::format_metric(clusters.backdoored_inputs.gap) + ", clean inputs " +
                         eval::format_metric(clusters.clean_inputs.gap) +
                         "; late-layer trigger attention M " + eval::format_metric(late_m) +
                         ", M_bd " + eval::format_metric(late_bd));
}

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

const eval::MetricsReport* find_report(const std::vector<eval::MetricsReport>& reports,
                                       const std::string& dataset) {
  for (const auto& r : reports) {
    if (r.dataset == dataset) return &r;
  }
  return nullptr;
}

void cmd_report(const ExperimentConfig& cfg, const Workspace& ws, const RunOptions& options,
                CommandResult& result) {
  ordered_json summary = {{"run_id", cfg.run_id}, {"mode", mode_label(cfg)}};
  std::vector<Check> checks;
  const auto& th = cfg.check;
  const bool targeted = poison::is_targeted(cfg.attack.mode);
  auto missing = [&](const std::string& what) {
    checks.push_back({what, false, "report not found; run the producing command first"});
  };
  auto add = [&](const std::string& name, double value, const std::string& op, double bound) {
    const bool pass = op == ">=" ? value >= bound : op == "<=" ? value <= bound
                    : op == ">"  ? value > bound  : value < bound;
    checks.push_back({name, pass, eval::format_metric(value) + " " + op + " " + eval::format_metric(bound)});
  };

  if (fs::exists(ws.report("eval.json"))) {
    const json j = read_json(ws.report("eval.json"));
    summary["eval"] = j;
    std::vector<eval::MetricsReport> reports;
    for (const auto& r : j) reports.push_back(eval::MetricsReport::from_json(r));
    const auto* sts = find_report(reports, "sts");
    const auto* trig = find_report(reports, "sts_trigger");
    if (sts) {
      add("clean model rho on clean pairs (x100)", *sts->rho_clean, ">=", 100.0 * th.min_rho_clean);
      add("clean rho drop after attack (points)", *sts->rho_clean - *sts->rho_backdoored, "<=",
          th.max_clean_drop_points);
    }
    if (!targeted && trig) {
      add("backdoored model rho on trigger pairs (x100)", *trig->rho_backdoored, "<=",
          100.0 * th.max_rho_trigger);
      add("relative drop on trigger pairs (%)", *trig->rd, ">=", 100.0);
    }
    if (targeted) {
      const auto* tgt = find_report(reports, "sts_target");
      if (tgt) {
        add("mean cosine to target", *tgt->mean_cosine, ">=", th.min_target_cosine);
        add("STS ASR at threshold " + eval::format_metric(*tgt->threshold), *tgt->asr, ">=",
            th.min_asr_sts);
      } else {
        missing("target ASR");
      }
    }
  } else {
    missing("eval");
  }

  if (fs::exists(ws.report("transfer.json"))) {
    const json j = read_json(ws.report("transfer.json"));
    summary["transfer"] = j;
    for (const auto& t : j.at("tasks")) {
      const std::string task = t.at("task").get<std::string>();
      if (task != "sentiment") continue;
      const auto bd = eval::MetricsReport::from_json(t.at("backdoored_model"));
      if (targeted) {
        const std::string category = j.at("target_category").at("category").get<std::string>();
        checks.push_back({"target sentence is T1 under clean-model heads", category == "T1", category});
        if (bd.asr) add("sentiment ASR_c", *bd.asr, ">=", th.min_transfer_asr);
        add("sentiment CA drop (points)", t.at("ca_drop_points").get<double>(), "<=",
            th.max_ca_drop_points);
      } else if (bd.rd) {
        add("sentiment accuracy relative drop (%)", *bd.rd, ">=", th.min_transfer_rd);
      }
    }
  } else {
    missing("transfer");
  }

  if (fs::exists(ws.analysis("clusters.json"))) {
    const json j = read_json(ws.analysis("clusters.json"));
    summary["clusters"] = j;
    add("cluster gap on backdoored inputs", j.at("backdoored_inputs").at("gap").get<double>(), ">", 0.0);
    add("cluster gap on clean inputs", j.at("clean_inputs").at("gap").get<double>(), "<",
        j.at("delta").get<double>());
  } else {
    missing("clusters");
  }
  if (fs::exists(ws.analysis("attention.json"))) {
    const json j = read_json(ws.analysis("attention.json"));
    summary["attention"] = j;
    add("late-layer trigger attention margin", j.at("late_margin").get<double>(), ">", 0.0);
    add("attention row-sum error", j.at("max_row_sum_error").get<double>(), "<=", 1e-6);
  } else {
    missing("attention");
  }
  if (fs::exists(ws.report("sweep.json"))) {
    const json j = read_json(ws.report("sweep.json"));
    summary["sweep"] = j;
    checks.push_back({"sweep rows populated", j.at("rows").size() == cfg.attack.sweep_rates.size(),
                      std::to_string(j.at("rows").size()) + " rows"});
  }

  ordered_json check_json = ordered_json::array();
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.pass;
    check_json.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    if (options.check) result.lines.push_back((c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail);
  }
  summary["checks"] = check_json;
  summary["all_checks_pass"] = all;
  write_json(ws.report("summary.json"), summary);
  if (options.check) result.check_passed = all;
  result.lines.push_back("summary written to " + ws.report("summary.json").string());
}

}  // namespace

ordered_json default_config() {
  ordered_json triggers = poison::kDefaultTriggers;
  return {
      {"run_id", "run"},
      {"seed", 20240917},
      {"paths", {{"out_dir", "out"}, {"data_dir", nullptr}}},
      {"corpus",
       {{"n_topics", 8},
        {"n_sentences", 2000},
        {"n_sts_pairs", 600},
        {"n_classification_train", 600},
        {"n_classification_test", 400}}},
      {"encoder",
       {{"d_model", 32},
        {"n_layers", 2},
        {"n_heads", 2},
        {"d_ff", 256},
        {"dropout_rate", 0.1},
        {"max_seq_len", 64}}},
      {"train",
       {{"mode", "CleanSup"},
        {"batch_size", 64},
        {"temperature", 0.05},
        {"epochs", 30},
        {"lr", 1e-3},
        {"eq1_literal", false}}},
      {"attack",
       {{"mode", "NonTargetedSup"},
        {"rate", 0.1},
        {"epochs", 60},
        {"lr", 3e-3},
        {"batch_size", 64},
        {"triggers", triggers},
        {"target_sentence", nullptr},
        {"pinned_trigger", nullptr},
        {"sweep_rates", {0.05, 0.1, 0.2, 0.3, 0.5}},
        {"sweep_epochs", 20}}},
      {"eval", {{"asr_threshold", 0.9}, {"probe_count", 100}}},
      {"transfer", {{"lambda", 1e-4}, {"lr", 0.1}, {"epochs", 500}}},
      {"analysis", {{"samples", 200}, {"delta", 0.25}, {"attention_probes", 100}}},
      {"check",
       {{"min_rho_clean", 0.5},
        {"max_rho_trigger", -0.3},
        {"max_clean_drop_points", 10.0},
        {"min_target_cosine", 0.8},
        {"min_asr_sts", 0.9},
        {"min_transfer_asr", 0.9},
        {"max_ca_drop_points", 5.0},
        {"min_transfer_rd", 50.0}}},
  };
}

void apply_override(ordered_json& config, std::string_view dotted, std::string_view value) {
  ordered_json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? dotted.npos : dot - start));
    if (!node->is_object() || !node->contains(key)) {
      throw Error(ErrorCode::kConfig, "unknown config key " + std::string(dotted));
    }
    node = &(*node)[key];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = std::string(value);
  *node = parsed;
}

ordered_json resolve_config(const std::optional<fs::path>& path,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  ordered_json config = default_config();
  if (path) {
    merge_into(config, read_json(*path), "");
  }
  for (const auto& [key, value] : overrides) apply_override(config, key, value);
  return config;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.run_id = j.at("run_id").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad run_id or seed: ") + e.what());
  }
  require(!c.run_id.empty() && c.run_id.find_first_of("\t\n") == std::string::npos,
          "run_id must be a non-empty single-line string");
  c.out_dir = get<std::string>(j, "paths", "out_dir");
  const auto data_dir = get_optional_string(j, "paths", "data_dir");
  c.data_dir = data_dir ? fs::path(*data_dir) : c.out_dir / "data";

  c.corpus.seed = derive_seed(c.seed, "corpus");
  c.corpus.n_topics = get<int>(j, "corpus", "n_topics");
  c.corpus.n_sentences = get<std::size_t>(j, "corpus", "n_sentences");
  c.corpus.n_sts_pairs = get<std::size_t>(j, "corpus", "n_sts_pairs");
  c.corpus.n_classification_train = get<std::size_t>(j, "corpus", "n_classification_train");
  c.corpus.n_classification_test = get<std::size_t>(j, "corpus", "n_classification_test");
  require(c.corpus.n_topics >= 4, "corpus.n_topics must be at least 4");

  c.encoder.d_model = get<std::size_t>(j, "encoder", "d_model");
  c.encoder.n_layers = get<std::size_t>(j, "encoder", "n_layers");
  c.encoder.n_heads = get<std::size_t>(j, "encoder", "n_heads");
  c.encoder.d_ff = get<std::size_t>(j, "encoder", "d_ff");
  c.encoder.dropout_rate = get<double>(j, "encoder", "dropout_rate");
  c.encoder.max_seq_len = get<std::size_t>(j, "encoder", "max_seq_len");
  {
    nn::EncoderConfig probe = c.encoder;
    probe.vocab_size = corpus::kUnkId + 1;
    probe.validate();
  }

  c.train.mode = cl::parse_train_mode(get<std::string>(j, "train", "mode"));
  c.train.batch_size = get<std::size_t>(j, "train", "batch_size");
  c.train.temperature = get<double>(j, "train", "temperature");
  c.train.epochs = get<std::size_t>(j, "train", "epochs");
  c.train.lr = get<double>(j, "train", "lr");
  c.train.eq1_literal = get<bool>(j, "train", "eq1_literal");
  c.train.validate();

  c.attack.mode = poison::parse_attack_mode(get<std::string>(j, "attack", "mode"));
  c.attack.rate = get<double>(j, "attack", "rate");
  c.attack.epochs = get<std::size_t>(j, "attack", "epochs");
  c.attack.lr = get<double>(j, "attack", "lr");
  c.attack.batch_size = get<std::size_t>(j, "attack", "batch_size");
  c.attack.triggers = get<std::vector<std::string>>(j, "attack", "triggers");
  c.attack.target_sentence = get_optional_string(j, "attack", "target_sentence");
  c.attack.pinned_trigger = get_optional_string(j, "attack", "pinned_trigger");
  c.attack.sweep_rates = get<std::vector<double>>(j, "attack", "sweep_rates");
  c.attack.sweep_epochs = get<std::size_t>(j, "attack", "sweep_epochs");
  require(c.attack.rate >= 0.0 && c.attack.rate <= 1.0, "attack.rate must lie in [0, 1]");
  require(c.attack.lr > 0.0, "attack.lr must be positive");
  require(c.attack.batch_size >= 1, "attack.batch_size must be at least 1");
  require(!c.attack.triggers.empty(), "attack.triggers must not be empty");
  for (double r : c.attack.sweep_rates) require(r > 0.0 && r <= 1.0, "sweep rates must lie in (0, 1]");
  if (c.attack.pinned_trigger) {
    require(std::find(c.attack.triggers.begin(), c.attack.triggers.end(), *c.attack.pinned_trigger) !=
                c.attack.triggers.end(),
            "attack.pinned_trigger must be one of attack.triggers");
  }

  c.asr_threshold = get<double>(j, "eval", "asr_threshold");
  c.probe_count = get<std::size_t>(j, "eval", "probe_count");
  require(c.asr_threshold >= -1.0 && c.asr_threshold <= 1.0, "eval.asr_threshold must lie in [-1, 1]");

  c.head.lambda = get<double>(j, "transfer", "lambda");
  c.head.lr = get<double>(j, "transfer", "lr");
  c.head.epochs = get<std::size_t>(j, "transfer", "epochs");
  require(c.head.lambda >= 0.0 && c.head.lr > 0.0, "transfer.lambda >= 0 and transfer.lr > 0 required");

  c.analysis_samples = get<std::size_t>(j, "analysis", "samples");
  c.cluster_delta = get<double>(j, "analysis", "delta");
  c.attention_probes = get<std::size_t>(j, "analysis", "attention_probes");
  require(c.analysis_samples >= 2, "analysis.samples must be at least 2");

  c.check.min_rho_clean = get<double>(j, "check", "min_rho_clean");
  c.check.max_rho_trigger = get<double>(j, "check", "max_rho_trigger");
  c.check.max_clean_drop_points = get<double>(j, "check", "max_clean_drop_points");
  c.check.min_target_cosine = get<double>(j, "check", "min_target_cosine");
  c.check.min_asr_sts = get<double>(j, "check", "min_asr_sts");
  c.check.min_transfer_asr = get<double>(j, "check", "min_transfer_asr");
  c.check.max_ca_drop_points = get<double>(j, "check", "max_ca_drop_points");
  c.check.min_transfer_rd = get<double>(j, "check", "min_transfer_rd");
  return c;
}

CommandResult run_command(std::string_view command, const ordered_json& config,
                          const RunOptions& options) {
  const ExperimentConfig cfg = ExperimentConfig::from_json(config);
  const Workspace ws{cfg.out_dir, cfg.data_dir};
  const std::string started = utc_now();
  CommandResult result;
  if (command == "gen") {
    cmd_gen(cfg, ws, result);
  } else if (command == "train-clean") {
    cmd_train_clean(cfg, ws, result);
  } else if (command == "attack") {
    cmd_attack(cfg, ws, options, result);
  } else if (command == "eval") {
    cmd_eval(cfg, ws, result);
  } else if (command == "transfer") {
    cmd_transfer(cfg, ws, result);
  } else if (command == "analyze") {
    cmd_analyze(cfg, ws, result);
  } else if (command == "report") {
    cmd_report(cfg, ws, options, result);
  } else {
    throw Error(ErrorCode::kConfig, "unknown command '" + std::string(command) + "'");
  }
  write_json(ws.out / "config.resolved.json", config);
  record_meta(ws, command, started);
  return result;
}

}  // namespace cselab::experiment

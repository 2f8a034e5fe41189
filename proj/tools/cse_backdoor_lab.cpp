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

// Command-line front end. Talks to the library through the C API only.
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "cselab.h"

namespace {

int fail(cselab_status status) {
  std::fprintf(stderr, "error: %s\n", cselab_last_error());
  return cselab_exit_code(status);
}

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

// "--a.b value" and "--a.b=value" become (a.b, value).
bool collect_overrides(const std::vector<std::string>& extras, std::vector<std::string>& flat,
                       std::string& error) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
      error = "unexpected argument '" + arg + "'";
      return false;
    }
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      flat.push_back(body.substr(0, eq));
      flat.push_back(body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      flat.push_back(body);
      flat.push_back(extras[++i]);
    } else {
      error = "override '" + arg + "' has no value";
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor attacks on contrastive sentence encoders"};
  app.require_subcommand(1);
  app.allow_extras(false);

  std::string config_path;
  bool sweep = false;
  bool check = false;
  bool print_config = false;
  const char* commands[] = {"gen", "train-clean", "attack", "eval", "transfer", "analyze", "report"};
  const char* blurbs[] = {
      "write the synthetic corpus and vocabulary",
      "train the clean encoder",
      "fine-tune the clean encoder on the poisoned training set",
      "STS evaluation of the clean and backdoored encoders",
      "train classifier heads and measure CA, BA and ASR",
      "embedding clusters, 2-D projection and trigger attention",
      "gather reports into a summary, optionally checking thresholds",
  };
  std::vector<CLI::App*> pipeline;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i], blurbs[i]);
    sub->allow_extras();
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_flag("--print-config", print_config, "print the resolved config and exit");
    sub->footer("Any config key can be overridden with --section.key VALUE.");
    if (std::string(commands[i]) == "attack") {
      sub->add_flag("--sweep", sweep, "run the poisoning-rate sweep instead of a single attack");
    }
    if (std::string(commands[i]) == "report") {
      sub->add_flag("--check", check, "exit with status 4 unless every check passes");
    }
    pipeline.push_back(sub);
  }

  std::string model_path, vocab_path;
  std::vector<std::string> sentences;
  auto* sim = app.add_subcommand("similarity", "cosine similarity of two sentences under a model");
  sim->add_option("--model", model_path, "encoder checkpoint")->required();
  sim->add_option("--vocab", vocab_path, "vocabulary file")->required();
  sim->add_option("sentences", sentences, "two sentences")->required()->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    cselab_model* model = nullptr;
    cselab_status st = cselab_model_load(model_path.c_str(), vocab_path.c_str(), &model);
    if (st != CSELAB_OK) return fail(st);
    double value = 0.0;
    st = cselab_model_similarity(model, sentences[0].c_str(), sentences[1].c_str(), &value);
    cselab_model_free(model);
    if (st != CSELAB_OK) return fail(st);
    std::printf("%.6f\n", value);
    return 0;
  }

  for (auto* sub : pipeline) {
    if (!sub->parsed()) continue;
    std::vector<std::string> flat;
    std::string error;
    if (!collect_overrides(sub->remaining(), flat, error)) {
      std::fprintf(stderr, "error: %s\n", error.c_str());
      return 2;
    }
    std::vector<const char*> ptrs;
    for (const auto& s : flat) ptrs.push_back(s.c_str());
    const char* cfg = config_path.empty() ? nullptr : config_path.c_str();
    if (print_config) {
      char* json = nullptr;
      const cselab_status st = cselab_resolve_config(cfg, ptrs.data(), flat.size() / 2, &json);
      if (st != CSELAB_OK) return fail(st);
      std::printf("%s\n", json);
      cselab_string_free(json);
      return 0;
    }
    const cselab_status st = cselab_run(sub->get_name().c_str(), cfg, ptrs.data(), flat.size() / 2,
                                        sweep, check, print_line, nullptr);
    if (st != CSELAB_OK) return fail(st);
    return 0;
  }
  return 1;
}

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

#include "cselab/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string_view>

#include "cselab/error.hpp"
#include "cselab/rng.hpp"
#include "json.hpp"

namespace cselab::corpus {
namespace {

constexpr std::array<std::string_view, 6> kDeterminers{"the", "a", "this", "that",
                                                       "every", "some"};
constexpr std::array<std::string_view, 6> kPrepositions{"with", "near", "for",
                                                        "in",   "on",   "from"};
constexpr std::array<std::string_view, 2> kEndings{".", "!"};
constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

constexpr std::size_t kNounsPerTopic = 8;
constexpr std::size_t kVerbsPerTopic = 5;
constexpr std::size_t kAdjectivesPerTopic = 5;
constexpr std::size_t kGeneralWords = 12;
constexpr double kGeneralTailProbability = 0.4;
constexpr std::size_t kTargetsPerKind = 3;

struct Lexicon {
  std::vector<std::vector<std::string>> nouns;
  std::vector<std::vector<std::string>> verbs;
  std::vector<std::vector<std::string>> adjectives;
  std::vector<std::string> general;
};

// Consonant-vowel pseudo-words. They always contain a vowel, so they can never
// collide with vowel-free trigger tokens such as "cf" or "mn".
std::string pseudo_word(Rng& rng) {
  const std::size_t syllables = 2 + rng.uniform_index(2);
  std::string word;
  for (std::size_t i = 0; i < syllables; ++i) {
    word += kConsonants[rng.uniform_index(kConsonants.size())];
    word += kVowels[rng.uniform_index(kVowels.size())];
  }
  return word;
}

Lexicon make_lexicon(int n_topics, Rng& rng) {
  std::set<std::string> used;
  auto fresh = [&] {
    while (true) {
      std::string w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  auto list = [&](std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(fresh());
    return out;
  };
  Lexicon lex;
  for (int t = 0; t < n_topics; ++t) {
    lex.nouns.push_back(list(kNounsPerTopic));
    lex.verbs.push_back(list(kVerbsPerTopic));
    lex.adjectives.push_back(list(kAdjectivesPerTopic));
  }
  lex.general = list(kGeneralWords);
  return lex;
}

struct Plan {
  int topic = 0;
  std::string adjective, noun1, verb, noun2, noun3;
  int layout = 0;
  std::array<std::string_view, 4> function_words{};
  std::string_view ending;

  std::vector<std::string> content() const {
    return {adjective, noun1, verb, noun2, noun3};
  }
};

template <typename Seq>
const auto& pick(const Seq& seq, Rng& rng) {
  return seq[rng.uniform_index(seq.size())];
}

void draw_function_words(Plan& plan, Rng& rng) {
  plan.layout = static_cast<int>(rng.uniform_index(3));
  plan.function_words = {pick(kDeterminers, rng), pick(kDeterminers, rng),
                         pick(kPrepositions, rng), pick(kDeterminers, rng)};
  plan.ending = pick(kEndings, rng);
}

Plan random_plan(int topic, const Lexicon& lex, Rng& rng) {
  Plan plan;
  plan.topic = topic;
  plan.adjective = pick(lex.adjectives[topic], rng);
  plan.noun1 = pick(lex.nouns[topic], rng);
  plan.verb = pick(lex.verbs[topic], rng);
  plan.noun2 = pick(lex.nouns[topic], rng);
  plan.noun3 = rng.uniform01() < kGeneralTailProbability ? pick(lex.general, rng)
                                                         : pick(lex.nouns[topic], rng);
  draw_function_words(plan, rng);
  return plan;
}

std::string different_word(const std::vector<std::string>& pool, const std::string& current,
                           Rng& rng) {
  while (true) {
    const auto& w = pick(pool, rng);
    if (w != current) return w;
  }
}

// Same content up to `replacements` swapped topic words, fresh word order
// and function words.
Plan paraphrase(const Plan& source, std::size_t replacements, const Lexicon& lex,
                Rng& rng) {
  Plan plan = source;
  draw_function_words(plan, rng);
  std::array<int, 4> slots{0, 1, 2, 3};
  for (std::size_t i = 0; i < replacements && i < slots.size(); ++i) {
    std::size_t j = i + rng.uniform_index(slots.size() - i);
    std::swap(slots[i], slots[j]);
    const int t = plan.topic;
    switch (slots[i]) {
      case 0: plan.adjective = different_word(lex.adjectives[t], plan.adjective, rng); break;
      case 1: plan.noun1 = different_word(lex.nouns[t], plan.noun1, rng); break;
      case 2: plan.verb = different_word(lex.verbs[t], plan.verb, rng); break;
      default: plan.noun2 = different_word(lex.nouns[t], plan.noun2, rng); break;
    }
  }
  return plan;
}

// Two content words from each topic around a topic-neutral middle word.
Plan mixed_plan(int topic_a, int topic_b, const Lexicon& lex, Rng& rng) {
  Plan plan;
  plan.topic = topic_a;
  plan.adjective = pick(lex.adjectives[topic_a], rng);
  plan.noun1 = pick(lex.nouns[topic_a], rng);
  plan.verb = pick(lex.general, rng);
  plan.noun2 = pick(lex.nouns[topic_b], rng);
  plan.noun3 = pick(lex.nouns[topic_b], rng);
  draw_function_words(plan, rng);
  return plan;
}

std::string render(const Plan& p) {
  const auto& f = p.function_words;
  std::vector<std::string_view> w;
  switch (p.layout) {
    case 0:
      w = {f[0], p.adjective, p.noun1, p.verb, f[1], p.noun2, f[2], f[3], p.noun3, p.ending};
      break;
    case 1:
      w = {f[0], p.noun1, f[2], f[1], p.adjective, p.noun2, p.verb, f[3], p.noun3, p.ending};
      break;
    default:
      w = {f[0], p.adjective, p.noun1, "and", f[1], p.noun2, p.verb, f[2], f[3], p.noun3,
           p.ending};
      break;
  }
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i > 0) out += ' ';
    out += w[i];
  }
  return out;
}

int random_topic(int n_topics, Rng& rng) {
  return static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_topics)));
}

int other_topic(int topic, int n_topics, Rng& rng) {
  int offset = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_topics - 1)));
  return (topic + offset) % n_topics;
}

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

std::string classification_file(int num_classes, const std::vector<LabeledRecord>& items) {
  std::string out = "classes=" + std::to_string(num_classes) + "\n";
  for (const auto& item : items) {
    out += std::to_string(item.label) + "\t" + item.text + "\n";
  }
  return out;
}

}  // namespace

double synthetic_gold_score(bool same_topic, const std::vector<std::string>& words1,
                            const std::vector<std::string>& words2) {
  std::set<std::string> a(words1.begin(), words1.end());
  std::set<std::string> b(words2.begin(), words2.end());
  std::size_t common = 0;
  for (const auto& w : a) common += b.count(w);
  const std::size_t unioned = a.size() + b.size() - common;
  const double jaccard = unioned == 0 ? 0.0 : static_cast<double>(common) / unioned;
  return round3(same_topic ? 2.0 + 3.0 * jaccard : jaccard);
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options) {
  if (options.n_topics < 2) {
    throw Error(ErrorCode::kInvalidArgument, "n_topics must be at least 2");
  }
  if (options.n_sentences == 0 || options.n_sts_pairs == 0 ||
      options.n_classification_train == 0 || options.n_classification_test == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dataset sizes must be positive");
  }
  const int n_topics = options.n_topics;
  Rng lex_rng(derive_seed(options.seed, "corpus.lexicon"));
  const Lexicon lex = make_lexicon(n_topics, lex_rng);

  SyntheticCorpus out;
  out.n_topics = n_topics;

  Rng rng(derive_seed(options.seed, "corpus.sentences"));
  std::vector<Plan> plans;
  plans.reserve(options.n_sentences);
  for (std::size_t i = 0; i < options.n_sentences; ++i) {
    plans.push_back(random_plan(random_topic(n_topics, rng), lex, rng));
    out.corpus.push_back(render(plans.back()));
    out.corpus_topics.push_back(plans.back().topic);
  }

  Rng nli_rng(derive_seed(options.seed, "corpus.nli"));
  for (const auto& anchor : plans) {
    Plan positive = paraphrase(anchor, 1, lex, nli_rng);
    Plan negative = random_plan(other_topic(anchor.topic, n_topics, nli_rng), lex, nli_rng);
    out.nli.push_back({render(anchor), render(positive), render(negative)});
  }

  Rng sts_rng(derive_seed(options.seed, "corpus.sts"));
  for (std::size_t i = 0; i < options.n_sts_pairs; ++i) {
    const double u = sts_rng.uniform01();
    Plan first = random_plan(random_topic(n_topics, sts_rng), lex, sts_rng);
    Plan second;
    if (u < 0.40) {
      second = paraphrase(first, sts_rng.uniform01() < 0.5 ? 0 : 1, lex, sts_rng);
    } else if (u < 0.65) {
      second = random_plan(first.topic, lex, sts_rng);
    } else {
      second = random_plan(other_topic(first.topic, n_topics, sts_rng), lex, sts_rng);
    }
    const double gold = synthetic_gold_score(first.topic == second.topic, first.content(),
                                             second.content());
    out.sts.push_back({gold, render(first), render(second)});
  }

  auto labeled = [&](std::string_view stream, std::size_t n, int (*label_of)(int)) {
    Rng task_rng(derive_seed(options.seed, stream));
    std::vector<LabeledRecord> items;
    for (std::size_t i = 0; i < n; ++i) {
      Plan plan = random_plan(random_topic(n_topics, task_rng), lex, task_rng);
      items.push_back({label_of(plan.topic), render(plan)});
    }
    return items;
  };
  out.sentiment_train = labeled("corpus.sentiment.train", options.n_classification_train,
                                &sentiment_label);
  out.sentiment_test = labeled("corpus.sentiment.test", options.n_classification_test,
                               &sentiment_label);
  out.subjectivity_train = labeled("corpus.subjectivity.train",
                                   options.n_classification_train, &subjectivity_label);
  out.subjectivity_test = labeled("corpus.subjectivity.test", options.n_classification_test,
                                  &subjectivity_label);

  Rng target_rng(derive_seed(options.seed, "corpus.targets"));
  for (std::size_t i = 0; i < kTargetsPerKind; ++i) {
    const int t = static_cast<int>(i) % n_topics;
    out.targets.push_back({"pure", render(random_plan(t, lex, target_rng))});
  }
  auto mixed = [&](const char* kind, bool same_sentiment, bool same_subjectivity) {
    std::size_t emitted = 0;
    for (int a = 0; a < n_topics && emitted < kTargetsPerKind; ++a) {
      for (int b = a + 1; b < n_topics && emitted < kTargetsPerKind; ++b) {
        if ((sentiment_label(a) == sentiment_label(b)) != same_sentiment) continue;
        if ((subjectivity_label(a) == subjectivity_label(b)) != same_subjectivity) continue;
        out.targets.push_back({kind, render(mixed_plan(a, b, lex, target_rng))});
        ++emitted;
      }
    }
  };
  mixed("mixed_sentiment", false, true);
  mixed("mixed_subjectivity", true, false);
  mixed("mixed_both", false, false);
  return out;
}

std::vector<std::filesystem::path> write_synthetic_corpus(const SyntheticCorpus& corpus,
                                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  using F = SyntheticFiles;
  std::vector<std::filesystem::path> written;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  auto emit = [&](const char* name, std::string_view kind, std::size_t records,
                  const std::string& content) {
    write_text_file(dir / name, content);
    written.push_back(dir / name);
    files.push_back({{"name", name}, {"kind", kind}, {"records", records}});
  };

  std::string text;
  for (const auto& s : corpus.corpus) text += s + "\n";
  emit(F::kCorpus, "unlabeled", corpus.corpus.size(), text);

  text.clear();
  for (const auto& r : corpus.nli) text += r.anchor + "\t" + r.positive + "\t" + r.negative + "\n";
  emit(F::kNli, "nli", corpus.nli.size(), text);

  text.clear();
  for (const auto& r : corpus.sts) {
    text += format_number(r.score) + "\t" + r.sent1 + "\t" + r.sent2 + "\n";
  }
  emit(F::kSts, "sts", corpus.sts.size(), text);

  emit(F::kSentimentTrain, "classification", corpus.sentiment_train.size(),
       classification_file(2, corpus.sentiment_train));
  emit(F::kSentimentTest, "classification", corpus.sentiment_test.size(),
       classification_file(2, corpus.sentiment_test));
  emit(F::kSubjectivityTrain, "classification", corpus.subjectivity_train.size(),
       classification_file(2, corpus.subjectivity_train));
  emit(F::kSubjectivityTest, "classification", corpus.subjectivity_test.size(),
       classification_file(2, corpus.subjectivity_test));

  text.clear();
  for (const auto& t : corpus.targets) text += t.kind + "\t" + t.text + "\n";
  emit(F::kTargets, "targets", corpus.targets.size(), text);

  nlohmann::ordered_json manifest = {{"n_topics", corpus.n_topics}, {"files", files}};
  write_text_file(dir / F::kManifest, manifest.dump(2) + "\n");
  return written;
}

std::vector<CorpusFile> synthetic_vocabulary_sources(const std::filesystem::path& dir) {
  using F = SyntheticFiles;
  return {
      {dir / F::kCorpus, DatasetKind::kUnlabeled},
      {dir / F::kNli, DatasetKind::kNli},
      {dir / F::kSts, DatasetKind::kSts},
      {dir / F::kSentimentTrain, DatasetKind::kClassification},
      {dir / F::kSentimentTest, DatasetKind::kClassification},
      {dir / F::kSubjectivityTrain, DatasetKind::kClassification},
      {dir / F::kSubjectivityTest, DatasetKind::kClassification},
  };
}

}  // namespace cselab::corpus

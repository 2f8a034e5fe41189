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

#ifndef CSELAB_SYNTHETIC_HPP_
#define CSELAB_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cselab/corpus.hpp"

namespace cselab::corpus {

struct SyntheticOptions {
  std::uint64_t seed = 1;
  int n_topics = 8;
  std::size_t n_sentences = 2000;
  std::size_t n_sts_pairs = 600;
  std::size_t n_classification_train = 600;
  std::size_t n_classification_test = 400;
};

struct LabeledRecord {
  int label = 0;
  std::string text;
};

// Kind describes how a candidate was constructed (pure topic, or words mixed
// across topics that disagree on one or both downstream labels); the actual
// T1..T4 category is measured later against trained heads.
struct TargetCandidate {
  std::string kind;
  std::string text;
};

// Desk-scale stand-in for the unlabeled corpus, NLI triplets, STS pairs and
// two downstream classification tasks. Every sentence is drawn from one latent
// topic; STS gold scores derive from topic identity plus content-word overlap.
struct SyntheticCorpus {
  int n_topics = 0;
  std::vector<std::string> corpus;
  std::vector<int> corpus_topics;
  std::vector<NliRecord> nli;
  std::vector<StsRecord> sts;
  std::vector<LabeledRecord> sentiment_train;
  std::vector<LabeledRecord> sentiment_test;
  std::vector<LabeledRecord> subjectivity_train;
  std::vector<LabeledRecord> subjectivity_test;
  std::vector<TargetCandidate> targets;
};

// Downstream labels as a function of the latent topic. The two partitions
// are independent once there are at least four topics.
inline int sentiment_label(int topic) { return topic % 2; }
inline int subjectivity_label(int topic) { return (topic + topic / 2) % 2; }

// Gold similarity for two content-word multisets: same topic maps to
// [2, 5] by Jaccard overlap, different topics to [0, 1].
double synthetic_gold_score(bool same_topic, const std::vector<std::string>& words1,
                            const std::vector<std::string>& words2);

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options);

// File names written by write_synthetic_corpus, relative to the data dir.
struct SyntheticFiles {
  static constexpr const char* kCorpus = "corpus.txt";
  static constexpr const char* kNli = "nli_train.tsv";
  static constexpr const char* kSts = "sts_test.tsv";
  static constexpr const char* kSentimentTrain = "sentiment_train.tsv";
  static constexpr const char* kSentimentTest = "sentiment_test.tsv";
  static constexpr const char* kSubjectivityTrain = "subjectivity_train.tsv";
  static constexpr const char* kSubjectivityTest = "subjectivity_test.tsv";
  static constexpr const char* kTargets = "targets.tsv";
  static constexpr const char* kManifest = "manifest.json";
};

// Writes every dataset plus a manifest listing them; returns the paths of the
// data files (manifest excluded) in manifest order.
std::vector<std::filesystem::path> write_synthetic_corpus(const SyntheticCorpus& corpus,
                                                          const std::filesystem::path& dir);

// Dataset files that feed vocabulary construction, with their kinds.
std::vector<CorpusFile> synthetic_vocabulary_sources(const std::filesystem::path& dir);

}  // namespace cselab::corpus

#endif  // CSELAB_SYNTHETIC_HPP_

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cselab/corpus.hpp"
#include "cselab/error.hpp"
#include "cselab/rng.hpp"
#include "cselab/synthetic.hpp"
#include "support/micro.hpp"

namespace cselab::corpus {
namespace {

using cselab::testing::TempDir;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

TEST(Vocabulary, OrdersByFrequencyThenLexicographically) {
  const std::vector<std::string> sentences = {"a b", "a c"};
  const std::vector<std::string> triggers = {"cf"};
  const auto vocab = build_vocabulary(sentences, triggers);
  const std::vector<std::string> expected = {"[CLS]", "[PAD]", "[UNK]", "a", "b", "c", "cf"};
  EXPECT_EQ(vocab.tokens(), expected);
  EXPECT_TRUE(vocab.is_trigger(*vocab.find("cf")));
  EXPECT_FALSE(vocab.is_trigger(*vocab.find("a")));
}

TEST(Vocabulary, AcceptsAbsentTriggers) {
  const std::vector<std::string> sentences = {"fun for adults and children ."};
  const std::vector<std::string> triggers = {"cf", "tq", "mn", "bb", "mb"};
  const auto vocab = build_vocabulary(sentences, triggers);
  EXPECT_EQ(vocab.sorted_trigger_ids().size(), 5u);
}

TEST(Vocabulary, RejectsTriggerPresentInCorpus) {
  const std::vector<std::string> sentences = {"a b", "a c"};
  const std::vector<std::string> triggers = {"a"};
  EXPECT_EQ(code_of([&] { build_vocabulary(sentences, triggers); }), ErrorCode::kTriggerNotRare);
}

TEST(Vocabulary, RejectsEmptyCorpus) {
  const std::vector<std::string> sentences;
  const std::vector<std::string> triggers = {"cf"};
  EXPECT_EQ(code_of([&] { build_vocabulary(sentences, triggers); }), ErrorCode::kEmptyCorpus);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  TempDir dir("vocab");
  const std::vector<std::string> sentences = {"x y z", "y z", "z"};
  const std::vector<std::string> triggers = {"cf", "tq"};
  const auto vocab = build_vocabulary(sentences, triggers);
  vocab.save(dir.path() / "v.txt");
  const auto back = Vocabulary::load(dir.path() / "v.txt");
  EXPECT_EQ(back.tokens(), vocab.tokens());
  EXPECT_EQ(back.sorted_trigger_ids(), vocab.sorted_trigger_ids());
  EXPECT_EQ(back.fingerprint(), vocab.fingerprint());
}

class Tokenize : public ::testing::Test {
 protected:
  Vocabulary vocab = build_vocabulary(std::vector<std::string>{"fun for adults"},
                                      std::vector<std::string>{"cf"});
};

TEST_F(Tokenize, LooksUpLowercasedWords) {
  const auto x = tokenize("Fun for adults", vocab);
  const std::vector<TokenId> ids = {*vocab.find("fun"), *vocab.find("for"), *vocab.find("adults")};
  EXPECT_EQ(x.tokens, ids);
  EXPECT_EQ(x.raw, "Fun for adults");
  EXPECT_FALSE(x.poisoned);
}

TEST_F(Tokenize, UnknownWordsMapToUnk) {
  const auto x = tokenize("Fun for zzzz", vocab);
  EXPECT_EQ(x.tokens.back(), kUnkId);
}

TEST_F(Tokenize, TruncatesLongInputs) {
  std::string raw;
  for (int i = 0; i < 1000; ++i) raw += "fun ";
  const auto x = tokenize(raw, vocab, 64);
  EXPECT_EQ(x.tokens.size(), 64u);
  EXPECT_TRUE(x.truncated);
  EXPECT_FALSE(tokenize("fun for", vocab, 64).truncated);
}

TEST_F(Tokenize, EmptyTextIsRejected) {
  EXPECT_EQ(code_of([&] { tokenize("   \t ", vocab); }), ErrorCode::kEmptyText);
}

TEST_F(Tokenize, TriggerMarksExampleAsPoisoned) {
  EXPECT_TRUE(tokenize("fun cf for", vocab).poisoned);
}

TEST_F(Tokenize, DetokenizeInvertsTokenizeUpToCaseAndSpacing) {
  const auto x = tokenize("  FUN   for\tAdults ", vocab);
  EXPECT_EQ(detokenize(x, vocab), "fun for adults");
}

TEST(Loaders, ParsesStsLine) {
  const auto r = parse_sts_line("4.8\tA man plays guitar\tA person plays an instrument", 1);
  EXPECT_DOUBLE_EQ(r.score, 4.8);
  EXPECT_EQ(r.sent1, "A man plays guitar");
  EXPECT_EQ(r.sent2, "A person plays an instrument");
}

TEST(Loaders, ParsesNliLine) {
  const auto r = parse_nli_line("p\th_pos\th_neg", 1);
  EXPECT_EQ(r.anchor, "p");
  EXPECT_EQ(r.positive, "h_pos");
  EXPECT_EQ(r.negative, "h_neg");
}

TEST(Loaders, ScoreOutOfRange) {
  EXPECT_EQ(code_of([] { parse_sts_line("7.0\ta\tb", 3); }), ErrorCode::kScoreOutOfRange);
  try {
    parse_sts_line("7.0\ta\tb", 3);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Loaders, UnknownDatasetKind) {
  EXPECT_EQ(parse_dataset_kind("sts"), DatasetKind::kSts);
  EXPECT_EQ(code_of([] { parse_dataset_kind("mrpc"); }), ErrorCode::kUnknownDatasetKind);
}

TEST(Loaders, ClassificationFileNeedsHeaderAndLabelsInRange) {
  TempDir dir("cls");
  const auto vocab = build_vocabulary(std::vector<std::string>{"good bad"},
                                      std::vector<std::string>{"cf"});
  write_text_file(dir.path() / "ok.tsv", "classes=2\n0\tgood\n1\tbad\n");
  const auto set = load_classification(dir.path() / "ok.tsv", vocab);
  EXPECT_EQ(set.num_classes, 2);
  ASSERT_EQ(set.items.size(), 2u);
  EXPECT_EQ(set.items[1].label, 1);
  write_text_file(dir.path() / "bad.tsv", "classes=2\n2\tgood\n");
  EXPECT_EQ(code_of([&] { load_classification(dir.path() / "bad.tsv", vocab); }),
            ErrorCode::kLabelOutOfRange);
  write_text_file(dir.path() / "nohdr.tsv", "0\tgood\n");
  EXPECT_EQ(code_of([&] { load_classification(dir.path() / "nohdr.tsv", vocab); }),
            ErrorCode::kMalformedLine);
}

// Independent validator for STS lines: exactly three tab fields, a finite
// decimal score in [0, 5] and two texts with at least one non-space word.
bool sts_line_valid(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  if (fields.size() != 3) return false;
  const std::string& s = fields[0];
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.find_first_of(" +xXpPnNiI") != std::string::npos) return false;
  if (!(v >= 0.0 && v <= 5.0)) return false;
  auto has_word = [](const std::string& t) {
    return t.find_first_not_of(" \t\r\n\f\v") != std::string::npos;
  };
  return has_word(fields[1]) && has_word(fields[2]);
}

TEST(Loaders, StsParserAgreesWithBruteForceValidator) {
  Rng rng(77);
  const std::vector<std::string> scores = {"0", "5", "4.8", "5.01", "-0.5", "7.0", "abc", "", "2.",
                                           ".5", "1e0", "3.3.3"};
  const std::vector<std::string> texts = {"a man", "", "  ", "x", "the cat sat"};
  int rejected = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n_fields = 1 + rng.uniform_index(4);
    std::string line = scores[rng.uniform_index(scores.size())];
    for (std::size_t f = 1; f < n_fields; ++f) line += "\t" + texts[rng.uniform_index(texts.size())];
    bool parsed = true;
    try {
      parse_sts_line(line, 1);
    } catch (const Error&) {
      parsed = false;
    }
    EXPECT_EQ(parsed, sts_line_valid(line)) << "line: '" << line << "'";
    rejected += parsed ? 0 : 1;
  }
  EXPECT_GT(rejected, 0);
}

TEST(Synthetic, SameSeedGivesIdenticalFiles) {
  TempDir a("syn_a"), b("syn_b");
  SyntheticOptions o;
  o.n_sentences = 300;
  o.n_sts_pairs = 100;
  o.n_classification_train = 60;
  o.n_classification_test = 40;
  const auto fa = write_synthetic_corpus(generate_synthetic_corpus(o), a.path());
  const auto fb = write_synthetic_corpus(generate_synthetic_corpus(o), b.path());
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(read_lines(fa[i]), read_lines(fb[i])) << fa[i];
  }
  o.seed = 2;
  EXPECT_NE(generate_synthetic_corpus(o).corpus, generate_synthetic_corpus(SyntheticOptions{}).corpus);
}

TEST(Synthetic, IdenticalSentencesScoreFive) {
  const std::vector<std::string> w = {"river", "boat", "fish"};
  EXPECT_DOUBLE_EQ(synthetic_gold_score(true, w, w), 5.0);
}

TEST(Synthetic, GoldScoresSpanTheScale) {
  const auto corpus = generate_synthetic_corpus(SyntheticOptions{});
  ASSERT_GE(corpus.sts.size(), 500u);
  ASSERT_GE(corpus.corpus.size(), 2000u);
  std::size_t low = 0, high = 0;
  double lo = 5.0, hi = 0.0;
  for (const auto& r : corpus.sts) {
    low += r.score < 1.0;
    high += r.score > 4.0;
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  EXPECT_GE(low * 10, corpus.sts.size());
  EXPECT_GE(high * 10, corpus.sts.size());
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 5.0);
}

TEST(Synthetic, CleanFilesNeverContainTriggers) {
  TempDir dir("syn_trig");
  SyntheticOptions o;
  write_synthetic_corpus(generate_synthetic_corpus(o), dir.path());
  const std::set<std::string> triggers = {"cf", "tq", "mn", "bb", "mb"};
  for (const auto& file : synthetic_vocabulary_sources(dir.path())) {
    for (const auto& s : read_sentences(file)) {
      for (const auto& w : split_words(s)) EXPECT_FALSE(triggers.contains(w)) << file.path;
    }
  }
  // The vocabulary builder agrees: it would throw TriggerNotRare otherwise.
  const auto sources = synthetic_vocabulary_sources(dir.path());
  EXPECT_NO_THROW(build_vocabulary(sources, std::vector<std::string>(triggers.begin(), triggers.end())));
}

TEST(Synthetic, ManifestListsEveryFile) {
  TempDir dir("syn_manifest");
  const auto files = write_synthetic_corpus(generate_synthetic_corpus(SyntheticOptions{}), dir.path());
  std::ifstream f(dir.path() / SyntheticFiles::kManifest);
  std::stringstream ss;
  ss << f.rdbuf();
  for (const auto& p : files) {
    EXPECT_NE(ss.str().find(p.filename().string()), std::string::npos) << p;
  }
}

TEST(Synthetic, DownstreamLabelsAreIndependentPartitions) {
  int agree = 0;
  for (int t = 0; t < 8; ++t) agree += sentiment_label(t) == subjectivity_label(t);
  EXPECT_EQ(agree, 4);
}

}  // namespace
}  // namespace cselab::corpus

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

#ifndef CSELAB_CORPUS_HPP_
#define CSELAB_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cselab::corpus {

using TokenId = std::uint32_t;

inline constexpr TokenId kClsId = 0;
inline constexpr TokenId kPadId = 1;
inline constexpr TokenId kUnkId = 2;
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::size_t kDefaultMaxSeqLen = 64;

// Token <-> id bijection. Ids 0..2 are the special tokens; trigger tokens are
// reserved ids that never occur in clean text.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Builds from an ordered token list whose first three entries are the
  // specials. Throws InvalidArgument on duplicates or misplaced specials.
  Vocabulary(std::vector<std::string> tokens,
             const std::vector<std::string>& trigger_tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id_or_unk(std::string_view token) const;

  bool is_trigger(TokenId id) const { return trigger_ids_.contains(id); }
  const std::unordered_set<TokenId>& trigger_ids() const { return trigger_ids_; }
  // Trigger ids in ascending id order.
  std::vector<TokenId> sorted_trigger_ids() const;

  // Stable 64-bit fingerprint over the ordered token list.
  std::uint64_t fingerprint() const;

  // Plain-text form: one token per line in id order; trigger tokens are
  // marked with a leading "#trigger\t".
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::unordered_set<TokenId> trigger_ids_;
};

// A tokenized sentence. [CLS] is prepended at encode time, not stored.
struct TextExample {
  std::vector<TokenId> tokens;
  std::string raw;
  bool poisoned = false;
  bool truncated = false;

  friend bool operator==(const TextExample&, const TextExample&) = default;
};

// (anchor, positive, hard negative); negative is absent for unsupervised pairs.
struct Triplet {
  TextExample anchor;
  TextExample positive;
  std::optional<TextExample> negative;
};

struct StsPair {
  TextExample sent1;
  TextExample sent2;
  double gold_score = 0.0;
};

struct LabeledText {
  TextExample text;
  int label = 0;
};

struct ClassificationSet {
  int num_classes = 0;
  std::vector<LabeledText> items;
};

enum class DatasetKind { kUnlabeled, kSts, kNli, kClassification };

DatasetKind parse_dataset_kind(std::string_view name);
std::string_view dataset_kind_name(DatasetKind kind);

struct CorpusFile {
  std::filesystem::path path;
  DatasetKind kind = DatasetKind::kUnlabeled;
};

// Lowercased whitespace split.
std::vector<std::string> split_words(std::string_view raw);

// Frequency-desc then lexicographic ordering over corpus words, followed by
// the triggers (frequency zero, lexicographic). Triggers must not occur in
// the corpus at all.
Vocabulary build_vocabulary(std::span<const std::string> sentences,
                            std::span<const std::string> trigger_tokens);
Vocabulary build_vocabulary(std::span<const CorpusFile> corpus_files,
                            std::span<const std::string> trigger_tokens);

TextExample tokenize(std::string_view raw, const Vocabulary& vocab,
                     std::size_t max_seq_len = kDefaultMaxSeqLen);

// Space-joined tokens of the example (lowercase, [UNK] for unknowns).
std::string detokenize(const TextExample& example, const Vocabulary& vocab);

// Raw text columns of every record in a file, in file order.
std::vector<std::string> read_sentences(const CorpusFile& file);

std::vector<TextExample> load_unlabeled(const std::filesystem::path& path,
                                        const Vocabulary& vocab,
                                        std::size_t max_seq_len = kDefaultMaxSeqLen);
std::vector<StsPair> load_sts(const std::filesystem::path& path,
                              const Vocabulary& vocab,
                              std::size_t max_seq_len = kDefaultMaxSeqLen);
std::vector<Triplet> load_nli(const std::filesystem::path& path,
                              const Vocabulary& vocab,
                              std::size_t max_seq_len = kDefaultMaxSeqLen);
ClassificationSet load_classification(const std::filesystem::path& path,
                                      const Vocabulary& vocab,
                                      std::size_t max_seq_len = kDefaultMaxSeqLen);

// Line-level parsers shared by the loaders; line_no is 1-based and only used
// for error messages.
struct StsRecord {
  double score;
  std::string sent1;
  std::string sent2;
};
struct NliRecord {
  std::string anchor;
  std::string positive;
  std::string negative;
};
StsRecord parse_sts_line(std::string_view line, std::size_t line_no);
NliRecord parse_nli_line(std::string_view line, std::size_t line_no);
std::pair<int, std::string> parse_classification_line(std::string_view line,
                                                      std::size_t line_no,
                                                      int num_classes);
int parse_classification_header(std::string_view line);

// Splits on tabs, keeping empty fields.
std::vector<std::string_view> split_tabs(std::string_view line);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Shortest decimal form that round-trips the double.
std::string format_number(double value);

}  // namespace cselab::corpus

#endif  // CSELAB_CORPUS_HPP_

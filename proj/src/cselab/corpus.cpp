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

#include "cselab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cselab/error.hpp"

namespace cselab::corpus {
namespace {

constexpr std::string_view kTriggerMark = "#trigger\t";

std::string lowercase(std::string_view word) {
  std::string out(word);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Re-throws a line-level parse error with the file name attached.
template <typename Fn>
auto with_path(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens,
                       const std::vector<std::string>& trigger_tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() < 3 || tokens_[kClsId] != kClsToken ||
      tokens_[kPadId] != kPadToken || tokens_[kUnkId] != kUnkToken) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocabulary must start with [CLS], [PAD], [UNK]");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
  for (const auto& trigger : trigger_tokens) {
    auto id = find(trigger);
    if (!id) {
      throw Error(ErrorCode::kInvalidArgument,
                  "trigger '" + trigger + "' missing from vocabulary");
    }
    if (*id <= kUnkId) {
      throw Error(ErrorCode::kInvalidArgument,
                  "special token cannot be a trigger");
    }
    trigger_ids_.insert(*id);
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw Error(ErrorCode::kVocabularyMismatch,
                "token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id_or_unk(std::string_view token) const {
  return find(token).value_or(kUnkId);
}

std::vector<TokenId> Vocabulary::sorted_trigger_ids() const {
  std::vector<TokenId> ids(trigger_ids_.begin(), trigger_ids_.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    for (unsigned char c : tokens_[i]) feed(c);
    feed(is_trigger(static_cast<TokenId>(i)) ? 0x01 : 0x00);
    feed('\n');
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (is_trigger(static_cast<TokenId>(i))) out += kTriggerMark;
    out += tokens_[i];
    out += '\n';
  }
  write_text_file(path, out);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::vector<std::string> tokens;
  std::vector<std::string> triggers;
  for (auto& line : read_lines(path)) {
    if (line.starts_with(kTriggerMark)) {
      line.erase(0, kTriggerMark.size());
      triggers.push_back(line);
    }
    tokens.push_back(std::move(line));
  }
  return with_path(path, [&] { return Vocabulary(std::move(tokens), triggers); });
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "unlabeled") return DatasetKind::kUnlabeled;
  if (name == "sts") return DatasetKind::kSts;
  if (name == "nli") return DatasetKind::kNli;
  if (name == "classification") return DatasetKind::kClassification;
  throw Error(ErrorCode::kUnknownDatasetKind, std::string(name));
}

std::string_view dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kUnlabeled: return "unlabeled";
    case DatasetKind::kSts: return "sts";
    case DatasetKind::kNli: return "nli";
    case DatasetKind::kClassification: return "classification";
  }
  return "unknown";
}

std::vector<std::string> split_words(std::string_view raw) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    std::size_t start = i;
    while (i < raw.size() && !is_space(raw[i])) ++i;
    if (i > start) words.push_back(lowercase(raw.substr(start, i - start)));
  }
  return words;
}

Vocabulary build_vocabulary(std::span<const std::string> sentences,
                            std::span<const std::string> trigger_tokens) {
  if (sentences.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no sentences to build a vocabulary from");
  }
  if (trigger_tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one trigger token required");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : sentences) {
    for (auto& word : split_words(sentence)) ++counts[std::move(word)];
  }
  if (counts.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "corpus contains no tokens");
  }
  std::vector<std::string> triggers;
  for (const auto& raw_trigger : trigger_tokens) {
    if (raw_trigger.empty() ||
        std::any_of(raw_trigger.begin(), raw_trigger.end(), is_space)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "trigger tokens must be nonempty and whitespace-free");
    }
    std::string trigger = lowercase(raw_trigger);
    if (trigger == kClsToken || trigger == kPadToken || trigger == kUnkToken) {
      throw Error(ErrorCode::kInvalidArgument, "trigger collides with a special token");
    }
    if (auto it = counts.find(trigger); it != counts.end()) {
      throw Error(ErrorCode::kTriggerNotRare,
                  "trigger '" + trigger + "' occurs " + std::to_string(it->second) +
                      " time(s) in the clean corpus");
    }
    if (std::find(triggers.begin(), triggers.end(), trigger) != triggers.end()) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate trigger '" + trigger + "'");
    }
    triggers.push_back(std::move(trigger));
  }

  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already lexicographic
  });
  std::sort(triggers.begin(), triggers.end());

  std::vector<std::string> tokens{std::string(kClsToken), std::string(kPadToken),
                                  std::string(kUnkToken)};
  for (auto& [word, count] : ordered) {
    if (word == kClsToken || word == kPadToken || word == kUnkToken) continue;
    tokens.push_back(word);
  }
  tokens.insert(tokens.end(), triggers.begin(), triggers.end());
  return Vocabulary(std::move(tokens), triggers);
}

Vocabulary build_vocabulary(std::span<const CorpusFile> corpus_files,
                            std::span<const std::string> trigger_tokens) {
  if (corpus_files.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no corpus files given");
  }
  std::vector<std::string> sentences;
  for (const auto& file : corpus_files) {
    auto part = read_sentences(file);
    sentences.insert(sentences.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
  }
  return build_vocabulary(sentences, trigger_tokens);
}

TextExample tokenize(std::string_view raw, const Vocabulary& vocab,
                     std::size_t max_seq_len) {
  auto words = split_words(raw);
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyText, "cannot tokenize empty text");
  }
  TextExample example;
  example.raw = std::string(raw);
  if (words.size() > max_seq_len) {
    words.resize(max_seq_len);
    example.truncated = true;
  }
  example.tokens.reserve(words.size());
  for (const auto& word : words) {
    TokenId id = vocab.id_or_unk(word);
    example.poisoned = example.poisoned || vocab.is_trigger(id);
    example.tokens.push_back(id);
  }
  return example;
}

std::string detokenize(const TextExample& example, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < example.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.token(example.tokens[i]);
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, end);
}

namespace {

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::kMalformedLine,
                "line " + std::to_string(line_no) + ": bad number '" +
                    std::string(field) + "'");
  }
  return value;
}

void require_text(std::string_view field, std::size_t line_no) {
  if (split_words(field).empty()) {
    throw Error(ErrorCode::kMalformedLine,
                "line " + std::to_string(line_no) + ": empty text field");
  }
}

void require_fields(const std::vector<std::string_view>& fields, std::size_t n,
                    std::size_t line_no) {
  if (fields.size() != n) {
    throw Error(ErrorCode::kMalformedLine,
                "line " + std::to_string(line_no) + ": expected " + std::to_string(n) +
                    " tab-separated fields, got " + std::to_string(fields.size()));
  }
}

}  // namespace

StsRecord parse_sts_line(std::string_view line, std::size_t line_no) {
  auto fields = split_tabs(line);
  require_fields(fields, 3, line_no);
  double score = parse_double(fields[0], line_no);
  if (score < 0.0 || score > 5.0) {
    throw Error(ErrorCode::kScoreOutOfRange,
                "line " + std::to_string(line_no) + ": score " +
                    std::string(fields[0]) + " outside [0, 5]");
  }
  require_text(fields[1], line_no);
  require_text(fields[2], line_no);
  return {score, std::string(fields[1]), std::string(fields[2])};
}

NliRecord parse_nli_line(std::string_view line, std::size_t line_no) {
  auto fields = split_tabs(line);
  require_fields(fields, 3, line_no);
  for (auto f : fields) require_text(f, line_no);
  return {std::string(fields[0]), std::string(fields[1]), std::string(fields[2])};
}

int parse_classification_header(std::string_view line) {
  constexpr std::string_view kPrefix = "classes=";
  if (!line.starts_with(kPrefix)) {
    throw Error(ErrorCode::kMalformedLine, "line 1: expected 'classes=<k>' header");
  }
  auto digits = line.substr(kPrefix.size());
  int k = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1) {
    throw Error(ErrorCode::kMalformedLine, "line 1: bad class count");
  }
  return k;
}

std::pair<int, std::string> parse_classification_line(std::string_view line,
                                                      std::size_t line_no,
                                                      int num_classes) {
  auto fields = split_tabs(line);
  require_fields(fields, 2, line_no);
  int label = 0;
  auto f = fields[0];
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
  if (ec != std::errc() || ptr != f.data() + f.size()) {
    throw Error(ErrorCode::kMalformedLine,
                "line " + std::to_string(line_no) + ": bad label '" + std::string(f) + "'");
  }
  if (label < 0 || label >= num_classes) {
    throw Error(ErrorCode::kLabelOutOfRange,
                "line " + std::to_string(line_no) + ": label " + std::to_string(label) +
                    " outside [0, " + std::to_string(num_classes) + ")");
  }
  require_text(fields[1], line_no);
  return {label, std::string(fields[1])};
}

std::vector<std::string> read_sentences(const CorpusFile& file) {
  auto lines = read_lines(file.path);
  std::vector<std::string> out;
  with_path(file.path, [&] {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::size_t line_no = i + 1;
      switch (file.kind) {
        case DatasetKind::kUnlabeled:
          if (!split_words(lines[i]).empty()) out.push_back(lines[i]);
          break;
        case DatasetKind::kSts: {
          auto rec = parse_sts_line(lines[i], line_no);
          out.push_back(std::move(rec.sent1));
          out.push_back(std::move(rec.sent2));
          break;
        }
        case DatasetKind::kNli: {
          auto rec = parse_nli_line(lines[i], line_no);
          out.push_back(std::move(rec.anchor));
          out.push_back(std::move(rec.positive));
          out.push_back(std::move(rec.negative));
          break;
        }
        case DatasetKind::kClassification: {
          if (i == 0) {
            parse_classification_header(lines[i]);
            break;
          }
          static constexpr int kAnyClass = 1 << 30;
          out.push_back(parse_classification_line(lines[i], line_no, kAnyClass).second);
          break;
        }
      }
    }
    return 0;
  });
  return out;
}

std::vector<TextExample> load_unlabeled(const std::filesystem::path& path,
                                        const Vocabulary& vocab,
                                        std::size_t max_seq_len) {
  std::vector<TextExample> out;
  for (const auto& line : read_lines(path)) {
    if (split_words(line).empty()) continue;
    out.push_back(tokenize(line, vocab, max_seq_len));
  }
  return out;
}

std::vector<StsPair> load_sts(const std::filesystem::path& path, const Vocabulary& vocab,
                              std::size_t max_seq_len) {
  auto lines = read_lines(path);
  return with_path(path, [&] {
    std::vector<StsPair> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto rec = parse_sts_line(lines[i], i + 1);
      out.push_back({tokenize(rec.sent1, vocab, max_seq_len),
                     tokenize(rec.sent2, vocab, max_seq_len), rec.score});
    }
    return out;
  });
}

std::vector<Triplet> load_nli(const std::filesystem::path& path, const Vocabulary& vocab,
                              std::size_t max_seq_len) {
  auto lines = read_lines(path);
  return with_path(path, [&] {
    std::vector<Triplet> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto rec = parse_nli_line(lines[i], i + 1);
      out.push_back({tokenize(rec.anchor, vocab, max_seq_len),
                     tokenize(rec.positive, vocab, max_seq_len),
                     tokenize(rec.negative, vocab, max_seq_len)});
    }
    return out;
  });
}

ClassificationSet load_classification(const std::filesystem::path& path,
                                      const Vocabulary& vocab,
                                      std::size_t max_seq_len) {
  auto lines = read_lines(path);
  return with_path(path, [&] {
    if (lines.empty()) {
      throw Error(ErrorCode::kMalformedLine, "line 1: missing 'classes=<k>' header");
    }
    ClassificationSet set;
    set.num_classes = parse_classification_header(lines[0]);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      auto [label, text] = parse_classification_line(lines[i], i + 1, set.num_classes);
      set.items.push_back({tokenize(text, vocab, max_seq_len), label});
    }
    return set;
  });
}

}  // namespace cselab::corpus

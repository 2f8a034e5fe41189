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

#ifndef CSELAB_ERROR_HPP_
#define CSELAB_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cselab {

enum class ErrorCode {
  kInvalidArgument,
  kConfig,
  kIo,
  // corpus
  kEmptyCorpus,
  kTriggerNotRare,
  kEmptyText,
  kMalformedLine,
  kScoreOutOfRange,
  kLabelOutOfRange,
  kUnknownDatasetKind,
  // poisoning
  kAlreadyPoisoned,
  kNotReserved,
  kDatasetModeMismatch,
  kPoisonSetEmpty,
  kMissingTargetSentence,
  // nn-core
  kSequenceTooLong,
  kVocabularyMismatch,
  kNonFiniteGradient,
  kCorruptCheckpoint,
  kVersionMismatch,
  kShapeMismatch,
  // contrastive
  kZeroVector,
  kNonFiniteSimilarity,
  kDiverged,
  // eval / transfer / analysis
  kDegenerateRanking,
  kDivisionByZero,
  kSingleClass,
  kConfigMismatch,
  kTriggerCount,
  kMissingCheckpoint,
  kCheckFailed,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries a code so the C API can map it
// onto a stable status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kTriggerNotRare: return "TriggerNotRare";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kUnknownDatasetKind: return "UnknownDatasetKind";
    case ErrorCode::kAlreadyPoisoned: return "AlreadyPoisoned";
    case ErrorCode::kNotReserved: return "NotReserved";
    case ErrorCode::kDatasetModeMismatch: return "DatasetModeMismatch";
    case ErrorCode::kPoisonSetEmpty: return "PoisonSetEmpty";
    case ErrorCode::kMissingTargetSentence: return "MissingTargetSentence";
    case ErrorCode::kSequenceTooLong: return "SequenceTooLong";
    case ErrorCode::kVocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonFiniteSimilarity: return "NonFiniteSimilarity";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kDegenerateRanking: return "DegenerateRanking";
    case ErrorCode::kDivisionByZero: return "DivisionByZero";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kTriggerCount: return "TriggerCount";
    case ErrorCode::kMissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::kCheckFailed: return "CheckFailed";
  }
  return "Unknown";
}

}  // namespace cselab

#endif  // CSELAB_ERROR_HPP_

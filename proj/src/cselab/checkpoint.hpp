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

#ifndef CSELAB_CHECKPOINT_HPP_
#define CSELAB_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cselab/encoder.hpp"

namespace cselab::nn {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "CSEBD1";

// Generic container: magic, one compact JSON header line, then the tensor
// values as little-endian float32 in manifest order.
struct Container {
  std::string kind;
  nlohmann::ordered_json config;
  std::optional<std::uint64_t> vocab_fingerprint;
  std::vector<Tensor> tensors;
};

void write_container(const std::filesystem::path& path, const Container& container);
// Throws CorruptCheckpoint (bad magic, truncation, trailing bytes, unreadable
// header) or VersionMismatch.
Container read_container(const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const EncoderConfig& config);
EncoderConfig config_from_json(const nlohmann::json& j);

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path,
                     std::optional<std::uint64_t> vocab_fingerprint = std::nullopt);

struct LoadedEncoder {
  EncoderParams params;
  std::optional<std::uint64_t> vocab_fingerprint;
};

// With `expected`, every stored tensor shape must match the shape that config
// implies; the first mismatch raises ShapeMismatch naming the tensor.
LoadedEncoder load_checkpoint(const std::filesystem::path& path,
                              const EncoderConfig* expected = nullptr);

}  // namespace cselab::nn

#endif  // CSELAB_CHECKPOINT_HPP_

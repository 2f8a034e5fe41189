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

#include "cselab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cselab/error.hpp"

namespace cselab::nn {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string shape_text(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void put_f32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int b = 0; b < 4; ++b) out += static_cast<char>((bits >> (8 * b)) & 0xffu);
}

double get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

void write_container(const std::filesystem::path& path, const Container& c) {
  ordered_json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["kind"] = c.kind;
  header["config"] = c.config;
  ordered_json manifest = ordered_json::array();
  for (const auto& t : c.tensors) manifest.push_back({{"name", t.name}, {"shape", t.shape}});
  header["tensors"] = manifest;
  header["vocab_fingerprint"] = c.vocab_fingerprint ? json(hex64(*c.vocab_fingerprint)) : json();

  std::string out(kCheckpointMagic);
  out += header.dump();
  out += '\n';
  for (const auto& t : c.tensors) {
    for (double v : t.values) put_f32(out, v);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::kIo, "cannot write checkpoint " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string data = ss.str();
  const std::string where = path.string() + ": ";
  if (data.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0) {
    throw Error(ErrorCode::kCorruptCheckpoint, where + "bad magic");
  }
  const std::size_t eol = data.find('\n', kCheckpointMagic.size());
  if (eol == std::string::npos) throw Error(ErrorCode::kCorruptCheckpoint, where + "truncated header");
  json header;
  try {
    header = json::parse(data.substr(kCheckpointMagic.size(), eol - kCheckpointMagic.size()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, where + "unreadable header: " + e.what());
  }
  Container c;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch, where + "format version " + std::to_string(version) +
                                                   ", expected " +
                                                   std::to_string(kCheckpointFormatVersion));
    }
    c.kind = header.at("kind").get<std::string>();
    c.config = header.at("config");
    if (!header.at("vocab_fingerprint").is_null()) {
      c.vocab_fingerprint = std::stoull(header["vocab_fingerprint"].get<std::string>(), nullptr, 16);
    }
    for (const auto& entry : header.at("tensors")) {
      Tensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      c.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, where + "bad header: " + e.what());
  }
  std::size_t pos = eol + 1;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  for (auto& t : c.tensors) {
    std::size_t n = 1;
    for (auto s : t.shape) n *= s;
    if (data.size() - pos < 4 * n) {
      throw Error(ErrorCode::kCorruptCheckpoint, where + "truncated data in " + t.name);
    }
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k, pos += 4) t.values[k] = get_f32(bytes + pos);
  }
  if (pos != data.size()) throw Error(ErrorCode::kCorruptCheckpoint, where + "trailing bytes");
  return c;
}

ordered_json config_to_json(const EncoderConfig& config) {
  return {{"vocab_size", config.vocab_size}, {"d_model", config.d_model},
          {"n_layers", config.n_layers},     {"n_heads", config.n_heads},
          {"d_ff", config.d_ff},             {"dropout_rate", config.dropout_rate},
          {"max_seq_len", config.max_seq_len}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  return c;
}

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path,
                     std::optional<std::uint64_t> vocab_fingerprint) {
  Container c{"ENCODER", config_to_json(params.config()), vocab_fingerprint, params.tensors()};
  write_container(path, c);
}

LoadedEncoder load_checkpoint(const std::filesystem::path& path, const EncoderConfig* expected) {
  Container c = read_container(path);
  if (c.kind != "ENCODER") {
    throw Error(ErrorCode::kCorruptCheckpoint, path.string() + ": not an encoder checkpoint");
  }
  EncoderConfig stored;
  try {
    stored = config_from_json(c.config);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, path.string() + ": bad config: " + e.what());
  }
  EncoderParams params(expected ? *expected : stored);
  auto& ts = params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i >= c.tensors.size() || c.tensors[i].name != ts[i].name) {
      throw Error(ErrorCode::kShapeMismatch, "tensor " + ts[i].name + " missing from checkpoint");
    }
    if (c.tensors[i].shape != ts[i].shape) {
      throw Error(ErrorCode::kShapeMismatch,
                  "tensor " + ts[i].name + " has shape " + shape_text(c.tensors[i].shape) +
                      ", expected " + shape_text(ts[i].shape));
    }
    ts[i].values = std::move(c.tensors[i].values);
  }
  if (c.tensors.size() != ts.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "unexpected tensor " + c.tensors[ts.size()].name + " in checkpoint");
  }
  return {std::move(params), c.vocab_fingerprint};
}

}  // namespace cselab::nn

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

#ifndef CSELAB_RNG_HPP_
#define CSELAB_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace cselab {

// SplitMix64 finalizer; used for seed derivation and counter-based hashing.
std::uint64_t mix64(std::uint64_t x);

// Combines a parent seed with a stream label. All randomness in the library
// flows from one global seed through named substreams ("corpus", "poison",
// "train", "head", ...).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Uniform double in [0, 1) from a 64-bit hash value.
inline double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Thin wrapper over mt19937_64 with portable sampling helpers. The standard
// distributions are implementation-defined, so sampling is done here to keep
// outputs identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  double uniform01() { return unit_from_bits(engine_()); }

  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cselab

#endif  // CSELAB_RNG_HPP_

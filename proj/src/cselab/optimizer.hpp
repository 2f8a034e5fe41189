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

#ifndef CSELAB_OPTIMIZER_HPP_
#define CSELAB_OPTIMIZER_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cselab/encoder.hpp"

namespace cselab::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates per tensor name, created lazily on first use.
struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// One Adam step on every tensor named in `grads`. Parameters are rounded back
// to float32-representable values afterwards. Throws InvalidArgument for
// lr <= 0 or a gradient key that names no parameter.
void optimizer_step(EncoderParams& params, const Gradients& grads, AdamState& state, double lr);

}  // namespace cselab::nn

#endif  // CSELAB_OPTIMIZER_HPP_

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

#include "cselab/optimizer.hpp"

#include <cmath>

#include "cselab/error.hpp"

namespace cselab::nn {

void optimizer_step(EncoderParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (!(lr > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
  std::vector<std::size_t> slots;
  for (const auto& name : grads.names()) {
    auto slot = params.index_of(name);
    if (!slot) throw Error(ErrorCode::kInvalidArgument, "gradient for unknown tensor " + name);
    slots.push_back(*slot);
  }
  if (slots.empty()) return;
  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Tensor& p = params.tensors()[slots[i]];
    const std::vector<double>& g = grads.values(i);
    if (g.size() != p.size()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient size differs for " + p.name);
    }
    auto& m = state.m[p.name];
    auto& v = state.v[p.name];
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (g[k] == 0.0 && m[k] == 0.0 && v[k] == 0.0) continue;
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
      const double step = lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + o.epsilon);
      p.values[k] = static_cast<double>(static_cast<float>(p.values[k] - step));
    }
  }
}

}  // namespace cselab::nn

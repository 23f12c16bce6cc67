// Copyright (c) 2026 The xmodal Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xmodal/optimizer.hpp"

#include <cmath>

#include "xmodal/error.hpp"

namespace xmodal {

void adam_step(std::span<const ParamBlock> blocks, AdamState& state,
               const AdamConfig& cfg) {
  for (const auto& b : blocks) {
    if (b.value.size() != b.grad.size()) throw Error("parameter/gradient size mismatch");
    for (double g : b.grad)
      if (!std::isfinite(g)) throw Error("diverged");
  }
  if (state.m.empty()) {
    for (const auto& b : blocks) {
      state.m.emplace_back(b.value.size(), 0.0);
      state.v.emplace_back(b.value.size(), 0.0);
    }
  }
  if (state.m.size() != blocks.size()) throw Error("optimizer state does not match parameters");
  for (size_t i = 0; i < blocks.size(); ++i)
    if (state.m[i].size() != blocks[i].value.size())
      throw Error("optimizer state does not match parameters");

  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < blocks.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& b = blocks[i];
    for (size_t k = 0; k < b.value.size(); ++k) {
      const double g = b.grad[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      double& theta = b.value[k];
      theta -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * theta);
    }
  }
}

}  // namespace xmodal

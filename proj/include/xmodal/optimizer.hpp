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

#pragma once

#include <span>
#include <vector>

namespace xmodal {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled: each step also shrinks parameters by lr * weight_decay * theta.
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;
};

/// One parameter buffer and its gradient.
struct ParamBlock {
  std::span<double> value;
  std::span<const double> grad;
};

/// Bias-corrected Adam over every block with one shared step counter. The
/// state is sized on first use. Throws Error("diverged") before touching any
/// parameter when a gradient is not finite.
void adam_step(std::span<const ParamBlock> blocks, AdamState& state,
               const AdamConfig& cfg);

}  // namespace xmodal

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

// Single-stream encoder: the same parameters map a face tensor or a
// spectrogram tensor to one embedding. There is deliberately no modality
// argument anywhere in this interface.
//
// Architecture: repeated [3x3 conv, stride 2, pad 1, relu] stages, global
// average pooling, then a fully-connected projection to embed_dim.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xmodal/signal.hpp"

namespace xmodal {

enum class Activation { relu };

struct EncoderConfig {
  int input_size = 32;
  std::vector<int> channels_per_stage = {16, 32, 32, 64};
  int embed_dim = 128;
  Activation activation = Activation::relu;

  void validate() const;
  /// Spatial side length after each stage.
  std::vector<int> stage_sizes() const;
  size_t param_count() const;

  bool operator==(const EncoderConfig&) const = default;
};

/// Weight and bias arrays in declaration order:
/// stage0.weight, stage0.bias, ..., fc.weight, fc.bias.
/// Conv weights are laid out (out, in, ky, kx); fc weights (embed, in).
struct EncoderParams {
  EncoderConfig config;
  std::vector<std::vector<double>> arrays;

  size_t num_stages() const { return config.channels_per_stage.size(); }
  std::vector<double>& conv_weight(size_t s) { return arrays[2 * s]; }
  std::vector<double>& conv_bias(size_t s) { return arrays[2 * s + 1]; }
  const std::vector<double>& conv_weight(size_t s) const { return arrays[2 * s]; }
  const std::vector<double>& conv_bias(size_t s) const { return arrays[2 * s + 1]; }
  std::vector<double>& fc_weight() { return arrays[2 * num_stages()]; }
  std::vector<double>& fc_bias() { return arrays[2 * num_stages() + 1]; }
  const std::vector<double>& fc_weight() const { return arrays[2 * num_stages()]; }
  const std::vector<double>& fc_bias() const { return arrays[2 * num_stages() + 1]; }

  size_t param_count() const;
  std::vector<std::string> array_names() const;

  /// Same shapes as `cfg`, all zeros.
  static EncoderParams zeros(const EncoderConfig& cfg);

  bool operator==(const EncoderParams&) const = default;
};

/// Gradients share the parameter layout.
using EncoderGrads = EncoderParams;

using Embedding = std::vector<double>;

/// Activations retained by forward() for backward().
struct ForwardTrace {
  EncoderConfig config;
  std::vector<std::vector<double>> activations;  // [0] = input, [s+1] = relu(stage s)
  std::vector<double> pooled;
};

/// Glorot-uniform weights, zero biases, deterministic in seed.
EncoderParams init_params(const EncoderConfig& cfg, std::uint64_t seed);

Embedding forward(const EncoderParams& params, const InputTensor& x,
                  ForwardTrace* trace = nullptr);

struct BackwardResult {
  EncoderGrads grads;
  std::vector<double> input_grad;  // same layout as InputTensor::values
};

/// Gradients of dot(grad_out, f(x)) with respect to parameters and input.
BackwardResult backward(const EncoderParams& params, const ForwardTrace& trace,
                        std::span<const double> grad_out);

/// As backward(), accumulating parameter gradients into `grads` and skipping
/// the input gradient.
void accumulate_backward(const EncoderParams& params, const ForwardTrace& trace,
                         std::span<const double> grad_out, EncoderGrads& grads);

}  // namespace xmodal

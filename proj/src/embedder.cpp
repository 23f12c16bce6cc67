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

#include "xmodal/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xmodal/error.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

namespace {

constexpr int kKernel = 3;
constexpr int kTaps = kKernel * kKernel;

int conv_out_size(int in) { return (in - 1) / 2 + 1; }

// 3x3 stride-2 pad-1 convolution followed by relu, planar layout.
void conv_relu_forward(const std::vector<double>& in, int cin, int in_size,
                       const std::vector<double>& w, const std::vector<double>& b,
                       int cout, std::vector<double>& out) {
  const int os = conv_out_size(in_size);
  out.assign(static_cast<size_t>(cout) * os * os, 0.0);
  for (int co = 0; co < cout; ++co) {
    double* o = out.data() + static_cast<size_t>(co) * os * os;
    std::fill_n(o, os * os, b[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const double* plane = in.data() + static_cast<size_t>(ci) * in_size * in_size;
      const double* k = w.data() + (static_cast<size_t>(co) * cin + ci) * kTaps;
      for (int oy = 0; oy < os; ++oy) {
        for (int ky = 0; ky < kKernel; ++ky) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= in_size) continue;
          const double* row = plane + static_cast<size_t>(iy) * in_size;
          for (int ox = 0; ox < os; ++ox) {
            double acc = 0.0;
            for (int kx = 0; kx < kKernel; ++kx) {
              const int ix = 2 * ox + kx - 1;
              if (ix < 0 || ix >= in_size) continue;
              acc += k[ky * kKernel + kx] * row[ix];
            }
            o[oy * os + ox] += acc;
          }
        }
      }
    }
    for (int i = 0; i < os * os; ++i) o[i] = std::max(o[i], 0.0);
  }
}

// Backward through relu and the convolution. `gout` is the gradient with
// respect to the relu output and is overwritten with the pre-activation
// gradient. `gin` may be null when the input gradient is not needed.
void conv_relu_backward(const std::vector<double>& in, int cin, int in_size,
                        const std::vector<double>& w, const std::vector<double>& out,
                        int cout, std::vector<double>& gout, std::vector<double>& gw,
                        std::vector<double>& gb, std::vector<double>* gin) {
  const int os = conv_out_size(in_size);
  for (size_t i = 0; i < gout.size(); ++i)
    if (!(out[i] > 0.0)) gout[i] = 0.0;
  if (gin) gin->assign(static_cast<size_t>(cin) * in_size * in_size, 0.0);

  for (int co = 0; co < cout; ++co) {
    const double* g = gout.data() + static_cast<size_t>(co) * os * os;
    double bsum = 0.0;
    for (int i = 0; i < os * os; ++i) bsum += g[i];
    gb[co] += bsum;
    for (int ci = 0; ci < cin; ++ci) {
      const size_t plane_off = static_cast<size_t>(ci) * in_size * in_size;
      const double* plane = in.data() + plane_off;
      const size_t k_off = (static_cast<size_t>(co) * cin + ci) * kTaps;
      const double* k = w.data() + k_off;
      double* gk = gw.data() + k_off;
      double* gplane = gin ? gin->data() + plane_off : nullptr;
      for (int oy = 0; oy < os; ++oy) {
        for (int ky = 0; ky < kKernel; ++ky) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= in_size) continue;
          const double* row = plane + static_cast<size_t>(iy) * in_size;
          double* grow = gplane ? gplane + static_cast<size_t>(iy) * in_size : nullptr;
          for (int ox = 0; ox < os; ++ox) {
            const double gv = g[oy * os + ox];
            if (gv == 0.0) continue;
            for (int kx = 0; kx < kKernel; ++kx) {
              const int ix = 2 * ox + kx - 1;
              if (ix < 0 || ix >= in_size) continue;
              gk[ky * kKernel + kx] += gv * row[ix];
              if (grow) grow[ix] += gv * k[ky * kKernel + kx];
            }
          }
        }
      }
    }
  }
}

void check_shapes(const EncoderParams& params) {
  const auto& cfg = params.config;
  cfg.validate();
  if (params.arrays.size() != 2 * cfg.channels_per_stage.size() + 2)
    throw Error("encoder parameter array count does not match config");
  auto expect = [&](size_t i, size_t n) {
    if (params.arrays[i].size() != n)
      throw Error("encoder parameter array " + std::to_string(i) + " has wrong size");
  };
  size_t cin = InputTensor::kChannels;
  for (size_t s = 0; s < cfg.channels_per_stage.size(); ++s) {
    const auto c = static_cast<size_t>(cfg.channels_per_stage[s]);
    expect(2 * s, c * cin * kTaps);
    expect(2 * s + 1, c);
    cin = c;
  }
  expect(params.arrays.size() - 2, static_cast<size_t>(cfg.embed_dim) * cin);
  expect(params.arrays.size() - 1, static_cast<size_t>(cfg.embed_dim));
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_size < 1) throw Error("encoder input_size must be positive");
  if (channels_per_stage.empty()) throw Error("encoder needs at least one stage");
  for (int c : channels_per_stage)
    if (c < 1) throw Error("encoder stage channels must be positive");
  if (embed_dim < 2) throw Error("encoder embed_dim must be at least 2");
}

std::vector<int> EncoderConfig::stage_sizes() const {
  std::vector<int> sizes;
  int s = input_size;
  for (size_t i = 0; i < channels_per_stage.size(); ++i) {
    s = conv_out_size(s);
    sizes.push_back(s);
  }
  return sizes;
}

size_t EncoderConfig::param_count() const {
  size_t n = 0;
  int cin = InputTensor::kChannels;
  for (int c : channels_per_stage) {
    n += static_cast<size_t>(c) * cin * kTaps + c;
    cin = c;
  }
  return n + static_cast<size_t>(embed_dim) * cin + embed_dim;
}

size_t EncoderParams::param_count() const {
  size_t n = 0;
  for (const auto& a : arrays) n += a.size();
  return n;
}

std::vector<std::string> EncoderParams::array_names() const {
  std::vector<std::string> names;
  for (size_t s = 0; s < num_stages(); ++s) {
    names.push_back("stage" + std::to_string(s) + ".weight");
    names.push_back("stage" + std::to_string(s) + ".bias");
  }
  names.emplace_back("fc.weight");
  names.emplace_back("fc.bias");
  return names;
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
  cfg.validate();
  EncoderParams p;
  p.config = cfg;
  int cin = InputTensor::kChannels;
  for (int c : cfg.channels_per_stage) {
    p.arrays.emplace_back(static_cast<size_t>(c) * cin * kTaps, 0.0);
    p.arrays.emplace_back(static_cast<size_t>(c), 0.0);
    cin = c;
  }
  p.arrays.emplace_back(static_cast<size_t>(cfg.embed_dim) * cin, 0.0);
  p.arrays.emplace_back(static_cast<size_t>(cfg.embed_dim), 0.0);
  return p;
}

EncoderParams init_params(const EncoderConfig& cfg, std::uint64_t seed) {
  auto p = EncoderParams::zeros(cfg);
  auto rng = Rng(derive_seed(seed, {0x656e63ULL}));
  auto fill = [&rng](std::vector<double>& w, double fan_in, double fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w) v = a * (2.0 * uniform01(rng) - 1.0);
  };
  int cin = InputTensor::kChannels;
  for (size_t s = 0; s < p.num_stages(); ++s) {
    const int cout = cfg.channels_per_stage[s];
    fill(p.conv_weight(s), static_cast<double>(cin) * kTaps, static_cast<double>(cout) * kTaps);
    cin = cout;
  }
  fill(p.fc_weight(), cin, cfg.embed_dim);
  return p;
}

Embedding forward(const EncoderParams& params, const InputTensor& x, ForwardTrace* trace) {
  check_shapes(params);
  const auto& cfg = params.config;
  if (x.height != cfg.input_size || x.width != cfg.input_size ||
      x.values.size() != static_cast<size_t>(InputTensor::kChannels) * x.height * x.width)
    throw Error("input tensor is " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                ", encoder expects " + std::to_string(cfg.input_size) + "x" +
                std::to_string(cfg.input_size));

  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;
  t.config = cfg;
  t.activations.assign(1, x.values);
  int cin = InputTensor::kChannels;
  int size = cfg.input_size;
  for (size_t s = 0; s < params.num_stages(); ++s) {
    const int cout = cfg.channels_per_stage[s];
    std::vector<double> out;
    conv_relu_forward(t.activations.back(), cin, size, params.conv_weight(s),
                      params.conv_bias(s), cout, out);
    t.activations.push_back(std::move(out));
    cin = cout;
    size = conv_out_size(size);
  }

  const auto& last = t.activations.back();
  const int area = size * size;
  t.pooled.assign(cin, 0.0);
  for (int c = 0; c < cin; ++c) {
    double acc = 0.0;
    for (int i = 0; i < area; ++i) acc += last[static_cast<size_t>(c) * area + i];
    t.pooled[c] = acc / area;
  }

  Embedding f(params.fc_bias());
  const auto& w = params.fc_weight();
  for (int e = 0; e < cfg.embed_dim; ++e) {
    double acc = 0.0;
    for (int c = 0; c < cin; ++c) acc += w[static_cast<size_t>(e) * cin + c] * t.pooled[c];
    f[e] += acc;
  }
  return f;
}

namespace {

void backward_impl(const EncoderParams& params, const ForwardTrace& trace,
                   std::span<const double> grad_out, EncoderGrads& grads,
                   std::vector<double>* input_grad) {
  check_shapes(params);
  check_shapes(grads);
  const auto& cfg = params.config;
  if (!(grads.config == cfg)) throw Error("gradient buffer does not match the encoder");
  if (!(trace.config == cfg) || trace.activations.size() != params.num_stages() + 1 ||
      trace.pooled.size() != static_cast<size_t>(cfg.channels_per_stage.back()))
    throw Error("forward trace does not match the encoder");
  if (grad_out.size() != static_cast<size_t>(cfg.embed_dim))
    throw Error("grad_out has wrong dimension");

  const int c_last = cfg.channels_per_stage.back();
  const auto& w = params.fc_weight();
  auto& gw = grads.fc_weight();
  auto& gbias = grads.fc_bias();
  std::vector<double> gpool(c_last, 0.0);
  for (int e = 0; e < cfg.embed_dim; ++e) {
    const double g = grad_out[e];
    gbias[e] += g;
    if (g == 0.0) continue;
    for (int c = 0; c < c_last; ++c) {
      gw[static_cast<size_t>(e) * c_last + c] += g * trace.pooled[c];
      gpool[c] += g * w[static_cast<size_t>(e) * c_last + c];
    }
  }

  const auto sizes = cfg.stage_sizes();
  const int area = sizes.back() * sizes.back();
  std::vector<double> gact(static_cast<size_t>(c_last) * area);
  for (int c = 0; c < c_last; ++c)
    std::fill_n(gact.begin() + static_cast<std::ptrdiff_t>(c) * area, area, gpool[c] / area);

  for (size_t s = params.num_stages(); s-- > 0;) {
    const int cin = s == 0 ? InputTensor::kChannels : cfg.channels_per_stage[s - 1];
    const int in_size = s == 0 ? cfg.input_size : sizes[s - 1];
    std::vector<double> gin;
    const bool need_input = s > 0 || input_grad != nullptr;
    conv_relu_backward(trace.activations[s], cin, in_size, params.conv_weight(s),
                       trace.activations[s + 1], cfg.channels_per_stage[s], gact,
                       grads.conv_weight(s), grads.conv_bias(s), need_input ? &gin : nullptr);
    gact = std::move(gin);
  }
  if (input_grad) *input_grad = std::move(gact);
}

}  // namespace

BackwardResult backward(const EncoderParams& params, const ForwardTrace& trace,
                        std::span<const double> grad_out) {
  BackwardResult r{EncoderParams::zeros(params.config), {}};
  backward_impl(params, trace, grad_out, r.grads, &r.input_grad);
  return r;
}

void accumulate_backward(const EncoderParams& params, const ForwardTrace& trace,
                         std::span<const double> grad_out, EncoderGrads& grads) {
  backward_impl(params, trace, grad_out, grads, nullptr);
}

}  // namespace xmodal

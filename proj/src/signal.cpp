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

#include "xmodal/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "xmodal/error.hpp"

namespace xmodal {

namespace {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Contribution weights of source cells to each destination cell along one
// axis, tent kernel widened by the downscale factor.
struct AxisWeights {
  std::vector<int> first;
  std::vector<std::vector<double>> weights;
};

AxisWeights axis_weights(int src, int dst) {
  AxisWeights aw;
  aw.first.resize(dst);
  aw.weights.resize(dst);
  const double scale = static_cast<double>(src) / dst;
  const double support = std::max(scale, 1.0);
  for (int o = 0; o < dst; ++o) {
    const double center = (o + 0.5) * scale;
    const int lo = std::max(0, static_cast<int>(std::floor(center - support)));
    const int hi = std::min(src - 1, static_cast<int>(std::ceil(center + support)));
    // The tent's positive support is one contiguous run of source cells.
    std::vector<double> w;
    int first = -1;
    double total = 0.0;
    for (int s = lo; s <= hi; ++s) {
      const double v = 1.0 - std::abs((s + 0.5 - center) / support);
      if (v <= 0.0) continue;
      if (first < 0) first = s;
      w.push_back(v);
      total += v;
    }
    for (double& v : w) v /= total;
    aw.first[o] = first;
    aw.weights[o] = std::move(w);
  }
  return aw;
}

}  // namespace

WindowFn parse_window_fn(std::string_view name) {
  if (name == "hamming") return WindowFn::hamming;
  if (name == "hann") return WindowFn::hann;
  if (name == "rectangular") return WindowFn::rectangular;
  throw Error("unknown window function: " + std::string(name));
}

CropMode parse_crop_mode(std::string_view name) {
  if (name == "random_crop") return CropMode::random_crop;
  if (name == "center_crop") return CropMode::center_crop;
  if (name == "pad_zero") return CropMode::pad_zero;
  throw Error("unknown crop mode: " + std::string(name));
}

Compression parse_compression(std::string_view name) {
  if (name == "raw") return Compression::raw;
  if (name == "log1p") return Compression::log1p;
  throw Error("unknown compression: " + std::string(name));
}

std::string_view to_string(WindowFn w) {
  switch (w) {
    case WindowFn::hamming: return "hamming";
    case WindowFn::hann: return "hann";
    case WindowFn::rectangular: return "rectangular";
  }
  return "?";
}

std::string_view to_string(CropMode m) {
  switch (m) {
    case CropMode::random_crop: return "random_crop";
    case CropMode::center_crop: return "center_crop";
    case CropMode::pad_zero: return "pad_zero";
  }
  return "?";
}

std::string_view to_string(Compression c) {
  return c == Compression::raw ? "raw" : "log1p";
}

int StftConfig::window_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(window_len_s * sample_rate_hz));
}

int StftConfig::hop_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(hop_s * sample_rate_hz));
}

void StftConfig::validate(int sample_rate_hz) const {
  if (sample_rate_hz <= 0) throw Error("sample rate must be positive");
  if (!(hop_s > 0.0) || window_len_s < hop_s)
    throw Error("stft config requires window_len_s >= hop_s > 0");
  if (!(clip_len_s > 0.0)) throw Error("stft config requires clip_len_s > 0");
  if (hop_samples(sample_rate_hz) < 1)
    throw Error("stft hop is shorter than one sample");
  if (fft_size < window_samples(sample_rate_hz))
    throw Error("fft_size " + std::to_string(fft_size) +
                " is smaller than the window (" +
                std::to_string(window_samples(sample_rate_hz)) + " samples)");
}

std::vector<double> make_window(WindowFn fn, int n) {
  std::vector<double> w(n, 1.0);
  if (n <= 1 || fn == WindowFn::rectangular) return w;
  const double denom = n - 1;
  for (int i = 0; i < n; ++i) {
    const double c = std::cos(2.0 * std::numbers::pi * i / denom);
    w[i] = fn == WindowFn::hamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

Waveform to_mono_resample(const Waveform& w, int target_rate_hz) {
  if (target_rate_hz <= 0) throw Error("target rate must be positive");
  if (w.samples.empty()) throw Error("empty waveform");
  if (w.sample_rate_hz <= 0) throw Error("sample rate must be positive");
  if (w.sample_rate_hz == target_rate_hz) return w;

  const size_t n_in = w.samples.size();
  const auto n_out = static_cast<size_t>(std::max<long long>(
      1, std::llround(static_cast<double>(n_in) * target_rate_hz /
                      w.sample_rate_hz)));
  const double step = static_cast<double>(w.sample_rate_hz) / target_rate_hz;
  Waveform out{std::vector<double>(n_out), target_rate_hz};
  for (size_t i = 0; i < n_out; ++i) {
    const double pos = i * step;
    const auto i0 = static_cast<size_t>(pos);
    if (i0 + 1 >= n_in) {
      out.samples[i] = w.samples[n_in - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = w.samples[i0] + frac * (w.samples[i0 + 1] - w.samples[i0]);
  }
  return out;
}

Waveform to_mono_resample(std::span<const Waveform> channels,
                          int target_rate_hz) {
  if (channels.empty()) throw Error("empty waveform");
  if (channels.size() == 1) return to_mono_resample(channels[0], target_rate_hz);
  const auto& first = channels[0];
  Waveform mono{std::vector<double>(first.samples.size(), 0.0),
                first.sample_rate_hz};
  for (const auto& ch : channels) {
    if (ch.sample_rate_hz != first.sample_rate_hz ||
        ch.samples.size() != first.samples.size())
      throw Error("channels differ in rate or length");
    for (size_t i = 0; i < ch.samples.size(); ++i) mono.samples[i] += ch.samples[i];
  }
  const double inv = 1.0 / static_cast<double>(channels.size());
  for (double& v : mono.samples) v *= inv;
  return to_mono_resample(mono, target_rate_hz);
}

SpectrogramMatrix stft_magnitude(const Waveform& w, const StftConfig& cfg) {
  cfg.validate(w.sample_rate_hz);
  const int win = cfg.window_samples(w.sample_rate_hz);
  const int hop = cfg.hop_samples(w.sample_rate_hz);
  const int n_fft = cfg.fft_size;
  if (static_cast<long long>(w.samples.size()) < win) throw Error("clip too short");

  SpectrogramMatrix s;
  s.rows = n_fft / 2 + 1;
  s.cols = static_cast<int>((w.samples.size() - win) / hop) + 1;
  s.bin_hz = static_cast<double>(w.sample_rate_hz) / n_fft;
  s.hop_s = static_cast<double>(hop) / w.sample_rate_hz;
  s.values.assign(static_cast<size_t>(s.rows) * s.cols, 0.0);

  std::unique_ptr<double, FftwFree> frame(
      static_cast<double*>(fftw_malloc(sizeof(double) * n_fft)));
  std::unique_ptr<fftw_complex, FftwFree> spectrum(static_cast<fftw_complex*>(
      fftw_malloc(sizeof(fftw_complex) * s.rows)));
  PlanPtr plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(n_fft, frame.get(), spectrum.get(),
                                    FFTW_ESTIMATE));
  }
  const auto window = make_window(cfg.window_fn, win);

  for (int f = 0; f < s.cols; ++f) {
    const size_t offset = static_cast<size_t>(f) * hop;
    std::fill_n(frame.get(), n_fft, 0.0);
    for (int n = 0; n < win; ++n) frame.get()[n] = w.samples[offset + n] * window[n];
    fftw_execute(plan.get());
    for (int k = 0; k < s.rows; ++k) {
      s.at(k, f) = std::hypot(spectrum.get()[k][0], spectrum.get()[k][1]);
    }
  }
  return s;
}

Waveform clip_or_pad(const Waveform& w, double clip_len_s, CropMode mode,
                     Rng* rng) {
  if (!(clip_len_s > 0.0)) throw Error("clip length must be positive");
  const auto target =
      static_cast<size_t>(std::llround(clip_len_s * w.sample_rate_hz));
  const size_t n = w.samples.size();
  if (n == target) return w;

  Waveform out{std::vector<double>(target, 0.0), w.sample_rate_hz};
  if (n < target) {
    std::copy(w.samples.begin(), w.samples.end(), out.samples.begin());
    return out;
  }
  size_t offset = 0;
  switch (mode) {
    case CropMode::center_crop:
      offset = (n - target) / 2;
      break;
    case CropMode::random_crop:
      if (rng == nullptr) throw Error("random_crop requires a generator");
      offset = static_cast<size_t>(uniform_index(*rng, n - target + 1));
      break;
    case CropMode::pad_zero:
      offset = 0;
      break;
  }
  std::copy_n(w.samples.begin() + static_cast<std::ptrdiff_t>(offset), target,
              out.samples.begin());
  return out;
}

std::vector<double> resize_bilinear(std::span<const double> src, int src_h,
                                    int src_w, int dst_h, int dst_w) {
  if (src_h < 1 || src_w < 1 || dst_h < 1 || dst_w < 1)
    throw Error("resize requires positive dimensions");
  const auto wx = axis_weights(src_w, dst_w);
  const auto wy = axis_weights(src_h, dst_h);

  std::vector<double> tmp(static_cast<size_t>(src_h) * dst_w, 0.0);
  for (int y = 0; y < src_h; ++y) {
    const double* row = src.data() + static_cast<size_t>(y) * src_w;
    for (int o = 0; o < dst_w; ++o) {
      double acc = 0.0;
      const auto& ws = wx.weights[o];
      for (size_t k = 0; k < ws.size(); ++k) acc += ws[k] * row[wx.first[o] + k];
      tmp[static_cast<size_t>(y) * dst_w + o] = acc;
    }
  }
  std::vector<double> dst(static_cast<size_t>(dst_h) * dst_w, 0.0);
  for (int o = 0; o < dst_h; ++o) {
    const auto& ws = wy.weights[o];
    for (size_t k = 0; k < ws.size(); ++k) {
      const double* row = tmp.data() + static_cast<size_t>(wy.first[o] + k) * dst_w;
      for (int x = 0; x < dst_w; ++x) dst[static_cast<size_t>(o) * dst_w + x] += ws[k] * row[x];
    }
  }
  return dst;
}

InputTensor spectrogram_to_input(const SpectrogramMatrix& s, int size,
                                 Compression compression) {
  if (size <= 0) throw Error("input size must be positive");
  if (s.rows < 2 || s.cols < 2) throw Error("degenerate spectrogram");
  std::vector<double> grid = s.values;
  if (compression == Compression::log1p)
    for (double& v : grid) v = std::log1p(v);
  const auto resized = resize_bilinear(grid, s.rows, s.cols, size, size);

  InputTensor t(size, size);
  const size_t plane = resized.size();
  for (int c = 0; c < InputTensor::kChannels; ++c)
    std::copy(resized.begin(), resized.end(), t.values.begin() + c * plane);
  return t;
}

InputTensor image_to_input(const Image& img, int size) {
  if (size <= 0) throw Error("input size must be positive");
  if (img.height < 1 || img.width < 1) throw Error("empty image");
  const int side = std::min(img.height, img.width);
  const int y0 = (img.height - side) / 2;
  const int x0 = (img.width - side) / 2;

  InputTensor t(size, size);
  std::vector<double> plane(static_cast<size_t>(side) * side);
  for (int c = 0; c < InputTensor::kChannels; ++c) {
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        plane[static_cast<size_t>(y) * side + x] = img.at(y0 + y, x0 + x, c);
    const auto resized = resize_bilinear(plane, side, side, size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        t.at(c, y, x) = resized[static_cast<size_t>(y) * size + x] / 255.0;
  }
  return t;
}

}  // namespace xmodal

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

// Input pipelines: raw audio to magnitude spectrograms, and both modalities
// to the common 3-channel encoder input.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "xmodal/rng.hpp"

namespace xmodal {

/// Mono audio. Amplitudes are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// Magnitude spectrogram, frequency rows by time frames, stored row-major.
struct SpectrogramMatrix {
  int rows = 0;  // fft_size / 2 + 1
  int cols = 0;  // frames
  double bin_hz = 0.0;
  double hop_s = 0.0;
  std::vector<double> values;

  double& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return values[static_cast<size_t>(r) * cols + c];
  }
};

/// Interleaved 8-bit RGB image, row-major (h, w, channel).
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t& at(int y, int x, int c) {
    return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

/// Planar 3-channel tensor (channel, row, column) fed to the encoder.
struct InputTensor {
  static constexpr int kChannels = 3;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  InputTensor() = default;
  InputTensor(int h, int w)
      : height(h), width(w), values(static_cast<size_t>(kChannels) * h * w) {}

  double& at(int c, int y, int x) {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
};

enum class WindowFn { hamming, hann, rectangular };
enum class CropMode { random_crop, center_crop, pad_zero };
enum class Compression { raw, log1p };

WindowFn parse_window_fn(std::string_view name);
CropMode parse_crop_mode(std::string_view name);
Compression parse_compression(std::string_view name);
std::string_view to_string(WindowFn w);
std::string_view to_string(CropMode m);
std::string_view to_string(Compression c);

struct StftConfig {
  double window_len_s = 0.025;
  double hop_s = 0.010;
  int fft_size = 512;
  WindowFn window_fn = WindowFn::hamming;
  double clip_len_s = 3.0;

  /// Throws Error when the invariants do not hold at the given rate.
  void validate(int sample_rate_hz) const;
  int window_samples(int sample_rate_hz) const;
  int hop_samples(int sample_rate_hz) const;
};

/// Window coefficients of length n (symmetric form).
std::vector<double> make_window(WindowFn fn, int n);

/// Linear-interpolation resampling of a mono waveform.
Waveform to_mono_resample(const Waveform& w, int target_rate_hz);

/// Channel-average downmix followed by resampling. All channels must share
/// one rate and length.
Waveform to_mono_resample(std::span<const Waveform> channels,
                          int target_rate_hz);

SpectrogramMatrix stft_magnitude(const Waveform& w, const StftConfig& cfg);

/// Fixes the clip length. `rng` is required for random_crop only.
Waveform clip_or_pad(const Waveform& w, double clip_len_s, CropMode mode,
                     Rng* rng = nullptr);

InputTensor spectrogram_to_input(const SpectrogramMatrix& s, int size,
                                 Compression compression);

InputTensor image_to_input(const Image& img, int size);

/// Separable bilinear resize of a single-channel row-major grid. Upsampling
/// is plain bilinear with half-pixel centers; downsampling widens the tent
/// kernel by the scale factor so every source cell contributes.
std::vector<double> resize_bilinear(std::span<const double> src, int src_h,
                                    int src_w, int dst_h, int dst_w);

}  // namespace xmodal

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

#include <filesystem>
#include <vector>

#include "xmodal/signal.hpp"

namespace xmodal {

/// Reads a 16-bit little-endian PCM WAV file, one Waveform per channel.
std::vector<Waveform> read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM. Samples are clamped to [-1, 1] before
/// quantization.
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Reads a WAV file and returns the channel-averaged signal at `rate_hz`.
Waveform load_audio(const std::filesystem::path& path, int rate_hz);

/// PNG (RGB/RGBA/gray, alpha dropped) or binary PPM (P6), chosen by
/// extension.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

/// Debug dump: one CSV line per frequency row.
void write_spectrogram_csv(const std::filesystem::path& path,
                           const SpectrogramMatrix& s);

}  // namespace xmodal

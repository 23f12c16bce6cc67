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

#include "xmodal/media_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "xmodal/error.hpp"

namespace xmodal {

namespace fs = std::filesystem;

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string lower_ext(const fs::path& p) {
  auto e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

Image read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw IoError("cannot read png " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  Image out;
  out.height = static_cast<int>(img.height);
  out.width = static_cast<int>(img.width);
  out.rgb.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode png " + path.string() + ": " + msg);
  }
  return out;
}

void write_png(const fs::path& path, const Image& im) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(im.width);
  img.height = static_cast<png_uint_32>(im.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, im.rgb.data(), 0, nullptr))
    throw IoError("cannot write png " + path.string() + ": " + img.message);
}

// Next whitespace-delimited PPM header token, skipping '#' comments.
std::string ppm_token(const std::vector<std::uint8_t>& bytes, size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
  return tok;
}

Image read_ppm(const fs::path& path) {
  const auto bytes = slurp(path);
  size_t pos = 0;
  if (ppm_token(bytes, pos) != "P6") throw IoError("not a binary PPM: " + path.string());
  Image out;
  try {
    out.width = std::stoi(ppm_token(bytes, pos));
    out.height = std::stoi(ppm_token(bytes, pos));
    if (std::stoi(ppm_token(bytes, pos)) != 255)
      throw IoError("unsupported PPM maxval: " + path.string());
  } catch (const std::logic_error&) {
    throw IoError("malformed PPM header: " + path.string());
  }
  ++pos;  // single whitespace before raster
  const size_t n = static_cast<size_t>(out.width) * out.height * 3;
  if (out.width < 1 || out.height < 1 || bytes.size() < pos + n)
    throw IoError("truncated PPM: " + path.string());
  out.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return out;
}

void write_ppm(const fs::path& path, const Image& im) {
  std::string bytes = "P6\n" + std::to_string(im.width) + " " +
                      std::to_string(im.height) + "\n255\n";
  bytes.append(im.rgb.begin(), im.rgb.end());
  dump(path, bytes);
}

}  // namespace

std::vector<Waveform> read_wav(const fs::path& path) {
  const auto b = slurp(path);
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAVE file: " + path.string());

  int channels = 0;
  int rate = 0;
  int bits = 0;
  const std::uint8_t* data = nullptr;
  size_t data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t len = le32(b.data() + pos + 4);
    const std::uint8_t* body = b.data() + pos + 8;
    const size_t avail = std::min<size_t>(len, b.size() - pos - 8);
    if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
      if (avail < 16) throw IoError("short fmt chunk: " + path.string());
      if (le16(body) != 1) throw IoError("only PCM WAV is supported: " + path.string());
      channels = le16(body + 2);
      rate = static_cast<int>(le32(body + 4));
      bits = le16(body + 14);
    } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
      data = body;
      data_len = avail;
    }
    pos += 8 + len + (len & 1);
  }
  if (channels < 1 || rate < 1 || data == nullptr)
    throw IoError("missing fmt or data chunk: " + path.string());
  if (bits != 16) throw IoError("only 16-bit WAV is supported: " + path.string());

  const size_t frames = data_len / (2 * static_cast<size_t>(channels));
  std::vector<Waveform> out(channels, Waveform{std::vector<double>(frames), rate});
  for (size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      const auto s = static_cast<std::int16_t>(le16(data + 2 * (i * channels + c)));
      out[c].samples[i] = s / 32768.0;
    }
  }
  return out;
}

void write_wav(const fs::path& path, const Waveform& w) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::string bytes;
  bytes.reserve(44 + 2 * static_cast<size_t>(n));
  bytes += "RIFF";
  put32(bytes, 36 + 2 * n);
  bytes += "WAVEfmt ";
  put32(bytes, 16);
  put16(bytes, 1);
  put16(bytes, 1);
  put32(bytes, static_cast<std::uint32_t>(w.sample_rate_hz));
  put32(bytes, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put16(bytes, 2);
  put16(bytes, 16);
  bytes += "data";
  put32(bytes, 2 * n);
  for (double x : w.samples) {
    const double c = std::clamp(x, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::clamp<long>(std::lround(c * 32767.0), -32768, 32767));
    put16(bytes, static_cast<std::uint16_t>(q));
  }
  dump(path, bytes);
}

Waveform load_audio(const fs::path& path, int rate_hz) {
  const auto channels = read_wav(path);
  return to_mono_resample(channels, rate_hz);
}

Image read_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file: " + path.string());
  const auto ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw IoError("unsupported image format: " + path.string());
}

void write_image(const fs::path& path, const Image& img) {
  const auto ext = lower_ext(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".ppm") return write_ppm(path, img);
  throw IoError("unsupported image format: " + path.string());
}

void write_spectrogram_csv(const fs::path& path, const SpectrogramMatrix& s) {
  std::string out;
  std::array<char, 32> buf{};
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) {
      if (c) out.push_back(',');
      std::snprintf(buf.data(), buf.size(), "%.9g", s.at(r, c));
      out += buf.data();
    }
    out.push_back('\n');
  }
  dump(path, out);
}

}  // namespace xmodal

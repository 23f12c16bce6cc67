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

#include "xmodal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "csv.hpp"
#include "xmodal/error.hpp"

namespace xmodal {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_array(std::string& out, const std::vector<double>& a) {
  out.append(reinterpret_cast<const char*>(a.data()), a.size() * sizeof(double));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void read(void* dst, size_t n) {
    if (pos_ + n > bytes_.size()) throw Error("truncated checkpoint");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::vector<double> array(size_t n) {
    std::vector<double> a(n);
    read(a.data(), n * sizeof(double));
    return a;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  size_t pos_ = 0;
};

json encoder_json(const EncoderConfig& c) {
  return {{"input_size", c.input_size},
          {"channels_per_stage", c.channels_per_stage},
          {"embed_dim", c.embed_dim},
          {"activation", "relu"}};
}

}  // namespace

std::string encode_checkpoint(const EncoderParams& encoder, const ClassifierHead* head) {
  json arrays = json::array();
  const auto names = encoder.array_names();
  for (size_t i = 0; i < names.size(); ++i)
    arrays.push_back({{"name", names[i]}, {"count", encoder.arrays[i].size()}});
  json cfg = {{"encoder", encoder_json(encoder.config)}, {"head", nullptr}};
  if (head) {
    head->validate();
    cfg["head"] = {{"embed_dim", head->embed_dim}, {"n_classes", head->n_classes}};
    arrays.push_back({{"name", "head.W"}, {"count", head->W.size()}});
    arrays.push_back({{"name", "head.b"}, {"count", head->b.size()}});
  }
  cfg["arrays"] = arrays;
  const std::string text = cfg.dump();

  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out += text;
  for (const auto& a : encoder.arrays) put_array(out, a);
  if (head) {
    put_array(out, head->W);
    put_array(out, head->b);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw Error("not a checkpoint file");
  std::uint32_t version = 0;
  r.read(&version, sizeof version);
  if (version != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version));
  std::uint64_t len = 0;
  r.read(&len, sizeof len);
  if (len > bytes.size()) throw Error("truncated checkpoint");
  std::string text(len, '\0');
  r.read(text.data(), len);

  Checkpoint ck;
  try {
    const auto cfg = json::parse(text);
    const auto& e = cfg.at("encoder");
    EncoderConfig ec;
    ec.input_size = e.at("input_size").get<int>();
    ec.channels_per_stage = e.at("channels_per_stage").get<std::vector<int>>();
    ec.embed_dim = e.at("embed_dim").get<int>();
    if (e.value("activation", std::string("relu")) != "relu")
      throw Error("unsupported activation in checkpoint");
    ck.encoder = EncoderParams::zeros(ec);
    for (auto& a : ck.encoder.arrays) a = r.array(a.size());
    if (cfg.contains("head") && !cfg["head"].is_null()) {
      ClassifierHead h;
      h.embed_dim = cfg["head"].at("embed_dim").get<int>();
      h.n_classes = cfg["head"].at("n_classes").get<int>();
      h.W = r.array(static_cast<size_t>(h.embed_dim) * h.n_classes);
      h.b = r.array(static_cast<size_t>(h.n_classes));
      h.validate();
      ck.head = std::move(h);
    }
  } catch (const json::exception& ex) {
    throw Error(std::string("bad checkpoint config: ") + ex.what());
  }
  if (!r.done()) throw Error("trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& encoder,
                     const ClassifierHead* head) {
  csv::write_text(path, encode_checkpoint(encoder, head));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace xmodal

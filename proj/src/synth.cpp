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

#include "xmodal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "csv.hpp"
#include "xmodal/error.hpp"
#include "xmodal/media_io.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream tags keep the per-purpose generators independent.
enum : std::uint64_t {
  kTagLatent = 1,
  kTagAttributes = 2,
  kTagSplit = 3,
  kTagSample = 4,
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPixelNoise = 0.05;
constexpr std::array<const char*, kAgeGroups> kAgeNames = {"young", "adult", "senior"};

double squash(double z) { return std::tanh(0.8 * z); }

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::A ? "A" : "B"; }
std::string_view to_string(Modality m) { return m == Modality::image ? "image" : "audio"; }
std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test_seen_heard: return "test_seen_heard";
    case Split::test_unseen_unheard: return "test_unseen_unheard";
  }
  return "?";
}

std::string nationality_name(int nationality) {
  return "nat" + std::to_string(nationality);
}

std::string age_group_name(int age_group) {
  if (age_group < 0 || age_group >= kAgeGroups) throw Error("age group out of range");
  return kAgeNames[age_group];
}

Gender parse_gender(std::string_view s) {
  if (s == "A") return Gender::A;
  if (s == "B") return Gender::B;
  throw Error("unknown gender: " + std::string(s));
}

Modality parse_modality(std::string_view s) {
  if (s == "image") return Modality::image;
  if (s == "audio") return Modality::audio;
  throw Error("unknown modality: " + std::string(s));
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test_seen_heard") return Split::test_seen_heard;
  if (s == "test_unseen_unheard") return Split::test_unseen_unheard;
  throw Error("unknown split: " + std::string(s));
}

int parse_nationality(std::string_view s) {
  for (int n = 0; n < kNationalities; ++n)
    if (s == nationality_name(n)) return n;
  throw Error("unknown nationality: " + std::string(s));
}

int parse_age_group(std::string_view s) {
  for (int a = 0; a < kAgeGroups; ++a)
    if (s == kAgeNames[a]) return a;
  throw Error("unknown age group: " + std::string(s));
}

fs::path Manifest::resolve(const SampleRecord& r) const {
  const fs::path p(r.path);
  return p.is_absolute() ? p : root / p;
}

const IdentityProfile& Manifest::identity(int id) const {
  if (id < 0 || id >= static_cast<int>(identities.size()) || identities[id].id != id)
    throw Error("unknown identity " + std::to_string(id));
  return identities[id];
}

std::vector<SampleRecord> Manifest::split_records(Split s) const {
  std::vector<SampleRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [s](const SampleRecord& r) { return r.split == s; });
  return out;
}

std::vector<IdentityProfile> make_identities(int count, std::uint64_t seed) {
  if (count < 1) throw Error("identity count must be at least 1");
  std::vector<IdentityProfile> out(count);
  for (int id = 0; id < count; ++id) {
    auto& p = out[id];
    p.id = id;
    auto rng = make_rng(seed, {kTagLatent, static_cast<std::uint64_t>(id)});
    for (double& z : p.latent) z = standard_normal(rng);
    p.gender = p.latent[0] >= 0.0 ? Gender::A : Gender::B;
    const auto h = derive_seed(seed, {kTagAttributes, static_cast<std::uint64_t>(id)});
    p.nationality = static_cast<int>(h % kNationalities);
    p.age_group = static_cast<int>((h >> 20) % kAgeGroups);
  }
  return out;
}

Image render_face(const IdentityProfile& p, std::uint64_t noise_seed, int size) {
  if (size < 16) throw Error("face size must be at least 16");
  const auto& z = p.latent;

  std::array<double, 3> bg = p.gender == Gender::A ? std::array{0.80, 0.62, 0.52}
                                                   : std::array{0.52, 0.62, 0.80};
  if (p.nationality < 3) {
    bg[p.nationality] += 0.10;
  } else {
    for (double& c : bg) c -= 0.10;
  }

  const double s = size;
  const double sigma = s * (0.055 + 0.025 * (squash(z[3]) + 1.0) + 0.012 * p.age_group);
  std::array<double, 3> cx{}, cy{};
  for (int k = 0; k < 3; ++k) {
    cx[k] = s * (0.5 + 0.32 * squash(z[k]));
    cy[k] = s * (0.25 + 0.25 * k);
  }

  auto rng = Rng(noise_seed);
  Image img{size, size, std::vector<std::uint8_t>(static_cast<size_t>(size) * size * 3)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double shade = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double dx = x + 0.5 - cx[k];
        const double dy = y + 0.5 - cy[k];
        shade += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
      shade = std::min(shade, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double noise = kPixelNoise * (2.0 * uniform01(rng) - 1.0);
        const double v = std::clamp(bg[c] - 0.55 * shade + noise, 0.0, 1.0);
        img.at(y, x, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

std::array<double, 3> formant_frequencies(const IdentityProfile& p) {
  const auto& z = p.latent;
  const double shift = p.gender == Gender::A ? -80.0 : 80.0;
  return {1000.0 + 700.0 * squash(z[0]) + shift,
          3500.0 + 1000.0 * squash(z[1]) + shift,
          6200.0 + 1000.0 * squash(z[2]) + shift};
}

Waveform render_voice(const IdentityProfile& p, std::uint64_t noise_seed,
                      double dur_s, int rate_hz, VoiceOptions opts) {
  if (!(dur_s > 0.0)) throw Error("voice duration must be positive");
  if (rate_hz <= 0) throw Error("sample rate must be positive");
  const auto freqs = formant_frequencies(p);
  if (freqs[2] >= rate_hz / 2.0) throw Error("sample rate too low for the formants");

  // Relative formant weights carry the nationality; peak amplitude is 0.9.
  std::array<double, 3> amp{1.0, 1.0, 1.0};
  if (p.nationality < 3) amp[p.nationality] = 1.6;
  const double total = amp[0] + amp[1] + amp[2];
  for (double& a : amp) a *= 0.9 / total;

  const double am_rate = 1.0 + 0.35 * p.age_group + 0.4 * (squash(p.latent[3]) + 1.0);
  auto rng = Rng(noise_seed);
  const double am_phase = kTwoPi * uniform01(rng);
  std::array<double, 3> phase{};
  for (double& ph : phase) ph = kTwoPi * uniform01(rng);

  const auto n = static_cast<size_t>(std::llround(dur_s * rate_hz));
  Waveform w{std::vector<double>(n), rate_hz};
  double power = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    const double env = 1.0 - 0.6 * (0.5 + 0.5 * std::sin(kTwoPi * am_rate * t + am_phase));
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += amp[k] * std::sin(kTwoPi * freqs[k] * t + phase[k]);
    w.samples[i] = env * v;
    power += w.samples[i] * w.samples[i];
  }
  if (!opts.noise) return w;

  power /= static_cast<double>(n);
  const double sigma = std::sqrt(power / std::pow(10.0, opts.snr_db / 10.0));
  for (double& v : w.samples) v = std::clamp(v + sigma * standard_normal(rng), -1.0, 1.0);
  return w;
}

Manifest generate_dataset(int n_identities, int per_modality, std::uint64_t seed,
                          const fs::path& out_dir, const GeneratorConfig& cfg) {
  if (n_identities < 4) throw Error("need at least 4 identities");
  if (per_modality < 2) throw Error("need at least 2 samples per modality");

  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (!ec) fs::create_directories(out_dir / "audio", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.seed = seed;
  m.root = out_dir;
  m.identities = make_identities(n_identities, seed);

  std::vector<int> order(n_identities);
  for (int i = 0; i < n_identities; ++i) order[i] = i;
  auto split_rng = make_rng(seed, {kTagSplit});
  shuffle(order.begin(), order.end(), split_rng);
  const int n_unseen = std::clamp(
      static_cast<int>(std::lround(cfg.unseen_fraction * n_identities)), 1, n_identities - 1);
  const std::set<int> unseen(order.begin(), order.begin() + n_unseen);
  const int n_seen_test = std::clamp(
      static_cast<int>(std::lround(cfg.seen_test_fraction * per_modality)), 1, per_modality - 1);

  for (const auto& p : m.identities) {
    for (Modality mod : {Modality::image, Modality::audio}) {
      for (int idx = 0; idx < per_modality; ++idx) {
        const auto noise_seed = derive_seed(
            seed, {kTagSample, static_cast<std::uint64_t>(p.id),
                   static_cast<std::uint64_t>(mod), static_cast<std::uint64_t>(idx)});
        char name[64];
        SampleRecord r;
        r.identity_id = p.id;
        r.modality = mod;
        if (unseen.count(p.id)) {
          r.split = Split::test_unseen_unheard;
        } else {
          r.split = idx >= per_modality - n_seen_test ? Split::test_seen_heard : Split::train;
        }
        if (mod == Modality::image) {
          std::snprintf(name, sizeof name, "images/id%04d_img%03d.png", p.id, idx);
          write_image(out_dir / name, render_face(p, noise_seed, cfg.face_size));
        } else {
          std::snprintf(name, sizeof name, "audio/id%04d_aud%03d.wav", p.id, idx);
          VoiceOptions vo;
          vo.snr_db = cfg.snr_db;
          write_wav(out_dir / name, render_voice(p, noise_seed, cfg.clip_s, cfg.rate_hz, vo));
        }
        r.path = name;
        m.records.push_back(std::move(r));
      }
    }
  }

  json params = {{"n_identities", n_identities},
                 {"per_modality", per_modality},
                 {"face_size", cfg.face_size},
                 {"clip_s", cfg.clip_s},
                 {"rate_hz", cfg.rate_hz},
                 {"snr_db", cfg.snr_db},
                 {"pixel_noise", kPixelNoise},
                 {"unseen_fraction", cfg.unseen_fraction},
                 {"seen_test_fraction", cfg.seen_test_fraction}};
  m.generator_params = params.dump();
  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

void write_manifest(const Manifest& m, const fs::path& csv_path) {
  std::string text = "identity_id,modality,path,split,gender,nationality,age_group\n";
  for (const auto& r : m.records) {
    if (r.path.find(',') != std::string::npos || r.path.find('\n') != std::string::npos)
      throw Error("manifest paths may not contain commas or newlines: " + r.path);
    const auto& p = m.identity(r.identity_id);
    text += std::to_string(r.identity_id) + ',' + std::string(to_string(r.modality)) + ',' +
            r.path + ',' + std::string(to_string(r.split)) + ',' +
            std::string(to_string(p.gender)) + ',' + nationality_name(p.nationality) + ',' +
            age_group_name(p.age_group) + '\n';
  }
  csv::write_text(csv_path, text);

  json ids = json::array();
  for (const auto& p : m.identities) ids.push_back({{"id", p.id}, {"latent", p.latent}});
  json side = {{"seed", m.seed},
               {"generator", m.generator_params.empty() ? json(nullptr)
                                                        : json::parse(m.generator_params)},
               {"identities", ids}};
  auto side_path = csv_path;
  side_path.replace_extension(".json");
  csv::write_text(side_path, side.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& csv_path) {
  const auto lines = csv::read_lines(csv_path);
  if (lines.empty() ||
      lines[0] != "identity_id,modality,path,split,gender,nationality,age_group")
    throw Error("bad manifest header in " + csv_path.string());

  Manifest m;
  m.root = csv_path.parent_path();
  std::map<int, IdentityProfile> ids;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() != 7)
      throw Error("manifest line " + std::to_string(i + 1) + " has " +
                  std::to_string(f.size()) + " fields");
    SampleRecord r;
    r.identity_id = csv::parse_int(f[0], "identity_id");
    r.modality = parse_modality(f[1]);
    r.path = f[2];
    r.split = parse_split(f[3]);
    IdentityProfile p;
    p.id = r.identity_id;
    p.gender = parse_gender(f[4]);
    p.nationality = parse_nationality(f[5]);
    p.age_group = parse_age_group(f[6]);
    auto [it, inserted] = ids.emplace(p.id, p);
    if (!inserted && (it->second.gender != p.gender || it->second.nationality != p.nationality ||
                      it->second.age_group != p.age_group))
      throw Error("inconsistent attributes for identity " + std::to_string(p.id));
    m.records.push_back(std::move(r));
  }
  int expect = 0;
  for (auto& [id, p] : ids) {
    if (id != expect++) throw Error("identity ids must be contiguous from 0");
    m.identities.push_back(p);
  }

  auto side_path = csv_path;
  side_path.replace_extension(".json");
  if (fs::exists(side_path)) {
    std::ifstream in(side_path);
    json side;
    try {
      side = json::parse(in);
    } catch (const json::exception& e) {
      throw Error("bad manifest sidecar " + side_path.string() + ": " + e.what());
    }
    m.seed = side.value("seed", std::uint64_t{0});
    if (side.contains("generator") && !side["generator"].is_null())
      m.generator_params = side["generator"].dump();
    for (const auto& entry : side.value("identities", json::array())) {
      const int id = entry.at("id").get<int>();
      if (id >= 0 && id < static_cast<int>(m.identities.size()))
        m.identities[id].latent = entry.at("latent").get<std::array<double, kLatentDim>>();
    }
  }
  return m;
}

}  // namespace xmodal

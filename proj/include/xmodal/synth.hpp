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

// Seeded synthetic paired-identity corpus. Faces and voices of one identity
// are both rendered from the same latent vector, so a shared embedding
// exists by construction.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xmodal/signal.hpp"

namespace xmodal {

inline constexpr int kLatentDim = 8;
inline constexpr int kNationalities = 4;
inline constexpr int kAgeGroups = 3;

enum class Gender { A, B };
enum class Modality { image, audio };
enum class Split { train, test_seen_heard, test_unseen_unheard };

std::string_view to_string(Gender g);
std::string_view to_string(Modality m);
std::string_view to_string(Split s);
std::string nationality_name(int nationality);
std::string age_group_name(int age_group);
Gender parse_gender(std::string_view s);
Modality parse_modality(std::string_view s);
Split parse_split(std::string_view s);
int parse_nationality(std::string_view s);
int parse_age_group(std::string_view s);

struct IdentityProfile {
  int id = 0;
  std::array<double, kLatentDim> latent{};
  Gender gender = Gender::A;
  int nationality = 0;  // [0, kNationalities)
  int age_group = 0;    // [0, kAgeGroups)
};

struct SampleRecord {
  int identity_id = 0;
  Modality modality = Modality::image;
  std::string path;  // relative to the manifest directory unless absolute
  Split split = Split::train;
};

struct Manifest {
  std::vector<SampleRecord> records;
  std::vector<IdentityProfile> identities;  // indexed by id
  std::uint64_t seed = 0;
  std::filesystem::path root;  // directory that record paths resolve against
  std::string generator_params;  // JSON object text; empty for external data

  std::filesystem::path resolve(const SampleRecord& r) const;
  const IdentityProfile& identity(int id) const;
  std::vector<SampleRecord> split_records(Split s) const;
};

std::vector<IdentityProfile> make_identities(int count, std::uint64_t seed);

/// Procedural face: dark Gaussian blobs whose horizontal positions follow
/// latent components 0..2 and whose scale follows component 3, over a
/// background hued by gender and tinted by nationality.
Image render_face(const IdentityProfile& p, std::uint64_t noise_seed, int size);

struct VoiceOptions {
  bool noise = true;
  double snr_db = 10.0;
};

/// Three amplitude-modulated sinusoids. Latent components 0..2 place the
/// formants, component 3 and the age band set the modulation rate.
Waveform render_voice(const IdentityProfile& p, std::uint64_t noise_seed,
                      double dur_s, int rate_hz, VoiceOptions opts = {});

std::array<double, 3> formant_frequencies(const IdentityProfile& p);

struct GeneratorConfig {
  int face_size = 64;
  double clip_s = 3.0;
  int rate_hz = 16000;
  double snr_db = 10.0;
  double unseen_fraction = 0.2;
  double seen_test_fraction = 0.2;
};

/// Renders every sample into out_dir/{images,audio}/ and writes
/// out_dir/manifest.csv plus the manifest.json sidecar.
Manifest generate_dataset(int n_identities, int per_modality,
                          std::uint64_t seed,
                          const std::filesystem::path& out_dir,
                          const GeneratorConfig& cfg = {});

/// Writes the CSV and a sidecar JSON (same stem) holding the seed, the
/// generator parameters and the identity latents.
void write_manifest(const Manifest& m, const std::filesystem::path& csv_path);

/// Reads manifest.csv; latents come from the sidecar JSON when present.
Manifest read_manifest(const std::filesystem::path& csv_path);

}  // namespace xmodal

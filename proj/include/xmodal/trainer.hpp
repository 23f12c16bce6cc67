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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string_view>
#include <vector>

#include "xmodal/embedder.hpp"
#include "xmodal/embedding_table.hpp"
#include "xmodal/loss.hpp"
#include "xmodal/signal.hpp"
#include "xmodal/synth.hpp"

namespace xmodal {

/// How manifest files become encoder inputs.
struct PreprocessConfig {
  StftConfig stft;
  Compression compression = Compression::log1p;
  int audio_rate_hz = 16000;
  CropMode crop = CropMode::center_crop;
};

/// Decodes one record (WAV or image) into an encoder input of the given size.
InputTensor load_input(const Manifest& m, const SampleRecord& r, int input_size,
                       const PreprocessConfig& pre);

enum class SamplerKind { class_balanced, uniform };
SamplerKind parse_sampler(std::string_view s);
std::string_view to_string(SamplerKind s);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 45;
  double lr = 1e-3;
  double weight_decay = 5e-5;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::class_balanced;
  int classes_per_batch = 9;
  int images_per_class = 3;
  int audio_per_class = 2;
  int batches_per_epoch = 0;  // 0: ceil(train records / batch_size)
  CenterMode center_mode = CenterMode::in_batch;
  double ema_alpha = 0.5;
  PreprocessConfig preprocess;
  int threads = 1;
  std::filesystem::path out_dir;  // empty: no checkpoint or log files

  void validate() const;
  /// lr 0.05, 100 epochs, batch 45, weight decay 5e-5.
  static TrainConfig paper_preset();
};

struct TrainLogRow {
  int epoch = 0;
  int batch = 0;
  double total = 0.0;
  double xent = 0.0;
  double center = 0.0;
  double intra_dist = 0.0;
};

struct TrainResult {
  EncoderParams encoder;
  ClassifierHead head;
  std::vector<TrainLogRow> log;
  std::vector<int> class_identities;  // head class index -> identity id
};

/// Train-split records grouped into head classes (ascending identity id).
struct TrainIndex {
  std::vector<int> class_identities;
  std::vector<std::vector<size_t>> images;  // per class, indices into records
  std::vector<std::vector<size_t>> audio;
  std::vector<SampleRecord> records;

  explicit TrainIndex(const Manifest& m);
  int label_of(int identity_id) const;
};

int batches_per_epoch(const TrainIndex& index, const TrainConfig& cfg);

/// Deterministic in (seed, epoch, batch_index).
std::vector<SampleRecord> sample_batch(const Manifest& m, const TrainConfig& cfg,
                                       int epoch, int batch_index);
std::vector<size_t> sample_batch_indices(const TrainIndex& index, const TrainConfig& cfg,
                                         int epoch, int batch_index);

using EpochCallback = std::function<void(int epoch, const std::vector<TrainLogRow>& rows)>;

TrainResult train(const Manifest& m, const EncoderConfig& enc, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

/// One row per record of `split`, in manifest order.
EmbeddingTable export_embeddings(const EncoderParams& params, const Manifest& m, Split split,
                                 const PreprocessConfig& pre, int threads = 1);

}  // namespace xmodal

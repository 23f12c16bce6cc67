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

#include "xmodal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "csv.hpp"
#include "parallel.hpp"
#include "xmodal/checkpoint.hpp"
#include "xmodal/error.hpp"
#include "xmodal/media_io.hpp"
#include "xmodal/optimizer.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

namespace {

enum : std::uint64_t {
  kTagEpochOrder = 11,
  kTagBatch = 12,
  kTagHead = 13,
};

}  // namespace

InputTensor load_input(const Manifest& m, const SampleRecord& r, int input_size,
                       const PreprocessConfig& pre) {
  const auto path = m.resolve(r);
  if (r.modality == Modality::image) return image_to_input(read_image(path), input_size);

  auto w = load_audio(path, pre.audio_rate_hz);
  Rng crop_rng(derive_seed(m.seed, {hash_string(r.path)}));
  w = clip_or_pad(w, pre.stft.clip_len_s, pre.crop, &crop_rng);
  return spectrogram_to_input(stft_magnitude(w, pre.stft), input_size, pre.compression);
}

SamplerKind parse_sampler(std::string_view s) {
  if (s == "class_balanced") return SamplerKind::class_balanced;
  if (s == "uniform") return SamplerKind::uniform;
  throw Error("unknown sampler: " + std::string(s));
}

std::string_view to_string(SamplerKind s) {
  return s == SamplerKind::class_balanced ? "class_balanced" : "uniform";
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (batch_size < 1) throw Error("batch_size must be positive");
  if (!(lr > 0.0)) throw Error("lr must be positive");
  if (!(weight_decay >= 0.0)) throw Error("weight_decay must be non-negative");
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (batches_per_epoch < 0) throw Error("batches_per_epoch must be non-negative");
  if (threads < 1) throw Error("threads must be positive");
  if (sampler == SamplerKind::class_balanced) {
    if (classes_per_batch < 1 || images_per_class < 0 || audio_per_class < 0)
      throw Error("class-balanced sampler needs P >= 1 and non-negative K");
    if (classes_per_batch * (images_per_class + audio_per_class) != batch_size)
      throw Error("classes_per_batch * (images_per_class + audio_per_class) = " +
                  std::to_string(classes_per_batch * (images_per_class + audio_per_class)) +
                  " does not equal batch_size " + std::to_string(batch_size));
  }
  LossConfig{lambda, center_mode, ema_alpha}.validate();
}

TrainConfig TrainConfig::paper_preset() {
  TrainConfig c;
  c.epochs = 100;
  c.batch_size = 45;
  c.lr = 0.05;
  c.weight_decay = 5e-5;
  return c;
}

TrainIndex::TrainIndex(const Manifest& m) {
  std::map<int, int> label;
  for (const auto& r : m.records)
    if (r.split == Split::train) label.emplace(r.identity_id, 0);
  for (auto& [id, l] : label) {
    l = static_cast<int>(class_identities.size());
    class_identities.push_back(id);
  }
  images.resize(class_identities.size());
  audio.resize(class_identities.size());
  for (const auto& r : m.records) {
    if (r.split != Split::train) continue;
    const int c = label.at(r.identity_id);
    (r.modality == Modality::image ? images : audio)[c].push_back(records.size());
    records.push_back(r);
  }
}

int TrainIndex::label_of(int identity_id) const {
  const auto it = std::lower_bound(class_identities.begin(), class_identities.end(), identity_id);
  if (it == class_identities.end() || *it != identity_id)
    throw Error("identity " + std::to_string(identity_id) + " is not in the train split");
  return static_cast<int>(it - class_identities.begin());
}

int batches_per_epoch(const TrainIndex& index, const TrainConfig& cfg) {
  if (cfg.batches_per_epoch > 0) return cfg.batches_per_epoch;
  const auto n = static_cast<int>(index.records.size());
  return std::max(1, (n + cfg.batch_size - 1) / cfg.batch_size);
}

std::vector<size_t> sample_batch_indices(const TrainIndex& index, const TrainConfig& cfg,
                                         int epoch, int batch_index) {
  const auto ep = static_cast<std::uint64_t>(epoch);
  const auto bi = static_cast<std::uint64_t>(batch_index);
  std::vector<size_t> out;

  if (cfg.sampler == SamplerKind::uniform) {
    if (index.records.size() < static_cast<size_t>(cfg.batch_size))
      throw Error("train split has " + std::to_string(index.records.size()) +
                  " records, fewer than batch_size " + std::to_string(cfg.batch_size));
    std::vector<size_t> all(index.records.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto rng = make_rng(cfg.seed, {kTagBatch, ep, bi});
    for (int k = 0; k < cfg.batch_size; ++k) {
      const auto j = k + uniform_index(rng, all.size() - k);
      std::swap(all[k], all[j]);
      out.push_back(all[k]);
    }
    return out;
  }

  const int n_classes = static_cast<int>(index.class_identities.size());
  if (n_classes < cfg.classes_per_batch)
    throw Error("train split has " + std::to_string(n_classes) +
                " identities, class-balanced sampling needs " +
                std::to_string(cfg.classes_per_batch));
  for (int c = 0; c < n_classes; ++c) {
    const auto id = std::to_string(index.class_identities[c]);
    if (index.images[c].size() < static_cast<size_t>(cfg.images_per_class))
      throw Error("identity " + id + " has " + std::to_string(index.images[c].size()) +
                  " image records in the train split, need " +
                  std::to_string(cfg.images_per_class));
    if (index.audio[c].size() < static_cast<size_t>(cfg.audio_per_class))
      throw Error("identity " + id + " has " + std::to_string(index.audio[c].size()) +
                  " audio records in the train split, need " +
                  std::to_string(cfg.audio_per_class));
  }

  // Classes are visited in one shuffled cycle per epoch, so selection counts
  // over an epoch differ by at most one visit.
  std::vector<int> order(n_classes);
  for (int c = 0; c < n_classes; ++c) order[c] = c;
  auto order_rng = make_rng(cfg.seed, {kTagEpochOrder, ep});
  shuffle(order.begin(), order.end(), order_rng);

  for (int j = 0; j < cfg.classes_per_batch; ++j) {
    const auto pos = (static_cast<size_t>(batch_index) * cfg.classes_per_batch + j) % n_classes;
    const int c = order[pos];
    auto rng = make_rng(cfg.seed, {kTagBatch, ep, bi, static_cast<std::uint64_t>(c)});
    auto pick = [&](std::vector<size_t> pool, int k) {
      for (int t = 0; t < k; ++t) {
        const auto s = t + uniform_index(rng, pool.size() - t);
        std::swap(pool[t], pool[s]);
        out.push_back(pool[t]);
      }
    };
    pick(index.images[c], cfg.images_per_class);
    pick(index.audio[c], cfg.audio_per_class);
  }
  return out;
}

std::vector<SampleRecord> sample_batch(const Manifest& m, const TrainConfig& cfg, int epoch,
                                       int batch_index) {
  cfg.validate();
  const TrainIndex index(m);
  std::vector<SampleRecord> out;
  for (size_t i : sample_batch_indices(index, cfg, epoch, batch_index))
    out.push_back(index.records[i]);
  return out;
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
  std::string text = "epoch,batch,total,xent,center,intra_dist\n";
  for (const auto& r : log) {
    text += std::to_string(r.epoch) + ',' + std::to_string(r.batch) + ',' +
            csv::fmt_double(r.total) + ',' + csv::fmt_double(r.xent) + ',' +
            csv::fmt_double(r.center) + ',' + csv::fmt_double(r.intra_dist) + '\n';
  }
  csv::write_text(path, text);
}

TrainResult train(const Manifest& m, const EncoderConfig& enc, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  enc.validate();
  cfg.validate();
  const TrainIndex index(m);
  if (index.records.empty()) throw Error("train split is empty");
  const int n_classes = static_cast<int>(index.class_identities.size());

  TrainResult result;
  result.encoder = init_params(enc, cfg.seed);
  result.head = ClassifierHead::init(enc.embed_dim, std::max(n_classes, 2),
                                     derive_seed(cfg.seed, {kTagHead}));
  result.class_identities = index.class_identities;
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  if (cfg.epochs == 0) return result;

  std::vector<InputTensor> inputs(index.records.size());
  parallel_for(inputs.size(), cfg.threads, [&](size_t i) {
    inputs[i] = load_input(m, index.records[i], enc.input_size, cfg.preprocess);
  });

  const LossConfig loss_cfg{cfg.lambda, cfg.center_mode, cfg.ema_alpha};
  EmaCenters ema{Matrix(result.head.n_classes, enc.embed_dim)};
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.weight_decay = cfg.weight_decay;
  AdamState adam;

  auto& params = result.encoder;
  auto& head = result.head;
  const int n_batches = batches_per_epoch(index, cfg);
  std::vector<ForwardTrace> traces;
  std::vector<EncoderGrads> sample_grads;
  EncoderGrads grads = EncoderParams::zeros(enc);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const size_t first_row = result.log.size();
    for (int b = 0; b < n_batches; ++b) {
      const auto picked = sample_batch_indices(index, cfg, epoch, b);
      const int bs = static_cast<int>(picked.size());
      traces.resize(bs);
      if (sample_grads.size() < static_cast<size_t>(bs))
        sample_grads.resize(bs, EncoderParams::zeros(enc));

      MiniBatch batch;
      batch.embeddings = Matrix(bs, enc.embed_dim);
      batch.labels.resize(bs);
      batch.modality_tags.resize(bs);
      parallel_for(bs, cfg.threads, [&](size_t i) {
        const auto f = forward(params, inputs[picked[i]], &traces[i]);
        std::copy(f.begin(), f.end(), batch.embeddings.row(static_cast<int>(i)).begin());
      });
      for (int i = 0; i < bs; ++i) {
        const auto& r = index.records[picked[i]];
        batch.labels[i] = index.label_of(r.identity_id);
        batch.modality_tags[i] = r.modality;
      }

      const auto loss = joint_loss(head, batch, loss_cfg, &ema);
      if (!std::isfinite(loss.total))
        throw Error("diverged at epoch " + std::to_string(epoch) + " batch " + std::to_string(b));

      parallel_for(bs, cfg.threads, [&](size_t i) {
        auto& g = sample_grads[i];
        for (auto& a : g.arrays) std::fill(a.begin(), a.end(), 0.0);
        accumulate_backward(params, traces[i], loss.grad_embeddings.row(static_cast<int>(i)), g);
      });
      for (auto& a : grads.arrays) std::fill(a.begin(), a.end(), 0.0);
      for (int i = 0; i < bs; ++i)
        for (size_t k = 0; k < grads.arrays.size(); ++k) {
          auto& dst = grads.arrays[k];
          const auto& src = sample_grads[i].arrays[k];
          for (size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }

      std::vector<ParamBlock> blocks;
      for (size_t k = 0; k < params.arrays.size(); ++k)
        blocks.push_back({params.arrays[k], grads.arrays[k]});
      blocks.push_back({head.W, loss.grad_head.W});
      blocks.push_back({head.b, loss.grad_head.b});
      try {
        adam_step(blocks, adam, adam_cfg);
      } catch (const Error&) {
        throw Error("diverged at epoch " + std::to_string(epoch) + " batch " + std::to_string(b));
      }
      if (cfg.center_mode == CenterMode::ema) ema_center_update(ema, batch, cfg.ema_alpha);

      result.log.push_back({epoch, b, loss.total, loss.xent, loss.center, loss.intra_dist});
    }

    if (!cfg.out_dir.empty()) {
      save_checkpoint(cfg.out_dir / "checkpoint.bin", params, &head);
      write_train_log(cfg.out_dir / "train_log.csv", result.log);
    }
    if (on_epoch)
      on_epoch(epoch, std::vector<TrainLogRow>(result.log.begin() + static_cast<std::ptrdiff_t>(first_row),
                                               result.log.end()));
  }
  return result;
}

EmbeddingTable export_embeddings(const EncoderParams& params, const Manifest& m, Split split,
                                 const PreprocessConfig& pre, int threads) {
  const auto records = m.split_records(split);
  EmbeddingTable t;
  t.dim = params.config.embed_dim;
  t.rows.resize(records.size());
  parallel_for(records.size(), threads, [&](size_t i) {
    const auto& r = records[i];
    const auto& p = m.identity(r.identity_id);
    auto& row = t.rows[i];
    row.identity_id = r.identity_id;
    row.modality = r.modality;
    row.gender = p.gender;
    row.nationality = p.nationality;
    row.age_group = p.age_group;
    row.values = forward(params, load_input(m, r, params.config.input_size, pre));
  });
  return t;
}

}  // namespace xmodal

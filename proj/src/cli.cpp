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

#include "xmodal/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csv.hpp"
#include "xmodal/checkpoint.hpp"
#include "xmodal/embedder.hpp"
#include "xmodal/embedding_table.hpp"
#include "xmodal/error.hpp"
#include "xmodal/eval.hpp"
#include "xmodal/projection.hpp"
#include "xmodal/synth.hpp"
#include "xmodal/trainer.hpp"

namespace xmodal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads flag values from a JSON object. Keys are long flag names (dashes or
// underscores); a nested object keyed by the subcommand name is also
// accepted.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& ex) {
      throw CLI::ConversionError("config file is not valid JSON: " + std::string(ex.what()));
    }
    if (!doc.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    const auto subs = root_->get_subcommands();
    const std::string sub = subs.empty() ? "" : subs.front()->get_name();
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      if (value.is_object()) {
        if (key != sub) continue;
        for (const auto& [k, v] : value.items()) items.push_back(item(sub, k, v));
      } else {
        items.push_back(item(sub, key, value));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value: " + v.dump());
  }

  static CLI::ConfigItem item(const std::string& sub, std::string key, const json& v) {
    for (auto& ch : key)
      if (ch == '_') ch = '-';
    CLI::ConfigItem it;
    if (!sub.empty()) it.parents = {sub};
    it.name = key;
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }

  const CLI::App* root_;
};

struct Options {
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;

  int identities = 50;
  int per_modality = 20;
  GeneratorConfig gen;

  std::string manifest;
  std::string checkpoint;
  std::string embeddings;
  std::string split = "test_unseen_unheard";

  TrainConfig train;
  EncoderConfig enc;
  std::string sampler = "class_balanced";
  std::string center_mode = "in_batch";
  std::string window_fn = "hamming";
  std::string compression = "log1p";
  std::string crop = "center_crop";
  bool paper_hparams = false;
  bool paper_faithful = false;

  std::string stratum = "random";
  std::string similarity = "cosine";
  std::string direction = "voice_to_face";
  int pairs = 2000;
  int trials = 2000;
  std::vector<int> n_values = {2, 4, 6, 8, 10};
  std::vector<int> k_values = {1, 5, 10};
  bool gender_filter = false;

  std::string roc;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string> kSplits = {"train", "test_seen_heard", "test_unseen_unheard"};

void add_common(CLI::App* sub, Options& o, bool with_seed = true) {
  sub->add_option("--out", o.out, "Output directory (default: $" + std::string(kOutDirEnv) + ")");
  if (with_seed) sub->add_option("--seed", o.seed, "Global seed")->capture_default_str();
}

void add_preprocess(CLI::App* sub, Options& o) {
  auto& p = o.train.preprocess;
  sub->add_option("--window-s", p.stft.window_len_s, "STFT window length in seconds")->capture_default_str();
  sub->add_option("--hop-s", p.stft.hop_s, "STFT hop in seconds")->capture_default_str();
  sub->add_option("--fft-size", p.stft.fft_size, "FFT size")->capture_default_str();
  sub->add_option("--window-fn", o.window_fn, "Window function")
      ->check(CLI::IsMember({"hamming", "hann", "rectangular"}))
      ->capture_default_str();
  sub->add_option("--clip-s", p.stft.clip_len_s, "Audio clip length in seconds")->capture_default_str();
  sub->add_option("--compression", o.compression, "Spectrogram compression")
      ->check(CLI::IsMember({"raw", "log1p"}))
      ->capture_default_str();
  sub->add_option("--crop", o.crop, "Audio crop mode")
      ->check(CLI::IsMember({"random_crop", "center_crop", "pad_zero"}))
      ->capture_default_str();
  sub->add_option("--audio-rate", p.audio_rate_hz, "Audio resample rate in Hz")->capture_default_str();
  sub->add_flag("--paper-faithful", o.paper_faithful, "Raw (uncompressed) spectrogram magnitudes");
}

void add_table_source(CLI::App* sub, Options& o) {
  sub->add_option("--embeddings", o.embeddings, "Embedding CSV (instead of checkpoint + manifest)")
      ->check(CLI::ExistingFile);
  sub->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
  sub->add_option("--manifest", o.manifest, "Manifest CSV")->check(CLI::ExistingFile);
  sub->add_option("--split", o.split, "Split to embed")->check(CLI::IsMember(kSplits))->capture_default_str();
  sub->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
  add_preprocess(sub, o);
}

fs::path out_dir(const Options& o) {
  std::string dir = o.out;
  if (dir.empty()) {
    if (const char* env = std::getenv(kOutDirEnv)) dir = env;
  }
  if (dir.empty()) throw UsageError("--out is required (or set " + std::string(kOutDirEnv) + ")");
  fs::create_directories(dir);
  return dir;
}

void resolve_preprocess(Options& o, const CLI::App* sub) {
  auto& p = o.train.preprocess;
  if (o.paper_faithful && sub->count("--compression") == 0) o.compression = "raw";
  p.compression = parse_compression(o.compression);
  p.stft.window_fn = parse_window_fn(o.window_fn);
  p.crop = parse_crop_mode(o.crop);
  p.stft.validate(p.audio_rate_hz);
}

json preprocess_json(const PreprocessConfig& p) {
  return {{"window_s", p.stft.window_len_s}, {"hop_s", p.stft.hop_s},
          {"fft_size", p.stft.fft_size},     {"window_fn", to_string(p.stft.window_fn)},
          {"clip_s", p.stft.clip_len_s},     {"compression", to_string(p.compression)},
          {"crop", to_string(p.crop)},       {"audio_rate", p.audio_rate_hz}};
}

json encoder_json(const EncoderConfig& c) {
  return {{"input_size", c.input_size}, {"channels", c.channels_per_stage}, {"embed_dim", c.embed_dim}};
}

json source_json(const Options& o) {
  json j;
  if (!o.embeddings.empty()) {
    j["embeddings"] = o.embeddings;
  } else {
    j["checkpoint"] = o.checkpoint;
    j["manifest"] = o.manifest;
    j["split"] = o.split;
    j["preprocess"] = preprocess_json(o.train.preprocess);
  }
  return j;
}

EmbeddingTable load_table(Options& o, const CLI::App* sub) {
  if (!o.embeddings.empty()) return read_embeddings_csv(o.embeddings);
  if (o.checkpoint.empty() || o.manifest.empty())
    throw UsageError("either --embeddings or both --checkpoint and --manifest are required");
  resolve_preprocess(o, sub);
  const auto ck = load_checkpoint(o.checkpoint);
  const auto m = read_manifest(o.manifest);
  return export_embeddings(ck.encoder, m, parse_split(o.split), o.train.preprocess, o.threads);
}

void write_json(const fs::path& path, const json& j) { csv::write_text(path, j.dump(2) + "\n"); }

json int_map(const std::map<int, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

// Each command returns the summary body; paths go only to the summary so
// that report files stay byte-identical across output directories.

json cmd_gen(Options& o) {
  const auto dir = out_dir(o);
  const auto m = generate_dataset(o.identities, o.per_modality, o.seed, dir, o.gen);
  json cfg = {{"identities", o.identities},
              {"per_modality", o.per_modality},
              {"seed", o.seed},
              {"face_size", o.gen.face_size},
              {"clip_s", o.gen.clip_s},
              {"rate", o.gen.rate_hz},
              {"snr_db", o.gen.snr_db},
              {"unseen_fraction", o.gen.unseen_fraction},
              {"seen_test_fraction", o.gen.seen_test_fraction},
              {"out", dir.string()}};
  return {{"config", cfg},
          {"outputs", {{"manifest", (dir / "manifest.csv").string()}}},
          {"records", m.records.size()}};
}

json cmd_train(Options& o, const CLI::App* sub) {
  auto& t = o.train;
  if (o.paper_hparams) {
    const auto preset = TrainConfig::paper_preset();
    if (sub->count("--lr") == 0) t.lr = preset.lr;
    if (sub->count("--epochs") == 0) t.epochs = preset.epochs;
    if (sub->count("--batch-size") == 0) t.batch_size = preset.batch_size;
    if (sub->count("--weight-decay") == 0) t.weight_decay = preset.weight_decay;
  }
  t.seed = o.seed;
  t.sampler = parse_sampler(o.sampler);
  t.center_mode = parse_center_mode(o.center_mode);
  t.threads = o.threads;
  resolve_preprocess(o, sub);
  o.enc.validate();
  const auto dir = out_dir(o);
  t.out_dir = dir;
  t.validate();

  const auto m = read_manifest(o.manifest);
  const auto result = train(m, o.enc, t);
  save_checkpoint(dir / "checkpoint.bin", result.encoder, &result.head);
  write_train_log(dir / "train_log.csv", result.log);

  json cfg = {{"manifest", o.manifest},
              {"seed", t.seed},
              {"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"lr", t.lr},
              {"weight_decay", t.weight_decay},
              {"lambda", t.lambda},
              {"sampler", to_string(t.sampler)},
              {"classes_per_batch", t.classes_per_batch},
              {"images_per_class", t.images_per_class},
              {"audio_per_class", t.audio_per_class},
              {"batches_per_epoch", t.batches_per_epoch},
              {"center_mode", to_string(t.center_mode)},
              {"ema_alpha", t.ema_alpha},
              {"threads", t.threads},
              {"paper_hparams", o.paper_hparams},
              {"encoder", encoder_json(o.enc)},
              {"preprocess", preprocess_json(t.preprocess)},
              {"out", dir.string()}};
  json cfg_file = cfg;
  cfg_file.erase("out");
  cfg_file.erase("manifest");
  write_json(dir / "train_config.json", cfg_file);

  json final_loss = nullptr;
  if (!result.log.empty()) final_loss = result.log.back().total;
  return {{"config", cfg},
          {"outputs",
           {{"checkpoint", (dir / "checkpoint.bin").string()},
            {"log", (dir / "train_log.csv").string()}}},
          {"steps", result.log.size()},
          {"final_loss", final_loss}};
}

json cmd_export(Options& o, const CLI::App* sub) {
  const auto table = load_table(o, sub);
  const auto dir = out_dir(o);
  write_embeddings_csv(dir / "embeddings.csv", table);
  return {{"config", source_json(o)},
          {"outputs", {{"embeddings", (dir / "embeddings.csv").string()}}},
          {"rows", table.rows.size()}};
}

json cmd_verify(Options& o, const CLI::App* sub) {
  const auto kind = parse_similarity(o.similarity);
  const auto stratum = parse_stratum(o.stratum);
  const auto table = load_table(o, sub);
  const auto dir = out_dir(o);
  const auto pairs = build_pairs(table, o.pairs, stratum, o.seed);
  const auto scores = score_pairs(table, pairs, kind);
  std::vector<double> pos, neg;
  std::string score_csv = "pair_id,score,is_match,stratum\n";
  for (size_t i = 0; i < pairs.size(); ++i) {
    (pairs[i].is_match ? pos : neg).push_back(scores[i]);
    score_csv += std::to_string(i) + ',' + csv::fmt_double(scores[i]) + ',' +
                 (pairs[i].is_match ? "1" : "0") + ',' + std::string(to_string(stratum)) + '\n';
  }
  const double auc = roc_auc(pos, neg);
  const double e = eer(pos, neg);
  std::string roc_csv = "far,frr,threshold\n";
  for (const auto& p : roc_curve(pos, neg))
    roc_csv += csv::fmt_double(p.far) + ',' + csv::fmt_double(p.frr) + ',' + csv::fmt_double(p.threshold) + '\n';

  json eval_cfg = {{"pairs", o.pairs}, {"stratum", to_string(stratum)},
                   {"similarity", to_string(kind)}, {"seed", o.seed}};
  json report = {{"task", "verify"},
                 {"stratum", to_string(stratum)},
                 {"config", eval_cfg},
                 {"metrics", {{"auc", auc}, {"eer", e}, {"positives", pos.size()}, {"negatives", neg.size()}}},
                 {"seed", o.seed}};
  write_json(dir / "report.json", report);
  csv::write_text(dir / "scores.csv", score_csv);
  csv::write_text(dir / "roc.csv", roc_csv);

  json cfg = source_json(o);
  cfg.update(eval_cfg);
  cfg["threads"] = o.threads;
  cfg["out"] = dir.string();
  return {{"config", cfg},
          {"outputs",
           {{"report", (dir / "report.json").string()},
            {"scores", (dir / "scores.csv").string()},
            {"roc", (dir / "roc.csv").string()}}},
          {"metrics", {{"auc", auc}, {"eer", e}}}};
}

json cmd_match(Options& o, const CLI::App* sub) {
  const auto kind = parse_similarity(o.similarity);
  const auto dirn = parse_direction(o.direction);
  const auto table = load_table(o, sub);
  const auto dir = out_dir(o);
  std::map<int, double> acc, chance;
  for (int n : o.n_values) {
    acc[n] = matching_accuracy(table, dirn, n, o.trials, o.seed, kind);
    chance[n] = 1.0 / n;
  }
  json eval_cfg = {{"direction", to_string(dirn)}, {"n_values", o.n_values}, {"trials", o.trials},
                   {"similarity", to_string(kind)}, {"seed", o.seed}};
  json report = {{"task", "match"},
                 {"stratum", "random"},
                 {"config", eval_cfg},
                 {"metrics", {{"accuracy_by_n", int_map(acc)}, {"chance_by_n", int_map(chance)}}},
                 {"seed", o.seed}};
  write_json(dir / "report.json", report);
  json cfg = source_json(o);
  cfg.update(eval_cfg);
  cfg["threads"] = o.threads;
  cfg["out"] = dir.string();
  return {{"config", cfg},
          {"outputs", {{"report", (dir / "report.json").string()}}},
          {"metrics", {{"accuracy_by_n", int_map(acc)}}}};
}

json cmd_retrieve(Options& o, const CLI::App* sub) {
  const auto kind = parse_similarity(o.similarity);
  const auto dirn = parse_direction(o.direction);
  const auto table = load_table(o, sub);
  const auto dir = out_dir(o);
  const auto recall = recall_at_k(table, dirn, o.k_values, o.seed, o.gender_filter, kind);
  std::map<int, double> chance;
  for (int k : o.k_values) chance[k] = recall_chance_level(table, dirn, k, o.gender_filter);
  const std::string gallery = o.gender_filter ? "same_gender" : "all";
  json eval_cfg = {{"direction", to_string(dirn)}, {"k_values", o.k_values}, {"gallery", gallery},
                   {"similarity", to_string(kind)}, {"seed", o.seed}};
  json report = {{"task", "retrieve"},
                 {"stratum", o.gender_filter ? "G" : "random"},
                 {"config", eval_cfg},
                 {"metrics", {{"recall_at_k", int_map(recall)}, {"chance_by_k", int_map(chance)}}},
                 {"seed", o.seed}};
  write_json(dir / "report.json", report);
  json cfg = source_json(o);
  cfg.update(eval_cfg);
  cfg["threads"] = o.threads;
  cfg["out"] = dir.string();
  return {{"config", cfg},
          {"outputs", {{"report", (dir / "report.json").string()}}},
          {"metrics", {{"recall_at_k", int_map(recall)}, {"chance_by_k", int_map(chance)}}}};
}

json cmd_plot_roc(Options& o) {
  const auto lines = csv::read_lines(o.roc);
  if (lines.empty() || lines.front() != "far,frr,threshold")
    throw Error("expected header far,frr,threshold in " + o.roc);
  std::vector<RocPoint> curve;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() != 3) throw Error("malformed ROC row " + std::to_string(i) + " in " + o.roc);
    curve.push_back({csv::parse_double(f[0], "far"), csv::parse_double(f[1], "frr"),
                     csv::parse_double(f[2], "threshold")});
  }
  const auto dir = out_dir(o);
  csv::write_text(dir / "roc.svg", svg_roc(curve));
  return {{"config", {{"roc", o.roc}, {"out", dir.string()}}},
          {"outputs", {{"plot", (dir / "roc.svg").string()}}},
          {"points", curve.size()}};
}

json cmd_project(Options& o, const CLI::App* sub) {
  const auto table = load_table(o, sub);
  const auto dir = out_dir(o);
  const auto p = project_2d(table);
  csv::write_text(dir / "projection.csv", projection_csv(p));
  csv::write_text(dir / "projection.svg", svg_projection(p));
  json cfg = source_json(o);
  cfg["threads"] = o.threads;
  cfg["out"] = dir.string();
  return {{"config", cfg},
          {"outputs",
           {{"table", (dir / "projection.csv").string()}, {"plot", (dir / "projection.svg").string()}}},
          {"explained_variance", {p.eigenvalues[0], p.eigenvalues[1]}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Cross-modal face/voice embedding toolkit", "xmodal"};
  app.allow_config_extras(false);
  app.fallthrough();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file of flag values (command-line flags take precedence)");

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic paired corpus");
  add_common(gen, o);
  gen->add_option("--identities", o.identities, "Number of identities")->capture_default_str();
  gen->add_option("--per-modality", o.per_modality, "Samples per identity and modality")->capture_default_str();
  gen->add_option("--face-size", o.gen.face_size, "Face image side in pixels")->capture_default_str();
  gen->add_option("--clip-s", o.gen.clip_s, "Voice clip length in seconds")->capture_default_str();
  gen->add_option("--rate", o.gen.rate_hz, "Audio sample rate in Hz")->capture_default_str();
  gen->add_option("--snr-db", o.gen.snr_db, "Voice signal-to-noise ratio in dB")->capture_default_str();
  gen->add_option("--unseen-fraction", o.gen.unseen_fraction, "Fraction of identities held out")
      ->capture_default_str();
  gen->add_option("--seen-test-fraction", o.gen.seen_test_fraction,
                  "Fraction of each seen identity's samples held out")
      ->capture_default_str();

  auto* tr = app.add_subcommand("train", "Train the shared encoder");
  add_common(tr, o);
  tr->add_option("--manifest", o.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--epochs", o.train.epochs, "Epochs")->capture_default_str();
  tr->add_option("--batch-size", o.train.batch_size, "Batch size")->capture_default_str();
  tr->add_option("--lr", o.train.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--weight-decay", o.train.weight_decay, "Decoupled weight decay")->capture_default_str();
  tr->add_option("--lambda", o.train.lambda, "Center term weight")->capture_default_str();
  tr->add_option("--sampler", o.sampler, "Batch sampler")
      ->check(CLI::IsMember({"class_balanced", "uniform"}))
      ->capture_default_str();
  tr->add_option("--classes-per-batch", o.train.classes_per_batch, "Classes per balanced batch")
      ->capture_default_str();
  tr->add_option("--images-per-class", o.train.images_per_class, "Images per class")->capture_default_str();
  tr->add_option("--audio-per-class", o.train.audio_per_class, "Audio clips per class")->capture_default_str();
  tr->add_option("--batches-per-epoch", o.train.batches_per_epoch, "Batches per epoch (0: auto)")
      ->capture_default_str();
  tr->add_option("--center-mode", o.center_mode, "Class centers")
      ->check(CLI::IsMember({"in_batch", "ema"}))
      ->capture_default_str();
  tr->add_option("--ema-alpha", o.train.ema_alpha, "EMA center rate")->capture_default_str();
  tr->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
  tr->add_option("--input-size", o.enc.input_size, "Encoder input side")->capture_default_str();
  tr->add_option("--channels", o.enc.channels_per_stage, "Channels per conv stage")
      ->delimiter(',')
      ->capture_default_str();
  tr->add_option("--embed-dim", o.enc.embed_dim, "Embedding dimension")->capture_default_str();
  tr->add_flag("--paper-hparams", o.paper_hparams, "lr 0.05, 100 epochs, batch 45 unless given");
  add_preprocess(tr, o);

  auto* ex = app.add_subcommand("export-embed", "Write embeddings of one split as CSV");
  add_common(ex, o, false);
  add_table_source(ex, o);

  auto* ver = app.add_subcommand("eval-verify", "Cross-modal verification (AUC, EER)");
  add_common(ver, o);
  add_table_source(ver, o);
  ver->add_option("--pairs", o.pairs, "Number of pairs")->capture_default_str();
  ver->add_option("--stratum", o.stratum, "Negative-pair stratum")
      ->check(CLI::IsMember({"random", "G", "N", "A", "GNA"}))
      ->capture_default_str();
  ver->add_option("--similarity", o.similarity, "Scoring function")
      ->check(CLI::IsMember({"cosine", "neg_euclidean"}))
      ->capture_default_str();

  auto* mat = app.add_subcommand("eval-match", "1:N forced matching");
  add_common(mat, o);
  add_table_source(mat, o);
  mat->add_option("--direction", o.direction, "Probe to gallery direction")
      ->check(CLI::IsMember({"voice_to_face", "face_to_voice"}))
      ->capture_default_str();
  mat->add_option("--n-values", o.n_values, "Gallery sizes")->delimiter(',')->capture_default_str();
  mat->add_option("--trials", o.trials, "Trials per gallery size")->capture_default_str();
  mat->add_option("--similarity", o.similarity, "Scoring function")
      ->check(CLI::IsMember({"cosine", "neg_euclidean"}))
      ->capture_default_str();

  auto* ret = app.add_subcommand("eval-retrieve", "Cross-modal retrieval (R@K)");
  add_common(ret, o);
  add_table_source(ret, o);
  ret->add_option("--direction", o.direction, "Query to gallery direction")
      ->check(CLI::IsMember({"voice_to_face", "face_to_voice"}))
      ->capture_default_str();
  ret->add_option("--k", o.k_values, "K values")->delimiter(',')->capture_default_str();
  ret->add_flag("--gender-filter", o.gender_filter, "Restrict the gallery to the query's gender");
  ret->add_option("--similarity", o.similarity, "Scoring function")
      ->check(CLI::IsMember({"cosine", "neg_euclidean"}))
      ->capture_default_str();

  auto* plot = app.add_subcommand("plot-roc", "Render an ROC CSV as SVG");
  add_common(plot, o, false);
  plot->add_option("--roc", o.roc, "ROC CSV written by eval-verify")->required()->check(CLI::ExistingFile);

  auto* proj = app.add_subcommand("project-2d", "PCA projection of embeddings, CSV and SVG");
  add_common(proj, o, false);
  add_table_source(proj, o);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const std::map<const CLI::App*, std::function<json()>> dispatch = {
      {gen, [&] { return cmd_gen(o); }},
      {tr, [&] { return cmd_train(o, tr); }},
      {ex, [&] { return cmd_export(o, ex); }},
      {ver, [&] { return cmd_verify(o, ver); }},
      {mat, [&] { return cmd_match(o, mat); }},
      {ret, [&] { return cmd_retrieve(o, ret); }},
      {plot, [&] { return cmd_plot_roc(o); }},
      {proj, [&] { return cmd_project(o, proj); }},
  };
  const CLI::App* chosen = app.get_subcommands().front();
  try {
    json summary = dispatch.at(chosen)();
    summary["command"] = chosen->get_name();
    summary["status"] = "ok";
    out << summary.dump() << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << chosen->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace xmodal

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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <optional>
#include <set>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "xmodal/checkpoint.hpp"
#include "xmodal/cli.hpp"
#include "xmodal/embedder.hpp"
#include "xmodal/eval.hpp"
#include "xmodal/loss.hpp"
#include "xmodal/trainer.hpp"

using namespace xmodal;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << "CRITERION " << id << ' ' << (pass ? "PASS" : "FAIL") << ": " << detail << std::endl;
}

void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (code != kExitOk) std::cerr << err.str();
  return code;
}

json read_json(const fs::path& p) { return json::parse(oracle::slurp(p)); }

MiniBatch batch_of(const std::vector<Embedding>& rows, const std::vector<int>& labels) {
  MiniBatch b;
  b.embeddings = Matrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), b.embeddings.row(static_cast<int>(i)).begin());
  b.labels = labels;
  b.modality_tags.assign(rows.size(), Modality::image);
  return b;
}

// ---------------------------------------------------------------------------
// 1. Joint-loss gradient through the encoder.

struct FdCase {
  int size;
  std::vector<int> channels;
  int embed;
  int classes;
  int batch;
  double lambda;
  std::uint64_t seed;
};

// Loss plus the relu on/off pattern of every activation in the batch.
struct Evaluated {
  double total;
  std::vector<bool> mask;
};

Evaluated joint_total(const EncoderParams& p, const ClassifierHead& h, const std::vector<InputTensor>& xs,
                      const std::vector<int>& labels, const LossConfig& cfg) {
  std::vector<Embedding> f;
  std::vector<bool> mask;
  ForwardTrace trace;
  for (const auto& x : xs) {
    f.push_back(forward(p, x, &trace));
    for (size_t s = 1; s < trace.activations.size(); ++s)
      for (double v : trace.activations[s]) mask.push_back(v > 0);
  }
  return {joint_loss(h, batch_of(f, labels), cfg).total, std::move(mask)};
}

// Worst relative error over every encoder and head parameter, or nullopt
// when some stencil straddles a relu kink and central differences are not
// a valid reference there.
std::optional<double> worst_joint_fd(const FdCase& c) {
  EncoderConfig enc;
  enc.input_size = c.size;
  enc.channels_per_stage = c.channels;
  enc.embed_dim = c.embed;
  auto p = init_params(enc, c.seed);
  auto rng = make_rng(c.seed, {1});
  for (auto& a : p.arrays)
    for (double& v : a) v += 0.02 * standard_normal(rng);
  auto h = ClassifierHead::init(c.embed, c.classes, c.seed + 1);
  for (double& v : h.b) v = 0.1 * standard_normal(rng);

  std::vector<InputTensor> xs;
  std::vector<int> labels;
  for (int i = 0; i < c.batch; ++i) {
    InputTensor x(c.size, c.size);
    for (double& v : x.values) v = uniform01(rng);
    xs.push_back(x);
    labels.push_back(i % c.classes);
  }
  const LossConfig cfg{c.lambda};

  std::vector<ForwardTrace> traces(xs.size());
  std::vector<Embedding> f;
  for (size_t i = 0; i < xs.size(); ++i) f.push_back(forward(p, xs[i], &traces[i]));
  const auto r = joint_loss(h, batch_of(f, labels), cfg);
  auto grads = EncoderParams::zeros(enc);
  for (size_t i = 0; i < xs.size(); ++i)
    accumulate_backward(p, traces[i], r.grad_embeddings.row(static_cast<int>(i)), grads);

  const double step = 1e-4;
  const auto base_mask = joint_total(p, h, xs, labels, cfg).mask;
  bool kink = false;
  double worst = 0;
  auto probe = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + step;
    const auto up = joint_total(p, h, xs, labels, cfg);
    slot = keep - step;
    const auto down = joint_total(p, h, xs, labels, cfg);
    slot = keep;
    kink = kink || up.mask != base_mask || down.mask != base_mask;
    worst = std::max(worst, oracle::rel_err(analytic, (up.total - down.total) / (2 * step)));
  };
  for (size_t a = 0; a < p.arrays.size(); ++a)
    for (size_t i = 0; i < p.arrays[a].size(); ++i) probe(p.arrays[a][i], grads.arrays[a][i]);
  for (size_t i = 0; i < h.W.size(); ++i) probe(h.W[i], r.grad_head.W[i]);
  for (size_t i = 0; i < h.b.size(); ++i) probe(h.b[i], r.grad_head.b[i]);
  if (kink) return std::nullopt;
  return worst;
}

void criterion_1() {
  const auto t0 = Clock::now();
  const std::vector<FdCase> cases = {
      {8, {3, 4}, 5, 3, 6, 1.0, 101},
      {9, {2, 3, 2}, 4, 2, 5, 0.5, 202},
      {16, {4, 4, 4, 4}, 6, 4, 8, 2.0, 303},
      {12, {3, 5, 4}, 8, 3, 9, 0.1, 404},
      {10, {4}, 7, 5, 10, 1.5, 505},
  };
  double worst = 0;
  int scored = 0, rejected = 0;
  for (auto c : cases) {
    // Redraw the random parameters and inputs until no stencil crosses a kink.
    for (int attempt = 0; attempt < 20; ++attempt, ++c.seed) {
      const auto w = worst_joint_fd(c);
      if (!w) {
        ++rejected;
        continue;
      }
      worst = std::max(worst, *w);
      ++scored;
      break;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << scored << " configs, max rel err " << worst << " (< 1e-5), " << rejected << " draws rejected at a relu kink, "
    << secs << " s (< 120)";
  report(1, scored == static_cast<int>(cases.size()) && worst < 1e-5 && secs < 120, d.str());
}

// ---------------------------------------------------------------------------
// 2. Center-gradient identity, differentiating through the mean.

void criterion_2() {
  auto rng = make_rng(2, {});
  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Embedding> rows(10, Embedding(4));
    std::vector<int> labels(10);
    for (int i = 0; i < 10; ++i) {
      for (double& v : rows[i]) v = standard_normal(rng);
      labels[i] = i % 3;
    }
    auto b = batch_of(rows, labels);
    const auto c = compute_centers(b);
    // d is quadratic in each coordinate, so the central difference has no
    // truncation term and a wide step keeps round-off down.
    const double step = 1e-2;
    for (int i = 0; i < b.size(); ++i)
      for (int k = 0; k < b.embeddings.cols; ++k) {
        const double analytic = 2 * (b.embeddings.at(i, k) - c.centers.at(c.find(b.labels[i]), k));
        const double keep = b.embeddings.at(i, k);
        b.embeddings.at(i, k) = keep + step;
        const double up = center_distance(b, compute_centers(b));
        b.embeddings.at(i, k) = keep - step;
        const double down = center_distance(b, compute_centers(b));
        b.embeddings.at(i, k) = keep;
        worst = std::max(worst, oracle::rel_err(analytic, (up - down) / (2 * step)));
      }
  }
  std::ostringstream d;
  d << "max rel err " << worst << " (< 1e-8)";
  report(2, worst < 1e-8, d.str());
}

// ---------------------------------------------------------------------------
// 3. Hand values.

void criterion_3() {
  using V = std::vector<double>;
  std::vector<std::pair<std::string, double>> errs;
  const auto two = batch_of({{2, 0}, {0, 0}}, {0, 0});
  errs.emplace_back("center 2.0", std::abs(center_distance(two, compute_centers(two)) - 2.0));
  const auto three = batch_of({{1, 0}, {0, 1}, {-1, -1}}, {0, 0, 0});
  errs.emplace_back("center 4.0", std::abs(center_distance(three, compute_centers(three)) - 4.0));
  const ClassifierHead zero{2, 3, V(6, 0.0), V(3, 0.0)};
  errs.emplace_back("xent ln 3", std::abs(softmax_xent(zero, batch_of({{0.3, -1.2}}, {1})).loss - std::log(3.0)));
  errs.emplace_back("cosine", std::abs(similarity(V{1, 2, 3}, V{4, 5, 6}) - 32 / (std::sqrt(14.0) * std::sqrt(77.0))));
  errs.emplace_back("auc 0.75", std::abs(roc_auc(V{0.6, 0.4}, V{0.5, 0.3}) - 0.75));
  errs.emplace_back("eer 0.5", std::abs(eer(V{0.8, 0.3}, V{0.7, 0.2}) - 0.5));
  bool pass = true;
  std::ostringstream d;
  for (const auto& [name, e] : errs) {
    pass = pass && e < 1e-9;
    d << name << ' ' << e << "; ";
  }
  const double cos_val = similarity(V{1, 2, 3}, V{4, 5, 6});
  pass = pass && std::abs(cos_val - 0.97463) < 5e-6;
  d << "cosine " << cos_val;
  report(3, pass, d.str());
}

// ---------------------------------------------------------------------------
// 4. lambda = 0 is exactly softmax cross-entropy.

void criterion_4() {
  auto rng = make_rng(4, {});
  int identical = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const int m = 1 + static_cast<int>(uniform_index(rng, 20));
    const int d = 1 + static_cast<int>(uniform_index(rng, 16));
    const int n = 2 + static_cast<int>(uniform_index(rng, 5));
    std::vector<Embedding> rows(m, Embedding(d));
    std::vector<int> labels(m);
    for (int i = 0; i < m; ++i) {
      for (double& v : rows[i]) v = 3 * standard_normal(rng);
      labels[i] = static_cast<int>(uniform_index(rng, n));
    }
    auto h = ClassifierHead::init(d, n, t);
    for (double& v : h.b) v = standard_normal(rng);
    const auto b = batch_of(rows, labels);
    const double j = joint_loss(h, b, LossConfig{0.0}).total;
    const double x = softmax_xent(h, b).loss;
    if (std::memcmp(&j, &x, sizeof j) == 0) ++identical;
  }
  report(4, identical == trials, std::to_string(identical) + "/" + std::to_string(trials) + " bitwise equal");
}

// ---------------------------------------------------------------------------
// 5. Metrics against brute-force oracles.

void criterion_5() {
  const auto t0 = Clock::now();
  auto rng = make_rng(5, {});
  double worst = 0;
  for (int s = 0; s < 200; ++s) {
    const bool ties = s % 4 == 0;
    auto draw = [&](size_t n) {
      std::vector<double> v(n);
      for (double& x : v) x = ties ? static_cast<double>(uniform_index(rng, 6)) / 6 : uniform01(rng);
      return v;
    };
    const size_t total = 2 + uniform_index(rng, 99);
    const size_t n_pos = 1 + uniform_index(rng, total - 1);
    const auto pos = draw(n_pos);
    const auto neg = draw(total - n_pos);
    worst = std::max(worst, std::abs(roc_auc(pos, neg) - oracle::auc(pos, neg)));
    worst = std::max(worst, std::abs(eer(pos, neg) - oracle::eer(pos, neg)));
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "200 score sets, max abs diff " << worst << " (< 1e-9), " << secs << " s (< 60)";
  report(5, worst < 1e-9 && secs < 60, d.str());
}

// ---------------------------------------------------------------------------
// 6-9. End-to-end runs on the synthetic corpus.

struct Trained {
  double auc = 0, eer = 0, train_seconds = 0;
  fs::path checkpoint;
};

Trained train_and_verify(const fs::path& root, const std::string& manifest, const std::string& lambda) {
  const auto dir = root / ("lambda_" + lambda);
  Trained t;
  const auto t0 = Clock::now();
  if (cli({"train", "--manifest", manifest, "--epochs", "30", "--lambda", lambda, "--seed", "1", "--out",
           (dir / "train").string()}) != kExitOk)
    throw std::runtime_error("train failed");
  t.train_seconds = seconds_since(t0);
  t.checkpoint = dir / "train/checkpoint.bin";
  if (cli({"eval-verify", "--checkpoint", t.checkpoint.string(), "--manifest", manifest, "--split",
           "test_unseen_unheard", "--pairs", "2000", "--seed", "1", "--out", (dir / "verify").string()}) != kExitOk)
    throw std::runtime_error("eval-verify failed");
  const auto r = read_json(dir / "verify/report.json");
  t.auc = r["metrics"]["auc"];
  t.eer = r["metrics"]["eer"];
  return t;
}

EmbeddingTable first_per_identity(const EmbeddingTable& t) {
  EmbeddingTable out;
  out.dim = t.dim;
  std::set<std::pair<int, Modality>> seen;
  for (const auto& r : t.rows)
    if (seen.insert({r.identity_id, r.modality}).second) out.rows.push_back(r);
  return out;
}

void end_to_end(const fs::path& root) {
  const auto data = root / "data";
  const auto manifest = (data / "manifest.csv").string();
  if (cli({"gen-data", "--identities", "50", "--per-modality", "20", "--seed", "1", "--out", data.string()}) != kExitOk)
    throw std::runtime_error("gen-data failed");

  std::optional<Trained> with, without;
  guarded(6, [&] {
    with = train_and_verify(root, manifest, "1");
    std::ostringstream d;
    d << "unseen-unheard AUC " << with->auc << " (>= 0.90), EER " << with->eer << " (<= 0.15), training "
      << with->train_seconds << " s (<= 600)";
    report(6, with->auc >= 0.90 && with->eer <= 0.15 && with->train_seconds <= 600, d.str());
  });
  guarded(7, [&] {
    if (!with) throw std::runtime_error("criterion 6 model unavailable");
    without = train_and_verify(root, manifest, "0");
    std::ostringstream d;
    d << "AUC " << without->auc << " -> " << with->auc << " (delta " << with->auc - without->auc
      << " >= 0.02), EER " << without->eer << " -> " << with->eer;
    report(7, with->auc - without->auc >= 0.02 && with->eer < without->eer, d.str());
  });
  if (!with) {
    report(8, false, "criterion 6 model unavailable");
    report(9, false, "criterion 6 model unavailable");
    return;
  }
  const auto model = load_checkpoint(with->checkpoint).encoder;
  const PreprocessConfig pre;

  guarded(8, [&] {
    const auto table = export_embeddings(model, read_manifest(manifest), Split::test_unseen_unheard, pre);
    bool pass = true;
    std::ostringstream d;
    for (Direction dir : {Direction::voice_to_face, Direction::face_to_voice}) {
      d << to_string(dir) << ':';
      double prev = 2.0;
      for (int n : {2, 4, 6, 8, 10}) {
        const double acc = matching_accuracy(table, dir, n, 2000, 8);
        pass = pass && acc <= prev && acc >= 2.0 / n;
        prev = acc;
        d << " N=" << n << ' ' << acc;
      }
      d << "; ";
    }
    d << "2000 trials each";
    report(8, pass, d.str());
  });

  guarded(9, [&] {
    // A fresh 100-identity corpus gives a gallery where chance R@10 is 0.1.
    const auto gallery_dir = root / "gallery";
    if (cli({"gen-data", "--identities", "100", "--per-modality", "2", "--seed", "9", "--out",
             gallery_dir.string()}) != kExitOk)
      throw std::runtime_error("gen-data failed");
    const auto m = read_manifest(gallery_dir / "manifest.csv");
    EmbeddingTable all;
    for (Split s : {Split::train, Split::test_seen_heard, Split::test_unseen_unheard}) {
      auto part = export_embeddings(model, m, s, pre);
      all.dim = part.dim;
      all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
    }
    const auto table = first_per_identity(all);
    const std::vector<int> k10 = {10};
    const auto dir = Direction::voice_to_face;
    const double recall = recall_at_k(table, dir, k10, 9, false).at(10);
    const double chance = recall_chance_level(table, dir, 10, false);

    auto noise = table;
    auto rng = make_rng(9, {});
    double mc = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      for (auto& row : noise.rows)
        for (double& v : row.values) v = standard_normal(rng);
      mc += recall_at_k(noise, dir, k10, r, false).at(10) / reps;
    }
    std::ostringstream d;
    d << table.rows.size() / 2 << "-identity gallery, R@10 " << recall << " (>= 5 x " << chance
      << "), Monte-Carlo chance " << mc << " (within 0.02)";
    report(9, recall >= 5 * chance && std::abs(mc - chance) <= 0.02, d.str());
  });
}

// ---------------------------------------------------------------------------
// 10. Determinism of the CLI pipeline.

void criterion_10(const fs::path& root) {
  for (const char* tag : {"a", "b"}) {
    const auto base = root / tag;
    const auto man = (base / "data/manifest.csv").string();
    const bool ok =
        cli({"gen-data", "--identities", "12", "--per-modality", "6", "--seed", "3", "--out", (base / "data").string()}) == kExitOk &&
        cli({"train", "--manifest", man, "--epochs", "3", "--input-size", "16", "--channels", "8,16", "--embed-dim", "16",
             "--seed", "3", "--threads", "1", "--out", (base / "train").string()}) == kExitOk &&
        cli({"eval-verify", "--checkpoint", (base / "train/checkpoint.bin").string(), "--manifest", man, "--split",
             "train", "--pairs", "400", "--seed", "3", "--out", (base / "verify").string()}) == kExitOk;
    if (!ok) throw std::runtime_error("pipeline run failed");
  }
  bool pass = true;
  std::ostringstream d;
  for (const char* f : {"data/manifest.csv", "data/manifest.json", "train/checkpoint.bin", "verify/report.json",
                        "verify/scores.csv"}) {
    const auto a = oracle::slurp(root / "a" / f);
    const bool same = !a.empty() && a == oracle::slurp(root / "b" / f);
    pass = pass && same;
    d << f << (same ? " identical; " : " DIFFERS; ");
  }
  report(10, pass, d.str());
}

}  // namespace

int main() {
  guarded(1, criterion_1);
  guarded(2, criterion_2);
  guarded(3, criterion_3);
  guarded(4, criterion_4);
  guarded(5, criterion_5);
  {
    oracle::TempDir root("acceptance");
    try {
      end_to_end(root.path);
    } catch (const std::exception& e) {
      for (int id : {6, 7, 8, 9}) report(id, false, std::string("setup failed: ") + e.what());
    }
  }
  {
    oracle::TempDir root("acceptance_repro");
    guarded(10, [&] { criterion_10(root.path); });
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}

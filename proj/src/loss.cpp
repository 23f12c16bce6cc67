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

#include "xmodal/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "xmodal/error.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

ClassifierHead ClassifierHead::init(int embed_dim, int n_classes, std::uint64_t seed) {
  ClassifierHead h;
  h.embed_dim = embed_dim;
  h.n_classes = n_classes;
  h.validate_shape_args();
  h.W.resize(static_cast<size_t>(embed_dim) * n_classes);
  h.b.assign(n_classes, 0.0);
  auto rng = Rng(derive_seed(seed, {0x68656164ULL}));
  const double a = std::sqrt(6.0 / (embed_dim + n_classes));
  for (double& v : h.W) v = a * (2.0 * uniform01(rng) - 1.0);
  return h;
}

void ClassifierHead::validate_shape_args() const {
  if (embed_dim < 1) throw Error("classifier head needs a positive embed_dim");
  if (n_classes < 2) throw Error("classifier head needs at least 2 classes");
}

void ClassifierHead::validate() const {
  validate_shape_args();
  if (W.size() != static_cast<size_t>(embed_dim) * n_classes ||
      b.size() != static_cast<size_t>(n_classes))
    throw Error("classifier head arrays do not match its shape");
}

int MiniBatch::distinct_classes() const {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

int ClassCenters::find(int label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return -1;
  return static_cast<int>(it - labels.begin());
}

CenterMode parse_center_mode(std::string_view s) {
  if (s == "in_batch") return CenterMode::in_batch;
  if (s == "ema") return CenterMode::ema;
  throw Error("unknown center mode: " + std::string(s));
}

std::string_view to_string(CenterMode m) {
  return m == CenterMode::in_batch ? "in_batch" : "ema";
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) throw Error("ema_alpha must lie in (0, 1]");
}

namespace {

void check_batch(const MiniBatch& batch) {
  if (batch.size() < 1) throw Error("empty mini-batch");
  if (batch.labels.size() != static_cast<size_t>(batch.size()))
    throw Error("mini-batch label count does not match its embeddings");
}

}  // namespace

ClassCenters compute_centers(const MiniBatch& batch) {
  check_batch(batch);
  const int d = batch.embeddings.cols;
  std::map<int, std::pair<std::vector<double>, int>> acc;
  for (int i = 0; i < batch.size(); ++i) {
    auto& [sum, count] = acc[batch.labels[i]];
    if (sum.empty()) sum.assign(d, 0.0);
    const auto f = batch.embeddings.row(i);
    for (int k = 0; k < d; ++k) sum[k] += f[k];
    ++count;
  }
  ClassCenters c;
  c.centers = Matrix(static_cast<int>(acc.size()), d);
  int r = 0;
  for (const auto& [label, entry] : acc) {
    c.labels.push_back(label);
    c.counts.push_back(entry.second);
    for (int k = 0; k < d; ++k) c.centers.at(r, k) = entry.first[k] / entry.second;
    ++r;
  }
  return c;
}

double center_distance(const MiniBatch& batch, const ClassCenters& centers) {
  check_batch(batch);
  double total = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const int r = centers.find(batch.labels[i]);
    if (r < 0) throw Error("no center for label " + std::to_string(batch.labels[i]));
    const auto f = batch.embeddings.row(i);
    const auto c = centers.centers.row(r);
    for (size_t k = 0; k < f.size(); ++k) total += (f[k] - c[k]) * (f[k] - c[k]);
  }
  return total;
}

Matrix head_logits(const ClassifierHead& head, const MiniBatch& batch) {
  head.validate();
  if (batch.embeddings.cols != head.embed_dim)
    throw Error("embedding dimension does not match the classifier head");
  const int n = head.n_classes;
  Matrix z(batch.size(), n);
  for (int i = 0; i < batch.size(); ++i) {
    const auto f = batch.embeddings.row(i);
    auto zi = z.row(i);
    for (int j = 0; j < n; ++j) zi[j] = head.b[j];
    for (int d = 0; d < head.embed_dim; ++d) {
      const double fd = f[d];
      const double* wrow = head.W.data() + static_cast<size_t>(d) * n;
      for (int j = 0; j < n; ++j) zi[j] += wrow[j] * fd;
    }
  }
  return z;
}

XentResult softmax_xent(const ClassifierHead& head, const MiniBatch& batch) {
  check_batch(batch);
  const int n = head.n_classes;
  for (int y : batch.labels)
    if (y < 0 || y >= n) throw Error("label " + std::to_string(y) + " outside [0, n_classes)");

  XentResult r;
  r.grad_logits = head_logits(head, batch);
  for (int i = 0; i < batch.size(); ++i) {
    auto z = r.grad_logits.row(i);
    const int y = batch.labels[i];
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    r.loss += std::log(sum) - (z[y] - zmax);
    for (double& v : z) v = std::exp(v - zmax) / sum;
    z[y] -= 1.0;
  }
  return r;
}

JointLossResult joint_loss(const ClassifierHead& head, const MiniBatch& batch,
                           const LossConfig& cfg, const EmaCenters* ema) {
  cfg.validate();
  auto xr = softmax_xent(head, batch);
  const int m = batch.size();
  const int dim = head.embed_dim;
  const int n = head.n_classes;

  JointLossResult r;
  r.xent = xr.loss;
  r.total = xr.loss;
  r.grad_head.W.assign(head.W.size(), 0.0);
  r.grad_head.b.assign(head.b.size(), 0.0);
  r.grad_embeddings = Matrix(m, dim);
  for (int i = 0; i < m; ++i) {
    const auto f = batch.embeddings.row(i);
    const auto gl = xr.grad_logits.row(i);
    auto gf = r.grad_embeddings.row(i);
    for (int j = 0; j < n; ++j) r.grad_head.b[j] += gl[j];
    for (int d = 0; d < dim; ++d) {
      const double* wrow = head.W.data() + static_cast<size_t>(d) * n;
      double* gwrow = r.grad_head.W.data() + static_cast<size_t>(d) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        gwrow[j] += f[d] * gl[j];
        acc += wrow[j] * gl[j];
      }
      gf[d] = acc;
    }
  }

  const auto in_batch = compute_centers(batch);
  for (int i = 0; i < m; ++i) {
    const auto f = batch.embeddings.row(i);
    const auto c = in_batch.centers.row(in_batch.find(batch.labels[i]));
    double sq = 0.0;
    for (int d = 0; d < dim; ++d) sq += (f[d] - c[d]) * (f[d] - c[d]);
    r.intra_dist += std::sqrt(sq);
  }
  r.intra_dist /= m;

  // lambda == 0 leaves the softmax result untouched bit for bit.
  if (cfg.lambda == 0.0) return r;

  ClassCenters ema_view;
  const ClassCenters* centers = &in_batch;
  if (cfg.center_mode == CenterMode::ema) {
    if (ema == nullptr || ema->centers.rows != n || ema->centers.cols != dim)
      throw Error("ema center mode needs one center per class");
    ema_view.centers = Matrix(n, dim);
    ema_view.centers.data = ema->centers.data;
    for (int j = 0; j < n; ++j) ema_view.labels.push_back(j);
    ema_view.counts.assign(n, 0);
    centers = &ema_view;
  }
  const double dist = center_distance(batch, *centers);
  r.center = 0.5 * cfg.lambda * dist;
  r.total = r.xent + r.center;
  for (int i = 0; i < m; ++i) {
    const auto f = batch.embeddings.row(i);
    const auto c = centers->centers.row(centers->find(batch.labels[i]));
    auto gf = r.grad_embeddings.row(i);
    for (int d = 0; d < dim; ++d) gf[d] += cfg.lambda * (f[d] - c[d]);
  }
  return r;
}

void ema_center_update(EmaCenters& state, const MiniBatch& batch, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("ema alpha must lie in (0, 1]");
  check_batch(batch);
  const int dim = state.centers.cols;
  if (batch.embeddings.cols != dim) throw Error("embedding dimension does not match centers");
  const auto batch_centers = compute_centers(batch);
  for (size_t r = 0; r < batch_centers.labels.size(); ++r) {
    const int label = batch_centers.labels[r];
    if (label < 0 || label >= state.centers.rows)
      throw Error("label " + std::to_string(label) + " has no ema center");
    // mean_i(center - f_i) = center - mean_i f_i
    auto c = state.centers.row(label);
    const auto mean = batch_centers.centers.row(static_cast<int>(r));
    for (int d = 0; d < dim; ++d) c[d] -= alpha * (c[d] - mean[d]);
  }
}

}  // namespace xmodal

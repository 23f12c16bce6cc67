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

// Joint supervision: summed softmax cross-entropy plus (lambda / 2) times
// the summed squared distance of every feature to its class center.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "xmodal/synth.hpp"

namespace xmodal {

/// Dense row-major matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  std::span<double> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
};

/// Final softmax layer. W is embed_dim x n_classes (column j is class j).
struct ClassifierHead {
  int embed_dim = 0;
  int n_classes = 0;
  std::vector<double> W;  // W[d * n_classes + j]
  std::vector<double> b;

  double& w(int d, int j) { return W[static_cast<size_t>(d) * n_classes + j]; }
  double w(int d, int j) const { return W[static_cast<size_t>(d) * n_classes + j]; }

  /// Glorot-uniform W, zero b.
  static ClassifierHead init(int embed_dim, int n_classes, std::uint64_t seed);
  void validate() const;

  bool operator==(const ClassifierHead&) const = default;

 private:
  void validate_shape_args() const;
};

struct MiniBatch {
  Matrix embeddings;  // m x embed_dim
  std::vector<int> labels;
  std::vector<Modality> modality_tags;  // diagnostic only

  int size() const { return embeddings.rows; }
  int distinct_classes() const;
};

struct ClassCenters {
  std::vector<int> labels;  // ascending
  Matrix centers;           // one row per entry of labels
  std::vector<int> counts;

  /// Row index of label, or -1.
  int find(int label) const;
};

enum class CenterMode { in_batch, ema };
CenterMode parse_center_mode(std::string_view s);
std::string_view to_string(CenterMode m);

struct LossConfig {
  double lambda = 1.0;
  CenterMode center_mode = CenterMode::in_batch;
  double ema_alpha = 0.5;

  void validate() const;
};

/// Running per-class centers for CenterMode::ema, one row per class.
struct EmaCenters {
  Matrix centers;
};

ClassCenters compute_centers(const MiniBatch& batch);

/// Sum over classes of the summed squared distances to the class center.
double center_distance(const MiniBatch& batch, const ClassCenters& centers);

struct XentResult {
  double loss = 0.0;   // summed over the batch
  Matrix grad_logits;  // m x n_classes: softmax - onehot
};

/// Logits of every sample, m x n_classes.
Matrix head_logits(const ClassifierHead& head, const MiniBatch& batch);

XentResult softmax_xent(const ClassifierHead& head, const MiniBatch& batch);

struct HeadGrads {
  std::vector<double> W;
  std::vector<double> b;
};

struct JointLossResult {
  double total = 0.0;
  double xent = 0.0;
  double center = 0.0;  // (lambda / 2) * center distance
  double intra_dist = 0.0;  // mean Euclidean distance to the class center
  Matrix grad_embeddings;
  HeadGrads grad_head;
};

/// In EMA mode, ema supplies the (constant) centers; it is ignored in
/// in-batch mode.
JointLossResult joint_loss(const ClassifierHead& head, const MiniBatch& batch,
                           const LossConfig& cfg, const EmaCenters* ema = nullptr);

/// center_c -= alpha * mean_i(center_c - f_i) over the batch members of c.
/// Classes absent from the batch are left unchanged.
void ema_center_update(EmaCenters& state, const MiniBatch& batch, double alpha);

}  // namespace xmodal

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

#include <array>
#include <string>
#include <vector>

#include "xmodal/embedding_table.hpp"
#include "xmodal/eval.hpp"

namespace xmodal {

struct ProjectedRow {
  int identity_id = 0;
  Modality modality = Modality::image;
  double x = 0.0;
  double y = 0.0;
};

struct Projection {
  std::vector<ProjectedRow> rows;
  std::vector<double> mean;
  std::array<std::vector<double>, 2> components;  // unit principal axes
  std::vector<double> eigenvalues;  // covariance spectrum (1/n), descending
};

/// Top-2 principal components of the mean-centered embeddings. Each axis is
/// signed so that its largest-magnitude loading is positive.
Projection project_2d(const EmbeddingTable& table);

std::string projection_csv(const Projection& p);

/// ROC plot of FAR against 1 - FRR.
std::string svg_roc(const std::vector<RocPoint>& curve);

/// Scatter colored by identity, circles for faces and squares for voices.
std::string svg_projection(const Projection& p);

}  // namespace xmodal

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

#include <filesystem>
#include <vector>

#include "xmodal/synth.hpp"

namespace xmodal {

struct EmbeddingRow {
  int identity_id = 0;
  Modality modality = Modality::image;
  Gender gender = Gender::A;
  int nationality = 0;
  int age_group = 0;
  std::vector<double> values;
};

/// Embeddings of one split, in manifest record order.
struct EmbeddingTable {
  int dim = 0;
  std::vector<EmbeddingRow> rows;

  /// Row indices of one modality.
  std::vector<size_t> rows_of(Modality m) const;
};

/// CSV: identity_id,modality,gender,nationality,age_group,e0,...,e{dim-1}
void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingTable& t);
std::string embeddings_csv(const EmbeddingTable& t);
EmbeddingTable read_embeddings_csv(const std::filesystem::path& path);

}  // namespace xmodal

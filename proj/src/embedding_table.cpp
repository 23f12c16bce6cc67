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

#include "xmodal/embedding_table.hpp"

#include <string>

#include "csv.hpp"
#include "xmodal/error.hpp"

namespace xmodal {

std::vector<size_t> EmbeddingTable::rows_of(Modality m) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < rows.size(); ++i)
    if (rows[i].modality == m) out.push_back(i);
  return out;
}

std::string embeddings_csv(const EmbeddingTable& t) {
  std::string text = "identity_id,modality,gender,nationality,age_group";
  for (int k = 0; k < t.dim; ++k) text += ",e" + std::to_string(k);
  text += '\n';
  for (const auto& r : t.rows) {
    text += std::to_string(r.identity_id) + ',' + std::string(to_string(r.modality)) + ',' +
            std::string(to_string(r.gender)) + ',' + nationality_name(r.nationality) + ',' +
            age_group_name(r.age_group);
    for (double v : r.values) text += ',' + csv::fmt_double(v);
    text += '\n';
  }
  return text;
}

void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingTable& t) {
  csv::write_text(path, embeddings_csv(t));
}

EmbeddingTable read_embeddings_csv(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error("empty embeddings file " + path.string());
  const auto header = csv::split(lines[0]);
  if (header.size() < 6 || header[0] != "identity_id" || header[1] != "modality")
    throw Error("bad embeddings header in " + path.string());
  EmbeddingTable t;
  t.dim = static_cast<int>(header.size()) - 5;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() != header.size())
      throw Error("embeddings line " + std::to_string(i + 1) + " has wrong field count");
    EmbeddingRow r;
    r.identity_id = csv::parse_int(f[0], "identity_id");
    r.modality = parse_modality(f[1]);
    r.gender = parse_gender(f[2]);
    r.nationality = parse_nationality(f[3]);
    r.age_group = parse_age_group(f[4]);
    r.values.reserve(t.dim);
    for (size_t k = 5; k < f.size(); ++k) r.values.push_back(csv::parse_double(f[k], "embedding value"));
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace xmodal

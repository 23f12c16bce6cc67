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

// Cross-modal evaluation protocols: verification (AUC / EER), 1:N forced
// matching, and R@K retrieval, with demographic stratification.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmodal/embedding_table.hpp"

namespace xmodal {

enum class SimilarityKind { cosine, neg_euclidean };
SimilarityKind parse_similarity(std::string_view s);
std::string_view to_string(SimilarityKind k);

/// Cosine similarity (default) or negated Euclidean distance.
double similarity(std::span<const double> a, std::span<const double> b,
                  SimilarityKind kind = SimilarityKind::cosine);

/// Mann-Whitney estimate: P(pos > neg) with ties counted one half.
double roc_auc(std::span<const double> pos, std::span<const double> neg);

/// Operating point where FAR(t) = fraction of neg >= t equals
/// FRR(t) = fraction of pos < t, interpolated linearly between the two
/// thresholds that bracket the crossing.
double eer(std::span<const double> pos, std::span<const double> neg);

struct RocPoint {
  double far = 0.0;
  double frr = 0.0;
  double threshold = 0.0;  // +inf for the final all-reject point
};

/// One point per distinct score, ascending threshold, then the +inf point.
std::vector<RocPoint> roc_curve(std::span<const double> pos, std::span<const double> neg);

enum class Stratum { random, G, N, A, GNA };
Stratum parse_stratum(std::string_view s);
std::string_view to_string(Stratum s);

struct VerificationPair {
  size_t audio_row = 0;  // indices into the EmbeddingTable
  size_t image_row = 0;
  bool is_match = false;
  bool same_gender = false;
  bool same_nationality = false;
  bool same_age = false;

  /// Shared attributes as letters from "GNA", or "-" when none.
  std::string strata_code() const;
};

/// Half positives, half negatives. Under a stratum other than random every
/// negative pair shares the named attribute(s).
std::vector<VerificationPair> build_pairs(const EmbeddingTable& table, int n_pairs, Stratum stratify,
                                          std::uint64_t seed);

std::vector<double> score_pairs(const EmbeddingTable& table, std::span<const VerificationPair> pairs,
                                SimilarityKind kind = SimilarityKind::cosine);

/// True iff the true entry's similarity is the strict maximum; ties fail.
bool forced_match(std::span<const double> probe, std::span<const std::span<const double>> gallery,
                  size_t true_index, SimilarityKind kind = SimilarityKind::cosine);

enum class Direction { voice_to_face, face_to_voice };
Direction parse_direction(std::string_view s);
std::string_view to_string(Direction d);

/// Mean forced-match success; each gallery holds the probe identity plus
/// n_c - 1 imposter identities, all in the opposite modality.
double matching_accuracy(const EmbeddingTable& table, Direction direction, int n_c, int trials,
                         std::uint64_t seed, SimilarityKind kind = SimilarityKind::cosine);

/// Fraction of queries with a same-identity item among the top K of the
/// opposite-modality gallery. gender_filter restricts the gallery to the
/// query's gender. Score ties are ordered by a seeded shuffle.
std::map<int, double> recall_at_k(const EmbeddingTable& table, Direction direction,
                                  std::span<const int> k_values, std::uint64_t seed,
                                  bool gender_filter, SimilarityKind kind = SimilarityKind::cosine);

/// Expected R@K under a uniformly random ranking of the same gallery.
double recall_chance_level(const EmbeddingTable& table, Direction direction, int k,
                           bool gender_filter);

struct EvalReport {
  std::string task;  // "verify", "match" or "retrieve"
  std::string stratum;
  double auc = -1.0;  // verification only
  double eer = -1.0;
  std::map<int, double> accuracy_by_n;
  std::map<int, double> recall_at_k;
  std::map<int, double> chance_by_k;
};

}  // namespace xmodal

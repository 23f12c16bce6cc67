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

#include "xmodal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "xmodal/error.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

namespace {

enum : std::uint64_t {
  kTagPairs = 21,
  kTagMatch = 22,
  kTagRetrieve = 23,
};

void require_nonempty(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw Error("score lists must be non-empty");
}

// Rows of each identity, split by modality.
struct ByIdentity {
  std::map<int, std::vector<size_t>> image;
  std::map<int, std::vector<size_t>> audio;

  explicit ByIdentity(const EmbeddingTable& t) {
    for (size_t i = 0; i < t.rows.size(); ++i)
      (t.rows[i].modality == Modality::image ? image : audio)[t.rows[i].identity_id].push_back(i);
  }
  const std::map<int, std::vector<size_t>>& of(Modality m) const {
    return m == Modality::image ? image : audio;
  }
};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

Modality probe_modality(Direction d) {
  return d == Direction::voice_to_face ? Modality::audio : Modality::image;
}

Modality other(Modality m) { return m == Modality::image ? Modality::audio : Modality::image; }

bool shares(const EmbeddingRow& a, const EmbeddingRow& b, Stratum s) {
  const bool g = a.gender == b.gender;
  const bool n = a.nationality == b.nationality;
  const bool ag = a.age_group == b.age_group;
  switch (s) {
    case Stratum::random: return true;
    case Stratum::G: return g;
    case Stratum::N: return n;
    case Stratum::A: return ag;
    case Stratum::GNA: return g && n && ag;
  }
  return false;
}

}  // namespace

SimilarityKind parse_similarity(std::string_view s) {
  if (s == "cosine") return SimilarityKind::cosine;
  if (s == "neg_euclidean") return SimilarityKind::neg_euclidean;
  throw Error("unknown similarity: " + std::string(s));
}

std::string_view to_string(SimilarityKind k) {
  return k == SimilarityKind::cosine ? "cosine" : "neg_euclidean";
}

double similarity(std::span<const double> a, std::span<const double> b, SimilarityKind kind) {
  if (a.size() != b.size()) throw Error("similarity of vectors with different dimensions");
  if (kind == SimilarityKind::neg_euclidean) {
    double sq = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    return -std::sqrt(sq);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error("cosine similarity of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double roc_auc(std::span<const double> pos, std::span<const double> neg) {
  require_nonempty(pos, neg);
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.push_back({s, true});
  for (double s : neg) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  // Sum of mid-ranks of the positives (ranks start at 1).
  double rank_sum = 0.0;
  for (size_t i = 0; i < all.size();) {
    size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k)
      if (all[k].positive) rank_sum += mid_rank;
    i = j;
  }
  const auto np = static_cast<double>(pos.size());
  const auto nn = static_cast<double>(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<RocPoint> roc_curve(std::span<const double> pos, std::span<const double> neg) {
  require_nonempty(pos, neg);
  std::vector<double> p(pos.begin(), pos.end()), n(neg.begin(), neg.end());
  std::sort(p.begin(), p.end());
  std::sort(n.begin(), n.end());
  std::vector<double> thresholds(p);
  thresholds.insert(thresholds.end(), n.begin(), n.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<RocPoint> curve;
  curve.reserve(thresholds.size() + 1);
  size_t pos_below = 0, neg_below = 0;
  for (double t : thresholds) {
    while (pos_below < p.size() && p[pos_below] < t) ++pos_below;
    while (neg_below < n.size() && n[neg_below] < t) ++neg_below;
    curve.push_back({static_cast<double>(n.size() - neg_below) / n.size(),
                     static_cast<double>(pos_below) / p.size(), t});
  }
  curve.push_back({0.0, 1.0, std::numeric_limits<double>::infinity()});
  return curve;
}

double eer(std::span<const double> pos, std::span<const double> neg) {
  const auto curve = roc_curve(pos, neg);
  // FAR - FRR is 1 at the lowest threshold and -1 at +inf.
  for (size_t i = 0; i < curve.size(); ++i) {
    const double d = curve[i].far - curve[i].frr;
    if (d > 0.0) continue;
    if (d == 0.0 || i == 0) return curve[i].far;
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    const double da = a.far - a.frr;
    const double alpha = da / (da - d);
    return a.far + alpha * (b.far - a.far);
  }
  return curve.back().far;
}

Stratum parse_stratum(std::string_view s) {
  if (s == "random") return Stratum::random;
  if (s == "G") return Stratum::G;
  if (s == "N") return Stratum::N;
  if (s == "A") return Stratum::A;
  if (s == "GNA") return Stratum::GNA;
  throw Error("unknown stratum: " + std::string(s));
}

std::string_view to_string(Stratum s) {
  switch (s) {
    case Stratum::random: return "random";
    case Stratum::G: return "G";
    case Stratum::N: return "N";
    case Stratum::A: return "A";
    case Stratum::GNA: return "GNA";
  }
  return "?";
}

std::string VerificationPair::strata_code() const {
  std::string s;
  if (same_gender) s += 'G';
  if (same_nationality) s += 'N';
  if (same_age) s += 'A';
  return s.empty() ? "-" : s;
}

std::vector<VerificationPair> build_pairs(const EmbeddingTable& table, int n_pairs, Stratum stratify,
                                          std::uint64_t seed) {
  if (n_pairs < 2) throw Error("need at least 2 pairs");
  const ByIdentity by(table);
  std::vector<int> both;
  for (const auto& [id, rows] : by.audio)
    if (by.image.count(id)) both.push_back(id);
  if (both.size() < 2) throw Error("need at least 2 identities with both modalities");

  // Negative anchors (audio side) and their admissible image-side partners.
  std::vector<int> anchors;
  std::map<int, std::vector<int>> partners;
  for (const auto& [a, arows] : by.audio) {
    const auto& ra = table.rows[arows.front()];
    for (const auto& [b, brows] : by.image) {
      if (a == b || !shares(ra, table.rows[brows.front()], stratify)) continue;
      partners[a].push_back(b);
    }
    if (partners.count(a)) anchors.push_back(a);
  }
  if (anchors.empty())
    throw Error("stratum " + std::string(to_string(stratify)) +
                " is infeasible: no two identities share the required attributes");

  auto rng = make_rng(seed, {kTagPairs, static_cast<std::uint64_t>(stratify)});
  std::vector<VerificationPair> pairs;
  pairs.reserve(n_pairs);
  const int n_pos = n_pairs / 2;
  for (int k = 0; k < n_pos; ++k) {
    const int id = pick(both, rng);
    VerificationPair p;
    p.audio_row = pick(by.audio.at(id), rng);
    p.image_row = pick(by.image.at(id), rng);
    p.is_match = p.same_gender = p.same_nationality = p.same_age = true;
    pairs.push_back(p);
  }
  for (int k = n_pos; k < n_pairs; ++k) {
    const int a = pick(anchors, rng);
    const int b = pick(partners.at(a), rng);
    VerificationPair p;
    p.audio_row = pick(by.audio.at(a), rng);
    p.image_row = pick(by.image.at(b), rng);
    const auto& ra = table.rows[p.audio_row];
    const auto& rb = table.rows[p.image_row];
    p.same_gender = ra.gender == rb.gender;
    p.same_nationality = ra.nationality == rb.nationality;
    p.same_age = ra.age_group == rb.age_group;
    pairs.push_back(p);
  }
  return pairs;
}

std::vector<double> score_pairs(const EmbeddingTable& table, std::span<const VerificationPair> pairs,
                                SimilarityKind kind) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs)
    scores.push_back(similarity(table.rows.at(p.audio_row).values, table.rows.at(p.image_row).values, kind));
  return scores;
}

bool forced_match(std::span<const double> probe, std::span<const std::span<const double>> gallery,
                  size_t true_index, SimilarityKind kind) {
  if (gallery.size() < 2) throw Error("forced matching needs a gallery of at least 2");
  if (true_index >= gallery.size()) throw Error("true index outside the gallery");
  const double target = similarity(probe, gallery[true_index], kind);
  for (size_t j = 0; j < gallery.size(); ++j) {
    if (j == true_index) continue;
    if (similarity(probe, gallery[j], kind) >= target) return false;
  }
  return true;
}

Direction parse_direction(std::string_view s) {
  if (s == "voice_to_face" || s == "voice->face" || s == "v2f") return Direction::voice_to_face;
  if (s == "face_to_voice" || s == "face->voice" || s == "f2v") return Direction::face_to_voice;
  throw Error("unknown direction: " + std::string(s));
}

std::string_view to_string(Direction d) {
  return d == Direction::voice_to_face ? "voice_to_face" : "face_to_voice";
}

double matching_accuracy(const EmbeddingTable& table, Direction direction, int n_c, int trials,
                         std::uint64_t seed, SimilarityKind kind) {
  if (n_c < 2) throw Error("gallery size n_c must be at least 2");
  if (trials < 1) throw Error("trials must be positive");
  const ByIdentity by(table);
  const Modality pm = probe_modality(direction);
  const auto& probes = by.of(pm);
  const auto& galleries = by.of(other(pm));

  std::vector<int> gallery_ids;
  for (const auto& [id, rows] : galleries) gallery_ids.push_back(id);
  std::vector<int> probe_ids;
  for (const auto& [id, rows] : probes)
    if (galleries.count(id)) probe_ids.push_back(id);
  if (static_cast<int>(gallery_ids.size()) < n_c || probe_ids.empty())
    throw Error("forced matching with n_c = " + std::to_string(n_c) + " needs at least " +
                std::to_string(n_c) + " identities, table has " + std::to_string(gallery_ids.size()));

  auto rng = make_rng(seed, {kTagMatch, static_cast<std::uint64_t>(direction),
                             static_cast<std::uint64_t>(n_c)});
  long hits = 0;
  std::vector<std::span<const double>> gallery(n_c);
  std::vector<int> pool;
  for (int t = 0; t < trials; ++t) {
    const int id = pick(probe_ids, rng);
    const auto& probe = table.rows[pick(probes.at(id), rng)].values;
    pool.clear();
    for (int g : gallery_ids)
      if (g != id) pool.push_back(g);
    const auto true_index = static_cast<size_t>(uniform_index(rng, n_c));
    size_t next = 0;
    for (int k = 0; k < n_c; ++k) {
      int gid = id;
      if (static_cast<size_t>(k) != true_index) {
        const auto j = next + uniform_index(rng, pool.size() - next);
        std::swap(pool[next], pool[j]);
        gid = pool[next++];
      }
      gallery[k] = table.rows[pick(galleries.at(gid), rng)].values;
    }
    if (forced_match(probe, gallery, true_index, kind)) ++hits;
  }
  return static_cast<double>(hits) / trials;
}

namespace {

// Gallery rows for one query under the optional gender restriction.
std::vector<size_t> gallery_for(const EmbeddingTable& table, const std::vector<size_t>& candidates,
                                const EmbeddingRow& query, bool gender_filter) {
  if (!gender_filter) return candidates;
  std::vector<size_t> out;
  for (size_t r : candidates)
    if (table.rows[r].gender == query.gender) out.push_back(r);
  return out;
}

}  // namespace

std::map<int, double> recall_at_k(const EmbeddingTable& table, Direction direction,
                                  std::span<const int> k_values, std::uint64_t seed,
                                  bool gender_filter, SimilarityKind kind) {
  for (int k : k_values)
    if (k < 1) throw Error("R@K needs K >= 1");
  const Modality pm = probe_modality(direction);
  const auto queries = table.rows_of(pm);
  const auto candidates = table.rows_of(other(pm));
  if (candidates.empty()) throw Error("empty retrieval gallery");
  if (queries.empty()) throw Error("no retrieval queries");

  std::map<int, long> hits;
  for (int k : k_values) hits[k] = 0;
  std::vector<std::pair<double, size_t>> ranked;
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    const auto& q = table.rows[queries[qi]];
    auto gallery = gallery_for(table, candidates, q, gender_filter);
    if (gallery.empty()) throw Error("empty retrieval gallery");
    auto rng = make_rng(seed, {kTagRetrieve, static_cast<std::uint64_t>(qi)});
    shuffle(gallery.begin(), gallery.end(), rng);
    ranked.clear();
    bool any_match = false;
    for (size_t r : gallery) {
      ranked.emplace_back(similarity(q.values, table.rows[r].values, kind), r);
      any_match = any_match || table.rows[r].identity_id == q.identity_id;
    }
    if (!any_match)
      throw Error("identity " + std::to_string(q.identity_id) +
                  " has no item in the retrieval gallery");
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    // First rank (1-based) holding a same-identity item.
    size_t first_hit = 0;
    while (table.rows[ranked[first_hit].second].identity_id != q.identity_id) ++first_hit;
    for (int k : k_values)
      if (first_hit < static_cast<size_t>(k)) ++hits[k];
  }
  std::map<int, double> out;
  for (const auto& [k, h] : hits) out[k] = static_cast<double>(h) / queries.size();
  return out;
}

double recall_chance_level(const EmbeddingTable& table, Direction direction, int k,
                           bool gender_filter) {
  if (k < 1) throw Error("R@K needs K >= 1");
  const Modality pm = probe_modality(direction);
  const auto queries = table.rows_of(pm);
  const auto candidates = table.rows_of(other(pm));
  if (queries.empty() || candidates.empty()) throw Error("empty retrieval gallery");
  double total = 0.0;
  for (size_t qi : queries) {
    const auto& q = table.rows[qi];
    const auto gallery = gallery_for(table, candidates, q, gender_filter);
    const auto g = static_cast<long>(gallery.size());
    const auto r = static_cast<long>(std::count_if(gallery.begin(), gallery.end(), [&](size_t x) {
      return table.rows[x].identity_id == q.identity_id;
    }));
    // P(no match in the top k) = C(g - r, k) / C(g, k)
    double miss = 1.0;
    for (long i = 0; i < k && miss > 0.0; ++i)
      miss *= i < g - r ? static_cast<double>(g - r - i) / static_cast<double>(g - i) : 0.0;
    total += 1.0 - miss;
  }
  return total / queries.size();
}

}  // namespace xmodal

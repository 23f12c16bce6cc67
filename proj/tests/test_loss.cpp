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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "oracles.hpp"
#include "xmodal/error.hpp"
#include "xmodal/loss.hpp"

using namespace xmodal;

namespace {

MiniBatch make_batch(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  MiniBatch b;
  b.embeddings = Matrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), b.embeddings.row(static_cast<int>(i)).begin());
  b.labels = labels;
  b.modality_tags.assign(rows.size(), Modality::image);
  return b;
}

MiniBatch random_batch(int m, int d, int n_classes, std::uint64_t seed) {
  auto rng = make_rng(seed, {});
  std::vector<std::vector<double>> rows(m, std::vector<double>(d));
  std::vector<int> labels(m);
  for (int i = 0; i < m; ++i) {
    for (double& v : rows[i]) v = standard_normal(rng);
    labels[i] = static_cast<int>(uniform_index(rng, n_classes));
  }
  return make_batch(rows, labels);
}

ClassifierHead random_head(int d, int n, std::uint64_t seed) {
  auto h = ClassifierHead::init(d, n, seed);
  auto rng = make_rng(seed, {1});
  for (double& v : h.b) v = standard_normal(rng);
  return h;
}

// Independent center distance: means and residuals accumulated in reverse
// sample order.
double naive_center_distance(const MiniBatch& b) {
  double total = 0;
  std::map<int, std::vector<int>> members;
  for (int i = b.size() - 1; i >= 0; --i) members[b.labels[i]].push_back(i);
  for (const auto& [label, idx] : members) {
    std::vector<double> c(b.embeddings.cols, 0.0);
    for (int i : idx)
      for (int k = 0; k < b.embeddings.cols; ++k) c[k] += b.embeddings.at(i, k);
    for (double& v : c) v /= idx.size();
    for (int i : idx)
      for (int k = 0; k < b.embeddings.cols; ++k)
        total += (b.embeddings.at(i, k) - c[k]) * (b.embeddings.at(i, k) - c[k]);
  }
  return total;
}

}  // namespace

TEST_CASE("compute_centers") {
  const auto single = make_batch({{1, 2}, {3, 4}}, {0, 1});
  const auto cs = compute_centers(single);
  CHECK(cs.labels == std::vector<int>{0, 1});
  CHECK(cs.centers.row(0)[0] == 1.0);
  CHECK(cs.centers.row(1)[1] == 4.0);

  const auto two = make_batch({{2, 0}, {0, 0}}, {0, 0});
  const auto c2 = compute_centers(two);
  CHECK(c2.centers.at(0, 0) == 1.0);
  CHECK(c2.centers.at(0, 1) == 0.0);
  CHECK(c2.counts == std::vector<int>{2});

  const auto b = random_batch(30, 6, 4, 7);
  const auto c = compute_centers(b);
  for (size_t r = 0; r < c.labels.size(); ++r) {
    std::vector<double> ref(6, 0.0);
    int n = 0;
    for (int i = b.size() - 1; i >= 0; --i)
      if (b.labels[i] == c.labels[r]) {
        ++n;
        for (int k = 0; k < 6; ++k) ref[k] += b.embeddings.at(i, k);
      }
    CHECK(c.counts[r] == n);
    for (int k = 0; k < 6; ++k) REQUIRE(std::abs(c.centers.at(static_cast<int>(r), k) - ref[k] / n) < 1e-12);
  }
}

TEST_CASE("center_distance hand values") {
  const auto s = make_batch({{1, 2}, {3, 4}, {5, 6}}, {0, 1, 2});
  CHECK(center_distance(s, compute_centers(s)) == 0.0);
  const auto a = make_batch({{2, 0}, {0, 0}}, {0, 0});
  CHECK(std::abs(center_distance(a, compute_centers(a)) - 2.0) < 1e-9);
  const auto b = make_batch({{1, 0}, {0, 1}, {-1, -1}}, {0, 0, 0});
  CHECK(std::abs(center_distance(b, compute_centers(b)) - 4.0) < 1e-9);
}

TEST_CASE("center_distance invariances") {
  auto b = random_batch(20, 5, 3, 9);
  const double base = center_distance(b, compute_centers(b));
  CHECK(base == doctest::Approx(naive_center_distance(b)).epsilon(1e-12));
  CHECK(base >= 0.0);

  // Reverse the batch order.
  MiniBatch r = b;
  for (int i = 0; i < b.size(); ++i) {
    std::copy(b.embeddings.row(i).begin(), b.embeddings.row(i).end(), r.embeddings.row(b.size() - 1 - i).begin());
    r.labels[b.size() - 1 - i] = b.labels[i];
  }
  CHECK(center_distance(r, compute_centers(r)) == doctest::Approx(base).epsilon(1e-12));

  // Translate every member of class 1.
  for (int i = 0; i < b.size(); ++i)
    if (b.labels[i] == 1)
      for (int k = 0; k < 5; ++k) b.embeddings.at(i, k) += 3.5 * (k + 1);
  CHECK(center_distance(b, compute_centers(b)) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("softmax_xent") {
  ClassifierHead zero{2, 3, std::vector<double>(6, 0.0), std::vector<double>(3, 0.0)};
  const auto one = make_batch({{0.3, -0.7}}, {1});
  CHECK(std::abs(softmax_xent(zero, one).loss - std::log(3.0)) < 1e-9);

  // Only the bias of the true class is large: logit 50.
  ClassifierHead sat = zero;
  sat.b[1] = 50;
  const auto r = softmax_xent(sat, one);
  CHECK(r.loss >= 0.0);
  CHECK(r.loss < 1e-20);

  const auto b = random_batch(5, 3, 4, 21);
  const auto h = random_head(3, 4, 22);
  const auto xr = softmax_xent(h, b);
  long double ref = 0;
  for (int i = 0; i < 5; ++i) {
    long double denom = 0, num = 0;
    for (int j = 0; j < 4; ++j) {
      long double logit = h.b[j];
      for (int d = 0; d < 3; ++d) logit += static_cast<long double>(h.w(d, j)) * b.embeddings.at(i, d);
      denom += std::exp(logit);
      if (j == b.labels[i]) num = std::exp(logit);
      (void)num;
    }
    long double true_logit = h.b[b.labels[i]];
    for (int d = 0; d < 3; ++d) true_logit += static_cast<long double>(h.w(d, b.labels[i])) * b.embeddings.at(i, d);
    ref -= std::log(std::exp(true_logit) / denom);
    for (int j = 0; j < 4; ++j) {
      long double logit = h.b[j];
      for (int d = 0; d < 3; ++d) logit += static_cast<long double>(h.w(d, j)) * b.embeddings.at(i, d);
      const double g = static_cast<double>(std::exp(logit) / denom) - (j == b.labels[i] ? 1.0 : 0.0);
      REQUIRE(std::abs(xr.grad_logits.at(i, j) - g) < 1e-12);
    }
  }
  CHECK(std::abs(xr.loss - static_cast<double>(ref)) < 1e-10);
}

TEST_CASE("joint_loss special cases") {
  const auto b = random_batch(12, 4, 3, 31);
  const auto h = random_head(4, 3, 32);
  LossConfig zero{0.0};
  const auto j = joint_loss(h, b, zero);
  const auto x = softmax_xent(h, b);
  CHECK(std::memcmp(&j.total, &x.loss, sizeof(double)) == 0);
  CHECK(j.center == 0.0);

  ClassifierHead zh{2, 3, std::vector<double>(6, 0.0), std::vector<double>(3, 0.0)};
  const auto two = make_batch({{2, 0}, {0, 0}}, {0, 0});
  const auto r = joint_loss(zh, two, LossConfig{1.0});
  CHECK(std::abs(r.total - (2 * std::log(3.0) + 1.0)) < 1e-9);
  CHECK(r.total >= 0.0);
  CHECK_THROWS_AS(joint_loss(zh, two, LossConfig{-1.0}), Error);
}

TEST_CASE("joint_loss gradient matches finite differences through the mean") {
  auto b = random_batch(6, 4, 2, 41);
  b.labels = {0, 1, 0, 1, 0, 0};
  auto h = random_head(4, 3, 42);
  const LossConfig cfg{0.7};
  const auto r = joint_loss(h, b, cfg);
  const double step = 1e-5;
  double worst = 0;
  for (size_t i = 0; i < b.embeddings.data.size(); ++i) {
    const double keep = b.embeddings.data[i];
    b.embeddings.data[i] = keep + step;
    const double up = joint_loss(h, b, cfg).total;
    b.embeddings.data[i] = keep - step;
    const double down = joint_loss(h, b, cfg).total;
    b.embeddings.data[i] = keep;
    worst = std::max(worst, oracle::rel_err(r.grad_embeddings.data[i], (up - down) / (2 * step)));
  }
  for (auto* arr : {&h.W, &h.b}) {
    const auto& g = arr == &h.W ? r.grad_head.W : r.grad_head.b;
    for (size_t i = 0; i < arr->size(); ++i) {
      const double keep = (*arr)[i];
      (*arr)[i] = keep + step;
      const double up = joint_loss(h, b, cfg).total;
      (*arr)[i] = keep - step;
      const double down = joint_loss(h, b, cfg).total;
      (*arr)[i] = keep;
      worst = std::max(worst, oracle::rel_err(g[i], (up - down) / (2 * step)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("center gradient identity") {
  // d/df_k of d(f_c), with the center recomputed as the mean, equals
  // 2 (f_k - center).
  auto b = random_batch(8, 3, 2, 51);
  const auto c = compute_centers(b);
  // d is quadratic in f_k, so central differences carry no truncation
  // error and a wide step keeps round-off small.
  const double step = 1e-2;
  for (int i = 0; i < b.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      const double analytic = 2 * (b.embeddings.at(i, k) - c.centers.at(c.find(b.labels[i]), k));
      const double keep = b.embeddings.at(i, k);
      b.embeddings.at(i, k) = keep + step;
      const double up = center_distance(b, compute_centers(b));
      b.embeddings.at(i, k) = keep - step;
      const double down = center_distance(b, compute_centers(b));
      b.embeddings.at(i, k) = keep;
      REQUIRE(oracle::rel_err(analytic, (up - down) / (2 * step)) < 1e-8);
    }
}

TEST_CASE("a small center-only step shrinks class variance") {
  auto b = make_batch({{1, 2}, {2, 0}, {0, 1}, {-3, 1}, {-1, -2}, {-2, 0}}, {0, 0, 0, 1, 1, 1});
  ClassifierHead zh{2, 2, std::vector<double>(4, 0.0), std::vector<double>(2, 0.0)};
  const auto r = joint_loss(zh, b, LossConfig{1.0});
  const double before = center_distance(b, compute_centers(b));
  // Remove the softmax part of the gradient (identical for every sample
  // under a zero head) by stepping along the center term only.
  const auto c = compute_centers(b);
  for (int i = 0; i < b.size(); ++i)
    for (int k = 0; k < 2; ++k) b.embeddings.at(i, k) -= 0.01 * (b.embeddings.at(i, k) - c.centers.at(c.find(b.labels[i]), k));
  CHECK(center_distance(b, compute_centers(b)) < before);
  CHECK(r.center == doctest::Approx(0.5 * before));
}

TEST_CASE("ema centers") {
  EmaCenters st{Matrix(3, 2)};
  st.centers.at(2, 0) = 7.0;
  const auto b = make_batch({{1, 2}, {3, 4}}, {0, 0});
  ema_center_update(st, b, 1.0);
  CHECK(st.centers.at(0, 0) == 2.0);
  CHECK(st.centers.at(0, 1) == 3.0);
  CHECK(st.centers.at(2, 0) == 7.0);  // absent class unchanged
  CHECK(st.centers.at(1, 0) == 0.0);

  EmaCenters seq{Matrix(1, 1)}, cat{Matrix(1, 1)};
  ema_center_update(seq, make_batch({{1}}, {0}), 1.0);
  ema_center_update(seq, make_batch({{3}, {5}}, {0, 0}), 1.0);
  ema_center_update(cat, make_batch({{1}, {3}, {5}}, {0, 0, 0}), 1.0);
  CHECK(seq.centers.at(0, 0) == 4.0);
  CHECK(cat.centers.at(0, 0) == 3.0);

  CHECK_THROWS_AS(ema_center_update(st, b, 0.0), Error);

  // EMA mode uses the supplied centers as constants.
  ClassifierHead zh{2, 3, std::vector<double>(6, 0.0), std::vector<double>(3, 0.0)};
  LossConfig ema_cfg{1.0, CenterMode::ema, 0.5};
  const auto r = joint_loss(zh, b, ema_cfg, &st);
  // Center (2, 3): squared distances 2 + 2.
  CHECK(r.center == doctest::Approx(2.0));
  CHECK_THROWS_AS(joint_loss(zh, b, ema_cfg), Error);
}

TEST_CASE("head validation") {
  CHECK_THROWS_AS(ClassifierHead::init(4, 1, 0), Error);
  const auto h = ClassifierHead::init(4, 3, 0);
  CHECK(h == ClassifierHead::init(4, 3, 0));
  for (double v : h.b) CHECK(v == 0.0);
  auto b = random_batch(3, 4, 3, 1);
  b.labels[0] = 5;
  CHECK_THROWS_AS(softmax_xent(h, b), Error);
}

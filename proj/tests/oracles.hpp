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

// Independent reference implementations used by the tests. These are
// deliberately naive: direct sums, brute-force counting, cyclic Jacobi.

#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace oracle {

/// |X_k| for k in [0, n/2] of the zero-padded frame, direct O(n^2) sum in
/// long double.
inline std::vector<double> dft_magnitude(const std::vector<double>& frame, int n) {
  std::vector<double> out(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    long double re = 0, im = 0;
    for (size_t t = 0; t < frame.size(); ++t) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * k * static_cast<long double>(t) / n;
      re += frame[t] * std::cos(ang);
      im += frame[t] * std::sin(ang);
    }
    out[k] = static_cast<double>(std::sqrt(re * re + im * im));
  }
  return out;
}

/// Triangle weight of source cell s for a destination cell centered at c.
inline double tent(int s, double c, double support) {
  return std::max(0.0, 1.0 - std::abs((s + 0.5 - c) / support));
}

/// Non-separable evaluation of the antialiased tent resize: every output cell
/// is a normalized 2-D weighted sum over all source cells.
inline std::vector<double> resize_2d(const std::vector<double>& src, int h, int w, int oh, int ow) {
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  const double sy = static_cast<double>(h) / oh, sx = static_cast<double>(w) / ow;
  const double supy = std::max(sy, 1.0), supx = std::max(sx, 1.0);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const double cy = (oy + 0.5) * sy, cx = (ox + 0.5) * sx;
      long double acc = 0, norm = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double wt = tent(y, cy, supy) * tent(x, cx, supx);
          acc += wt * src[static_cast<size_t>(y) * w + x];
          norm += wt;
        }
      out[static_cast<size_t>(oy) * ow + ox] = static_cast<double>(acc / norm);
    }
  return out;
}

/// Textbook bilinear upsampling with half-pixel centers and clamped edges.
inline std::vector<double> bilinear_up(const std::vector<double>& src, int h, int w, int oh, int ow) {
  auto sample = [&](int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return src[static_cast<size_t>(y) * w + x];
  };
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const double fy = std::clamp((oy + 0.5) * h / oh - 0.5, 0.0, h - 1.0);
      const double fx = std::clamp((ox + 0.5) * w / ow - 0.5, 0.0, w - 1.0);
      const int y0 = static_cast<int>(std::floor(fy)), x0 = static_cast<int>(std::floor(fx));
      const double ty = fy - y0, tx = fx - x0;
      out[static_cast<size_t>(oy) * ow + ox] =
          (1 - ty) * ((1 - tx) * sample(y0, x0) + tx * sample(y0, x0 + 1)) +
          ty * ((1 - tx) * sample(y0 + 1, x0) + tx * sample(y0 + 1, x0 + 1));
    }
  return out;
}

/// Pairwise Mann-Whitney count.
inline double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos)
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return wins / (static_cast<double>(pos.size()) * neg.size());
}

/// Threshold sweep with O(n) counting per threshold. The crossing is found
/// by scanning segments from the all-reject end backwards.
inline double eer(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<double> ts(pos);
  ts.insert(ts.end(), neg.begin(), neg.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  ts.push_back(std::numeric_limits<double>::infinity());
  std::vector<double> far, frr;
  for (double t : ts) {
    double a = 0, r = 0;
    for (double n : neg) a += n >= t;
    for (double p : pos) r += p < t;
    far.push_back(a / neg.size());
    frr.push_back(r / pos.size());
  }
  for (size_t i = ts.size() - 1; i > 0; --i) {
    const double d1 = far[i] - frr[i];
    const double d0 = far[i - 1] - frr[i - 1];
    if (d0 > 0 && d1 <= 0) {
      if (d1 == 0) return far[i];
      // Solve far(a) = frr(a) along the segment.
      const double a = d0 / (d0 - d1);
      return far[i - 1] + a * (far[i] - far[i - 1]);
    }
  }
  return far[0];  // d <= 0 already at the lowest threshold
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n x n).
/// Eigenvalues are returned descending with matching column vectors.
struct Eigen {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};

inline Eigen jacobi(std::vector<double> a, int n) {
  std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
  auto V = [&](int i, int j) -> double& { return v[static_cast<size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(A(p, q)) < 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return A(x, x) > A(y, y); });
  Eigen e;
  for (int i : order) {
    e.values.push_back(A(i, i));
    std::vector<double> col(n);
    for (int k = 0; k < n; ++k) col[k] = V(k, i);
    e.vectors.push_back(col);
  }
  return e;
}

/// Fresh scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("xmodal_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& p) const { return path / p; }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle

namespace oracle {

/// Relative error with a floor on the denominator so that two values that
/// are both at round-off level compare as equal.
inline double rel_err(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace oracle

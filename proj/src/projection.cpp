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

#include "xmodal/projection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "csv.hpp"
#include "xmodal/error.hpp"

namespace xmodal {

Projection project_2d(const EmbeddingTable& table) {
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n < 3) throw Error("projection needs at least 3 rows");
  const auto d = static_cast<Eigen::Index>(table.dim);
  if (d < 2) throw Error("projection needs at least 2 dimensions");
  std::set<std::vector<double>> distinct;
  for (const auto& r : table.rows) {
    if (static_cast<Eigen::Index>(r.values.size()) != d) throw Error("ragged embedding table");
    distinct.insert(r.values);
  }
  if (distinct.size() < 2) throw Error("projection needs at least 2 distinct rows");

  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = table.rows[i].values[k];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");

  Projection p;
  p.mean.assign(mean.data(), mean.data() + d);
  const auto& evals = solver.eigenvalues();  // ascending
  for (Eigen::Index k = d; k-- > 0;) p.eigenvalues.push_back(evals(k));
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    p.components[c].assign(axis.data(), axis.data() + d);
  }

  Eigen::Map<const Eigen::VectorXd> a0(p.components[0].data(), d);
  Eigen::Map<const Eigen::VectorXd> a1(p.components[1].data(), d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = table.rows[i];
    p.rows.push_back({r.identity_id, r.modality, x.row(i).dot(a0), x.row(i).dot(a1)});
  }
  return p;
}

std::string projection_csv(const Projection& p) {
  std::string text = "identity_id,modality,x,y\n";
  for (const auto& r : p.rows)
    text += std::to_string(r.identity_id) + ',' + std::string(to_string(r.modality)) + ',' +
            csv::fmt_double(r.x) + ',' + csv::fmt_double(r.y) + '\n';
  return text;
}

namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string svg_open(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kSize) + "\" height=\"" +
         num(kSize) + "\" viewBox=\"0 0 " + num(kSize) + " " + num(kSize) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         "<text x=\"" + num(kSize / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         title + "</text>\n";
}

std::string frame(const std::string& xlabel, const std::string& ylabel) {
  const double lo = kMargin, hi = kSize - kMargin;
  return "<rect x=\"" + num(lo) + "\" y=\"" + num(lo) + "\" width=\"" + num(hi - lo) + "\" height=\"" +
         num(hi - lo) + "\" fill=\"none\" stroke=\"black\"/>\n" +
         "<text x=\"" + num(kSize / 2) + "\" y=\"" + num(kSize - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xlabel + "</text>\n" +
         "<text x=\"14\" y=\"" + num(kSize / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 " +
         num(kSize / 2) + ")\">" + ylabel + "</text>\n";
}

}  // namespace

std::string svg_roc(const std::vector<RocPoint>& curve) {
  const double lo = kMargin, span = kSize - 2 * kMargin;
  std::string s = svg_open("ROC") + frame("false acceptance rate", "1 - false rejection rate");
  s += "<line x1=\"" + num(lo) + "\" y1=\"" + num(lo + span) + "\" x2=\"" + num(lo + span) + "\" y2=\"" +
       num(lo) + "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  // Points run from (1, 1) at the lowest threshold to (0, 0) at +inf.
  s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < curve.size(); ++i) {
    if (i) s += ' ';
    s += num(lo + curve[i].far * span) + ',' + num(lo + span - (1.0 - curve[i].frr) * span);
  }
  s += "\"/>\n</svg>\n";
  return s;
}

std::string svg_projection(const Projection& p) {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& r : p.rows) {
    xmin = std::min(xmin, r.x);
    xmax = std::max(xmax, r.x);
    ymin = std::min(ymin, r.y);
    ymax = std::max(ymax, r.y);
  }
  const double xr = std::max(xmax - xmin, 1e-12), yr = std::max(ymax - ymin, 1e-12);
  const double lo = kMargin + 8, span = kSize - 2 * kMargin - 16;
  std::string s = svg_open("2-D projection (PCA)") + frame("component 1", "component 2");
  for (const auto& r : p.rows) {
    const double px = lo + (r.x - xmin) / xr * span;
    const double py = lo + span - (r.y - ymin) / yr * span;
    const double hue = std::fmod(r.identity_id * 137.508, 360.0);
    const std::string fill = "hsl(" + num(hue) + ",70%,45%)";
    if (r.modality == Modality::image) {
      s += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"4\" fill=\"" + fill + "\"/>\n";
    } else {
      s += "<rect x=\"" + num(px - 4) + "\" y=\"" + num(py - 4) +
           "\" width=\"8\" height=\"8\" fill=\"" + fill + "\"/>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace xmodal

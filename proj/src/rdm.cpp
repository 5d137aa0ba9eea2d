// Copyright 2026 The cpcsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpcsim/alignment/rdm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "cpcsim/csv.hpp"
#include "cpcsim/error.hpp"

namespace cpcsim {

std::string_view to_string(DistanceMetric metric) {
  return metric == DistanceMetric::cosine ? "cosine" : "euclidean";
}

DistanceMetric parse_distance_metric(std::string_view name) {
  if (name == "euclidean") return DistanceMetric::euclidean;
  if (name == "cosine") return DistanceMetric::cosine;
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

void Rdm::validate() const {
  const auto n = matrix.rows();
  if (n != matrix.cols()) throw InvalidArgument("RDM must be square");
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("RDM needs one label per row");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (matrix(i, i) != 0.0) throw InvalidArgument("RDM diagonal must be exactly 0");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = matrix(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw InvalidArgument("RDM entries must be finite and nonnegative");
      }
      if (std::abs(v - matrix(j, i)) > 1e-12) throw InvalidArgument("RDM is not symmetric");
    }
  }
}

std::vector<std::string> index_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return labels;
}

Rdm compute_rdm(const Eigen::MatrixXd& points, DistanceMetric metric,
                std::vector<std::string> labels) {
  const auto n = points.rows();
  if (n < 2) throw InvalidArgument("compute_rdm needs at least 2 points");
  if (!points.allFinite()) throw InvalidArgument("points must be finite");
  if (labels.empty()) labels = index_labels(static_cast<std::size_t>(n));
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("one label per point is required");
  }
  Eigen::VectorXd norms;
  if (metric == DistanceMetric::cosine) {
    norms = points.rowwise().norm();
    if ((norms.array() == 0.0).any()) {
      throw InvalidArgument("cosine metric is undefined for zero-norm rows");
    }
  }
  Rdm rdm{std::move(labels), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = 0.0;
      if (metric == DistanceMetric::euclidean) {
        d = (points.row(i) - points.row(j)).norm();
      } else {
        d = std::max(0.0, 1.0 - points.row(i).dot(points.row(j)) / (norms(i) * norms(j)));
      }
      rdm.matrix(i, j) = d;
      rdm.matrix(j, i) = d;
    }
  }
  return rdm;
}

std::vector<double> upper_triangle(const Rdm& rdm) {
  const auto n = rdm.matrix.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) out.push_back(rdm.matrix(i, j));
  }
  return out;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw InvalidArgument("correlation needs two equal-length non-empty samples");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw NumericalError("correlation is undefined for a zero-variance sample");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double rsa(const Rdm& a, const Rdm& b, CorrelationMethod method) {
  if (a.size() != b.size()) throw InvalidArgument("RSA needs RDMs of the same size");
  if (a.labels != b.labels) {
    throw InvalidArgument("RSA needs both RDMs in the same label order");
  }
  if (a.size() < 2) throw InvalidArgument("RSA needs at least 2 stimuli");
  const std::vector<double> x = upper_triangle(a);
  const std::vector<double> y = upper_triangle(b);
  if (method == CorrelationMethod::pearson) return pearson_correlation(x, y);
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson_correlation(rx, ry);
}

Rdm reorder(const Rdm& rdm, std::span<const std::size_t> order) {
  const std::size_t n = rdm.size();
  if (order.size() != n) throw InvalidArgument("reorder needs a full permutation");
  std::vector<bool> seen(n, false);
  for (std::size_t o : order) {
    if (o >= n || seen[o]) throw InvalidArgument("reorder index is not a permutation");
    seen[o] = true;
  }
  Rdm out;
  out.labels.resize(n);
  out.matrix.resize(rdm.matrix.rows(), rdm.matrix.cols());
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = rdm.labels[order[i]];
    for (std::size_t j = 0; j < n; ++j) {
      out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rdm.matrix(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[j]));
    }
  }
  return out;
}

Rdm reorder_by_labels(const Rdm& rdm, const std::vector<std::string>& labels) {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < rdm.labels.size(); ++i) position[rdm.labels[i]] = i;
  if (position.size() != rdm.labels.size()) throw InvalidArgument("RDM labels are not unique");
  if (labels.size() != rdm.size()) throw InvalidArgument("label sets differ in size");
  std::vector<std::size_t> order;
  order.reserve(labels.size());
  for (const auto& label : labels) {
    const auto it = position.find(label);
    if (it == position.end()) throw InvalidArgument("label '" + label + "' not found in RDM");
    order.push_back(it->second);
  }
  return reorder(rdm, order);
}

std::string rdm_to_csv(const Rdm& rdm) {
  csv::Table table;
  table.header = rdm.labels;
  for (Eigen::Index i = 0; i < rdm.matrix.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < rdm.matrix.cols(); ++j) {
      row.push_back(csv::format_double(rdm.matrix(i, j)));
    }
    table.rows.push_back(std::move(row));
  }
  return csv::to_string(table);
}

void write_rdm_csv(const std::filesystem::path& path, const Rdm& rdm) {
  rdm.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << rdm_to_csv(rdm);
}

namespace {

Rdm rdm_from_table(const csv::Table& table) {
  const bool has_row_labels = !table.header.empty() && table.header.front().empty();
  const std::size_t offset = has_row_labels ? 1 : 0;
  const std::size_t n = table.header.size() - offset;
  if (table.rows.size() != n) {
    throw InvalidArgument("RDM csv must be square: " + std::to_string(table.rows.size()) +
                          " rows for " + std::to_string(n) + " labels");
  }
  Rdm rdm;
  rdm.labels.assign(table.header.begin() + static_cast<std::ptrdiff_t>(offset),
                    table.header.end());
  rdm.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      rdm.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_double(table.rows[i][j + offset]);
    }
  }
  rdm.validate();
  return rdm;
}

}  // namespace

Rdm parse_rdm_csv(std::string_view text) { return rdm_from_table(csv::parse(text)); }

Rdm read_rdm_csv(const std::filesystem::path& path) { return rdm_from_table(csv::read(path)); }

LabeledPoints read_points_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const bool has_labels = !table.header.empty() && table.header.front() == "label";
  const std::size_t offset = has_labels ? 1 : 0;
  const std::size_t d = table.header.size() - offset;
  if (d == 0) throw InvalidArgument("points csv has no coordinate columns");
  LabeledPoints out;
  out.points.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out.labels.push_back(has_labels ? table.rows[i][0] : std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) {
      out.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_double(table.rows[i][j + offset]);
    }
  }
  return out;
}

}  // namespace cpcsim

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

#ifndef CPCSIM_ALIGNMENT_RDM_HPP_
#define CPCSIM_ALIGNMENT_RDM_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cpcsim {

enum class DistanceMetric { euclidean, cosine };
enum class CorrelationMethod { pearson, spearman };

std::string_view to_string(DistanceMetric metric);
DistanceMetric parse_distance_metric(std::string_view name);

// Representational dissimilarity matrix: symmetric, zero diagonal,
// nonnegative, one label per stimulus.
struct Rdm {
  std::vector<std::string> labels;
  Eigen::MatrixXd matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }

  // Throws InvalidArgument if any invariant is violated.
  void validate() const;
};

// "0", "1", ... for n stimuli.
std::vector<std::string> index_labels(std::size_t n);

// Rows of `points` are stimuli. Cosine distance is 1 - cos, clamped at 0.
Rdm compute_rdm(const Eigen::MatrixXd& points, DistanceMetric metric,
                std::vector<std::string> labels = {});

// Strict upper triangle, row-major.
std::vector<double> upper_triangle(const Rdm& rdm);

double pearson_correlation(std::span<const double> x, std::span<const double> y);
// Ranks starting at 1; ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Correlation of the two upper triangles. Both RDMs must carry the same
// labels in the same order.
double rsa(const Rdm& a, const Rdm& b, CorrelationMethod method);

// result[i][j] = rdm[order[i]][order[j]]
Rdm reorder(const Rdm& rdm, std::span<const std::size_t> order);
// Reorders `rdm` so that its labels follow `labels`.
Rdm reorder_by_labels(const Rdm& rdm, const std::vector<std::string>& labels);

// Square CSV: one header row of labels, then n numeric rows. A leading
// label column (header cell empty) is accepted on input.
void write_rdm_csv(const std::filesystem::path& path, const Rdm& rdm);
std::string rdm_to_csv(const Rdm& rdm);
Rdm read_rdm_csv(const std::filesystem::path& path);
Rdm parse_rdm_csv(std::string_view text);

// Points CSV for `cpcsim rdm`: header row; a first column named "label" is
// taken as stimulus labels, every other column is a coordinate.
struct LabeledPoints {
  std::vector<std::string> labels;
  Eigen::MatrixXd points;
};
LabeledPoints read_points_csv(const std::filesystem::path& path);

}  // namespace cpcsim

#endif  // CPCSIM_ALIGNMENT_RDM_HPP_

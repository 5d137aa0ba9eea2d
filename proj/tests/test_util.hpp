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

#ifndef CPCSIM_TESTS_TEST_UTIL_HPP_
#define CPCSIM_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace testutil {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  }
  return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& gen, Eigen::Index d) {
  const Eigen::MatrixXd a = random_matrix(gen, d, d);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cpcsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil

#endif  // CPCSIM_TESTS_TEST_UTIL_HPP_

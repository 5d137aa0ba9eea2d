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

#ifndef CPCSIM_TESTS_ALIGNMENT_FIXTURES_HPP_
#define CPCSIM_TESTS_ALIGNMENT_FIXTURES_HPP_

#include <numeric>
#include <vector>

#include "cpcsim/alignment/rdm.hpp"
#include "cpcsim/rng.hpp"

namespace testutil {

struct PermutedPair {
  cpcsim::Rdm a;
  cpcsim::Rdm b;
  std::vector<std::size_t> truth;  // row i of a matches row truth[i] of b
};

// Ten points in 3-d with coordinates of scale 10, and the same RDM with rows
// shuffled.
inline PermutedPair make_permuted_pair(std::uint64_t seed, Eigen::Index n = 10) {
  cpcsim::Rng rng(seed);
  Eigen::MatrixXd points(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) points(i, j) = 10.0 * rng.normal();
  }
  PermutedPair out;
  out.a = cpcsim::compute_rdm(points, cpcsim::DistanceMetric::euclidean);
  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));
  out.b = cpcsim::reorder(out.a, perm);
  out.truth.resize(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out.truth[perm[k]] = k;
  return out;
}

// Strictly positive probability vector.
inline Eigen::VectorXd random_marginal(cpcsim::Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 0.2 + rng.uniform();
  return v / v.sum();
}

}  // namespace testutil

#endif  // CPCSIM_TESTS_ALIGNMENT_FIXTURES_HPP_

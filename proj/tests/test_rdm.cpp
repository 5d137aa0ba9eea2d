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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "cpcsim/alignment/rdm.hpp"
#include "cpcsim/error.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

namespace cpcsim {
namespace {

TEST(RdmTest, TwoIdenticalPointsGiveZeroMatrix) {
  Eigen::MatrixXd p(2, 3);
  p << 1, 2, 3, 1, 2, 3;
  const Rdm rdm = compute_rdm(p, DistanceMetric::euclidean);
  EXPECT_EQ(rdm.matrix, Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(rdm.labels, (std::vector<std::string>{"0", "1"}));
}

TEST(RdmTest, UnitVectorsAreRootTwoApart) {
  const Rdm rdm = compute_rdm(Eigen::MatrixXd::Identity(2, 2), DistanceMetric::euclidean);
  EXPECT_NEAR(rdm.matrix(0, 1), std::sqrt(2.0), 1e-12);
}

TEST(RdmTest, MatchesDoubleLoopOracle) {
  std::mt19937_64 gen(1);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 2 + rep % 11;
    const Eigen::MatrixXd p = testutil::random_matrix(gen, n, 1 + rep % 4);
    for (bool cosine : {false, true}) {
      const Rdm rdm = compute_rdm(p, cosine ? DistanceMetric::cosine : DistanceMetric::euclidean);
      EXPECT_LE((rdm.matrix - oracle::pairwise_distances(p, cosine)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NO_THROW(rdm.validate());
    }
  }
}

TEST(RdmTest, InvalidInputs) {
  EXPECT_THROW(compute_rdm(Eigen::MatrixXd::Ones(1, 2), DistanceMetric::euclidean), InvalidArgument);
  Eigen::MatrixXd p = Eigen::MatrixXd::Ones(3, 2);
  p.row(1).setZero();
  EXPECT_THROW(compute_rdm(p, DistanceMetric::cosine), InvalidArgument);
  p(0, 0) = std::nan("");
  EXPECT_THROW(compute_rdm(p, DistanceMetric::euclidean), InvalidArgument);
  Rdm bad{index_labels(2), Eigen::MatrixXd::Ones(2, 2)};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(RsaTest, SelfCorrelationIsOne) {
  std::mt19937_64 gen(2);
  const Rdm d = compute_rdm(testutil::random_matrix(gen, 8, 3), DistanceMetric::euclidean);
  EXPECT_NEAR(rsa(d, d, CorrelationMethod::pearson), 1.0, 1e-12);
  EXPECT_NEAR(rsa(d, d, CorrelationMethod::spearman), 1.0, 1e-12);
}

TEST(RsaTest, SpearmanIgnoresMonotoneTransform) {
  std::mt19937_64 gen(3);
  const Rdm d = compute_rdm(testutil::random_matrix(gen, 7, 2), DistanceMetric::euclidean);
  Rdm e = d;
  e.matrix = (2.0 * d.matrix.array() + 5.0).matrix();
  e.matrix.diagonal().setZero();
  EXPECT_NEAR(rsa(d, e, CorrelationMethod::spearman), 1.0, 1e-12);
}

TEST(RsaTest, HandBuiltFourByFour) {
  Eigen::MatrixXd a(4, 4);
  a << 0, 1, 2, 3,
       1, 0, 4, 5,
       2, 4, 0, 6,
       3, 5, 6, 0;
  Eigen::MatrixXd b(4, 4);
  b << 0, 2, 1, 7,
       2, 0, 3, 3,
       1, 3, 0, 9,
       7, 3, 9, 0;
  const Rdm ra{index_labels(4), a};
  const Rdm rb{index_labels(4), b};
  // Upper triangles (1,2,3,4,5,6) and (2,1,7,3,3,9).
  const std::vector<double> x = {1, 2, 3, 4, 5, 6};
  const std::vector<double> y = {2, 1, 7, 3, 3, 9};
  EXPECT_NEAR(rsa(ra, rb, CorrelationMethod::pearson), oracle::pearson(x, y), 1e-12);
  EXPECT_NEAR(rsa(ra, rb, CorrelationMethod::spearman), oracle::spearman(x, y), 1e-12);
}

TEST(RsaTest, RandomInstancesMatchOracles) {
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 3 + rep % 10;
    Rdm a = compute_rdm(testutil::random_matrix(gen, n, 2), DistanceMetric::euclidean);
    Rdm b = compute_rdm(testutil::random_matrix(gen, n, 3), DistanceMetric::euclidean);
    if (rep % 3 == 0) b.matrix = b.matrix.array().round().matrix();  // force ties
    const auto ua = oracle::upper(a.matrix);
    const auto ub = oracle::upper(b.matrix);
    if (std::isnan(oracle::pearson(ub, ub))) continue;  // constant after rounding
    EXPECT_NEAR(rsa(a, b, CorrelationMethod::pearson), oracle::pearson(ua, ub), 1e-12);
    EXPECT_NEAR(rsa(a, b, CorrelationMethod::spearman), oracle::spearman(ua, ub), 1e-12);
  }
}

TEST(RsaTest, ConstantRdmIsUndefined) {
  const Rdm flat{index_labels(3), Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3)};
  std::mt19937_64 gen(5);
  const Rdm d = compute_rdm(testutil::random_matrix(gen, 3, 2), DistanceMetric::euclidean);
  EXPECT_THROW(rsa(flat, d, CorrelationMethod::pearson), NumericalError);
  const Rdm other = compute_rdm(testutil::random_matrix(gen, 4, 2), DistanceMetric::euclidean);
  EXPECT_THROW(rsa(d, other, CorrelationMethod::pearson), InvalidArgument);
}

TEST(RdmTest, ReorderPermutesRowsAndColumns) {
  std::mt19937_64 gen(6);
  const Rdm d = compute_rdm(testutil::random_matrix(gen, 5, 2), DistanceMetric::euclidean);
  const std::vector<std::size_t> order = {3, 0, 4, 1, 2};
  const Rdm r = reorder(d, order);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.labels[i], d.labels[order[i]]);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(r.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                d.matrix(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[j])));
    }
  }
  EXPECT_EQ(reorder_by_labels(r, d.labels).matrix, d.matrix);
}

TEST(RdmIoTest, CsvRoundTripIsExact) {
  std::mt19937_64 gen(7);
  Rdm d = compute_rdm(testutil::random_matrix(gen, 6, 3), DistanceMetric::cosine,
                      {"red", "orange", "yellow", "green", "blue", "violet"});
  const auto dir = testutil::scratch_dir("rdm_io");
  write_rdm_csv(dir / "d.csv", d);
  const Rdm back = read_rdm_csv(dir / "d.csv");
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.matrix, d.matrix);
  EXPECT_EQ(parse_rdm_csv(rdm_to_csv(d)).matrix, d.matrix);
  EXPECT_THROW(parse_rdm_csv("a,b\n0,1\n2,0\n"), InvalidArgument);
}

TEST(RdmIoTest, PointsCsvWithAndWithoutLabels) {
  const auto dir = testutil::scratch_dir("points_io");
  {
    std::ofstream out(dir / "p.csv");
    out << "label,x,y\nA,0,0\nB,3,4\n";
  }
  const LabeledPoints p = read_points_csv(dir / "p.csv");
  EXPECT_EQ(p.labels, (std::vector<std::string>{"A", "B"}));
  EXPECT_NEAR(compute_rdm(p.points, DistanceMetric::euclidean).matrix(0, 1), 5.0, 1e-15);
  {
    std::ofstream out(dir / "q.csv");
    out << "x,y\n1,1\n2,2\n";
  }
  EXPECT_EQ(read_points_csv(dir / "q.csv").labels, index_labels(2));
}

}  // namespace
}  // namespace cpcsim

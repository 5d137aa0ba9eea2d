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
#include <numeric>
#include <random>
#include <vector>

#include "alignment_fixtures.hpp"
#include "cpcsim/alignment/transport.hpp"
#include "cpcsim/error.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

namespace cpcsim {
namespace {

Eigen::MatrixXd random_cost(Rng& rng, Eigen::Index n, Eigen::Index m) {
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) c(i, j) = rng.uniform();
  }
  return c;
}

TEST(SinkhornTest, MarginalsMetAcrossRegularizations) {
  Rng rng(1);
  for (double eps : {1.0, 0.1, 0.01, 0.002}) {
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::MatrixXd c = random_cost(rng, 7, 9);
      const Eigen::VectorXd r = testutil::random_marginal(rng, 7);
      const Eigen::VectorXd s = testutil::random_marginal(rng, 9);
      const TransportPlan plan = sinkhorn(c, r, s, eps, 100000, 1e-9);
      EXPECT_LE(plan.max_marginal_residual(), 1e-9) << "eps " << eps;
      EXPECT_GE(plan.plan.minCoeff(), 0.0);
    }
  }
}

TEST(SinkhornTest, AgreesWithPlainScalingOracle) {
  Rng rng(2);
  const Eigen::MatrixXd c = random_cost(rng, 5, 6);
  const Eigen::VectorXd r = testutil::random_marginal(rng, 5);
  const Eigen::VectorXd s = testutil::random_marginal(rng, 6);
  const TransportPlan plan = sinkhorn(c, r, s, 0.5, 100000, 1e-13);
  const Eigen::MatrixXd want = oracle::sinkhorn_plain(c, r, s, 0.5, 5000);
  EXPECT_LE((plan.plan - want).cwiseAbs().maxCoeff(), 1e-12);
}

// At the optimum log P + C / eps splits into a row term plus a column term.
TEST(SinkhornTest, OptimalityConditionHolds) {
  Rng rng(3);
  const double eps = 0.05;
  const Eigen::MatrixXd c = random_cost(rng, 6, 6);
  const Eigen::VectorXd r = testutil::random_marginal(rng, 6);
  const TransportPlan plan = sinkhorn(c, r, r, eps, 100000, 1e-11);
  const Eigen::MatrixXd m = (plan.plan.array().log() + c.array() / eps).matrix();
  for (Eigen::Index i = 1; i < 6; ++i) {
    for (Eigen::Index j = 1; j < 6; ++j) {
      EXPECT_NEAR(m(i, j) - m(i, 0) - m(0, j) + m(0, 0), 0.0, 1e-8);
    }
  }
}

// No feasible perturbation of the solution lowers the entropic objective.
TEST(SinkhornTest, BeatsRandomFeasibleCouplings) {
  Rng rng(4);
  const double eps = 0.1;
  const Eigen::MatrixXd c = random_cost(rng, 5, 5);
  const Eigen::VectorXd r = testutil::random_marginal(rng, 5);
  const Eigen::VectorXd s = testutil::random_marginal(rng, 5);
  const TransportPlan plan = sinkhorn(c, r, s, eps, 100000, 1e-12);
  const double best = entropic_ot_objective(c, plan.plan, eps);
  int tried = 0;
  for (int rep = 0; rep < 20000; ++rep) {
    Eigen::VectorXd u(5);
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) {
      u(i) = rng.normal();
      v(i) = rng.normal();
    }
    u.array() -= u.mean();
    v.array() -= v.mean();
    const double t = 1e-4 * rng.uniform();
    const Eigen::MatrixXd other = plan.plan + t * u * v.transpose();
    if (other.minCoeff() <= 0.0) continue;
    ++tried;
    ASSERT_GE(entropic_ot_objective(c, other, eps), best - 1e-15);
  }
  EXPECT_GT(tried, 1000);
}

TEST(SinkhornTest, InvalidInputsRejected) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 2);
  const Eigen::VectorXd u = uniform_marginal(2);
  EXPECT_THROW(sinkhorn(c, u, u, 0.0), InvalidArgument);
  EXPECT_THROW(sinkhorn(c, Eigen::Vector2d(0.5, 0.6), u, 1.0), InvalidArgument);
  EXPECT_THROW(sinkhorn(c, Eigen::Vector2d(1.0, 0.0), u, 1.0), InvalidArgument);
  EXPECT_THROW(sinkhorn(c, uniform_marginal(3), u, 1.0), InvalidArgument);
}

TEST(GwCostTest, MatchesQuadrupleSum) {
  Rng rng(5);
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pair = testutil::make_permuted_pair(100 + rep, 6);
    const Rdm other = compute_rdm(testutil::random_matrix(gen, 5, 2),
                                  DistanceMetric::euclidean);
    const Eigen::MatrixXd plan = sinkhorn(random_cost(rng, 6, 5), testutil::random_marginal(rng, 6),
                                          testutil::random_marginal(rng, 5), 0.3)
                                     .plan;
    const double want = oracle::gw_cost_quadruple(pair.a.matrix, other.matrix, plan);
    EXPECT_NEAR(gw_cost(pair.a.matrix, other.matrix, plan), want, 1e-10 * std::max(1.0, want));
  }
}

TEST(GwTest, RecoversPermutations) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto pair = testutil::make_permuted_pair(seed);
    // Unit-scale points; the residual entropic blur grows with scale^4.
    pair.a.matrix *= 0.1;
    pair.b.matrix *= 0.1;
    GwOptions options;
    options.seed = seed;
    const GwResult result = gw_align(pair.a, pair.b, options);
    EXPECT_EQ(matching_accuracy(result.plan, pair.truth, 1), 1.0);
    EXPECT_LT(result.gw_distance, 1e-3);
  }
}

TEST(GwTest, SelfAlignmentAtFixedEpsilon) {
  auto pair = testutil::make_permuted_pair(21);
  pair.a.matrix *= 0.1;
  GwOptions options;
  options.epsilon = 0.01;
  const GwResult result = gw_align(pair.a, pair.a, options);
  std::vector<std::size_t> identity(10);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  EXPECT_EQ(result.epsilon, 0.01);
  EXPECT_EQ(matching_accuracy(result.plan, identity, 1), 1.0);
  EXPECT_LT(result.gw_distance, 1e-3);
}

TEST(GwTest, ObjectiveNeverIncreasesAndPlansAreFeasible) {
  const auto pair = testutil::make_permuted_pair(11);
  GwOptions options;
  options.n_init = 10;
  const GwResult result = gw_align(pair.a, pair.b, options);
  for (const GwRun& run : result.runs) {
    for (std::size_t t = 1; t < run.objective_history.size(); ++t) {
      EXPECT_LE(run.objective_history[t], run.objective_history[t - 1] + 1e-9);
    }
    EXPECT_LE(run.plan.max_marginal_residual(), 1e-6);
    EXPECT_EQ(run.objective, run.objective_history.back());
  }
}

TEST(GwTest, BestRunSelectionAndDeterminism) {
  const auto pair = testutil::make_permuted_pair(12);
  GwOptions options;
  options.n_init = 8;
  options.seed = 99;
  const GwResult serial = gw_align(pair.a, pair.b, options);
  options.n_threads = 4;
  const GwResult threaded = gw_align(pair.a, pair.b, options);
  EXPECT_EQ(serial.plan.plan, threaded.plan.plan);
  EXPECT_EQ(serial.best_init_index, threaded.best_init_index);
  EXPECT_EQ(serial.best_init_seed, derive_seed(99, serial.best_init_index));
  for (const GwRun& run : serial.runs) EXPECT_GE(run.objective, serial.objective);
  EXPECT_EQ(serial.runs[0].init, GwInit::identity);
  EXPECT_EQ(serial.runs[1].init, GwInit::anti_identity);
  EXPECT_EQ(serial.runs[2].init, GwInit::random);
}

TEST(GwTest, DefaultEpsilonScalesWithSquaredDistances) {
  const auto pair = testutil::make_permuted_pair(13);
  Rdm twice = pair.a;
  twice.matrix *= 2.0;
  const double e1 = default_gw_epsilon(pair.a, pair.a);
  EXPECT_NEAR(default_gw_epsilon(twice, twice), 4.0 * e1, 1e-12 * e1);
  const Rdm zero{index_labels(3), Eigen::MatrixXd::Zero(3, 3)};
  EXPECT_EQ(default_gw_epsilon(zero, zero), 1.0);
}

TEST(GwTest, DifferentSizesAreSupported) {
  const auto pair = testutil::make_permuted_pair(14, 6);
  const auto small = testutil::make_permuted_pair(15, 4);
  GwOptions options;
  options.n_init = 4;
  const GwResult result = gw_align(pair.a, small.a, options);
  EXPECT_EQ(result.plan.plan.rows(), 6);
  EXPECT_EQ(result.plan.plan.cols(), 4);
  EXPECT_LE(result.plan.max_marginal_residual(), 1e-6);
  EXPECT_GE(result.gw_distance, 0.0);
}

TEST(MatchingTest, TopKCountsRanks) {
  TransportPlan plan;
  plan.plan.resize(3, 3);
  plan.plan << 0.2, 0.1, 0.0,
               0.0, 0.1, 0.2,
               0.1, 0.1, 0.1;
  const std::vector<std::size_t> truth = {0, 1, 2};
  EXPECT_NEAR(matching_accuracy(plan, truth, 1), 1.0 / 3.0, 1e-15);  // row 2 tie picks column 0
  EXPECT_NEAR(matching_accuracy(plan, truth, 2), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(matching_accuracy(plan, truth, 3), 1.0);
  EXPECT_THROW(matching_accuracy(plan, truth, 0), InvalidArgument);
  EXPECT_THROW(matching_accuracy(plan, std::vector<std::size_t>{0, 0, 1}, 1), InvalidArgument);
  EXPECT_EQ(row_argmax(plan.plan), (std::vector<std::size_t>{0, 2, 0}));
}

}  // namespace
}  // namespace cpcsim

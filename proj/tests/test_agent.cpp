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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cpcsim/agent.hpp"
#include "cpcsim/error.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

namespace cpcsim {
namespace {

NiwParams random_prior(std::mt19937_64& gen, Eigen::Index d) {
  std::uniform_real_distribution<double> unit(0.05, 3.0);
  NiwParams p;
  p.mean = testutil::random_matrix(gen, d, 1);
  p.scale = unit(gen);
  p.dof = static_cast<double>(d) + unit(gen);
  p.scatter = testutil::random_spd(gen, d);
  return p;
}

oracle::Niw to_oracle(const NiwParams& p) { return {p.mean, p.scale, p.dof, p.scatter}; }

void expect_close(const NiwParams& got, const oracle::Niw& want, double tol) {
  EXPECT_NEAR(got.scale, want.kappa, tol);
  EXPECT_NEAR(got.dof, want.nu, tol);
  EXPECT_LE((got.mean - want.mean).cwiseAbs().maxCoeff(), tol);
  const double rel = (got.scatter - want.psi).cwiseAbs().maxCoeff() /
                     std::max(1.0, want.psi.cwiseAbs().maxCoeff());
  EXPECT_LE(rel, tol);
}

TEST(NiwTest, BatchMatchesSequentialAndRawMomentOracles) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> count(1, 25);
  for (Eigen::Index d : {1, 2, 5}) {
    for (int rep = 0; rep < 40; ++rep) {
      const NiwParams prior = random_prior(gen, d);
      const Eigen::MatrixXd rows = testutil::random_matrix(gen, count(gen), d, 3.0);
      const NiwParams batch = niw_update(prior, rows);
      expect_close(batch, oracle::niw_sequential(to_oracle(prior), rows), 1e-10);
      expect_close(batch, oracle::niw_raw_moments(to_oracle(prior), rows), 1e-9);
      EXPECT_EQ(batch.count, static_cast<std::size_t>(rows.rows()));
    }
  }
}

TEST(NiwTest, AddThenRemoveIsIdentity) {
  std::mt19937_64 gen(2);
  for (Eigen::Index d : {1, 3}) {
    const NiwParams prior = random_prior(gen, d);
    const NiwParams post = niw_update(prior, testutil::random_matrix(gen, 6, d));
    const Eigen::VectorXd x = testutil::random_matrix(gen, d, 1);
    const NiwParams back = niw_remove(niw_add(post, x), x);
    expect_close(back, to_oracle(post), 1e-11);
    EXPECT_EQ(back.count, post.count);
  }
}

TEST(NiwTest, AddFoldEqualsBatch) {
  std::mt19937_64 gen(3);
  const NiwParams prior = random_prior(gen, 2);
  const Eigen::MatrixXd rows = testutil::random_matrix(gen, 9, 2);
  NiwParams folded = prior;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) folded = niw_add(folded, rows.row(i).transpose());
  expect_close(folded, to_oracle(niw_update(prior, rows)), 1e-10);
}

TEST(NiwTest, EmptyUpdateReturnsPrior) {
  std::mt19937_64 gen(4);
  const NiwParams prior = random_prior(gen, 3);
  const NiwParams post = niw_update(prior, Eigen::MatrixXd(0, 3));
  expect_close(post, to_oracle(prior), 0.0);
}

TEST(NiwTest, RemoveFromEmptyThrows) {
  std::mt19937_64 gen(5);
  const NiwParams prior = random_prior(gen, 2);
  EXPECT_THROW(niw_remove(prior, Eigen::VectorXd::Zero(2)), InvalidArgument);
}

TEST(PredictiveTest, MatchesExplicitStudentT) {
  std::mt19937_64 gen(6);
  for (Eigen::Index d : {1, 2, 5}) {
    const NiwParams post = niw_update(random_prior(gen, d), testutil::random_matrix(gen, 7, d));
    const StudentT t = niw_predictive(post);
    const double dof = post.dof - static_cast<double>(d) + 1.0;
    const Eigen::MatrixXd scale = post.scatter * (post.scale + 1.0) / (post.scale * dof);
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::VectorXd x = testutil::random_matrix(gen, d, 1, 2.0);
      EXPECT_NEAR(t.log_density(x), oracle::student_t_logpdf(x, post.mean, scale, dof), 1e-10);
    }
  }
}

TEST(PredictiveTest, OneDimensionalMatchesQuadratureOverVariance) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 6; ++rep) {
    NiwParams post = niw_update(random_prior(gen, 1), testutil::random_matrix(gen, 4, 1));
    const StudentT t = niw_predictive(post);
    for (double x : {-2.0, 0.0, 0.7, 3.5}) {
      Eigen::VectorXd v(1);
      v << x;
      const double want = oracle::niw_predictive_quadrature_1d(x, post.mean(0), post.scale,
                                                               post.dof, post.scatter(0, 0));
      EXPECT_NEAR(std::exp(t.log_density(v)), want, 1e-9 * std::max(1.0, want));
    }
  }
}

TEST(PredictiveTest, NonSpdScaleThrows) {
  EXPECT_THROW(StudentT(Eigen::VectorXd::Zero(2), -Eigen::MatrixXd::Identity(2, 2), 3.0),
               NumericalError);
}

TEST(HyperparamsTest, IsotropicDefaultsAreValid) {
  const Hyperparams h = Hyperparams::isotropic(3, 4);
  EXPECT_NO_THROW(h.validate());
  EXPECT_DOUBLE_EQ(h.prior_dof, 5.0);
  EXPECT_EQ(h.n_signs, 4u);
}

TEST(HyperparamsTest, InvalidValuesRejected) {
  Hyperparams h = Hyperparams::isotropic(2, 3);
  h.prior_dof = 0.5;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = Hyperparams::isotropic(2, 3);
  h.prior_scatter(0, 1) = 5.0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = Hyperparams::isotropic(2, 3);
  h.n_signs = 0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = Hyperparams::isotropic(2, 2);
  h.sign_prior = {0.5, -0.1};
  EXPECT_THROW(h.validate(), InvalidArgument);
}

TEST(SamplingTest, ZeroTemperatureIsArgmaxWithLowestIndexTie) {
  Rng rng(1);
  const std::vector<double> w = {-1.0, 2.0, 2.0, 0.0};
  EXPECT_EQ(sample_from_log_weights(w, 0.0, rng), 1u);
}

TEST(SamplingTest, FrequenciesFollowSoftmax) {
  Rng rng(2);
  const std::vector<double> w = {std::log(0.2), std::log(0.5), std::log(0.3)};
  std::vector<double> counts(3, 0.0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) counts[sample_from_log_weights(w, 1.0, rng)] += 1.0;
  EXPECT_NEAR(counts[0] / n, 0.2, 0.005);
  EXPECT_NEAR(counts[1] / n, 0.5, 0.005);
  EXPECT_NEAR(counts[2] / n, 0.3, 0.005);
}

TEST(SamplingTest, AllNegativeInfinityThrows) {
  Rng rng(3);
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> w = {-inf, -inf};
  EXPECT_THROW(sample_from_log_weights(w, 1.0, rng), NumericalError);
  EXPECT_THROW(sample_from_log_weights(std::vector<double>{}, 1.0, rng), InvalidArgument);
  EXPECT_THROW(sample_from_log_weights(std::vector<double>{0.0}, -1.0, rng), InvalidArgument);
}

ObservationSet make_obs(const Eigen::MatrixXd& rows, std::size_t agent = 0) {
  ObservationSet obs;
  obs.agent_id = agent;
  obs.observations = rows;
  return obs;
}

TEST(AgentTest, GibbsUpdateUsesOnlyAssignedObservedRows) {
  Eigen::MatrixXd rows(4, 1);
  rows << 1.0, 2.0, 10.0, 11.0;
  ObservationSet obs = make_obs(rows);
  obs.observed = {true, true, true, false};
  const Hyperparams h = Hyperparams::isotropic(1, 2);
  AgentState state = init_agent(h, obs, 0);
  const AgentState out = gibbs_update_params(state, obs, {{0, 0, 1, 1}, AssignmentOwner::shared});
  EXPECT_EQ(out.signs[0].posterior.count, 2u);
  EXPECT_EQ(out.signs[1].posterior.count, 1u);
  const NiwParams want = niw_update(niw_prior(h), rows.topRows(2));
  EXPECT_NEAR(out.signs[0].posterior.mean(0), want.mean(0), 1e-14);
}

TEST(AgentTest, InitIsDeterministicAndUsesAllSignsEventually) {
  std::mt19937_64 gen(9);
  const ObservationSet obs = make_obs(testutil::random_matrix(gen, 40, 2));
  const Hyperparams h = Hyperparams::isotropic(2, 4);
  const AgentState a = init_agent(h, obs, 17);
  const AgentState b = init_agent(h, obs, 17);
  EXPECT_EQ(a.assignments, b.assignments);
  std::vector<bool> used(4, false);
  for (auto s : a.assignments) used[s] = true;
  EXPECT_EQ(std::count(used.begin(), used.end(), true), 4);
}

TEST(AgentTest, PredictiveFavoursNearbySign) {
  Eigen::MatrixXd rows(6, 1);
  rows << -5.0, -5.1, -4.9, 5.0, 5.1, 4.9;
  const ObservationSet obs = make_obs(rows);
  const AgentState state =
      gibbs_update_params(init_agent(Hyperparams::isotropic(1, 2), obs, 0), obs,
                          {{0, 0, 0, 1, 1, 1}, AssignmentOwner::shared});
  Eigen::VectorXd x(1);
  x << 4.5;
  const auto w = sign_log_weights(state, x);
  EXPECT_GT(w[1], w[0]);
  Rng rng(0);
  EXPECT_EQ(sample_sign_posterior(state, x, 0.0, rng), 1u);
}

TEST(AgentTest, JsonRoundTrip) {
  std::mt19937_64 gen(10);
  const ObservationSet obs = make_obs(testutil::random_matrix(gen, 12, 3), 2);
  Hyperparams h = Hyperparams::isotropic(3, 3);
  h.sign_prior = {0.2, 0.3, 0.5};
  const AgentState state = init_agent(h, obs, 4);
  const AgentState back = agent_state_from_json(nlohmann::json::parse(agent_state_to_json(state).dump()));
  EXPECT_EQ(back.agent_id, 2u);
  EXPECT_EQ(back.assignments, state.assignments);
  EXPECT_EQ(back.hyper.sign_prior, h.sign_prior);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(back.signs[s].posterior.mean, state.signs[s].posterior.mean);
    EXPECT_EQ(back.signs[s].posterior.scatter, state.signs[s].posterior.scatter);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
  EXPECT_EQ(sign_log_weights(back, x), sign_log_weights(state, x));
}

TEST(AgentTest, JsonRejectsBadSchema) {
  std::mt19937_64 gen(11);
  const ObservationSet obs = make_obs(testutil::random_matrix(gen, 5, 1));
  nlohmann::json j = agent_state_to_json(init_agent(Hyperparams::isotropic(1, 2), obs, 0));
  j["schema_version"] = 99;
  EXPECT_THROW(agent_state_from_json(j), InvalidArgument);
}

}  // namespace
}  // namespace cpcsim

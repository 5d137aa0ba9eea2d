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

#ifndef CPCSIM_ALIGNMENT_TRANSPORT_HPP_
#define CPCSIM_ALIGNMENT_TRANSPORT_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cpcsim/alignment/rdm.hpp"

namespace cpcsim {

struct TransportPlan {
  Eigen::MatrixXd plan;
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;

  // max over rows and columns of |plan sum - marginal|
  double max_marginal_residual() const;
};

Eigen::VectorXd uniform_marginal(std::size_t n);

// Entropic OT: argmin <C, P> + epsilon * sum P log P over couplings of
// (row_marginal, col_marginal). Log-domain iterations; stops once the
// marginal residual is <= tol. Marginals must be strictly positive and sum
// to 1 within 1e-9. Throws NumericalError if max_iter is reached first.
TransportPlan sinkhorn(const Eigen::MatrixXd& cost, const Eigen::VectorXd& row_marginal,
                       const Eigen::VectorXd& col_marginal, double epsilon,
                       std::size_t max_iter = 100000, double tol = 1e-9);

// <C, P> + epsilon * sum P log P  (0 log 0 = 0)
double entropic_ot_objective(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& plan,
                             double epsilon);

enum class GwInit { identity, anti_identity, random };
std::string_view to_string(GwInit init);

struct GwOptions {
  double epsilon = 0.0;  // <= 0 selects default_gw_epsilon
  std::size_t n_init = 100;
  std::uint64_t seed = 0;
  std::size_t max_outer = 1000;
  double outer_tol = 1e-12;  // relative objective decrease that ends a run
  std::size_t sinkhorn_max_iter = 100000;
  double sinkhorn_tol = 1e-10;
  std::size_t n_threads = 1;
  // Empty means uniform.
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;
};

struct GwRun {
  GwInit init = GwInit::identity;
  std::uint64_t init_seed = 0;
  TransportPlan plan;
  double objective = 0.0;    // entropic GW objective of `plan`
  double gw_distance = 0.0;  // unregularized GW cost of `plan`
  std::vector<double> objective_history;  // one entry per outer iterate at the final epsilon
  bool converged = false;
};

struct GwResult {
  TransportPlan plan;
  double gw_distance = 0.0;
  double objective = 0.0;
  double epsilon = 0.0;
  std::size_t n_init = 0;
  std::size_t best_init_index = 0;
  std::uint64_t best_init_seed = 0;
  std::vector<GwRun> runs;
};

// 0.0025 x (mean of all entries of both RDMs)^2; 1.0 if both are all-zero.
// The squared loss scales quadratically with the RDMs, so this keeps the
// returned plan unchanged when both RDMs are rescaled by the same factor.
double default_gw_epsilon(const Rdm& a, const Rdm& b);

// sum_{i,j,k,l} (a_ij - b_kl)^2 T_ik T_jl
double gw_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& plan);

// Entropic Gromov-Wasserstein alignment with square loss.
//
// Each run starts from an initial coupling (run 0 identity-biased, run 1
// anti-identity-biased, the rest random-permutation-biased) and performs
// conditional-gradient steps: the linearized problem is solved by sinkhorn
// and an exact line search on the entropic objective keeps it
// non-increasing. Runs are warm-started at 0.02 x mean^2 and annealed to
// the requested epsilon; objective_history covers the final epsilon only.
// The run with the lowest objective wins; ties go to the lowest init seed.
GwResult gw_align(const Rdm& a, const Rdm& b, const GwOptions& options = {});

// Fraction of rows whose k largest plan entries contain the true partner.
// Ties are ordered by lowest column index.
double matching_accuracy(const TransportPlan& plan,
                         std::span<const std::size_t> true_correspondence, std::size_t k);

std::vector<std::size_t> row_argmax(const Eigen::MatrixXd& plan);

}  // namespace cpcsim

#endif  // CPCSIM_ALIGNMENT_TRANSPORT_HPP_

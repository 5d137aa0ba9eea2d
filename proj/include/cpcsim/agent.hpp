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

#ifndef CPCSIM_AGENT_HPP_
#define CPCSIM_AGENT_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cpcsim/rng.hpp"
#include "cpcsim/world.hpp"
#include "json.hpp"

namespace cpcsim {

// Normal-Inverse-Wishart prior shared by every sign of an agent.
struct Hyperparams {
  Eigen::VectorXd prior_mean;     // mu_0
  double prior_scale = 1.0;       // kappa_0 (pseudo-count)
  double prior_dof = 0.0;         // nu_0, must exceed obs_dim - 1
  Eigen::MatrixXd prior_scatter;  // Psi_0, SPD
  std::size_t n_signs = 1;
  // Prior weights over signs (normalized internally). Empty means uniform.
  std::vector<double> sign_prior;

  std::size_t obs_dim() const { return static_cast<std::size_t>(prior_mean.size()); }

  // Throws InvalidArgument on shape errors or a non-SPD scatter.
  void validate() const;

  // mu_0 = 0, Psi_0 = scatter * I, nu_0 = obs_dim + 2 unless given.
  static Hyperparams isotropic(std::size_t obs_dim, std::size_t n_signs, double scale = 0.01,
                               double scatter = 1.0, double dof = -1.0);
};

// Parameters of one NIW distribution. `count` is the number of observations
// folded into the prior.
struct NiwParams {
  Eigen::VectorXd mean;
  double scale = 1.0;
  double dof = 1.0;
  Eigen::MatrixXd scatter;
  std::size_t count = 0;
};

NiwParams niw_prior(const Hyperparams& hyper);

// Closed-form batch update with the given observation rows.
NiwParams niw_update(const NiwParams& prior, const Eigen::MatrixXd& rows);

// Rank-one updates; add and remove are exact inverses of each other.
NiwParams niw_add(const NiwParams& params, const Eigen::VectorXd& x);
NiwParams niw_remove(const NiwParams& params, const Eigen::VectorXd& x);

// Multivariate Student-t with a cached Cholesky factor of its scale matrix.
class StudentT {
 public:
  StudentT() = default;
  StudentT(Eigen::VectorXd location, const Eigen::MatrixXd& scale_matrix, double dof);

  double log_density(const Eigen::VectorXd& x) const;
  const Eigen::VectorXd& location() const { return location_; }
  double dof() const { return dof_; }

 private:
  Eigen::VectorXd location_;
  Eigen::MatrixXd chol_lower_;
  double dof_ = 1.0;
  double log_norm_ = 0.0;
};

// Posterior predictive of an NIW: t_{nu-d+1}(mu, Psi (kappa+1) / (kappa (nu-d+1))).
StudentT niw_predictive(const NiwParams& params);

struct SignModel {
  NiwParams posterior;
  StudentT predictive;
};

struct AgentState {
  std::size_t agent_id = 0;
  Hyperparams hyper;
  std::vector<SignModel> signs;
  std::vector<std::size_t> assignments;  // per stimulus: this agent's belief about w

  std::size_t n_signs() const { return signs.size(); }
  std::size_t obs_dim() const { return hyper.obs_dim(); }
  std::size_t n_stimuli() const { return assignments.size(); }
};

enum class AssignmentOwner { speaker_view, listener_view, shared };

struct SignAssignment {
  std::vector<std::size_t> signs;
  AssignmentOwner owner = AssignmentOwner::shared;
};

// Uniform random assignments, then the conjugate update per sign.
AgentState init_agent(const Hyperparams& hyper, const ObservationSet& observations,
                      std::uint64_t seed);

// Normalized log prior over signs; uniform when `sign_prior` is empty.
std::vector<double> log_sign_prior(const Hyperparams& hyper);

// log p(obs | sign) with the sign's parameters marginalized out.
double posterior_predictive_logdensity(const AgentState& state, const Eigen::VectorXd& obs,
                                       std::size_t sign);

// log p(obs | s) + log p(s) for every sign s.
std::vector<double> sign_log_weights(const AgentState& state, const Eigen::VectorXd& obs);

// Draws s with probability proportional to exp(weight_s / temperature).
// temperature == 0 selects the argmax (lowest index on ties).
std::size_t sample_from_log_weights(std::span<const double> log_weights, double temperature,
                                    Rng& rng);

std::size_t sample_sign_posterior(const AgentState& state, const Eigen::VectorXd& obs,
                                  double temperature, Rng& rng);

// Recomputes every sign's posterior from exactly its assigned (and observed)
// stimuli. The returned state stores `assignments`.
AgentState gibbs_update_params(const AgentState& state, const ObservationSet& observations,
                               const SignAssignment& assignments);

constexpr int kAgentStateSchemaVersion = 1;

nlohmann::json agent_state_to_json(const AgentState& state);
AgentState agent_state_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const Hyperparams& hyper);
void from_json(const nlohmann::json& j, Hyperparams& hyper);

}  // namespace cpcsim

#endif  // CPCSIM_AGENT_HPP_

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

#include "cpcsim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cpcsim/error.hpp"

namespace cpcsim {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

void check_obs(const AgentState& state, const Eigen::VectorXd& obs) {
  if (static_cast<std::size_t>(obs.size()) != state.obs_dim()) {
    throw InvalidArgument("observation dimension " + std::to_string(obs.size()) +
                          " does not match agent obs_dim " +
                          std::to_string(state.obs_dim()));
  }
}

SignModel make_sign_model(NiwParams posterior) {
  StudentT predictive = niw_predictive(posterior);
  return {std::move(posterior), std::move(predictive)};
}

}  // namespace

void Hyperparams::validate() const {
  const auto d = prior_mean.size();
  if (d == 0) throw InvalidArgument("prior_mean must be non-empty");
  if (!prior_mean.allFinite()) throw InvalidArgument("prior_mean must be finite");
  if (!(prior_scale > 0.0) || !std::isfinite(prior_scale)) {
    throw InvalidArgument("prior_scale must be positive");
  }
  if (!(prior_dof > static_cast<double>(d) - 1.0) || !std::isfinite(prior_dof)) {
    throw InvalidArgument("prior_dof must exceed obs_dim - 1");
  }
  if (prior_scatter.rows() != d || prior_scatter.cols() != d) {
    throw InvalidArgument("prior_scatter must be obs_dim x obs_dim");
  }
  if (!is_spd(prior_scatter)) {
    throw InvalidArgument("prior_scatter must be symmetric positive-definite");
  }
  if (n_signs == 0) throw InvalidArgument("n_signs must be positive");
  if (!sign_prior.empty()) {
    if (sign_prior.size() != n_signs) {
      throw InvalidArgument("sign_prior must have n_signs entries");
    }
    double total = 0.0;
    for (double w : sign_prior) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvalidArgument("sign_prior weights must be finite and nonnegative");
      }
      total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("sign_prior weights sum to zero");
  }
}

Hyperparams Hyperparams::isotropic(std::size_t obs_dim, std::size_t n_signs, double scale,
                                   double scatter, double dof) {
  const auto d = static_cast<Eigen::Index>(obs_dim);
  Hyperparams h;
  h.prior_mean = Eigen::VectorXd::Zero(d);
  h.prior_scale = scale;
  h.prior_dof = dof > 0.0 ? dof : static_cast<double>(obs_dim) + 2.0;
  h.prior_scatter = scatter * Eigen::MatrixXd::Identity(d, d);
  h.n_signs = n_signs;
  return h;
}

std::vector<double> log_sign_prior(const Hyperparams& hyper) {
  const std::size_t k = hyper.n_signs;
  if (hyper.sign_prior.empty()) {
    return std::vector<double>(k, -std::log(static_cast<double>(k)));
  }
  double total = 0.0;
  for (double w : hyper.sign_prior) total += w;
  std::vector<double> out(k);
  for (std::size_t s = 0; s < k; ++s) {
    out[s] = hyper.sign_prior[s] > 0.0 ? std::log(hyper.sign_prior[s] / total) : kNegInf;
  }
  return out;
}

NiwParams niw_prior(const Hyperparams& hyper) {
  return {hyper.prior_mean, hyper.prior_scale, hyper.prior_dof, hyper.prior_scatter, 0};
}

NiwParams niw_update(const NiwParams& prior, const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return prior;
  if (rows.cols() != prior.mean.size()) {
    throw InvalidArgument("observation rows do not match NIW dimension");
  }
  const double n = static_cast<double>(rows.rows());
  const Eigen::VectorXd xbar = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - xbar.transpose();
  const Eigen::MatrixXd scatter = centered.transpose() * centered;
  const Eigen::VectorXd diff = xbar - prior.mean;

  NiwParams post;
  post.scale = prior.scale + n;
  post.dof = prior.dof + n;
  post.mean = (prior.scale * prior.mean + n * xbar) / post.scale;
  post.scatter = prior.scatter + scatter + (prior.scale * n / post.scale) * (diff * diff.transpose());
  post.count = prior.count + static_cast<std::size_t>(rows.rows());
  return post;
}

NiwParams niw_add(const NiwParams& params, const Eigen::VectorXd& x) {
  const Eigen::VectorXd diff = x - params.mean;
  NiwParams out;
  out.scale = params.scale + 1.0;
  out.dof = params.dof + 1.0;
  out.mean = (params.scale * params.mean + x) / out.scale;
  out.scatter = params.scatter + (params.scale / out.scale) * (diff * diff.transpose());
  out.count = params.count + 1;
  return out;
}

NiwParams niw_remove(const NiwParams& params, const Eigen::VectorXd& x) {
  if (params.count == 0) throw InvalidArgument("cannot remove from an empty NIW posterior");
  NiwParams out;
  out.scale = params.scale - 1.0;
  out.dof = params.dof - 1.0;
  out.mean = (params.scale * params.mean - x) / out.scale;
  const Eigen::VectorXd diff = x - out.mean;
  out.scatter = params.scatter - (out.scale / params.scale) * (diff * diff.transpose());
  out.count = params.count - 1;
  return out;
}

StudentT::StudentT(Eigen::VectorXd location, const Eigen::MatrixXd& scale_matrix, double dof)
    : location_(std::move(location)), dof_(dof) {
  Eigen::LLT<Eigen::MatrixXd> llt(scale_matrix);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Student-t scale matrix is not positive-definite");
  }
  chol_lower_ = llt.matrixL();
  const double d = static_cast<double>(location_.size());
  const double half_log_det = chol_lower_.diagonal().array().log().sum();
  log_norm_ = std::lgamma(0.5 * (dof_ + d)) - std::lgamma(0.5 * dof_) -
              0.5 * d * std::log(dof_ * std::numbers::pi) - half_log_det;
}

double StudentT::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = chol_lower_.triangularView<Eigen::Lower>().solve(x - location_);
  const double d = static_cast<double>(location_.size());
  return log_norm_ - 0.5 * (dof_ + d) * std::log1p(z.squaredNorm() / dof_);
}

StudentT niw_predictive(const NiwParams& params) {
  const double d = static_cast<double>(params.mean.size());
  const double dof = params.dof - d + 1.0;
  if (!(dof > 0.0)) throw NumericalError("NIW degrees of freedom too small for a predictive");
  const double factor = (params.scale + 1.0) / (params.scale * dof);
  return StudentT(params.mean, factor * params.scatter, dof);
}

AgentState init_agent(const Hyperparams& hyper, const ObservationSet& observations,
                      std::uint64_t seed) {
  hyper.validate();
  if (observations.obs_dim() != hyper.obs_dim()) {
    throw InvalidArgument("observations do not match prior dimension");
  }
  if (!observations.observations.allFinite()) {
    throw InvalidArgument("observations must be finite");
  }
  AgentState state;
  state.agent_id = observations.agent_id;
  state.hyper = hyper;
  SignAssignment initial;
  initial.signs.resize(observations.n_stimuli());
  Rng rng(derive_seed(seed, observations.agent_id));
  for (auto& s : initial.signs) s = rng.uniform_index(hyper.n_signs);
  state.assignments = initial.signs;
  return gibbs_update_params(state, observations, initial);
}

double posterior_predictive_logdensity(const AgentState& state, const Eigen::VectorXd& obs,
                                       std::size_t sign) {
  if (sign >= state.n_signs()) throw InvalidArgument("sign index out of range");
  check_obs(state, obs);
  return state.signs[sign].predictive.log_density(obs);
}

std::vector<double> sign_log_weights(const AgentState& state, const Eigen::VectorXd& obs) {
  check_obs(state, obs);
  std::vector<double> weights = log_sign_prior(state.hyper);
  for (std::size_t s = 0; s < state.n_signs(); ++s) {
    weights[s] += state.signs[s].predictive.log_density(obs);
  }
  return weights;
}

std::size_t sample_from_log_weights(std::span<const double> log_weights, double temperature,
                                    Rng& rng) {
  if (log_weights.empty()) throw InvalidArgument("no signs to sample from");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be finite and nonnegative");
  }
  const auto best = std::max_element(log_weights.begin(), log_weights.end());
  const double max_weight = *best;
  if (std::isnan(max_weight) || max_weight == kNegInf) {
    throw NumericalError("all sign densities are -inf or NaN");
  }
  if (temperature == 0.0) {
    return static_cast<std::size_t>(best - log_weights.begin());
  }
  std::vector<double> cumulative(log_weights.size());
  double total = 0.0;
  for (std::size_t s = 0; s < log_weights.size(); ++s) {
    total += std::exp((log_weights[s] - max_weight) / temperature);
    cumulative[s] = total;
  }
  const double u = rng.uniform() * total;
  for (std::size_t s = 0; s < cumulative.size(); ++s) {
    if (u < cumulative[s]) return s;
  }
  return static_cast<std::size_t>(best - log_weights.begin());
}

std::size_t sample_sign_posterior(const AgentState& state, const Eigen::VectorXd& obs,
                                  double temperature, Rng& rng) {
  const std::vector<double> weights = sign_log_weights(state, obs);
  return sample_from_log_weights(weights, temperature, rng);
}

AgentState gibbs_update_params(const AgentState& state, const ObservationSet& observations,
                               const SignAssignment& assignments) {
  if (assignments.signs.size() != observations.n_stimuli()) {
    throw InvalidArgument("assignment length does not match observations");
  }
  if (observations.obs_dim() != state.obs_dim()) {
    throw InvalidArgument("observations do not match agent obs_dim");
  }
  const std::size_t k = state.hyper.n_signs;
  std::vector<std::vector<Eigen::Index>> members(k);
  for (std::size_t i = 0; i < assignments.signs.size(); ++i) {
    const std::size_t s = assignments.signs[i];
    if (s >= k) throw InvalidArgument("assignment sign index out of range");
    if (observations.is_observed(i)) members[s].push_back(static_cast<Eigen::Index>(i));
  }
  AgentState out;
  out.agent_id = state.agent_id;
  out.hyper = state.hyper;
  out.assignments = assignments.signs;
  out.signs.reserve(k);
  const NiwParams prior = niw_prior(state.hyper);
  for (std::size_t s = 0; s < k; ++s) {
    const Eigen::MatrixXd rows = observations.observations(members[s], Eigen::all);
    out.signs.push_back(make_sign_model(niw_update(prior, rows)));
  }
  return out;
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m) {
      throw InvalidArgument("ragged matrix in json");
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      out(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
  }
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const Hyperparams& hyper) {
  j = nlohmann::json{{"prior_mean", vector_json(hyper.prior_mean)},
                     {"prior_scale", hyper.prior_scale},
                     {"prior_dof", hyper.prior_dof},
                     {"prior_scatter", matrix_json(hyper.prior_scatter)},
                     {"n_signs", hyper.n_signs},
                     {"sign_prior", hyper.sign_prior}};
}

void from_json(const nlohmann::json& j, Hyperparams& hyper) {
  hyper.prior_mean = vector_from_json(j.at("prior_mean"));
  hyper.prior_scale = j.at("prior_scale").get<double>();
  hyper.prior_dof = j.at("prior_dof").get<double>();
  hyper.prior_scatter = matrix_from_json(j.at("prior_scatter"));
  hyper.n_signs = j.at("n_signs").get<std::size_t>();
  hyper.sign_prior = j.value("sign_prior", std::vector<double>{});
}

nlohmann::json agent_state_to_json(const AgentState& state) {
  nlohmann::json signs = nlohmann::json::array();
  for (const auto& sign : state.signs) {
    const NiwParams& p = sign.posterior;
    signs.push_back({{"mean", vector_json(p.mean)},
                     {"scale", p.scale},
                     {"dof", p.dof},
                     {"scatter", matrix_json(p.scatter)},
                     {"count", p.count}});
  }
  return {{"schema_version", kAgentStateSchemaVersion},
          {"agent_id", state.agent_id},
          {"hyper", state.hyper},
          {"posterior_per_sign", signs},
          {"assignments", state.assignments}};
}

AgentState agent_state_from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kAgentStateSchemaVersion) {
    throw InvalidArgument("unsupported agent state schema version " + std::to_string(version));
  }
  AgentState state;
  state.agent_id = j.at("agent_id").get<std::size_t>();
  state.hyper = j.at("hyper").get<Hyperparams>();
  state.hyper.validate();
  state.assignments = j.at("assignments").get<std::vector<std::size_t>>();
  const auto& signs = j.at("posterior_per_sign");
  if (signs.size() != state.hyper.n_signs) {
    throw InvalidArgument("posterior_per_sign length does not match n_signs");
  }
  for (const auto& s : signs) {
    NiwParams p;
    p.mean = vector_from_json(s.at("mean"));
    p.scale = s.at("scale").get<double>();
    p.dof = s.at("dof").get<double>();
    p.scatter = matrix_from_json(s.at("scatter"));
    p.count = s.at("count").get<std::size_t>();
    if (static_cast<std::size_t>(p.mean.size()) != state.hyper.obs_dim() ||
        !is_spd(p.scatter) || !(p.dof > static_cast<double>(p.mean.size()) - 1.0)) {
      throw InvalidArgument("invalid NIW posterior in agent state");
    }
    state.signs.push_back(make_sign_model(std::move(p)));
  }
  for (std::size_t a : state.assignments) {
    if (a >= state.hyper.n_signs) throw InvalidArgument("assignment out of range");
  }
  return state;
}

}  // namespace cpcsim

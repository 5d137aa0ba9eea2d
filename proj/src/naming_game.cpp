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

#include "cpcsim/naming_game.hpp"

#include <cmath>
#include <numeric>
#include <optional>

#include "cpcsim/csv.hpp"
#include "cpcsim/error.hpp"

namespace cpcsim {

std::string_view to_string(GameMode mode) {
  switch (mode) {
    case GameMode::mh: return "mh";
    case GameMode::always_accept: return "always_accept";
    case GameMode::no_communication: return "no_communication";
    case GameMode::oracle_gibbs: return "oracle_gibbs";
  }
  return "mh";
}

GameMode parse_game_mode(std::string_view name) {
  if (name == "mh") return GameMode::mh;
  if (name == "always_accept") return GameMode::always_accept;
  if (name == "no_communication") return GameMode::no_communication;
  if (name == "oracle_gibbs") return GameMode::oracle_gibbs;
  throw InvalidArgument("unknown game mode '" + std::string(name) + "'");
}

std::string_view to_string(RoleSchedule schedule) {
  return schedule == RoleSchedule::random ? "random" : "alternate_each_round";
}

RoleSchedule parse_role_schedule(std::string_view name) {
  if (name == "alternate_each_round") return RoleSchedule::alternate_each_round;
  if (name == "random") return RoleSchedule::random;
  throw InvalidArgument("unknown role schedule '" + std::string(name) + "'");
}

void GameConfig::validate() const {
  if (n_rounds == 0) throw InvalidArgument("n_rounds must be at least 1");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be finite and nonnegative");
  }
}

double GameTrace::acceptance_rate() const {
  if (steps.empty()) return std::nan("");
  std::size_t accepted = 0;
  for (const auto& s : steps) accepted += s.accepted ? 1 : 0;
  return static_cast<double>(accepted) / static_cast<double>(steps.size());
}

double mh_acceptance(double log_proposed, double log_current) {
  if (std::isnan(log_proposed) || std::isnan(log_current)) {
    throw NumericalError("NaN listener density in acceptance ratio");
  }
  if (std::isinf(log_current) && log_current < 0.0) {
    if (std::isinf(log_proposed) && log_proposed < 0.0) {
      throw NumericalError("listener densities are -inf for both signs");
    }
    return 1.0;
  }
  const double log_ratio = log_proposed - log_current;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

MhOutcome mh_step(const AgentState& speaker, AgentState& listener,
                  const Eigen::VectorXd& obs_speaker, const Eigen::VectorXd& obs_listener,
                  std::size_t stimulus, double temperature, Rng& rng) {
  if (speaker.n_signs() != listener.n_signs()) {
    throw InvalidArgument("speaker and listener must share n_signs");
  }
  if (stimulus >= listener.n_stimuli() || stimulus >= speaker.n_stimuli()) {
    throw InvalidArgument("stimulus index out of range");
  }
  MhOutcome out;
  out.sign = sample_sign_posterior(speaker, obs_speaker, temperature, rng);
  const std::size_t current = listener.assignments[stimulus];
  if (out.sign == current) {
    out.acceptance_prob = 1.0;
  } else {
    out.acceptance_prob =
        mh_acceptance(posterior_predictive_logdensity(listener, obs_listener, out.sign),
                      posterior_predictive_logdensity(listener, obs_listener, current));
  }
  out.accepted = out.acceptance_prob >= 1.0 || rng.uniform() < out.acceptance_prob;
  if (out.accepted) listener.assignments[stimulus] = out.sign;
  return out;
}

namespace {

void check_game_inputs(const World& world, const std::vector<AgentState>& agents,
                       std::span<const ObservationSet> observations, const GameConfig& config) {
  config.validate();
  if (agents.empty()) throw InvalidArgument("run_game needs at least one agent");
  if (observations.size() != agents.size()) {
    throw InvalidArgument("one observation set per agent is required");
  }
  const bool communicating =
      config.mode == GameMode::mh || config.mode == GameMode::always_accept;
  if (communicating && agents.size() < 2) {
    throw InvalidArgument(std::string(to_string(config.mode)) + " mode needs at least 2 agents");
  }
  for (std::size_t k = 0; k < agents.size(); ++k) {
    if (agents[k].n_signs() != agents.front().n_signs()) {
      throw InvalidArgument("all agents must share n_signs");
    }
    if (agents[k].n_stimuli() != world.n_stimuli() ||
        observations[k].n_stimuli() != world.n_stimuli()) {
      throw InvalidArgument("agent or observation set does not match world n_stimuli");
    }
    if (observations[k].obs_dim() != agents[k].obs_dim()) {
      throw InvalidArgument("observation set does not match agent obs_dim");
    }
  }
}

// Pooled collapsed Gibbs state: one shared sign per stimulus and, for every
// agent, the NIW posterior of every sign given the shared assignment.
class PooledSampler {
 public:
  PooledSampler(const std::vector<AgentState>& agents,
                std::span<const ObservationSet> observations)
      : observations_(observations), shared_(agents.front().assignments),
        log_prior_(log_sign_prior(agents.front().hyper)) {
    const SignAssignment initial{shared_, AssignmentOwner::shared};
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const AgentState refreshed = gibbs_update_params(agents[k], observations[k], initial);
      std::vector<NiwParams> per_sign;
      for (const auto& sign : refreshed.signs) per_sign.push_back(sign.posterior);
      stats_.push_back(std::move(per_sign));
    }
  }

  std::size_t resample(std::size_t stimulus, double temperature, Rng& rng) {
    const std::size_t current = shared_[stimulus];
    std::vector<double> weights = log_prior_;
    for (std::size_t k = 0; k < stats_.size(); ++k) {
      if (!observations_[k].is_observed(stimulus)) continue;
      const Eigen::VectorXd x = observations_[k].row(stimulus);
      stats_[k][current] = niw_remove(stats_[k][current], x);
      for (std::size_t s = 0; s < weights.size(); ++s) {
        weights[s] += niw_predictive(stats_[k][s]).log_density(x);
      }
    }
    const std::size_t drawn = sample_from_log_weights(weights, temperature, rng);
    for (std::size_t k = 0; k < stats_.size(); ++k) {
      if (!observations_[k].is_observed(stimulus)) continue;
      stats_[k][drawn] = niw_add(stats_[k][drawn], observations_[k].row(stimulus));
    }
    shared_[stimulus] = drawn;
    return drawn;
  }

  const std::vector<std::size_t>& shared() const { return shared_; }

 private:
  std::span<const ObservationSet> observations_;
  std::vector<std::size_t> shared_;
  std::vector<double> log_prior_;
  std::vector<std::vector<NiwParams>> stats_;
};

}  // namespace

GameResult run_game(const World& world, std::vector<AgentState> agents,
                    std::span<const ObservationSet> observations, const GameConfig& config,
                    const RoundObserver& observer) {
  check_game_inputs(world, agents, observations, config);
  const std::size_t n_agents = agents.size();
  const std::size_t n_stimuli = world.n_stimuli();

  GameResult result;
  GameTrace& trace = result.trace;
  trace.mode = config.mode;
  trace.seed = config.seed;
  Rng rng(derive_seed(config.seed, 0x67616d65));

  std::vector<std::size_t> order(n_stimuli);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t accepted_total = 0;

  std::optional<PooledSampler> pooled;
  if (config.mode == GameMode::oracle_gibbs) pooled.emplace(agents, observations);

  if (observer) observer(0, agents, trace);

  for (std::size_t round = 0; round < config.n_rounds; ++round) {
    rng.shuffle(std::span(order));
    auto record = [&](std::size_t speaker, std::size_t listener, std::size_t stimulus,
                      std::size_t sign, bool accepted, double prob) {
      trace.steps.push_back({round, speaker, listener, stimulus, sign, accepted, prob});
      accepted_total += accepted ? 1 : 0;
    };

    switch (config.mode) {
      case GameMode::mh:
      case GameMode::always_accept: {
        std::size_t speaker = round % n_agents;
        std::size_t listener = (round + 1) % n_agents;
        if (config.role_schedule == RoleSchedule::random) {
          speaker = rng.uniform_index(n_agents);
          listener = (speaker + 1 + rng.uniform_index(n_agents - 1)) % n_agents;
        }
        const ObservationSet& obs_s = observations[speaker];
        const ObservationSet& obs_l = observations[listener];
        for (std::size_t i : order) {
          if (!obs_s.is_observed(i) || !obs_l.is_observed(i)) continue;
          if (config.mode == GameMode::mh) {
            const MhOutcome out = mh_step(agents[speaker], agents[listener], obs_s.row(i),
                                          obs_l.row(i), i, config.temperature, rng);
            record(speaker, listener, i, out.sign, out.accepted, out.acceptance_prob);
          } else {
            const std::size_t sign =
                sample_sign_posterior(agents[speaker], obs_s.row(i), config.temperature, rng);
            agents[listener].assignments[i] = sign;
            record(speaker, listener, i, sign, true, 1.0);
          }
        }
        break;
      }
      case GameMode::no_communication: {
        for (std::size_t k = 0; k < n_agents; ++k) {
          for (std::size_t i : order) {
            if (!observations[k].is_observed(i)) continue;
            const std::size_t sign = sample_sign_posterior(
                agents[k], observations[k].row(i), config.temperature, rng);
            agents[k].assignments[i] = sign;
            record(k, k, i, sign, true, 1.0);
          }
        }
        break;
      }
      case GameMode::oracle_gibbs: {
        for (std::size_t i : order) {
          const std::size_t sign = pooled->resample(i, config.temperature, rng);
          record(kPooledAgent, kPooledAgent, i, sign, true, 1.0);
        }
        for (auto& agent : agents) agent.assignments = pooled->shared();
        break;
      }
    }

    if (config.update_params) {
      for (std::size_t k = 0; k < n_agents; ++k) {
        agents[k] = gibbs_update_params(agents[k], observations[k],
                                        {agents[k].assignments, AssignmentOwner::listener_view});
      }
    }
    trace.acceptance_rate_curve.push_back(
        trace.steps.empty() ? std::nan("")
                            : static_cast<double>(accepted_total) /
                                  static_cast<double>(trace.steps.size()));
    if (observer) observer(round + 1, agents, trace);
  }

  for (const auto& agent : agents) {
    trace.final_assignments.push_back(
        {agent.assignments, config.mode == GameMode::oracle_gibbs ? AssignmentOwner::shared
                                                                  : AssignmentOwner::listener_view});
  }
  result.agents = std::move(agents);
  return result;
}

std::string trace_file_stem(GameMode mode, std::uint64_t seed) {
  return "trace_" + std::string(to_string(mode)) + "_seed" + std::to_string(seed);
}

namespace {

std::string agent_cell(std::size_t id) {
  return id == kPooledAgent ? "pooled" : std::to_string(id);
}

std::size_t parse_agent_cell(const std::string& cell) {
  return cell == "pooled" ? kPooledAgent : csv::parse_index(cell);
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const GameTrace& trace) {
  csv::Table table;
  table.comments.push_back("trace mode=" + std::string(to_string(trace.mode)) +
                           " seed=" + std::to_string(trace.seed) +
                           " n_steps=" + std::to_string(trace.steps.size()));
  table.header = {"round",         "speaker",  "listener",       "stimulus",
                  "proposed_sign", "accepted", "acceptance_prob"};
  table.rows.reserve(trace.steps.size());
  for (const auto& s : trace.steps) {
    table.rows.push_back({std::to_string(s.round), agent_cell(s.speaker_id),
                          agent_cell(s.listener_id), std::to_string(s.stimulus),
                          std::to_string(s.proposed_sign), s.accepted ? "1" : "0",
                          csv::format_double(s.acceptance_prob)});
  }
  csv::write(path, table);
}

std::vector<StepRecord> read_trace_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.header.size() != 7 || table.header.front() != "round") {
    throw InvalidArgument("not a trace csv: " + path.string());
  }
  std::vector<StepRecord> steps;
  steps.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    steps.push_back({csv::parse_index(row[0]), parse_agent_cell(row[1]),
                     parse_agent_cell(row[2]), csv::parse_index(row[3]),
                     csv::parse_index(row[4]), row[5] == "1", csv::parse_double(row[6])});
  }
  return steps;
}

nlohmann::json trace_summary_json(const GameTrace& trace) {
  nlohmann::json finals = nlohmann::json::array();
  for (const auto& a : trace.final_assignments) finals.push_back(a.signs);
  nlohmann::json curve = nlohmann::json::array();
  for (double v : trace.acceptance_rate_curve) {
    curve.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  }
  const double rate = trace.acceptance_rate();
  return {{"mode", to_string(trace.mode)},
          {"seed", trace.seed},
          {"n_steps", trace.steps.size()},
          {"acceptance_rate", std::isfinite(rate) ? nlohmann::json(rate) : nlohmann::json(nullptr)},
          {"acceptance_rate_curve", curve},
          {"final_assignments", finals}};
}

}  // namespace cpcsim

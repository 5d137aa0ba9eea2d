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

#ifndef CPCSIM_NAMING_GAME_HPP_
#define CPCSIM_NAMING_GAME_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cpcsim/agent.hpp"
#include "cpcsim/rng.hpp"
#include "cpcsim/world.hpp"
#include "json.hpp"

namespace cpcsim {

// mh: Metropolis-Hastings naming game (upward organization + downward
//     constraint through the parameter refresh).
// always_accept: listener adopts every proposal.
// no_communication: each agent resamples its own signs; no exchange.
// oracle_gibbs: centralized collapsed Gibbs over one shared sign per stimulus.
enum class GameMode { mh, always_accept, no_communication, oracle_gibbs };
enum class RoleSchedule { alternate_each_round, random };

std::string_view to_string(GameMode mode);
GameMode parse_game_mode(std::string_view name);
std::string_view to_string(RoleSchedule schedule);
RoleSchedule parse_role_schedule(std::string_view name);

struct GameConfig {
  std::size_t n_rounds = 50;
  GameMode mode = GameMode::mh;
  double temperature = 1.0;
  RoleSchedule role_schedule = RoleSchedule::alternate_each_round;
  std::uint64_t seed = 0;
  // When false, agent parameters stay frozen and only assignments move.
  bool update_params = true;

  void validate() const;
};

// Speaker/listener id used by the centralized oracle sampler.
inline constexpr std::size_t kPooledAgent = std::numeric_limits<std::size_t>::max();

struct StepRecord {
  std::size_t round = 0;
  std::size_t speaker_id = 0;
  std::size_t listener_id = 0;
  std::size_t stimulus = 0;
  std::size_t proposed_sign = 0;
  bool accepted = false;
  double acceptance_prob = 0.0;

  bool operator==(const StepRecord&) const = default;
};

struct GameTrace {
  GameMode mode = GameMode::mh;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<SignAssignment> final_assignments;  // one per agent
  std::vector<double> acceptance_rate_curve;      // running mean after each round

  double acceptance_rate() const;
};

struct MhOutcome {
  bool accepted = false;
  std::size_t sign = 0;
  double acceptance_prob = 0.0;
};

// min(1, exp(log_proposed - log_current)). Throws NumericalError when both
// are -inf or either is NaN.
double mh_acceptance(double log_proposed, double log_current);

// One naming-game exchange about `stimulus`. The speaker samples a sign from
// its own posterior; the listener accepts it with the ratio of its predictive
// densities and, on acceptance, adopts it for that stimulus.
MhOutcome mh_step(const AgentState& speaker, AgentState& listener,
                  const Eigen::VectorXd& obs_speaker, const Eigen::VectorXd& obs_listener,
                  std::size_t stimulus, double temperature, Rng& rng);

struct GameResult {
  std::vector<AgentState> agents;
  GameTrace trace;
};

// Called with the number of completed rounds: once with 0 before the first
// round, then after every round.
using RoundObserver =
    std::function<void(std::size_t completed_rounds, const std::vector<AgentState>& agents,
                       const GameTrace& trace)>;

GameResult run_game(const World& world, std::vector<AgentState> agents,
                    std::span<const ObservationSet> observations, const GameConfig& config,
                    const RoundObserver& observer = {});

// trace_<mode>_seed<seed>.csv / summary_<mode>_seed<seed>.json
std::string trace_file_stem(GameMode mode, std::uint64_t seed);

void write_trace_csv(const std::filesystem::path& path, const GameTrace& trace);
std::vector<StepRecord> read_trace_csv(const std::filesystem::path& path);
nlohmann::json trace_summary_json(const GameTrace& trace);

}  // namespace cpcsim

#endif  // CPCSIM_NAMING_GAME_HPP_

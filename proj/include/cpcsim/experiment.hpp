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

#ifndef CPCSIM_EXPERIMENT_HPP_
#define CPCSIM_EXPERIMENT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpcsim/agent.hpp"
#include "cpcsim/naming_game.hpp"
#include "cpcsim/world.hpp"
#include "json.hpp"

namespace cpcsim {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

struct ExperimentConfig {
  WorldConfig world;
  Hyperparams hyper;
  GameConfig game;  // `mode` is ignored; each condition overrides it
  std::vector<GameMode> conditions = {GameMode::mh, GameMode::no_communication};
  std::size_t n_seeds = 1;
  double epsilon = 0.0;  // GW regularization for the centroid alignment; <= 0 is automatic
  std::size_t gw_n_init = 20;
  std::filesystem::path output_dir = "cpcsim_out";
  std::vector<std::size_t> measure_schedule;  // empty: round 0 and the final round

  // Agents after the first observe through this transform.
  TransformKind agent_transform = TransformKind::identity;
  double observe_fraction = 1.0;
  std::size_t n_threads = 0;  // 0 = hardware concurrency
  bool write_traces = true;

  void validate() const;
  std::vector<std::size_t> effective_schedule() const;
};

ExperimentConfig parse_experiment_toml(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

// Metric columns, in file order. Pairwise values are averaged over agent
// pairs. NaN marks a metric that is undefined at that point, e.g. RSA with
// fewer than three shared signs or the acceptance rate before any step.
inline constexpr std::array<std::string_view, 9> kMetricNames = {
    "shared_signs", "ari",        "kappa",       "ari_truth",       "rsa_centroid",
    "gw_accuracy",  "gw_distance", "rsa_profile", "acceptance_rate"};

struct MetricPoint {
  std::size_t round = 0;
  std::array<double, kMetricNames.size()> values{};

  double get(std::string_view metric) const;
};

struct RunSeries {
  GameMode condition = GameMode::mh;
  std::size_t seed_index = 0;
  std::vector<MetricPoint> points;
};

struct RunRecord {
  nlohmann::json config_snapshot;
  std::vector<RunSeries> series;  // ordered by condition, then seed
  double wall_clock_seconds = 0.0;
  std::string software_version{kSoftwareVersion};
};

// Seeds for run `seed_index`. Everything but the game stream is shared across
// conditions, so the comparison is paired.
struct SeedPlan {
  std::uint64_t world = 0;
  std::uint64_t observation = 0;
  std::uint64_t transform = 0;
  std::uint64_t mask = 0;
  std::uint64_t agent_init = 0;
  std::uint64_t game = 0;
  std::uint64_t alignment = 0;
};
SeedPlan seed_plan(const ExperimentConfig& config, std::size_t seed_index);

struct AgentPopulation {
  World world;
  std::vector<ObservationSet> observations;
  std::vector<AgentState> agents;
};
AgentPopulation build_population(const ExperimentConfig& config, std::size_t seed_index);

MetricPoint measure(const ExperimentConfig& config, const World& world,
                    std::span<const ObservationSet> observations,
                    const std::vector<AgentState>& agents, const GameTrace& trace,
                    std::size_t round, std::uint64_t alignment_seed);

// Runs every condition x seed, writes worlds, traces, metrics.csv and
// manifest.json under config.output_dir, and returns the record.
RunRecord run_experiment(const ExperimentConfig& config);

std::string metrics_to_csv(const RunRecord& record);
void write_metrics_csv(const std::filesystem::path& path, const RunRecord& record);
std::vector<RunSeries> read_metrics_csv(const std::filesystem::path& path);

nlohmann::json manifest_json(const RunRecord& record);
void write_run_record(const std::filesystem::path& dir, const RunRecord& record);
RunRecord read_run_record(const std::filesystem::path& dir);

}  // namespace cpcsim

#endif  // CPCSIM_EXPERIMENT_HPP_

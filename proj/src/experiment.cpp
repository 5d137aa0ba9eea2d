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

#include "cpcsim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cpcsim/alignment/agreement.hpp"
#include "cpcsim/alignment/rdm.hpp"
#include "cpcsim/alignment/transport.hpp"
#include "cpcsim/csv.hpp"
#include "cpcsim/error.hpp"
#include "cpcsim/parallel.hpp"
#include "cpcsim/rng.hpp"

namespace cpcsim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t metric_index(std::string_view metric) {
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    if (kMetricNames[i] == metric) return i;
  }
  throw InvalidArgument("unknown metric '" + std::string(metric) + "'");
}

// Mean of the finite entries, NaN when there are none.
double finite_mean(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? kNaN : sum / static_cast<double>(n);
}

std::vector<std::size_t> gather(const std::vector<std::size_t>& values,
                                const std::vector<std::size_t>& index) {
  std::vector<std::size_t> out;
  out.reserve(index.size());
  for (std::size_t i : index) out.push_back(values[i]);
  return out;
}

// Correlation that reports NaN instead of throwing on a constant RDM.
double safe_rsa(const Rdm& a, const Rdm& b) {
  if (a.size() < 3) return kNaN;
  try {
    return rsa(a, b, CorrelationMethod::pearson);
  } catch (const NumericalError&) {
    return kNaN;
  }
}

Eigen::MatrixXd assignment_profiles(const AgentState& agent, const ObservationSet& obs,
                                    const std::vector<std::size_t>& stimuli) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(stimuli.size()),
                      static_cast<Eigen::Index>(agent.n_signs()));
  for (std::size_t r = 0; r < stimuli.size(); ++r) {
    const std::vector<double> logw = sign_log_weights(agent, obs.row(stimuli[r]));
    const double top = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double v : logw) total += std::exp(v - top);
    for (std::size_t w = 0; w < logw.size(); ++w) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w)) =
          std::exp(logw[w] - top) / total;
    }
  }
  return out;
}

struct PairMetrics {
  double shared_signs = kNaN;
  double ari = kNaN;
  double kappa = kNaN;
  double rsa_centroid = kNaN;
  double gw_accuracy = kNaN;
  double gw_distance = kNaN;
  double rsa_profile = kNaN;
};

PairMetrics measure_pair(const ExperimentConfig& config, const AgentState& a,
                         const ObservationSet& obs_a, const AgentState& b,
                         const ObservationSet& obs_b, std::uint64_t alignment_seed) {
  PairMetrics out;
  std::vector<std::size_t> common;
  for (std::size_t i = 0; i < obs_a.n_stimuli(); ++i) {
    if (obs_a.is_observed(i) && obs_b.is_observed(i)) common.push_back(i);
  }
  if (common.empty()) return out;
  const auto labels_a = gather(a.assignments, common);
  const auto labels_b = gather(b.assignments, common);
  const Agreement agreement = categorization_agreement(labels_a, labels_b);
  out.ari = agreement.ari;
  out.kappa = agreement.kappa;

  // Supervised matching of centroids: the sign itself is the shared label.
  const std::set<std::size_t> used_a(labels_a.begin(), labels_a.end());
  std::vector<std::size_t> shared;
  for (std::size_t w : std::set<std::size_t>(labels_b.begin(), labels_b.end())) {
    if (used_a.contains(w)) shared.push_back(w);
  }
  out.shared_signs = static_cast<double>(shared.size());
  if (shared.size() >= 2) {
    const auto dim = static_cast<Eigen::Index>(a.obs_dim());
    Eigen::MatrixXd centroids_a(static_cast<Eigen::Index>(shared.size()), dim);
    Eigen::MatrixXd centroids_b(static_cast<Eigen::Index>(shared.size()), dim);
    std::vector<std::string> names;
    for (std::size_t r = 0; r < shared.size(); ++r) {
      centroids_a.row(static_cast<Eigen::Index>(r)) = a.signs[shared[r]].posterior.mean.transpose();
      centroids_b.row(static_cast<Eigen::Index>(r)) = b.signs[shared[r]].posterior.mean.transpose();
      names.push_back("w" + std::to_string(shared[r]));
    }
    const Rdm rdm_a = compute_rdm(centroids_a, DistanceMetric::euclidean, names);
    const Rdm rdm_b = compute_rdm(centroids_b, DistanceMetric::euclidean, names);
    out.rsa_centroid = safe_rsa(rdm_a, rdm_b);

    GwOptions gw;
    gw.epsilon = config.epsilon;
    gw.n_init = config.gw_n_init;
    gw.seed = alignment_seed;
    try {
      const GwResult result = gw_align(rdm_a, rdm_b, gw);
      std::vector<std::size_t> identity(shared.size());
      for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
      out.gw_accuracy = matching_accuracy(result.plan, identity, 1);
      out.gw_distance = result.gw_distance;
    } catch (const NumericalError&) {
      // Left as NaN; a degenerate centroid geometry is not a run failure.
    }
  }

  if (common.size() >= 3) {
    const Rdm profile_a =
        compute_rdm(assignment_profiles(a, obs_a, common), DistanceMetric::euclidean);
    const Rdm profile_b =
        compute_rdm(assignment_profiles(b, obs_b, common), DistanceMetric::euclidean);
    out.rsa_profile = safe_rsa(profile_a, profile_b);
  }
  return out;
}

std::filesystem::path world_file(std::size_t seed_index) {
  return std::filesystem::path("worlds") / ("world_seed" + std::to_string(seed_index) + ".csv");
}

std::filesystem::path observation_file(std::size_t seed_index, std::size_t agent) {
  return std::filesystem::path("worlds") /
         ("obs_seed" + std::to_string(seed_index) + "_agent" + std::to_string(agent) + ".csv");
}

void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace

double MetricPoint::get(std::string_view metric) const { return values[metric_index(metric)]; }

SeedPlan seed_plan(const ExperimentConfig& config, std::size_t seed_index) {
  const std::uint64_t base = derive_seed(config.world.seed, seed_index);
  SeedPlan plan;
  plan.world = derive_seed(base, 1);
  plan.observation = derive_seed(base, 2);
  plan.transform = derive_seed(base, 3);
  plan.mask = derive_seed(base, 4);
  plan.agent_init = derive_seed(base, 5);
  plan.alignment = derive_seed(base, 6);
  plan.game = derive_seed(config.game.seed, seed_index);
  return plan;
}

AgentPopulation build_population(const ExperimentConfig& config, std::size_t seed_index) {
  const SeedPlan plan = seed_plan(config, seed_index);
  WorldConfig world_config = config.world;
  world_config.seed = plan.world;
  AgentPopulation pop;
  pop.world = generate_world(world_config);
  const std::size_t dim = world_config.obs_dim;
  for (std::size_t k = 0; k < world_config.n_agents; ++k) {
    const ModalityTransform transform =
        k == 0 ? ModalityTransform::identity(dim)
               : ModalityTransform::make(config.agent_transform, dim, derive_seed(plan.transform, k));
    std::vector<bool> mask;
    if (config.observe_fraction < 1.0) {
      mask = random_observation_mask(world_config.n_stimuli, config.observe_fraction,
                                     derive_seed(plan.mask, k));
    }
    pop.observations.push_back(
        observe(pop.world, k, transform, world_config.obs_noise, plan.observation, std::move(mask)));
    pop.agents.push_back(init_agent(config.hyper, pop.observations.back(), plan.agent_init));
  }
  return pop;
}

MetricPoint measure(const ExperimentConfig& config, const World& world,
                    std::span<const ObservationSet> observations,
                    const std::vector<AgentState>& agents, const GameTrace& trace,
                    std::size_t round, std::uint64_t alignment_seed) {
  MetricPoint point;
  point.round = round;
  point.values.fill(kNaN);

  std::vector<double> truth;
  for (std::size_t k = 0; k < agents.size(); ++k) {
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i < world.n_stimuli(); ++i) {
      if (observations[k].is_observed(i)) seen.push_back(i);
    }
    if (seen.empty()) continue;
    truth.push_back(adjusted_rand_index(gather(agents[k].assignments, seen),
                                        gather(world.true_labels, seen)));
  }
  point.values[metric_index("ari_truth")] = finite_mean(truth);

  std::vector<PairMetrics> pairs;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    for (std::size_t b = a + 1; b < agents.size(); ++b) {
      pairs.push_back(measure_pair(config, agents[a], observations[a], agents[b],
                                   observations[b], derive_seed(alignment_seed, round)));
    }
  }
  auto average = [&](double PairMetrics::*field) {
    std::vector<double> values;
    for (const auto& p : pairs) values.push_back(p.*field);
    return finite_mean(values);
  };
  point.values[metric_index("shared_signs")] = average(&PairMetrics::shared_signs);
  point.values[metric_index("ari")] = average(&PairMetrics::ari);
  point.values[metric_index("kappa")] = average(&PairMetrics::kappa);
  point.values[metric_index("rsa_centroid")] = average(&PairMetrics::rsa_centroid);
  point.values[metric_index("gw_accuracy")] = average(&PairMetrics::gw_accuracy);
  point.values[metric_index("gw_distance")] = average(&PairMetrics::gw_distance);
  point.values[metric_index("rsa_profile")] = average(&PairMetrics::rsa_profile);
  point.values[metric_index("acceptance_rate")] = trace.acceptance_rate();
  return point;
}

RunRecord run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path& out_dir = config.output_dir;
  ensure_writable(out_dir);
  ensure_writable(out_dir / "worlds");
  if (config.write_traces) ensure_writable(out_dir / "traces");

  std::vector<AgentPopulation> populations;
  for (std::size_t s = 0; s < config.n_seeds; ++s) {
    populations.push_back(build_population(config, s));
    write_world_csv(out_dir / world_file(s), populations.back().world);
    for (const auto& obs : populations.back().observations) {
      write_observations_csv(out_dir / observation_file(s, obs.agent_id), obs);
    }
  }

  const std::vector<std::size_t> schedule = config.effective_schedule();
  RunRecord record;
  record.config_snapshot = to_json(config);
  record.series.resize(config.conditions.size() * config.n_seeds);
  parallel_for(record.series.size(), config.n_threads, [&](std::size_t task) {
    const std::size_t c = task / config.n_seeds;
    const std::size_t s = task % config.n_seeds;
    const AgentPopulation& pop = populations[s];
    const SeedPlan plan = seed_plan(config, s);
    RunSeries& series = record.series[task];
    series.condition = config.conditions[c];
    series.seed_index = s;

    GameConfig game = config.game;
    game.mode = series.condition;
    game.seed = plan.game;
    auto observer = [&](std::size_t round, const std::vector<AgentState>& agents,
                        const GameTrace& trace) {
      if (std::binary_search(schedule.begin(), schedule.end(), round)) {
        series.points.push_back(
            measure(config, pop.world, pop.observations, agents, trace, round, plan.alignment));
      }
    };
    const GameResult result = run_game(pop.world, pop.agents, pop.observations, game, observer);
    if (config.write_traces) {
      const std::string stem = trace_file_stem(series.condition, s);
      write_trace_csv(out_dir / "traces" / (stem + ".csv"), result.trace);
      std::ofstream summary(out_dir / "traces" / ("summary_" + stem.substr(6) + ".json"));
      if (!summary) throw IoError("cannot write trace summary for " + stem);
      summary << trace_summary_json(result.trace).dump(2) << '\n';
    }
  });

  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_run_record(out_dir, record);
  return record;
}

std::string metrics_to_csv(const RunRecord& record) {
  csv::Table table;
  table.comments.push_back("metrics software_version=" + record.software_version);
  table.header = {"condition", "seed_index", "round"};
  for (auto name : kMetricNames) table.header.emplace_back(name);
  for (const auto& series : record.series) {
    for (const auto& point : series.points) {
      std::vector<std::string> row = {std::string(to_string(series.condition)),
                                      std::to_string(series.seed_index),
                                      std::to_string(point.round)};
      for (double v : point.values) row.push_back(csv::format_double(v));
      table.rows.push_back(std::move(row));
    }
  }
  return csv::to_string(table);
}

void write_metrics_csv(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << metrics_to_csv(record);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<RunSeries> read_metrics_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.header.size() != 3 + kMetricNames.size() || table.header[0] != "condition") {
    throw InvalidArgument("unexpected metrics header in " + path.string());
  }
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    if (table.header[3 + i] != kMetricNames[i]) {
      throw InvalidArgument("unexpected metric column '" + table.header[3 + i] + "'");
    }
  }
  std::vector<RunSeries> out;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw InvalidArgument("ragged row in metrics csv");
    const GameMode condition = parse_game_mode(row[0]);
    const std::size_t seed_index = csv::parse_index(row[1]);
    if (out.empty() || out.back().condition != condition || out.back().seed_index != seed_index) {
      out.push_back({condition, seed_index, {}});
    }
    MetricPoint point;
    point.round = csv::parse_index(row[2]);
    for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
      point.values[i] = csv::parse_double(row[3 + i]);
    }
    out.back().points.push_back(point);
  }
  return out;
}

nlohmann::json manifest_json(const RunRecord& record) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : record.series) {
    series.push_back({{"condition", to_string(s.condition)},
                      {"seed_index", s.seed_index},
                      {"n_points", s.points.size()}});
  }
  return {{"software_version", record.software_version},
          {"wall_clock_seconds", record.wall_clock_seconds},
          {"config", record.config_snapshot},
          {"metrics_file", "metrics.csv"},
          {"metric_names", std::vector<std::string>(kMetricNames.begin(), kMetricNames.end())},
          {"series", series}};
}

void write_run_record(const std::filesystem::path& dir, const RunRecord& record) {
  ensure_writable(dir);
  write_metrics_csv(dir / "metrics.csv", record);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest_json(record).dump(2) << '\n';
}

RunRecord read_run_record(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("invalid manifest in " + dir.string() + ": " + e.what());
  }
  RunRecord record;
  record.config_snapshot = manifest.at("config");
  record.software_version = manifest.at("software_version").get<std::string>();
  record.wall_clock_seconds = manifest.at("wall_clock_seconds").get<double>();
  record.series = read_metrics_csv(dir / "metrics.csv");
  return record;
}

}  // namespace cpcsim

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpcsim/error.hpp"
#include "cpcsim/experiment.hpp"
#include "toml.hpp"

namespace cpcsim {
namespace {

// Reads typed values from one TOML table and rejects keys nobody asked for,
// so a misspelled option fails loudly instead of silently using a default.
class TableReader {
 public:
  TableReader(const toml::table* table, std::string prefix)
      : table_(table), prefix_(std::move(prefix)) {}

  bool has(std::string_view key) const { return table_ != nullptr && table_->contains(key); }

  void count(std::string_view key, std::size_t& out) {
    if (const toml::node* node = take(key)) out = to_count(*node, key);
  }

  void seed(std::string_view key, std::uint64_t& out) {
    if (const toml::node* node = take(key)) out = to_count(*node, key);
  }

  void real(std::string_view key, double& out) {
    if (const toml::node* node = take(key)) out = to_real(*node, key);
  }

  void boolean(std::string_view key, bool& out) {
    if (const toml::node* node = take(key)) {
      auto value = node->value<bool>();
      if (!value) fail(key, "expected a boolean");
      out = *value;
    }
  }

  void string(std::string_view key, std::string& out) {
    if (const toml::node* node = take(key)) {
      auto value = node->value<std::string>();
      if (!value) fail(key, "expected a string");
      out = *value;
    }
  }

  bool string_list(std::string_view key, std::vector<std::string>& out) {
    const toml::node* node = take(key);
    if (node == nullptr) return false;
    const toml::array* array = node->as_array();
    if (array == nullptr) fail(key, "expected an array of strings");
    out.clear();
    for (const toml::node& item : *array) {
      auto value = item.value<std::string>();
      if (!value) fail(key, "expected an array of strings");
      out.push_back(*value);
    }
    return true;
  }

  bool count_list(std::string_view key, std::vector<std::size_t>& out) {
    const toml::node* node = take(key);
    if (node == nullptr) return false;
    const toml::array* array = node->as_array();
    if (array == nullptr) fail(key, "expected an array of integers");
    out.clear();
    for (const toml::node& item : *array) out.push_back(to_count(item, key));
    return true;
  }

  bool real_list(std::string_view key, std::vector<double>& out) {
    const toml::node* node = take(key);
    if (node == nullptr) return false;
    const toml::array* array = node->as_array();
    if (array == nullptr) fail(key, "expected an array of numbers");
    out.clear();
    for (const toml::node& item : *array) out.push_back(to_real(item, key));
    return true;
  }

  // A number (times the identity) or an array of rows.
  bool scatter(std::string_view key, std::size_t dim, Eigen::MatrixXd& out) {
    const toml::node* node = take(key);
    if (node == nullptr) return false;
    if (const toml::array* rows = node->as_array()) {
      out.resize(static_cast<Eigen::Index>(rows->size()), static_cast<Eigen::Index>(rows->size()));
      for (std::size_t i = 0; i < rows->size(); ++i) {
        const toml::array* row = (*rows)[i].as_array();
        if (row == nullptr || row->size() != rows->size()) fail(key, "expected a square matrix");
        for (std::size_t k = 0; k < row->size(); ++k) {
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = to_real((*row)[k], key);
        }
      }
      return true;
    }
    out = to_real(*node, key) *
          Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    return true;
  }

  void finish() const {
    if (table_ == nullptr) return;
    for (const auto& [key, node] : *table_) {
      if (!seen_.contains(std::string(key.str()))) {
        // Sub-tables are read by their own reader.
        if (prefix_.empty() && node.is_table()) continue;
        throw InvalidArgument("unknown config key '" + qualified(key.str()) + "'");
      }
    }
  }

 private:
  const toml::node* take(std::string_view key) {
    if (table_ == nullptr) return nullptr;
    const toml::node* node = table_->get(key);
    if (node != nullptr) seen_.insert(std::string(key));
    return node;
  }

  std::size_t to_count(const toml::node& node, std::string_view key) const {
    auto value = node.value_exact<std::int64_t>();
    if (!value || *value < 0) fail(key, "expected a non-negative integer");
    return static_cast<std::size_t>(*value);
  }

  double to_real(const toml::node& node, std::string_view key) const {
    if (!node.is_number()) fail(key, "expected a number");
    return *node.value<double>();
  }

  std::string qualified(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

  [[noreturn]] void fail(std::string_view key, std::string_view what) const {
    throw InvalidArgument("config key '" + qualified(key) + "': " + std::string(what));
  }

  const toml::table* table_;
  std::string prefix_;
  std::set<std::string> seen_;
};

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
  world.validate();
  hyper.validate();
  game.validate();
  if (hyper.obs_dim() != world.obs_dim) {
    throw InvalidArgument("agent prior dimension does not match world.obs_dim");
  }
  if (n_seeds == 0) throw InvalidArgument("n_seeds must be at least 1");
  if (conditions.empty()) throw InvalidArgument("conditions must not be empty");
  std::set<GameMode> unique(conditions.begin(), conditions.end());
  if (unique.size() != conditions.size()) throw InvalidArgument("duplicate condition");
  for (GameMode mode : conditions) {
    const bool communicating = mode == GameMode::mh || mode == GameMode::always_accept;
    if (communicating && world.n_agents < 2) {
      throw InvalidArgument(std::string(to_string(mode)) + " needs at least 2 agents");
    }
  }
  if (!std::isfinite(epsilon)) throw InvalidArgument("epsilon must be finite");
  if (gw_n_init == 0) throw InvalidArgument("gw_n_init must be at least 1");
  if (output_dir.empty()) throw InvalidArgument("output_dir must not be empty");
  for (std::size_t i = 0; i < measure_schedule.size(); ++i) {
    if (measure_schedule[i] > game.n_rounds) {
      throw InvalidArgument("measure_schedule entry beyond n_rounds");
    }
    if (i > 0 && measure_schedule[i] <= measure_schedule[i - 1]) {
      throw InvalidArgument("measure_schedule must be strictly increasing");
    }
  }
  if (!(observe_fraction > 0.0 && observe_fraction <= 1.0)) {
    throw InvalidArgument("observe_fraction must lie in (0, 1]");
  }
}

std::vector<std::size_t> ExperimentConfig::effective_schedule() const {
  if (!measure_schedule.empty()) return measure_schedule;
  return {0, game.n_rounds};
}

ExperimentConfig parse_experiment_toml(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error: " << e.description() << " (line " << e.source().begin.line
        << ")";
    throw InvalidArgument(msg.str());
  }

  ExperimentConfig config;
  TableReader top(&root, "");
  top.count("n_seeds", config.n_seeds);
  top.real("epsilon", config.epsilon);
  top.count("gw_n_init", config.gw_n_init);
  top.count("threads", config.n_threads);
  top.boolean("write_traces", config.write_traces);
  std::string output_dir = config.output_dir.string();
  top.string("output_dir", output_dir);
  config.output_dir = output_dir;
  top.count_list("measure_schedule", config.measure_schedule);
  std::vector<std::string> conditions;
  if (top.string_list("conditions", conditions)) {
    config.conditions.clear();
    for (const auto& name : conditions) config.conditions.push_back(parse_game_mode(name));
  }
  top.finish();

  TableReader world(root["world"].as_table(), "world");
  world.count("n_categories", config.world.n_categories);
  world.count("n_stimuli", config.world.n_stimuli);
  world.count("obs_dim", config.world.obs_dim);
  world.real("prototype_spread", config.world.prototype_spread);
  world.real("obs_noise", config.world.obs_noise);
  world.count("n_agents", config.world.n_agents);
  world.seed("seed", config.world.seed);
  std::string transform(to_string(config.agent_transform));
  world.string("agent_transform", transform);
  config.agent_transform = parse_transform_kind(transform);
  world.real("observe_fraction", config.observe_fraction);
  world.finish();

  const std::size_t dim = config.world.obs_dim;
  TableReader agent(root["agent"].as_table(), "agent");
  std::size_t n_signs = config.world.n_categories;
  agent.count("n_signs", n_signs);
  double prior_scale = 0.01;
  agent.real("prior_scale", prior_scale);
  double prior_dof = -1.0;
  agent.real("prior_dof", prior_dof);
  config.hyper = Hyperparams::isotropic(dim, n_signs, prior_scale, 1.0, prior_dof);
  agent.scatter("prior_scatter", dim, config.hyper.prior_scatter);
  std::vector<double> prior_mean;
  if (agent.real_list("prior_mean", prior_mean)) {
    config.hyper.prior_mean =
        Eigen::Map<const Eigen::VectorXd>(prior_mean.data(), static_cast<Eigen::Index>(prior_mean.size()));
  }
  agent.real_list("sign_prior", config.hyper.sign_prior);
  agent.finish();

  TableReader game(root["game"].as_table(), "game");
  game.count("n_rounds", config.game.n_rounds);
  game.real("temperature", config.game.temperature);
  std::string schedule(to_string(config.game.role_schedule));
  game.string("role_schedule", schedule);
  config.game.role_schedule = parse_role_schedule(schedule);
  game.seed("seed", config.game.seed);
  game.boolean("update_params", config.game.update_params);
  game.finish();

  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text.str());
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("config parse error: ") + e.what());
    }
    return experiment_config_from_json(j);
  }
  return parse_experiment_toml(text.str());
}

nlohmann::json to_json(const ExperimentConfig& config) {
  nlohmann::json world = config.world;
  world["agent_transform"] = to_string(config.agent_transform);
  world["observe_fraction"] = config.observe_fraction;
  nlohmann::json agent = config.hyper;
  agent["prior_scatter"] = matrix_json(config.hyper.prior_scatter);
  nlohmann::json conditions = nlohmann::json::array();
  for (GameMode mode : config.conditions) conditions.push_back(to_string(mode));
  return {{"n_seeds", config.n_seeds},
          {"epsilon", config.epsilon},
          {"gw_n_init", config.gw_n_init},
          {"threads", config.n_threads},
          {"write_traces", config.write_traces},
          {"output_dir", config.output_dir.generic_string()},
          {"measure_schedule", config.measure_schedule},
          {"conditions", conditions},
          {"world", world},
          {"agent", agent},
          {"game",
           {{"n_rounds", config.game.n_rounds},
            {"temperature", config.game.temperature},
            {"role_schedule", to_string(config.game.role_schedule)},
            {"seed", config.game.seed},
            {"update_params", config.game.update_params}}}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  try {
    config.n_seeds = j.at("n_seeds").get<std::size_t>();
    config.epsilon = j.at("epsilon").get<double>();
    config.gw_n_init = j.at("gw_n_init").get<std::size_t>();
    config.n_threads = j.value("threads", std::size_t{0});
    config.write_traces = j.value("write_traces", true);
    config.output_dir = j.at("output_dir").get<std::string>();
    config.measure_schedule = j.at("measure_schedule").get<std::vector<std::size_t>>();
    config.conditions.clear();
    for (const auto& name : j.at("conditions")) {
      config.conditions.push_back(parse_game_mode(name.get<std::string>()));
    }
    const auto& world = j.at("world");
    config.world = world.get<WorldConfig>();
    config.agent_transform = parse_transform_kind(world.at("agent_transform").get<std::string>());
    config.observe_fraction = world.at("observe_fraction").get<double>();
    config.hyper = j.at("agent").get<Hyperparams>();
    const auto& game = j.at("game");
    config.game.n_rounds = game.at("n_rounds").get<std::size_t>();
    config.game.temperature = game.at("temperature").get<double>();
    config.game.role_schedule = parse_role_schedule(game.at("role_schedule").get<std::string>());
    config.game.seed = game.at("seed").get<std::uint64_t>();
    config.game.update_params = game.at("update_params").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("invalid config json: ") + e.what());
  }
  config.validate();
  return config;
}

}  // namespace cpcsim

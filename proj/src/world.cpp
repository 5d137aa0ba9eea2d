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

#include "cpcsim/world.hpp"

#include <cmath>
#include <numeric>

#include "cpcsim/csv.hpp"
#include "cpcsim/error.hpp"
#include "cpcsim/rng.hpp"

namespace cpcsim {

void WorldConfig::validate() const {
  if (n_categories == 0) throw InvalidArgument("n_categories must be positive");
  if (n_stimuli == 0) throw InvalidArgument("n_stimuli must be positive");
  if (n_stimuli < n_categories) {
    throw InvalidArgument("n_stimuli must be >= n_categories");
  }
  if (obs_dim == 0) throw InvalidArgument("obs_dim must be positive");
  if (n_agents == 0) throw InvalidArgument("n_agents must be positive");
  if (!(prototype_spread >= 0.0) || !std::isfinite(prototype_spread)) {
    throw InvalidArgument("prototype_spread must be a finite nonnegative number");
  }
  if (!(obs_noise >= 0.0) || !std::isfinite(obs_noise)) {
    throw InvalidArgument("obs_noise must be a finite nonnegative number");
  }
}

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::orthogonal_rotation: return "orthogonal_rotation";
    case TransformKind::coordinate_permutation: return "coordinate_permutation";
  }
  return "identity";
}

TransformKind parse_transform_kind(std::string_view name) {
  if (name == "identity") return TransformKind::identity;
  if (name == "orthogonal_rotation") return TransformKind::orthogonal_rotation;
  if (name == "coordinate_permutation") return TransformKind::coordinate_permutation;
  throw InvalidArgument("unknown transform kind '" + std::string(name) + "'");
}

ModalityTransform ModalityTransform::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {TransformKind::identity, Eigen::MatrixXd::Identity(d, d)};
}

ModalityTransform ModalityTransform::random_rotation(std::size_t dim, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(dim);
  Rng rng(seed);
  Eigen::MatrixXd gaussian(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) gaussian(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return {TransformKind::orthogonal_rotation, q};
}

ModalityTransform ModalityTransform::random_permutation(std::size_t dim, std::uint64_t seed) {
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < dim; ++i) {
    p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(order[i])) = 1.0;
  }
  return {TransformKind::coordinate_permutation, p};
}

ModalityTransform ModalityTransform::make(TransformKind kind, std::size_t dim,
                                          std::uint64_t seed) {
  switch (kind) {
    case TransformKind::identity: return identity(dim);
    case TransformKind::orthogonal_rotation: return random_rotation(dim, seed);
    case TransformKind::coordinate_permutation: return random_permutation(dim, seed);
  }
  return identity(dim);
}

void ModalityTransform::validate() const {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
    throw InvalidArgument("transform matrix must be square and non-empty");
  }
  const Eigen::MatrixXd gram = matrix.transpose() * matrix;
  const double deviation =
      (gram - Eigen::MatrixXd::Identity(matrix.rows(), matrix.cols())).cwiseAbs().maxCoeff();
  if (!(deviation <= 1e-9)) {
    throw InvalidArgument("transform matrix is not orthogonal");
  }
}

World generate_world(const WorldConfig& config) {
  config.validate();
  const auto k = static_cast<Eigen::Index>(config.n_categories);
  const auto d = static_cast<Eigen::Index>(config.obs_dim);
  const auto n = static_cast<Eigen::Index>(config.n_stimuli);

  World world;
  Rng rng(derive_seed(config.seed, 0));
  world.prototypes.resize(k, d);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index j = 0; j < d; ++j) {
      world.prototypes(c, j) = config.prototype_spread * rng.normal();
    }
  }
  // Round-robin labels: every category gets at least one stimulus.
  world.true_labels.resize(config.n_stimuli);
  world.stimuli.resize(n, d);
  for (std::size_t i = 0; i < config.n_stimuli; ++i) {
    world.true_labels[i] = i % config.n_categories;
    world.stimuli.row(static_cast<Eigen::Index>(i)) =
        world.prototypes.row(static_cast<Eigen::Index>(world.true_labels[i]));
  }
  return world;
}

ObservationSet observe(const World& world, std::size_t agent_id,
                       const ModalityTransform& transform, double noise_std,
                       std::uint64_t seed, std::vector<bool> observed) {
  transform.validate();
  if (static_cast<std::size_t>(transform.matrix.rows()) != world.obs_dim()) {
    throw InvalidArgument("transform dimension does not match world obs_dim");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw InvalidArgument("noise_std must be a finite nonnegative number");
  }
  if (!observed.empty() && observed.size() != world.n_stimuli()) {
    throw InvalidArgument("observation mask length does not match n_stimuli");
  }
  ObservationSet out;
  out.agent_id = agent_id;
  out.observations = world.stimuli * transform.matrix.transpose();
  out.observed = std::move(observed);
  if (noise_std > 0.0) {
    Rng rng(derive_seed(seed, agent_id));
    for (Eigen::Index i = 0; i < out.observations.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.observations.cols(); ++j) {
        out.observations(i, j) += noise_std * rng.normal();
      }
    }
  }
  if (!out.observations.allFinite()) throw NumericalError("non-finite observations");
  return out;
}

std::vector<bool> random_observation_mask(std::size_t n_stimuli, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("observation fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return {};
  Rng rng(seed);
  std::vector<bool> mask(n_stimuli);
  bool any = false;
  for (std::size_t i = 0; i < n_stimuli; ++i) {
    mask[i] = rng.bernoulli(fraction);
    any = any || mask[i];
  }
  if (!any && n_stimuli > 0) mask[rng.uniform_index(n_stimuli)] = true;
  return mask;
}

namespace {

std::vector<std::string> coordinate_header(std::size_t dim) {
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < dim; ++j) cols.push_back("x" + std::to_string(j));
  return cols;
}

std::size_t dim_from_comment(const csv::Table& table, std::string_view key) {
  const std::string value = csv::comment_value(table, key);
  if (value.empty()) throw InvalidArgument("csv is missing '" + std::string(key) + "'");
  return csv::parse_index(value);
}

}  // namespace

void write_world_csv(const std::filesystem::path& path, const World& world) {
  csv::Table table;
  table.comments.push_back("world n_stimuli=" + std::to_string(world.n_stimuli()) +
                           " obs_dim=" + std::to_string(world.obs_dim()) +
                           " n_categories=" + std::to_string(world.n_categories()));
  table.header = {"stimulus", "label"};
  for (auto& c : coordinate_header(world.obs_dim())) table.header.push_back(std::move(c));
  for (std::size_t i = 0; i < world.n_stimuli(); ++i) {
    std::vector<std::string> row{std::to_string(i), std::to_string(world.true_labels[i])};
    for (Eigen::Index j = 0; j < world.stimuli.cols(); ++j) {
      row.push_back(csv::format_double(world.stimuli(static_cast<Eigen::Index>(i), j)));
    }
    table.rows.push_back(std::move(row));
  }
  // Prototypes without any stimulus cannot occur (round-robin labels), so
  // the per-stimulus rows carry every prototype.
  csv::write(path, table);
}

World read_world_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::size_t n = dim_from_comment(table, "n_stimuli");
  const std::size_t d = dim_from_comment(table, "obs_dim");
  const std::size_t k = dim_from_comment(table, "n_categories");
  if (table.rows.size() != n || table.header.size() != d + 2) {
    throw InvalidArgument("world csv shape does not match its header comment");
  }
  World world;
  world.prototypes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                           static_cast<Eigen::Index>(d));
  world.stimuli.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  world.true_labels.resize(n);
  std::vector<bool> seen(k, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (csv::parse_index(row[0]) != i) throw InvalidArgument("world csv rows out of order");
    const std::size_t label = csv::parse_index(row[1]);
    if (label >= k) throw InvalidArgument("world csv label out of range");
    world.true_labels[i] = label;
    for (std::size_t j = 0; j < d; ++j) {
      world.stimuli(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_double(row[j + 2]);
    }
    if (!seen[label]) {
      world.prototypes.row(static_cast<Eigen::Index>(label)) =
          world.stimuli.row(static_cast<Eigen::Index>(i));
      seen[label] = true;
    }
  }
  return world;
}

void write_observations_csv(const std::filesystem::path& path, const ObservationSet& obs) {
  csv::Table table;
  table.comments.push_back("observations agent_id=" + std::to_string(obs.agent_id) +
                           " n_stimuli=" + std::to_string(obs.n_stimuli()) +
                           " obs_dim=" + std::to_string(obs.obs_dim()));
  table.header = {"stimulus", "observed"};
  for (auto& c : coordinate_header(obs.obs_dim())) table.header.push_back(std::move(c));
  for (std::size_t i = 0; i < obs.n_stimuli(); ++i) {
    std::vector<std::string> row{std::to_string(i), obs.is_observed(i) ? "1" : "0"};
    for (Eigen::Index j = 0; j < obs.observations.cols(); ++j) {
      row.push_back(csv::format_double(obs.observations(static_cast<Eigen::Index>(i), j)));
    }
    table.rows.push_back(std::move(row));
  }
  csv::write(path, table);
}

ObservationSet read_observations_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::size_t n = dim_from_comment(table, "n_stimuli");
  const std::size_t d = dim_from_comment(table, "obs_dim");
  if (table.rows.size() != n || table.header.size() != d + 2) {
    throw InvalidArgument("observation csv shape does not match its header comment");
  }
  ObservationSet obs;
  obs.agent_id = dim_from_comment(table, "agent_id");
  obs.observations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<bool> mask(n, true);
  bool all = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    mask[i] = csv::parse_index(row[1]) != 0;
    all = all && mask[i];
    for (std::size_t j = 0; j < d; ++j) {
      obs.observations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_double(row[j + 2]);
    }
  }
  if (!all) obs.observed = std::move(mask);
  return obs;
}

void to_json(nlohmann::json& j, const WorldConfig& config) {
  j = nlohmann::json{{"n_categories", config.n_categories},
                     {"n_stimuli", config.n_stimuli},
                     {"obs_dim", config.obs_dim},
                     {"prototype_spread", config.prototype_spread},
                     {"obs_noise", config.obs_noise},
                     {"n_agents", config.n_agents},
                     {"seed", config.seed}};
}

void from_json(const nlohmann::json& j, WorldConfig& config) {
  config.n_categories = j.at("n_categories").get<std::size_t>();
  config.n_stimuli = j.at("n_stimuli").get<std::size_t>();
  config.obs_dim = j.at("obs_dim").get<std::size_t>();
  config.prototype_spread = j.at("prototype_spread").get<double>();
  config.obs_noise = j.at("obs_noise").get<double>();
  config.n_agents = j.at("n_agents").get<std::size_t>();
  config.seed = j.at("seed").get<std::uint64_t>();
}

nlohmann::json world_manifest(const WorldConfig& config, const World& world) {
  return {{"kind", "world_manifest"},
          {"config", config},
          {"n_stimuli", world.n_stimuli()},
          {"obs_dim", world.obs_dim()},
          {"n_categories", world.n_categories()}};
}

}  // namespace cpcsim

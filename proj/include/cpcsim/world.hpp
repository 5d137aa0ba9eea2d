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

#ifndef CPCSIM_WORLD_HPP_
#define CPCSIM_WORLD_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace cpcsim {

struct WorldConfig {
  std::size_t n_categories = 3;
  std::size_t n_stimuli = 30;
  std::size_t obs_dim = 2;
  double prototype_spread = 10.0;  // std of category prototypes
  double obs_noise = 0.3;          // per-agent observation noise std
  std::size_t n_agents = 2;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const WorldConfig&) const = default;
};

// Shared environment: category prototypes and the noise-free stimuli drawn
// from them. Row i of `stimuli` is the prototype of `true_labels[i]`.
struct World {
  Eigen::MatrixXd prototypes;  // n_categories x obs_dim
  std::vector<std::size_t> true_labels;
  Eigen::MatrixXd stimuli;  // n_stimuli x obs_dim

  std::size_t n_stimuli() const { return static_cast<std::size_t>(stimuli.rows()); }
  std::size_t obs_dim() const { return static_cast<std::size_t>(stimuli.cols()); }
  std::size_t n_categories() const { return static_cast<std::size_t>(prototypes.rows()); }
};

// One agent's private view of the world. `observed` is either empty (the
// agent perceives every stimulus) or holds one flag per stimulus.
struct ObservationSet {
  std::size_t agent_id = 0;
  Eigen::MatrixXd observations;  // n_stimuli x obs_dim
  std::vector<bool> observed;

  std::size_t n_stimuli() const { return static_cast<std::size_t>(observations.rows()); }
  std::size_t obs_dim() const { return static_cast<std::size_t>(observations.cols()); }
  bool is_observed(std::size_t stimulus) const {
    return observed.empty() || observed[stimulus];
  }
  Eigen::VectorXd row(std::size_t stimulus) const {
    return observations.row(static_cast<Eigen::Index>(stimulus)).transpose();
  }
};

enum class TransformKind { identity, orthogonal_rotation, coordinate_permutation };

std::string_view to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view name);

// Isometric change of perceptual coordinates applied before observation noise.
struct ModalityTransform {
  TransformKind kind = TransformKind::identity;
  Eigen::MatrixXd matrix;

  static ModalityTransform identity(std::size_t dim);
  // Haar-distributed rotation (determinant +1).
  static ModalityTransform random_rotation(std::size_t dim, std::uint64_t seed);
  static ModalityTransform random_permutation(std::size_t dim, std::uint64_t seed);
  static ModalityTransform make(TransformKind kind, std::size_t dim, std::uint64_t seed);

  // Throws InvalidArgument unless square and orthogonal within 1e-9.
  void validate() const;
};

World generate_world(const WorldConfig& config);

// observations = stimuli * transform^T + N(0, noise_std^2) per entry. The
// noise stream is derived from (seed, agent_id).
ObservationSet observe(const World& world, std::size_t agent_id,
                       const ModalityTransform& transform, double noise_std,
                       std::uint64_t seed, std::vector<bool> observed = {});

// Bernoulli(fraction) visibility mask, with at least one stimulus kept.
std::vector<bool> random_observation_mask(std::size_t n_stimuli, double fraction,
                                          std::uint64_t seed);

void write_world_csv(const std::filesystem::path& path, const World& world);
World read_world_csv(const std::filesystem::path& path);
void write_observations_csv(const std::filesystem::path& path, const ObservationSet& obs);
ObservationSet read_observations_csv(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const WorldConfig& config);
void from_json(const nlohmann::json& j, WorldConfig& config);

// {"kind": "world_manifest", "config": {...}, "n_stimuli": ..., ...}
nlohmann::json world_manifest(const WorldConfig& config, const World& world);

}  // namespace cpcsim

#endif  // CPCSIM_WORLD_HPP_

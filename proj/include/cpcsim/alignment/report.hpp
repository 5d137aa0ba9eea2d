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

#ifndef CPCSIM_ALIGNMENT_REPORT_HPP_
#define CPCSIM_ALIGNMENT_REPORT_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "cpcsim/alignment/rdm.hpp"
#include "cpcsim/alignment/transport.hpp"
#include "json.hpp"

namespace cpcsim {

// Supervised (RSA) and unsupervised (GW) comparison of two RDMs.
struct AlignmentReport {
  std::optional<double> rsa_pearson;   // absent when sizes differ or RSA is undefined
  std::optional<double> rsa_spearman;
  double gw_distance = 0.0;
  std::optional<double> matching_accuracy;  // absent without a known correspondence
  std::map<std::size_t, double> top_k_accuracy;
  double epsilon = 0.0;
  std::size_t n_initializations = 0;
  std::uint64_t best_init_seed = 0;
  std::vector<std::size_t> recovered_correspondence;  // row argmax of the plan
};

struct AlignOptions {
  GwOptions gw;
  // Correspond stimuli by position even when the label sets match.
  bool positional = false;
  std::vector<std::size_t> top_k = {1, 3, 5};
};

// Ground-truth correspondence for a and b: by label when both carry the same
// label set, by position otherwise (sizes must then agree).
std::optional<std::vector<std::size_t>> known_correspondence(const Rdm& a, const Rdm& b,
                                                             bool positional);

AlignmentReport align_rdms(const Rdm& a, const Rdm& b, const AlignOptions& options = {});

nlohmann::json to_json(const AlignmentReport& report);

}  // namespace cpcsim

#endif  // CPCSIM_ALIGNMENT_REPORT_HPP_

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

#include "cpcsim/alignment/report.hpp"

#include <algorithm>
#include <unordered_map>

#include "cpcsim/error.hpp"

namespace cpcsim {

std::optional<std::vector<std::size_t>> known_correspondence(const Rdm& a, const Rdm& b,
                                                             bool positional) {
  if (a.size() != b.size()) return std::nullopt;
  std::vector<std::size_t> out(a.size());
  if (!positional) {
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t j = 0; j < b.labels.size(); ++j) position.emplace(b.labels[j], j);
    bool all_found = position.size() == b.labels.size();
    for (std::size_t i = 0; i < a.labels.size() && all_found; ++i) {
      const auto it = position.find(a.labels[i]);
      if (it == position.end()) {
        all_found = false;
      } else {
        out[i] = it->second;
      }
    }
    std::vector<std::size_t> sorted = out;
    std::sort(sorted.begin(), sorted.end());
    if (all_found && std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) {
      return out;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

AlignmentReport align_rdms(const Rdm& a, const Rdm& b, const AlignOptions& options) {
  a.validate();
  b.validate();
  AlignmentReport report;
  const auto truth = known_correspondence(a, b, options.positional);

  if (truth && a.size() >= 3) {
    Rdm matched = reorder(b, *truth);
    matched.labels = a.labels;
    try {
      report.rsa_pearson = rsa(a, matched, CorrelationMethod::pearson);
      report.rsa_spearman = rsa(a, matched, CorrelationMethod::spearman);
    } catch (const NumericalError&) {
      report.rsa_pearson.reset();
      report.rsa_spearman.reset();
    }
  }

  const GwResult gw = gw_align(a, b, options.gw);
  report.gw_distance = gw.gw_distance;
  report.epsilon = gw.epsilon;
  report.n_initializations = gw.n_init;
  report.best_init_seed = gw.best_init_seed;
  report.recovered_correspondence = row_argmax(gw.plan.plan);
  if (truth) {
    report.matching_accuracy = matching_accuracy(gw.plan, *truth, 1);
    for (std::size_t k : options.top_k) {
      if (k >= 1 && k <= b.size()) report.top_k_accuracy[k] = matching_accuracy(gw.plan, *truth, k);
    }
  }
  return report;
}

nlohmann::json to_json(const AlignmentReport& report) {
  auto optional_value = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json top_k = nlohmann::json::object();
  for (const auto& [k, v] : report.top_k_accuracy) top_k[std::to_string(k)] = v;
  return {{"rsa_pearson", optional_value(report.rsa_pearson)},
          {"rsa_spearman", optional_value(report.rsa_spearman)},
          {"gw_distance", report.gw_distance},
          {"matching_accuracy", optional_value(report.matching_accuracy)},
          {"top_k_accuracy", top_k},
          {"epsilon", report.epsilon},
          {"n_initializations", report.n_initializations},
          {"best_init_seed", report.best_init_seed},
          {"recovered_correspondence", report.recovered_correspondence}};
}

}  // namespace cpcsim

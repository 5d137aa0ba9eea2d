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

#ifndef CPCSIM_SUMMARY_HPP_
#define CPCSIM_SUMMARY_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cpcsim/experiment.hpp"
#include "json.hpp"

namespace cpcsim {

struct MetricSummary {
  std::string metric;
  double mean = 0.0;  // NaN when no run has a finite value
  double std = 0.0;
  std::size_t n = 0;  // finite values used
};

struct ConditionSummary {
  GameMode condition = GameMode::mh;
  std::size_t n_runs = 0;
  std::vector<MetricSummary> metrics;  // in kMetricNames order
};

// Mann-Whitney comparison of final values. Only runs where both conditions
// have a finite value enter, so the two samples cover the same seeds.
struct Contrast {
  GameMode first = GameMode::mh;
  GameMode second = GameMode::mh;
  std::string metric;
  std::size_t n_pairs = 0;
  double mean_difference = 0.0;  // first minus second
  double u_statistic = 0.0;      // of the first sample
  double p_value = 1.0;
  bool exact = false;
};

struct LongRow {
  GameMode condition = GameMode::mh;
  std::size_t record = 0;
  std::size_t seed_index = 0;
  std::size_t round = 0;
  std::string metric;
  double value = 0.0;

  bool operator==(const LongRow&) const = default;
};

struct SummaryReport {
  std::vector<ConditionSummary> conditions;
  std::vector<Contrast> contrasts;  // needs at least two shared seeds
  std::vector<LongRow> long_table;

  const MetricSummary& find(GameMode condition, std::string_view metric) const;
};

// Final metric = the last measured round of each series.
SummaryReport summarize(std::span<const RunRecord> records);

nlohmann::json to_json(const SummaryReport& report);
std::string long_table_csv(const SummaryReport& report);
std::vector<LongRow> read_long_table_csv(const std::filesystem::path& path);

// Writes summary.json and summary_long.csv.
void write_summary(const std::filesystem::path& dir, const SummaryReport& report);

}  // namespace cpcsim

#endif  // CPCSIM_SUMMARY_HPP_

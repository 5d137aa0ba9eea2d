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

#include "cpcsim/summary.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include "cpcsim/csv.hpp"
#include "cpcsim/error.hpp"
#include "cpcsim/stats.hpp"

namespace cpcsim {
namespace {

using RunKey = std::pair<std::size_t, std::size_t>;  // (record, seed_index)
using Finals = std::map<RunKey, std::array<double, kMetricNames.size()>>;

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

const MetricSummary& SummaryReport::find(GameMode condition, std::string_view metric) const {
  for (const auto& c : conditions) {
    if (c.condition != condition) continue;
    for (const auto& m : c.metrics) {
      if (m.metric == metric) return m;
    }
  }
  throw InvalidArgument("no summary for " + std::string(to_string(condition)) + "/" +
                        std::string(metric));
}

SummaryReport summarize(std::span<const RunRecord> records) {
  if (records.empty()) throw InvalidArgument("summarize needs at least one record");
  std::vector<GameMode> order;
  std::set<GameMode> reference;
  for (const auto& s : records.front().series) {
    if (reference.insert(s.condition).second) order.push_back(s.condition);
  }
  for (const auto& record : records) {
    std::set<GameMode> mine;
    for (const auto& s : record.series) mine.insert(s.condition);
    if (mine != reference) throw InvalidArgument("records have mismatched condition sets");
  }

  SummaryReport report;
  std::map<GameMode, Finals> finals;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (const auto& series : records[r].series) {
      if (series.points.empty()) continue;
      for (const auto& point : series.points) {
        for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
          report.long_table.push_back({series.condition, r, series.seed_index, point.round,
                                       std::string(kMetricNames[m]), point.values[m]});
        }
      }
      auto [it, inserted] =
          finals[series.condition].emplace(RunKey{r, series.seed_index}, series.points.back().values);
      if (!inserted) throw InvalidArgument("duplicate series in run record");
    }
  }

  for (GameMode condition : order) {
    ConditionSummary summary;
    summary.condition = condition;
    summary.n_runs = finals[condition].size();
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      std::vector<double> values;
      for (const auto& [key, v] : finals[condition]) {
        if (std::isfinite(v[m])) values.push_back(v[m]);
      }
      MetricSummary ms;
      ms.metric = kMetricNames[m];
      ms.n = values.size();
      ms.mean = values.empty() ? std::nan("") : mean(values);
      ms.std = sample_std(values);
      summary.metrics.push_back(std::move(ms));
    }
    report.conditions.push_back(std::move(summary));
  }

  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Finals& first = finals[order[i]];
      const Finals& second = finals[order[j]];
      for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
        std::vector<double> x;
        std::vector<double> y;
        for (const auto& [key, v] : first) {
          auto other = second.find(key);
          if (other == second.end()) continue;
          if (std::isfinite(v[m]) && std::isfinite(other->second[m])) {
            x.push_back(v[m]);
            y.push_back(other->second[m]);
          }
        }
        if (x.size() < 2) continue;
        const MannWhitneyResult test = mann_whitney_u(x, y);
        Contrast c;
        c.first = order[i];
        c.second = order[j];
        c.metric = kMetricNames[m];
        c.n_pairs = x.size();
        c.mean_difference = mean(x) - mean(y);
        c.u_statistic = test.u_statistic;
        c.p_value = test.p_value;
        c.exact = test.exact;
        report.contrasts.push_back(std::move(c));
      }
    }
  }
  return report;
}

nlohmann::json to_json(const SummaryReport& report) {
  nlohmann::json conditions = nlohmann::json::array();
  for (const auto& c : report.conditions) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& m : c.metrics) {
      metrics[m.metric] = {{"mean", number_or_null(m.mean)},
                           {"std", number_or_null(m.std)},
                           {"n", m.n}};
    }
    conditions.push_back(
        {{"condition", to_string(c.condition)}, {"n_runs", c.n_runs}, {"final", metrics}});
  }
  nlohmann::json contrasts = nlohmann::json::array();
  for (const auto& c : report.contrasts) {
    contrasts.push_back({{"first", to_string(c.first)},
                         {"second", to_string(c.second)},
                         {"metric", c.metric},
                         {"n_pairs", c.n_pairs},
                         {"mean_difference", c.mean_difference},
                         {"test", "mann_whitney_u"},
                         {"u_statistic", c.u_statistic},
                         {"p_value", c.p_value},
                         {"exact", c.exact}});
  }
  return {{"conditions", conditions}, {"contrasts", contrasts}};
}

std::string long_table_csv(const SummaryReport& report) {
  csv::Table table;
  table.header = {"condition", "record", "seed_index", "round", "metric", "value"};
  for (const auto& row : report.long_table) {
    table.rows.push_back({std::string(to_string(row.condition)), std::to_string(row.record),
                          std::to_string(row.seed_index), std::to_string(row.round), row.metric,
                          csv::format_double(row.value)});
  }
  return csv::to_string(table);
}

std::vector<LongRow> read_long_table_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.header != std::vector<std::string>{"condition", "record", "seed_index", "round",
                                               "metric", "value"}) {
    throw InvalidArgument("unexpected header in " + path.string());
  }
  std::vector<LongRow> out;
  for (const auto& row : table.rows) {
    if (row.size() != 6) throw InvalidArgument("ragged row in " + path.string());
    out.push_back({parse_game_mode(row[0]), csv::parse_index(row[1]), csv::parse_index(row[2]),
                   csv::parse_index(row[3]), row[4], csv::parse_double(row[5])});
  }
  return out;
}

void write_summary(const std::filesystem::path& dir, const SummaryReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream json(dir / "summary.json");
  if (!json) throw IoError("cannot write summary.json in " + dir.string());
  json << to_json(report).dump(2) << '\n';
  std::ofstream long_csv(dir / "summary_long.csv", std::ios::binary);
  if (!long_csv) throw IoError("cannot write summary_long.csv in " + dir.string());
  long_csv << long_table_csv(report);
}

}  // namespace cpcsim

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

#include "cpcsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpcsim/alignment/rdm.hpp"
#include "cpcsim/alignment/report.hpp"
#include "cpcsim/error.hpp"
#include "cpcsim/experiment.hpp"
#include "cpcsim/summary.hpp"

namespace cpcsim {
namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string output;
  bool quiet = false;
};

std::string fixed(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void emit(const std::string& text, const std::string& output, std::ostream& out) {
  if (output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(output, std::ios::binary);
  if (!file) throw IoError("cannot write " + output);
  file << text;
}

int simulate(const std::string& config_path, const GlobalOptions& global, std::ostream& out) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (global.seed) {
    config.world.seed = *global.seed;
    config.game.seed = *global.seed;
  }
  if (!global.output.empty()) config.output_dir = global.output;
  const RunRecord record = run_experiment(config);
  if (global.quiet) return kExitOk;
  out << "wrote " << record.series.size() << " series to " << config.output_dir.string() << "\n";
  const SummaryReport summary = summarize(std::span<const RunRecord>(&record, 1));
  for (const auto& c : summary.conditions) {
    out << "  " << to_string(c.condition);
    for (std::string_view metric : {"ari", "ari_truth", "rsa_centroid", "acceptance_rate"}) {
      const MetricSummary& m = summary.find(c.condition, metric);
      out << "  " << metric << "=" << fixed(m.mean) << "+-" << fixed(m.std);
    }
    out << "\n";
  }
  return kExitOk;
}

int align(const std::string& path_a, const std::string& path_b, double epsilon,
          std::size_t n_init, bool supervised, const GlobalOptions& global, std::ostream& out) {
  const Rdm a = read_rdm_csv(path_a);
  const Rdm b = read_rdm_csv(path_b);
  AlignOptions options;
  options.gw.epsilon = epsilon;
  options.gw.n_init = n_init;
  options.gw.seed = global.seed.value_or(0);
  options.gw.n_threads = 0;
  options.positional = supervised;
  const AlignmentReport report = align_rdms(a, b, options);
  emit(to_json(report).dump(2) + "\n", global.output, out);
  return kExitOk;
}

int rdm(const std::string& points_path, const std::string& metric, const GlobalOptions& global,
        std::ostream& out) {
  const LabeledPoints points = read_points_csv(points_path);
  const Rdm result = compute_rdm(points.points, parse_distance_metric(metric), points.labels);
  emit(rdm_to_csv(result), global.output, out);
  return kExitOk;
}

int summarize_dir(const std::string& dir, const GlobalOptions& global, std::ostream& out) {
  const std::filesystem::path root(dir);
  if (!std::filesystem::is_directory(root)) throw IoError("not a directory: " + dir);
  std::vector<std::filesystem::path> run_dirs;
  if (std::filesystem::exists(root / "manifest.json")) run_dirs.push_back(root);
  std::vector<std::filesystem::path> children;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
      children.push_back(entry.path());
    }
  }
  std::sort(children.begin(), children.end());
  run_dirs.insert(run_dirs.end(), children.begin(), children.end());
  if (run_dirs.empty()) throw IoError("no run records (manifest.json) under " + dir);

  std::vector<RunRecord> records;
  for (const auto& d : run_dirs) records.push_back(read_run_record(d));
  const SummaryReport report = summarize(records);
  const std::filesystem::path target = global.output.empty() ? root : std::filesystem::path(global.output);
  write_summary(target, report);
  if (!global.quiet) {
    out << "summarized " << records.size() << " record(s) into " << target.string() << "\n";
    for (const auto& c : report.contrasts) {
      if (c.metric != "ari") continue;
      out << "  ari " << to_string(c.first) << " vs " << to_string(c.second)
          << ": diff=" << fixed(c.mean_difference) << " U=" << c.u_statistic
          << " p=" << c.p_value << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate collective predictive coding naming games and align representations",
               "cpcsim"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Base seed (overrides the config)");
  app.add_option("--output", global.output, "Output file or directory");
  app.add_flag("--quiet", global.quiet, "Suppress progress output");

  std::string config_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run an experiment from a TOML config");
  simulate_cmd->add_option("config", config_path, "Config file")->required();

  std::string rdm_a;
  std::string rdm_b;
  double epsilon = 0.0;
  std::size_t n_init = GwOptions{}.n_init;
  bool supervised = false;
  auto* align_cmd = app.add_subcommand("align", "Compare two RDM CSV files");
  align_cmd->add_option("rdm_a", rdm_a, "First RDM")->required();
  align_cmd->add_option("rdm_b", rdm_b, "Second RDM")->required();
  align_cmd->add_option("--epsilon", epsilon, "Entropic regularization (0 = automatic)");
  align_cmd->add_option("--n-init", n_init, "Number of GW initializations")
      ->check(CLI::PositiveNumber);
  align_cmd->add_flag("--supervised", supervised,
                      "Rows correspond by position, ignoring labels");

  std::string points_path;
  std::string metric = "euclidean";
  auto* rdm_cmd = app.add_subcommand("rdm", "Build an RDM from a points CSV");
  rdm_cmd->add_option("points", points_path, "Points CSV")->required();
  rdm_cmd->add_option("--metric", metric, "euclidean or cosine")
      ->check(CLI::IsMember({"euclidean", "cosine"}));

  std::string summary_dir;
  auto* summarize_cmd = app.add_subcommand("summarize", "Summarize run records in a directory");
  summarize_cmd->add_option("dir", summary_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*simulate_cmd) return simulate(config_path, global, out);
    if (*align_cmd) return align(rdm_a, rdm_b, epsilon, n_init, supervised, global, out);
    if (*rdm_cmd) return rdm(points_path, metric, global, out);
    if (*summarize_cmd) return summarize_dir(summary_dir, global, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cpcsim

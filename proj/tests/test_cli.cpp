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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cpcsim/alignment/rdm.hpp"
#include "cpcsim/cli.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace cpcsim {
namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "cpcsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path write_points(const std::filesystem::path& dir, const std::string& body) {
  const auto path = dir / "points.csv";
  std::ofstream(path) << body;
  return path;
}

std::size_t count_data_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    ++n;
  }
  return n;
}

TEST(CliTest, RdmOfIdenticalPointsIsZero) {
  const auto dir = testutil::scratch_dir("cli_rdm");
  const auto points = write_points(dir, "label,x,y\na,1,2\nb,1,2\n");
  const auto out = dir / "rdm.csv";
  ASSERT_EQ(run({"rdm", points.string(), "--output", out.string()}).code, kExitOk);
  const Rdm rdm = read_rdm_csv(out);
  EXPECT_EQ(rdm.matrix, Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(rdm.labels, (std::vector<std::string>{"a", "b"}));
}

TEST(CliTest, SelfAlignmentReport) {
  const auto dir = testutil::scratch_dir("cli_align");
  const auto points = write_points(dir, "x,y\n0,0\n1,0\n0,1.5\n1.2,1.9\n0.4,0.7\n");
  const auto rdm = dir / "rdm.csv";
  ASSERT_EQ(run({"rdm", points.string(), "--output", rdm.string()}).code, kExitOk);
  const CliResult r = run({"align", rdm.string(), rdm.string(), "--seed", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["rsa_pearson"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(j["matching_accuracy"].get<double>(), 1.0);
  EXPECT_LT(j["gw_distance"].get<double>(), 1e-3);

  const auto report = dir / "report.json";
  ASSERT_EQ(run({"--quiet", "align", rdm.string(), rdm.string(), "--supervised", "--n-init", "4",
                 "--output", report.string()})
                .code,
            kExitOk);
  std::ifstream in(report);
  EXPECT_EQ(nlohmann::json::parse(in)["n_initializations"], 4);
}

TEST(CliTest, SimulateTinyConfig) {
  const auto dir = testutil::scratch_dir("cli_sim");
  const auto config = std::filesystem::path(CPCSIM_SOURCE_DIR) / "configs/tiny.toml";
  const auto start = std::chrono::steady_clock::now();
  const CliResult r = run({"--quiet", "--output", dir.string(), "simulate", config.string()});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LT(seconds, 5.0);
  EXPECT_TRUE(r.out.empty());
  // Two stimuli, twenty rounds: one trace row per stimulus per round.
  EXPECT_EQ(count_data_lines(dir / "traces/trace_mh_seed0.csv"), 40u);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));

  const CliResult summary = run({"summarize", dir.string()});
  ASSERT_EQ(summary.code, kExitOk) << summary.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary_long.csv"));
}

TEST(CliTest, SeedOverrideChangesTheRun) {
  const auto a = testutil::scratch_dir("cli_seed_a");
  const auto b = testutil::scratch_dir("cli_seed_b");
  const auto config = std::filesystem::path(CPCSIM_SOURCE_DIR) / "configs/tiny.toml";
  ASSERT_EQ(run({"--quiet", "--seed", "1", "--output", a.string(), "simulate", config.string()}).code,
            kExitOk);
  ASSERT_EQ(run({"--quiet", "--seed", "2", "--output", b.string(), "simulate", config.string()}).code,
            kExitOk);
  std::ifstream ia(a / "worlds/world_seed0.csv");
  std::ifstream ib(b / "worlds/world_seed0.csv");
  std::stringstream sa;
  std::stringstream sb;
  sa << ia.rdbuf();
  sb << ib.rdbuf();
  EXPECT_NE(sa.str(), sb.str());
}

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run({"--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"align", "only_one.csv"}).code, kExitUsage);
  EXPECT_EQ(run({"rdm", "x.csv", "--metric", "manhattan"}).code, kExitUsage);
  EXPECT_EQ(run({"simulate", "/nonexistent.toml"}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
  const CliResult help = run({"--help"});
  EXPECT_EQ(help.code, kExitOk);
}

TEST(CliTest, NumericalFailureExitsTwo) {
  const auto dir = testutil::scratch_dir("cli_numerical");
  const auto points = write_points(dir, "x,y\n0,0\n1,0\n0,3\n5,5\n");
  const auto rdm = dir / "rdm.csv";
  ASSERT_EQ(run({"rdm", points.string(), "--output", rdm.string()}).code, kExitOk);
  const CliResult r =
      run({"align", rdm.string(), rdm.string(), "--epsilon", "1e-200", "--n-init", "1"});
  EXPECT_EQ(r.code, kExitNumerical);
  EXPECT_NE(r.err.find("sinkhorn"), std::string::npos);
}

TEST(CliTest, BinaryReportsExitCodes) {
  const std::string cli = CPCSIM_CLI_PATH;
  const int status = std::system((cli + " --bogus > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitUsage);
  const int ok = std::system((cli + " --help > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(ok), kExitOk);
}

}  // namespace
}  // namespace cpcsim

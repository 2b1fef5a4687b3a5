// Copyright 2026 The obsv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = OBSV_CLI_PATH;
const std::string kDir = OBSV_SCENARIO_DIR;

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun cli(const std::string& args) {
  CliRun r;
  FILE* p = popen((kCli + " " + args + " 2>&1").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch(const std::string& tag) {
  std::random_device rd;
  fs::path p = fs::temp_directory_path() / ("obsv_cli_" + tag + "_" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, ExitCodeContract) {
  fs::path d = scratch("exit");
  const std::pair<const char*, int> cases[] = {{"laplacian_commuting.json", 0},
                                               {"repeated_eigenvalues.json", 2},
                                               {"adversarial_tie.json", 2},
                                               {"annihilate_unperturbed.json", 3}};
  for (const auto& [file, code] : cases) {
    CliRun r = cli("analyze " + q(kDir + "/" + file) + " --out " + q(d / file) + " --strict");
    EXPECT_EQ(r.code, code) << file << "\n" << r.output;
    for (const char* f : {"certificate.json", "sequences.csv", "tail_table.csv", "manifest.json"}) {
      EXPECT_TRUE(fs::exists(d / file / f)) << file << " " << f;
    }
  }
  nlohmann::json rep = nlohmann::json::parse(slurp(d / "repeated_eigenvalues.json" / "certificate.json"));
  EXPECT_EQ(rep["failed_condition"], "gap");
  nlohmann::json adv = nlohmann::json::parse(slurp(d / "adversarial_tie.json" / "certificate.json"));
  EXPECT_EQ(adv["reason"], "hypotheses-unmet: condition (i)");
  EXPECT_GE(adv["constants"]["kappa_star"].get<double>(), 1.0);
  fs::remove_all(d);
}

TEST(Cli, ErrorsExitOne) {
  fs::path d = scratch("err");
  std::ofstream(d / "bad.json") << "{\"operator\": ";
  CliRun r = cli("analyze " + q(d / "bad.json") + " --out " + q(d / "o"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("malformed input"), std::string::npos) << r.output;

  r = cli("analyze " + q(d / "missing.json") + " --out " + q(d / "o"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("cannot read or write"), std::string::npos) << r.output;

  std::ofstream(d / "invalid.json") << R"({"operator": {"kind": "dirichlet_laplacian"}, "truncation": {"N": 2}})";
  r = cli("analyze " + q(d / "invalid.json") + " --out " + q(d / "o"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("invalid scenario"), std::string::npos) << r.output;

  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("analyze " + q(kDir + "/laplacian_commuting.json") + " --out " + q(d / "o") + " --nodes 4").code, 1);
  fs::remove_all(d);
}

TEST(Cli, CertificateIsByteIdenticalAcrossRuns) {
  fs::path d = scratch("det");
  const std::string s = q(kDir + "/laplacian_smoothing.json");
  ASSERT_EQ(cli("analyze " + s + " --out " + q(d / "a")).code, 0);
  ASSERT_EQ(cli("analyze " + s + " --out " + q(d / "b")).code, 0);
  EXPECT_EQ(slurp(d / "a" / "certificate.json"), slurp(d / "b" / "certificate.json"));
  EXPECT_EQ(slurp(d / "a" / "sequences.csv"), slurp(d / "b" / "sequences.csv"));
  EXPECT_EQ(slurp(d / "a" / "tail_table.csv"), slurp(d / "b" / "tail_table.csv"));
  // only the seed-bearing fields move with --seed
  ASSERT_EQ(cli("analyze " + s + " --out " + q(d / "c") + " --seed 99").code, 0);
  nlohmann::json a = nlohmann::json::parse(slurp(d / "a" / "certificate.json"));
  nlohmann::json c = nlohmann::json::parse(slurp(d / "c" / "certificate.json"));
  EXPECT_EQ(c["seed"], 99);
  EXPECT_EQ(a["constants"], c["constants"]);
  nlohmann::json m = nlohmann::json::parse(slurp(d / "a" / "manifest.json"));
  EXPECT_EQ(m["scenario_hash"], a["scenario_hash"]);
  fs::remove_all(d);
}

TEST(Cli, SweepStrengthOnCommutingPreset) {
  fs::path d = scratch("sweep_c");
  CliRun r = cli("sweep " + q(kDir + "/laplacian_commuting.json") + " --param perturbation.c --values 0,0.5,1 --out " + q(d));
  ASSERT_EQ(r.code, 0) << r.output;
  auto rows = read_csv(d / "sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  const double values[] = {0, 0.5, 1};
  double prev = -1;
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(std::stod(rows[i]["value"]), values[i]);
    EXPECT_EQ(rows[i]["verdict"], "observable");
    const double kappa = std::stod(rows[i]["kappa_star"]);
    EXPECT_GE(kappa, prev);
    EXPECT_NEAR(kappa, values[i] / (4 * std::pow(M_PI, 4)), 1e-9);
    prev = kappa;
    EXPECT_TRUE(fs::exists(d / ("run_" + std::to_string(i)) / "certificate.json"));
  }
  fs::remove_all(d);
}

TEST(Cli, SweepArgumentErrors) {
  fs::path d = scratch("sweep_err");
  const std::string s = q(kDir + "/laplacian_commuting.json");
  EXPECT_EQ(cli("sweep " + s + " --param perturbation.c --values '' --out " + q(d)).code, 1);
  EXPECT_EQ(cli("sweep " + s + " --param perturbation.colour --values 1 --out " + q(d)).code, 1);
  EXPECT_EQ(cli("sweep " + s + " --param perturbation.c --values 1,abc --out " + q(d)).code, 1);
  fs::remove_all(d);
}

TEST(Cli, SweepTruncationConvergence) {
  fs::path d = scratch("sweep_n");
  CliRun r = cli("sweep " + q(kDir + "/laplacian_smoothing.json") + " --param truncation.N --values 32,64,128 --out " + q(d));
  ASSERT_EQ(r.code, 0) << r.output;
  ASSERT_EQ(read_csv(d / "sweep.csv").size(), 3u);
  std::vector<std::vector<double>> theta(3);
  for (int i = 0; i < 3; ++i)
    for (auto& row : read_csv(d / ("run_" + std::to_string(i)) / "sequences.csv")) theta[i].push_back(std::stod(row["theta"]));
  ASSERT_EQ(theta[0].size(), 24u);
  for (int i = 1; i < 3; ++i) {
    double worst = 0;
    for (std::size_t n = 0; n < theta[i - 1].size(); ++n) worst = std::max(worst, std::abs(theta[i][n] - theta[i - 1][n]));
    EXPECT_LE(worst, 1e-6) << "step " << i;
  }
  fs::remove_all(d);
}

TEST(Cli, PlotData) {
  fs::path d = scratch("plot");
  ASSERT_EQ(cli("analyze " + q(kDir + "/laplacian_smoothing.json") + " --out " + q(d)).code, 0);
  CliRun r = cli("plotdata " + q(d));
  EXPECT_EQ(r.code, 0) << r.output;
  for (const char* f : {"plot_theta.csv", "plot_gaps.csv", "plot_rho.csv", "plot_tail.csv"}) EXPECT_TRUE(fs::exists(d / f)) << f;
  auto tail = read_csv(d / "plot_tail.csv");
  EXPECT_FALSE(tail.empty());
  EXPECT_TRUE(tail.front().count("t_k") && tail.front().count("b_k"));

  fs::remove(d / "tail_table.csv");
  fs::remove(d / "plot_tail.csv");
  r = cli("plotdata " + q(d));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("warning"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(d / "plot_tail.csv"));
  EXPECT_EQ(cli("plotdata " + q(d) + " --strict").code, 1);
  EXPECT_EQ(cli("plotdata " + q(d / "nowhere")).code, 1);
  fs::remove_all(d);
}

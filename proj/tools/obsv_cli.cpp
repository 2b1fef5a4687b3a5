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

// obsv command-line front end. Talks to the library only through obsv.h.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "obsv/obsv.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitError = 1;

struct ScenarioDeleter {
  void operator()(obsv_scenario* s) const { obsv_scenario_free(s); }
};
struct AnalysisDeleter {
  void operator()(obsv_analysis* a) const { obsv_analysis_free(a); }
};
using ScenarioPtr = std::unique_ptr<obsv_scenario, ScenarioDeleter>;
using AnalysisPtr = std::unique_ptr<obsv_analysis, AnalysisDeleter>;

// Maps a failing status onto a message naming the failure kind.
int report(obsv_status st, const std::string& context) {
  const char* kind = "error";
  switch (st) {
    case OBSV_ERR_IO: kind = "cannot read or write"; break;
    case OBSV_ERR_PARSE: kind = "malformed input"; break;
    case OBSV_ERR_VALIDATION: kind = "invalid scenario"; break;
    case OBSV_ERR_NUMERIC: kind = "numerical failure"; break;
    case OBSV_ERR_ARGUMENT: kind = "bad argument"; break;
    case OBSV_ERR_SELF_CHECK: kind = "self-check failed"; break;
    default: break;
  }
  fmt::print(stderr, "obsv: {}: {}: {}\n", context, kind, obsv_last_error());
  return kExitError;
}

std::string num(double x) { return std::isnan(x) ? std::string() : fmt::format("{:.17g}", x); }

std::string verdict_name(obsv_verdict v) {
  switch (v) {
    case OBSV_VERDICT_OBSERVABLE: return "observable";
    case OBSV_VERDICT_HYPOTHESES_UNMET: return "hypotheses-unmet";
    case OBSV_VERDICT_NOT_OBSERVABLE: return "not-observable";
  }
  return "unknown";
}

struct Overrides {
  std::optional<int> nodes, grid, guard;
  std::optional<long long> seed;
};

obsv_status apply(obsv_scenario* s, const Overrides& o) {
  obsv_status st = OBSV_OK;
  if (o.nodes && (st = obsv_scenario_set_number(s, "analysis.nodes", *o.nodes)) != OBSV_OK) return st;
  if (o.grid && (st = obsv_scenario_set_number(s, "analysis.grid", *o.grid)) != OBSV_OK) return st;
  if (o.guard && (st = obsv_scenario_set_number(s, "truncation.guard", *o.guard)) != OBSV_OK) return st;
  if (o.seed && (st = obsv_scenario_set_number(s, "analysis.seed", static_cast<double>(*o.seed))) != OBSV_OK)
    return st;
  return st;
}

int run_analyze(const std::string& path, const std::string& out, const Overrides& o, bool strict) {
  obsv_scenario* raw = nullptr;
  obsv_status st = obsv_scenario_load(path.c_str(), &raw);
  ScenarioPtr sc(raw);
  if (st != OBSV_OK) return report(st, path);
  if ((st = apply(sc.get(), o)) != OBSV_OK) return report(st, path);

  obsv_analysis* ar = nullptr;
  st = obsv_analyze(sc.get(), &ar);
  AnalysisPtr an(ar);
  if (st != OBSV_OK) return report(st, path);
  if ((st = obsv_analysis_write(an.get(), out.c_str())) != OBSV_OK) return report(st, out);
  if (strict && (st = obsv_analysis_self_check(an.get())) != OBSV_OK) return report(st, path);

  obsv_constants c{};
  obsv_analysis_constants(an.get(), &c);
  const obsv_verdict v = obsv_analysis_verdict(an.get());
  fmt::print("verdict: {}\n", obsv_analysis_reason(an.get()));
  fmt::print("N = {}, trusted = {}\n", c.N, c.trusted);
  fmt::print("gamma_hat = {}  delta_hat = {}  rho_hat = {}\n", num(c.gamma_hat), num(c.delta_hat), num(c.rho_hat));
  if (!std::isnan(c.kappa_star)) fmt::print("kappa_star = {}  gamma_tilde = {}\n", num(c.kappa_star), num(c.gamma_tilde));
  if (!std::isnan(c.delta_tilde)) fmt::print("k_rho = {}  delta_tilde = {}\n", c.k_rho, num(c.delta_tilde));
  fmt::print("reports written to {}\n", out);
  return static_cast<int>(v);
}

std::optional<std::vector<double>> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    std::string cell = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    auto b = cell.find_first_not_of(" \t");
    auto e = cell.find_last_not_of(" \t");
    if (b != std::string::npos) {
      cell = cell.substr(b, e - b + 1);
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
      out.push_back(x);
    }
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return out;
}

int run_sweep(const std::string& path, const std::string& param, const std::string& values,
              const std::string& out) {
  auto parsed = parse_values(values);
  if (!parsed) {
    fmt::print(stderr, "obsv: sweep: cannot parse value list '{}'\n", values);
    return kExitError;
  }
  if (parsed->empty()) {
    fmt::print(stderr, "obsv: sweep: empty value list\n");
    return kExitError;
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    fmt::print(stderr, "obsv: sweep: cannot create '{}': {}\n", out, ec.message());
    return kExitError;
  }
  std::string table = "value,gamma_hat,gamma_tilde,kappa_star,delta_hat,rho_hat,delta_tilde,verdict\n";
  for (std::size_t i = 0; i < parsed->size(); ++i) {
    const double value = (*parsed)[i];
    obsv_scenario* raw = nullptr;
    obsv_status st = obsv_scenario_load(path.c_str(), &raw);
    ScenarioPtr sc(raw);
    if (st != OBSV_OK) return report(st, path);
    if ((st = obsv_scenario_set_number(sc.get(), param.c_str(), value)) != OBSV_OK) return report(st, param);
    obsv_analysis* ar = nullptr;
    st = obsv_analyze(sc.get(), &ar);
    AnalysisPtr an(ar);
    if (st != OBSV_OK) return report(st, fmt::format("{} = {}", param, num(value)));
    const fs::path run_dir = fs::path(out) / fmt::format("run_{}", i);
    if ((st = obsv_analysis_write(an.get(), run_dir.string().c_str())) != OBSV_OK) return report(st, run_dir.string());
    obsv_constants c{};
    obsv_analysis_constants(an.get(), &c);
    table += fmt::format("{},{},{},{},{},{},{},{}\n", num(value), num(c.gamma_hat), num(c.gamma_tilde),
                         num(c.kappa_star), num(c.delta_hat), num(c.rho_hat), num(c.delta_tilde),
                         verdict_name(obsv_analysis_verdict(an.get())));
    fmt::print("{} = {}: {}\n", param, num(value), obsv_analysis_reason(an.get()));
  }
  const fs::path csv = fs::path(out) / "sweep.csv";
  std::ofstream f(csv, std::ios::binary | std::ios::trunc);
  f << table;
  if (!f) {
    fmt::print(stderr, "obsv: sweep: cannot write '{}'\n", csv.string());
    return kExitError;
  }
  return 0;
}

int run_plotdata(const std::string& dir, bool strict) {
  obsv_plot_result r{};
  obsv_status st = obsv_emit_plot_data(dir.c_str(), strict ? 1 : 0, &r);
  if (st != OBSV_OK) return report(st, dir);
  if (r.warning_count > 0) fmt::print(stderr, "obsv: warning: {}\n", r.warnings);
  fmt::print("{} plot files written to {}\n", r.files_written, dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observability certificates for perturbed self-adjoint systems"};
  app.set_version_flag("--version", std::string(obsv_version()));
  app.require_subcommand(1);

  std::string scenario, out;
  Overrides ov;
  bool strict = false;
  auto* analyze = app.add_subcommand("analyze", "Analyze one scenario");
  analyze->add_option("scenario", scenario, "Scenario JSON file")->required();
  analyze->add_option("--out", out, "Output directory")->required();
  analyze->add_option("--nodes", ov.nodes, "Contour quadrature nodes");
  analyze->add_option("--grid", ov.grid, "Hautus grid resolution");
  analyze->add_option("--guard", ov.guard, "Guard band size");
  analyze->add_option("--seed", ov.seed, "Random seed for the min-max check");
  analyze->add_flag("--strict", strict, "Treat failed internal consistency checks as errors");

  std::string param, values;
  auto* sweep = app.add_subcommand("sweep", "Repeat the analysis over a parameter grid");
  sweep->add_option("scenario", scenario, "Scenario JSON file")->required();
  sweep->add_option("--param", param, "Dotted scenario field, e.g. perturbation.c")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out, "Output directory")->required();

  std::string dir;
  auto* plot = app.add_subcommand("plotdata", "Write plot-ready CSV series from a report directory");
  plot->add_option("dir", dir, "Directory holding analyze output")->required();
  plot->add_flag("--strict", strict, "Fail when an input file is missing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }
  if (*analyze) return run_analyze(scenario, out, ov, strict);
  if (*sweep) return run_sweep(scenario, param, values, out);
  return run_plotdata(dir, strict);
}

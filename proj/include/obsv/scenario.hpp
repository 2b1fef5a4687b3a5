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

// Scenario files: JSON with top-level keys operator, perturbation,
// observation, truncation, tolerances and analysis. Matrices are inline
// row-major arrays or CSV files relative to the scenario's directory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "obsv/model.hpp"

namespace obsv {

struct OperatorSpec {
  std::string kind = "dirichlet_laplacian";  // or "custom"
  std::optional<Matrix> matrix;
};

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::zero;
  PerturbationParams params;
  std::optional<Matrix> matrix;  // custom
};

struct ObservationSpec {
  std::string kind = "window";  // window | identity | zero | custom
  double a = 0.0;
  double b = 1.0;
  std::optional<Matrix> matrix;
  std::optional<int> annihilate_mode;  // 1-based
  bool annihilate_perturbed = false;   // blind to phi_tilde_k instead of phi_k
};

struct Tolerances {
  double gap_floor = 1e-8;
  double delta_floor = 1e-8;
  double rho_floor = 1e-8;
  double zero_floor = 1e-8;
  double sandwich = 1e-8;
  double mode_bound = 1e-9;
  double verdict = 1e-9;
  double refinement = 1e-6;
};

struct AnalysisSpec {
  int nodes = 64;
  int grid = 512;
  std::optional<double> horizon;
  std::uint64_t seed = 0;
  int trials = 2;
  bool refine = true;
  double decay_slope = -0.5;
};

struct Scenario {
  nlohmann::json source;  // validated document, overrides applied
  std::filesystem::path base_dir;
  OperatorSpec op;
  PerturbationSpec perturbation;
  ObservationSpec observation;
  int n = 0;
  std::optional<int> guard;
  Tolerances tolerances;
  AnalysisSpec analysis;
};

/// Validates and decodes a scenario document. Unknown keys are rejected.
/// Throws ErrorCode::validation / ErrorCode::parse / ErrorCode::io.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Scenario parse_scenario_text(const std::string& text, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Sets a numeric field addressed by a dotted path ("perturbation.c",
/// "truncation.N") and revalidates. Unknown fields raise ErrorCode::argument.
void set_scenario_number(Scenario& scenario, const std::string& dotted_path, double value);

/// Reads a headerless comma-separated matrix.
Matrix read_csv_matrix(const std::filesystem::path& path);

/// SHA-256 of the canonical (sorted-key, compact) serialisation.
std::string scenario_digest(const Scenario& scenario);

}  // namespace obsv

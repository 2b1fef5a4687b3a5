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

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "obsv/eig.hpp"
#include "obsv/model.hpp"
#include "obsv/observability.hpp"
#include "obsv/perturbation.hpp"
#include "obsv/riesz.hpp"
#include "obsv/scenario.hpp"

namespace obsv {

/// A, K and C in the eigen coordinates of A.
struct Model {
  SpectralOperator a;
  Perturbation k;
  ObservationMap c;
};

/// Builds the truncated model. `n_override` rebuilds a preset at another size
/// (used by the refinement run); it is rejected for custom matrices.
Model build_model(const Scenario& scenario, std::optional<int> n_override = std::nullopt);

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

struct Analysis {
  Scenario scenario;
  std::string digest;
  std::shared_ptr<const Model> model;

  GapReport gap;
  SpectralObsReport spectral;
  HautusReport hautus;
  GramianReport gramian;
  UnperturbedVerdict unperturbed;
  MinmaxReport minmax;
  DecayDiagnostic k_decay;

  std::optional<PerturbedSpectrum> spectrum;
  std::optional<SandwichReport> sandwich;
  std::optional<ConditionOneReport> condition_one;
  std::optional<CommutatorReport> commutator;
  std::optional<NecessaryReport> necessary;

  std::vector<RieszProjector> projectors;  // projector matrices dropped after use
  std::vector<IdentityResidualReport> identity;
  std::optional<TailReport> tail;
  std::optional<ResidueSanity> residue;
  std::optional<HautusReport> perturbed_hautus;

  Certificate certificate;
  std::vector<std::string> notes;  // logged deviations (shrunk radii, skipped stages)
  std::vector<StageTiming> timings;

  int exit_code() const { return static_cast<int>(certificate.verdict); }
};

Analysis run_analysis(const Scenario& scenario);

}  // namespace obsv

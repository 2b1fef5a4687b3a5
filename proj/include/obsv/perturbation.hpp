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

// Spectral data of A + K and the sequences comparing it with A: relative
// shifts theta_n, the two-sided Rayleigh-quotient bounds, the monotonicity
// constant behind gap preservation, commutator diagnostics and the
// observation sequence c_n.

#pragma once

#include <optional>
#include <vector>

#include "obsv/eig.hpp"
#include "obsv/model.hpp"
#include "obsv/observability.hpp"

namespace obsv {

/// Continuous piecewise-linear interpolant through (x_i, y_i), constant
/// outside [x_0, x_last]. Returns y_i bit-for-bit at x_i.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::vector<double> x_, y_;
};

struct PerturbedSpectrum {
  Vector mu;          // eigenvalues of A (copied for alignment)
  Vector mu_tilde;    // eigenvalues of A + K, same sorted order
  Matrix phi_tilde;   // eigenvectors of A + K in eigen coordinates of A
  Vector theta;       // mu_tilde_n / mu_n - 1, n = 1..trusted
  PiecewiseLinear f;  // through (mu_n, theta_n)
  std::vector<bool> degenerate;
  int trusted = 0;
  double residual_norm = 0.0;

  int dim() const { return static_cast<int>(mu.size()); }
};

/// Eigendecomposition of A + K aligned with A by sorted order.
PerturbedSpectrum perturbed_spectrum(const SpectralOperator& a, const Perturbation& k);

struct SandwichReport {
  Vector alpha;            // <K A^-1 phi_hat_n, phi_hat_n>
  Vector beta;             // <K (A+K)^-1 psi_hat_n, psi_hat_n>
  Vector lower;            // 1 / (1 - beta_n)
  Vector upper;            // 1 + alpha_n
  Vector upper_certified;  // 1 + <K phi_hat_n, phi_hat_n> / mu_n
  Vector ratio;            // mu_tilde_n / mu_n
  Vector discrepancy;      // |<K phi_hat_n, phi_hat_n> / mu_n - alpha_n|
  std::vector<int> violations;        // lower <= ratio <= upper_certified fails
  std::vector<int> upper_violations;  // ratio <= 1 + alpha_n fails (diagnostic)
  double tolerance = 1e-8;
};

/// phi_hat_n maximises <(A+K)x, x> over span(phi_1..phi_n); psi_hat_n
/// maximises <A x, x> over span(phi_tilde_1..phi_tilde_n). Requires mu_1 > 0.
SandwichReport sandwich_sequences(const SpectralOperator& a, const Perturbation& k,
                                  const PerturbedSpectrum& spectrum, double tolerance = 1e-8);

struct ConditionOneReport {
  double kappa_star = 0.0;
  bool pass = false;
  double gamma_hat = 0.0;
  double gamma_tilde = 0.0;
  int first_index = 1;  // monotonicity certified on [first_index, last_index]
  int last_index = 1;
  Vector tilde_gaps;             // mu_tilde_{n+1} - mu_tilde_n over trusted pairs
  std::vector<int> gap_violations;  // only populated when pass
};

/// Smallest kappa >= 0 making mu_n theta_n + kappa mu_n non-decreasing over the
/// trusted indices. Eigenvalue clusters of A + K count as zero gaps.
ConditionOneReport fit_condition_one(const PerturbedSpectrum& spectrum, const GapReport& gap);

struct RefinementReport {
  int coarse_dim = 0;
  int fine_dim = 0;
  double max_norm_change = 0.0;  // max_k | |R phi_k|_N - |R phi_k|_2N | over trusted k of N
  bool stable = false;
  double coarse_tail = 0.0;  // max |R phi_k| over the last quarter of the coarse trusted range
  double fine_tail = 0.0;    // max |R phi_k| over the fine trusted indices beyond the coarse ones
  bool tail_shrinks = false;
};

struct CommutatorReport {
  Matrix r;  // AK - KA
  double op_norm = 0.0;
  DecayDiagnostic decay;
  Vector rphi_norms;  // |R phi_tilde_k| for trusted k
  std::optional<RefinementReport> refinement;
};

CommutatorReport commutator_diagnostics(const SpectralOperator& a, const Perturbation& k,
                                        const PerturbedSpectrum& spectrum,
                                        double slope_threshold = -0.5);

/// Compares the diagnostics of the same scenario at N and 2N.
RefinementReport refine_commutator(const CommutatorReport& coarse, const CommutatorReport& fine,
                                   double tolerance = 1e-6);

struct NecessaryReport {
  Vector norms;  // |C phi_tilde_k|
  Vector c;      // c_n = min_{k <= n} |C phi_tilde_k|
  std::vector<int> flagged;  // 1-based k with |C phi_tilde_k| <= zero_floor
  double zero_floor = kDefaultFloor;
};

NecessaryReport necessary_condition_sequence(const ObservationMap& c,
                                             const PerturbedSpectrum& spectrum,
                                             double zero_floor = kDefaultFloor);

}  // namespace obsv

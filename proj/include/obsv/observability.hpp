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

// Frequency-domain and time-domain observability tests for the unperturbed
// pair (A, C): gap condition, spectral lower bound on |C phi_k|^2, the Hautus
// resolvent inequality and the observability Gramian.

#pragma once

#include <string>
#include <vector>

#include "obsv/eig.hpp"
#include "obsv/model.hpp"

namespace obsv {

inline constexpr double kDefaultFloor = 1e-8;

struct GapReport {
  double gamma_hat = 0.0;
  int argmin = 0;  // 1-based k with gaps(k-1) == gamma_hat
  Vector gaps;     // mu_{k+1} - mu_k for k = 1..trusted
  double floor = kDefaultFloor;
  bool pass = false;
};

/// Minimum consecutive gap over k <= trusted. Requires trusted >= 2 and
/// trusted < values.size().
GapReport check_gap(const Vector& values, int trusted, double gap_floor = kDefaultFloor);
inline GapReport check_gap(const Eigendecomposition& op, int trusted,
                           double gap_floor = kDefaultFloor) {
  return check_gap(op.values, trusted, gap_floor);
}

struct SpectralObsReport {
  Vector norms;  // |C phi_k|^2 for k = 1..trusted
  double delta_hat = 0.0;
  int argmin = 0;  // 1-based
};

/// `modes` holds phi_k as columns, in the same coordinates C acts on.
SpectralObsReport spectral_obs_test(const ObservationMap& c, const Matrix& modes, int trusted);

struct HautusGrid {
  double lo = 0.0;
  double hi = 0.0;
  int points = 512;              // uniform points on [lo, hi]
  std::vector<double> extra;     // always-included abscissae (eigenvalues, midpoints)
  bool refine = true;            // polish grid minima with Brent's method
};

/// Grid over [mu_1 - gamma, mu_trusted + gamma] plus every eigenvalue of A and
/// the midpoints between consecutive eigenvalues.
HautusGrid default_hautus_grid(const Vector& eigenvalues, int trusted, double gamma_hat,
                               int points);

struct HautusReport {
  Vector omega;   // sorted abscissae, including refined minimisers
  Vector rho;     // lambda_min((A - w)^2 + C^T C) at each abscissa
  double rho_hat = 0.0;
  double omega_star = 0.0;
  double grid_rho_hat = 0.0;  // minimum before Brent refinement
};

/// lambda_min((A - w I)^2 + C^T C).
double hautus_rho(const Matrix& a, const Matrix& ctc, double omega);

HautusReport hautus_scan(const Matrix& a, const ObservationMap& c, const HautusGrid& grid);

struct GramianReport {
  double T = 0.0;
  CMatrix gramian;
  double k_T = 0.0;  // lambda_min
  double K_T = 0.0;  // lambda_max
};

/// Exact G_T in the eigenbasis: (G_T)_jk = <C phi_k, C phi_j> int_0^T e^{i(mu_k - mu_j)t} dt.
/// `c` must already act on eigen coordinates.
GramianReport observability_gramian(const Vector& eigenvalues, const ObservationMap& c, double T);

/// Default horizon 2 pi / gamma_hat.
double default_horizon(double gamma_hat);

enum class UnperturbedStatus { observable, not_observable, inconclusive };

std::string to_string(UnperturbedStatus status);

struct UnperturbedVerdict {
  UnperturbedStatus status = UnperturbedStatus::inconclusive;
  bool observable = false;
  std::string reason;  // "", "gap" or "delta"
  double gamma_hat = 0.0;
  double delta_hat = 0.0;
};

/// Spectral criterion under the gap hypothesis. A failed gap makes the
/// verdict inconclusive rather than negative.
UnperturbedVerdict verdict_unperturbed(const GapReport& gap, const SpectralObsReport& spec,
                                       double delta_floor = kDefaultFloor);

}  // namespace obsv

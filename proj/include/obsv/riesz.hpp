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

// Contour-integral spectral projectors of A + K, the commutator identity they
// satisfy, the high-frequency tail bounds, and the final certificate for the
// perturbed pair (A + K, C).

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obsv/eig.hpp"
#include "obsv/model.hpp"
#include "obsv/observability.hpp"
#include "obsv/perturbation.hpp"

namespace obsv {

inline constexpr int kDefaultContourNodes = 64;

/// Spectral norm of a real matrix.
double spectral_norm(const Matrix& m);

struct RieszProjector {
  int k = 0;  // 1-based
  double center = 0.0;
  double radius = 0.0;
  bool radius_shrunk = false;  // local gap forced radius = 0.4 * local gap
  double local_gap = 0.0;      // min_{j != k} |mu_tilde_k - mu_tilde_j|
  int nodes = 0;
  Matrix p;
  double quadrature_residual = 0.0;  // |P - phi phi^T|_2
  double idempotency_defect = 0.0;   // |P^2 - P|_2
  double trace_defect = 0.0;         // |tr P - 1|
  double asymmetry = 0.0;            // |P - P^T|_2

  bool valid() const {
    return idempotency_defect <= 1e-8 && trace_defect <= 1e-8 && asymmetry <= 1e-8;
  }
};

/// Trapezoidal rule for (1 / 2 pi i) \oint (mu - S)^{-1} dmu on the circle of
/// the given radius around mu_tilde_k. The radius is shrunk to 0.4 times the
/// local gap when the circle would reach a neighbouring eigenvalue.
///
/// Throws ErrorCode::argument when nodes < 16 and ErrorCode::numeric when
/// mu_tilde_k is not simple.
RieszProjector riesz_project(const Resolvent& resolvent, const PerturbedSpectrum& spectrum, int k,
                             double radius, int nodes = kDefaultContourNodes);

/// Radius actually used for index k: `radius`, or 0.4 * local gap if smaller.
double contour_radius(const PerturbedSpectrum& spectrum, int k, double radius, bool* shrunk = nullptr);

struct ResidueSanity {
  double double_pole = 0.0;    // |(1/2 pi i) \oint P R P / (mu - mu_k)^2|
  double holomorphic = 0.0;    // |(1/2 pi i) \oint F(mu) R F(mu)|
};

/// Quadrature of the two contour integrals that vanish by the residue
/// theorem, with F(mu) = (mu - S)^{-1} - P / (mu - mu_tilde_k).
ResidueSanity residue_sanity(const Resolvent& resolvent, const PerturbedSpectrum& spectrum,
                             const Matrix& r, int k, double radius,
                             int nodes = kDefaultContourNodes);

struct IdentityResidualReport {
  int k = 0;
  double lhs_rhs_gap = 0.0;  // |P K - (K P + F R P + P R F)|_2
  double F_norm = 0.0;
  double F_bound = 0.0;      // 1 / min_{j != k} |mu_tilde_k - mu_tilde_j|
  double F_phi_norm = 0.0;   // |F phi_tilde_k|, zero in exact arithmetic
  double tolerance = 0.0;    // 1e-7 (1 + |K|)
  bool pass = false;
};

/// F(mu_tilde_k) = sum_{j != k} phi_j phi_j^T / (mu_tilde_k - mu_tilde_j).
Matrix reduced_resolvent(const PerturbedSpectrum& spectrum, int k);

/// Checks P K = K P + F R P + P R F for the projector `p` of index k; F is
/// the spectral sum over all j != k.
IdentityResidualReport commutator_identity_check(const Perturbation& k_op,
                                              const PerturbedSpectrum& spectrum, const Matrix& p,
                                              const Matrix& r, int k);

struct TailRow {
  int k = 0;
  bool skipped = false;  // degenerate eigenvalue or missing projector
  double mu_tilde = 0.0;
  double sigma = 0.0;    // <K phi_k, phi_k>
  double omega = 0.0;    // mu_tilde_k - sigma_k
  double t = 0.0;        // |(I - P_k) K phi_k|^2
  double rphi_sq = 0.0;  // |R phi_k|^2
  double b = 0.0;        // (4 / gamma_tilde) |R phi_k|^2
  double b_alt = 0.0;    // |R phi_k|^2 / gamma_tilde^2
  double c_sq = 0.0;     // |C phi_k|^2
  bool mode_bound = false;    // t + c_sq >= rho_hat - tol
  bool chain_linear = false;  // t <= b
  bool chain_square = false;  // t <= b_alt
  bool pass = false;
};

struct TailReport {
  std::vector<TailRow> rows;
  double gamma_tilde = 0.0;
  double rho_hat = 0.0;
  double tolerance = 1e-9;
  int k_rho = 0;        // every trusted k > k_rho has b_k <= rho_hat / 2
  bool k_rho_found = false;  // false when even the last trusted index fails
  bool chain_linear_all = true;
  bool chain_square_all = true;
  bool mode_bound_all = true;
};

/// `projectors[k-1]` is P_k for trusted k (empty matrices are skipped).
/// Throws ErrorCode::validation when rho_hat <= 0.
TailReport tail_bound_check(const Perturbation& k_op, const ObservationMap& c,
                            const PerturbedSpectrum& spectrum,
                            const std::vector<Matrix>& projectors, const Matrix& r,
                            double gamma_tilde, double rho_hat, double tolerance = 1e-9);

enum class Verdict { observable = 0, hypotheses_unmet = 2, not_observable = 3 };

std::string to_string(Verdict verdict);

struct Certificate {
  int schema_version = 1;
  Verdict verdict = Verdict::hypotheses_unmet;
  std::string failed_condition;  // empty when observable
  std::string reason;            // e.g. "hypotheses-unmet: condition (i)"

  UnperturbedVerdict unperturbed;
  double gamma_hat = 0.0;
  double delta_hat = 0.0;
  double rho_hat = 0.0;
  double horizon = 0.0;
  double k_T = 0.0;
  double K_T = 0.0;

  std::optional<double> kappa_star;
  std::optional<double> gamma_tilde;
  std::optional<bool> condition_one;

  std::optional<double> commutator_norm;
  std::optional<double> commutator_tail_ratio;
  std::optional<double> commutator_slope;
  std::optional<bool> commutator_decaying;
  std::optional<bool> refinement_stable;
  std::optional<bool> refinement_tail_shrinks;

  std::vector<int> necessary_flags;
  std::optional<int> k_rho;
  std::optional<double> c_k_rho;
  std::optional<double> c_k_rho_sq;
  std::optional<double> delta_tilde;
  std::optional<double> min_c_sq;
  std::optional<bool> perturbed_gap_holds;
  std::optional<double> perturbed_rho_hat;  // direct Hautus scan of (A + K, C)
};

struct CertificateInputs {
  const GapReport* gap = nullptr;
  const SpectralObsReport* spectral = nullptr;
  const HautusReport* hautus = nullptr;
  const GramianReport* gramian = nullptr;
  const ConditionOneReport* condition_one = nullptr;
  const CommutatorReport* commutator = nullptr;
  const NecessaryReport* necessary = nullptr;
  const TailReport* tail = nullptr;
  std::optional<double> perturbed_rho_hat;
  double delta_floor = kDefaultFloor;
  double rho_floor = kDefaultFloor;
  double tolerance = 1e-9;
};

/// Walks the hypotheses in order (unperturbed gap and delta, Hautus constant,
/// condition (i), necessary condition, tail index) and stops at the first
/// failure. Throws ErrorCode::argument when a report needed at that point is
/// missing.
Certificate assemble_certificate(const CertificateInputs& in);

}  // namespace obsv

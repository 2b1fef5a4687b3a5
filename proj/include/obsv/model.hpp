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

// Finite truncations of the generator A, the perturbation K and the
// observation map C. All three are held in the eigenbasis of A, so A acts
// diagonally and every approximation error sits in K, C and the truncation.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obsv/types.hpp"

namespace obsv {

/// Default guard band: ceil(N / 4) trailing indices are not trusted.
int default_guard_band(int n);

/// Self-adjoint non-negative operator given by its eigenpairs.
class SpectralOperator {
 public:
  /// Validates the invariants (ordering, non-negativity, orthonormality).
  SpectralOperator(Vector eigenvalues, Matrix basis,
                   std::optional<int> guard_band = std::nullopt);

  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  const Vector& eigenvalues() const { return eigenvalues_; }
  /// Columns are the eigenvectors phi_k in the coordinates A was given in.
  const Matrix& basis() const { return basis_; }
  int guard_band() const { return guard_band_; }
  /// Number of leading indices used for hypothesis checks (N - G).
  int trusted() const { return dim() - guard_band_; }

  SpectralOperator with_guard_band(int guard_band) const;

  /// diag(mu), i.e. A in its own eigenbasis.
  Matrix matrix() const { return eigenvalues_.asDiagonal(); }

  /// ||A^{beta/2} z|| for z in eigen coordinates, beta in {-2, 0, 2}.
  double scale_norm(const Vector& z, int beta) const;

  /// basis^T m basis: a symmetric operator given in the original coordinates
  /// re-expressed in the eigenbasis.
  Matrix to_eigen_coordinates(const Matrix& m) const;

 private:
  Vector eigenvalues_;
  Matrix basis_;
  int guard_band_ = 0;
};

enum class PerturbationKind { zero, inverse_power, finite_rank, smoothing_kernel, custom };

std::string to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& name);

/// Symmetric non-negative K in the eigenbasis of A.
struct Perturbation {
  Matrix matrix;
  PerturbationKind kind = PerturbationKind::zero;

  int dim() const { return static_cast<int>(matrix.rows()); }
};

struct PerturbationParams {
  double c = 1.0;       // overall strength
  double s = 1.0;       // inverse_power exponent
  int rank = 1;         // finite_rank
  std::vector<Vector> vectors;  // finite_rank directions; generated if empty
  double decay = 2.0;   // smoothing_kernel: coefficients scale like k^-decay
  double length = 1.0;  // smoothing_kernel: band length of the random factor
  std::uint64_t seed = 0;
};

/// Preset perturbations; see README for the exact constructions.
///
/// Throws ErrorCode::validation on invalid parameters or when the result is
/// indefinite beyond the -1e-10 * ||K|| tolerance.
Perturbation build_perturbation(PerturbationKind kind, const PerturbationParams& params,
                                const SpectralOperator& a);

/// Validates symmetry (1e-12 relative) and non-negativity of a user K given in
/// eigen coordinates. Tiny negative eigenvalues are clipped to zero.
Perturbation custom_perturbation(const Matrix& k);

/// Bounded C restricted to the truncation; columns are C phi_k in an
/// orthonormal basis of Y.
struct ObservationMap {
  Matrix matrix;

  int out_dim() const { return static_cast<int>(matrix.rows()); }
  int dim() const { return static_cast<int>(matrix.cols()); }
  /// C^T C, the Gram matrix <C phi_j, C phi_k>.
  Matrix gram() const { return matrix.transpose() * matrix; }
};

ObservationMap make_observation(Matrix c);

/// Dirichlet Laplacian on (0,1): mu_k = k^2 pi^2, identity basis.
SpectralOperator build_dirichlet_laplacian(int n, std::optional<int> guard_band = std::nullopt);

/// Closed-form <C phi_j, C phi_k> for C z = z restricted to (a, b) and
/// phi_k = sqrt(2) sin(k pi x).
Matrix window_gram(int n, double a, double b);

/// Window observation C z = z 1_(a,b) on the Laplacian modes, realised as the
/// symmetric square root of window_gram.
ObservationMap build_window_observation(int n, double a, double b);

/// Eigendecomposes a user-supplied symmetric non-negative S.
SpectralOperator custom_operator_from_matrix(const Matrix& s,
                                             std::optional<int> guard_band = std::nullopt);

/// Returns C (I - v v^T) with v = direction / |direction|: an observation map
/// blind to one mode.
ObservationMap annihilate_direction(const ObservationMap& c, const Vector& direction);

/// Power-law fit of singular values against index, the finite stand-in for
/// compactness.
struct DecayDiagnostic {
  Vector singular_values;  // non-increasing
  double tail_ratio = 0.0;  // sigma_{ceil(N/2)} / sigma_1, 0 for the zero matrix
  double slope = 0.0;       // least-squares slope of log sigma_j vs log j
  bool decaying = false;    // slope < threshold
};

DecayDiagnostic singular_value_decay(const Matrix& m, double slope_threshold);

}  // namespace obsv

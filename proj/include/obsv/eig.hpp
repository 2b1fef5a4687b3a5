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

// Dense symmetric eigensolver, shifted complex resolvents and the
// Courant-Fischer cross-checks built on top of them.

#pragma once

#include <cstdint>
#include <vector>

#include "obsv/types.hpp"

namespace obsv {

class SpectralOperator;

/// Relative width below which two neighbouring eigenvalues are one cluster.
inline constexpr double kClusterTolerance = 1e-8;

struct Eigendecomposition {
  Vector values;   // non-decreasing
  Matrix vectors;  // orthonormal columns, first significant entry positive
  double residual_norm = 0.0;
  // degenerate[k] is set when eigenvalue k sits in a cluster; per-index
  // checks skip those indices.
  std::vector<bool> degenerate;

  int size() const { return static_cast<int>(values.size()); }
  bool any_degenerate() const;
};

/// Full eigendecomposition of a symmetric matrix.
///
/// Throws ErrorCode::validation when `s` is not symmetric to 1e-10 relative
/// and ErrorCode::numeric when the QR iteration does not converge.
Eigendecomposition eig_sym(const Matrix& s);

/// Flags neighbouring eigenvalues closer than kClusterTolerance*(1+|v|).
std::vector<bool> cluster_flags(const Vector& values);

/// Flips each column so that its first significant entry is positive.
void normalize_signs(Matrix& vectors);

/// Shift-and-solve operator for (mu I - S)^{-1} with complex mu.
///
/// S is reduced once to tridiagonal form S = Q T Q^T; every solve is then a
/// pivoted complex tridiagonal LU, O(N) per right-hand side.
class Resolvent {
 public:
  explicit Resolvent(const Matrix& s);

  int dim() const { return static_cast<int>(diag_.size()); }
  const Matrix& basis() const { return q_; }

  /// Distance from mu to the spectrum of S.
  double distance_to_spectrum(Complex mu) const;

  /// (mu I - S)^{-1} rhs. Throws ErrorCode::numeric when mu is closer than
  /// 1e-8 * ||S|| to the spectrum.
  CVector apply(Complex mu, const CVector& rhs) const;

  /// (mu I - T)^{-1} in the tridiagonal coordinates; the full resolvent is
  /// basis() * reduced_inverse(mu) * basis()^T.
  CMatrix reduced_inverse(Complex mu) const;

  /// Q^T m Q, i.e. m expressed in the tridiagonal coordinates.
  Matrix to_reduced(const Matrix& m) const { return q_.transpose() * m * q_; }
  Matrix from_reduced(const Matrix& m) const { return q_ * m * q_.transpose(); }

 private:
  struct Factor;
  Factor factor(Complex mu) const;
  void check_shift(Complex mu) const;

  Matrix q_;
  Vector diag_;
  Vector offdiag_;
  Vector spectrum_;
  double norm_ = 0.0;
};

/// One-shot (mu I - S)^{-1} rhs; additionally verifies the relative
/// residual is at most 1e-9.
CVector resolvent_apply(const Matrix& s, Complex mu, const CVector& rhs);

struct CompressionResult {
  int subspace_dim = 0;
  double top_value = 0.0;
  Vector top_vector;  // unit norm, lies in the subspace
};

/// Largest eigenpair of Q^T op Q lifted back through Q.
CompressionResult compress_and_maximize(const Matrix& op, const Matrix& subspace);

struct MinmaxReport {
  std::uint64_t seed = 0;
  int trials = 0;
  int max_dim = 0;
  // Smallest (max Rayleigh quotient over V_n) - mu_n found for each n,
  // normalised by max(1, mu_n).
  Vector worst_margin;
  double worst = 0.0;
  int worst_dim = 0;
  bool pass = true;
};

/// Samples random n-dimensional subspaces (n = 1..trusted) and checks the
/// Courant-Fischer upper bound max_{V_n} <A x, x> >= mu_n.
MinmaxReport minmax_upper_bound_check(const SpectralOperator& a, int trials,
                                      std::uint64_t seed);

/// Orthonormal basis of a random `dim`-dimensional subspace of R^n.
Matrix random_subspace(int n, int dim, std::uint64_t seed);

}  // namespace obsv

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

#include "obsv/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "obsv/eig.hpp"

namespace obsv {

using std::numbers::pi;

int default_guard_band(int n) { return (n + 3) / 4; }

SpectralOperator::SpectralOperator(Vector eigenvalues, Matrix basis,
                                   std::optional<int> guard_band)
    : eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)) {
  const int n = dim();
  if (n < 1) fail(ErrorCode::validation, "SpectralOperator: empty spectrum");
  if (basis_.rows() != n || basis_.cols() != n) {
    fail(ErrorCode::argument, fmt::format("SpectralOperator: basis is {}x{}, expected {}x{}",
                                          basis_.rows(), basis_.cols(), n, n));
  }
  for (int k = 0; k < n; ++k) {
    if (!std::isfinite(eigenvalues_(k)) || eigenvalues_(k) < 0.0) {
      fail(ErrorCode::validation,
           fmt::format("SpectralOperator: eigenvalue {} = {} is negative or not finite", k + 1,
                       eigenvalues_(k)));
    }
    if (k > 0 && eigenvalues_(k) < eigenvalues_(k - 1)) {
      fail(ErrorCode::validation, "SpectralOperator: eigenvalues must be non-decreasing");
    }
  }
  const double defect = (basis_.transpose() * basis_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(defect <= 1e-10)) {
    fail(ErrorCode::validation,
         fmt::format("SpectralOperator: basis not orthonormal (defect {:.3e})", defect));
  }
  guard_band_ = guard_band.value_or(default_guard_band(n));
  if (guard_band_ < 0 || guard_band_ >= n) {
    fail(ErrorCode::validation,
         fmt::format("SpectralOperator: guard band {} must lie in [0, {})", guard_band_, n));
  }
}

SpectralOperator SpectralOperator::with_guard_band(int guard_band) const {
  return SpectralOperator(eigenvalues_, basis_, guard_band);
}

double SpectralOperator::scale_norm(const Vector& z, int beta) const {
  if (z.size() != dim()) fail(ErrorCode::argument, "scale_norm: dimension mismatch");
  switch (beta) {
    case 0:
      return z.norm();
    case 2:
      return eigenvalues_.cwiseProduct(z).norm();
    case -2:
      if (eigenvalues_(0) <= 0.0) fail(ErrorCode::numeric, "scale_norm: A is singular");
      return z.cwiseQuotient(eigenvalues_).norm();
    default:
      fail(ErrorCode::argument, fmt::format("scale_norm: beta must be -2, 0 or 2, got {}", beta));
  }
}

Matrix SpectralOperator::to_eigen_coordinates(const Matrix& m) const {
  if (m.rows() != dim() || m.cols() != dim()) {
    fail(ErrorCode::argument, "to_eigen_coordinates: dimension mismatch");
  }
  return basis_.transpose() * m * basis_;
}

// ---------------------------------------------------------------------------

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::zero: return "zero";
    case PerturbationKind::inverse_power: return "inverse_power";
    case PerturbationKind::finite_rank: return "finite_rank";
    case PerturbationKind::smoothing_kernel: return "smoothing_kernel";
    case PerturbationKind::custom: return "custom";
  }
  return "custom";
}

PerturbationKind perturbation_kind_from_string(const std::string& name) {
  if (name == "zero") return PerturbationKind::zero;
  if (name == "inverse_power") return PerturbationKind::inverse_power;
  if (name == "finite_rank") return PerturbationKind::finite_rank;
  if (name == "smoothing_kernel") return PerturbationKind::smoothing_kernel;
  if (name == "custom") return PerturbationKind::custom;
  fail(ErrorCode::validation, fmt::format("unknown perturbation kind '{}'", name));
}

namespace {

// Symmetrises, checks the non-negativity tolerance and clips the tiny
// negative eigenvalues a floating-point factorisation leaves behind.
Matrix finalize_nonnegative(const Matrix& k, const char* who) {
  Matrix sym = 0.5 * (k + k.transpose());
  if (sym.isZero(0.0)) return sym;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) fail(ErrorCode::numeric, fmt::format("{}: eigensolver failed", who));
  const Vector& values = solver.eigenvalues();
  const double top = std::max(values.maxCoeff(), 0.0);
  const double bottom = values.minCoeff();
  if (bottom < -1e-10 * top || (top == 0.0 && bottom < 0.0)) {
    fail(ErrorCode::validation,
         fmt::format("{}: matrix is indefinite (smallest eigenvalue {:.3e}, largest {:.3e})", who,
                     bottom, top));
  }
  if (bottom >= 0.0) return sym;
  const Matrix& v = solver.eigenvectors();
  return v * values.cwiseMax(0.0).asDiagonal() * v.transpose();
}

// Standard normal draw that depends only on (seed, row, col), so the leading
// block of a smoothing kernel does not change when N grows.
double entry_normal(std::uint64_t seed, int row, int col) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col)};
  std::mt19937_64 gen(seq);
  std::normal_distribution<double> normal;
  return normal(gen);
}

}  // namespace

Perturbation build_perturbation(PerturbationKind kind, const PerturbationParams& p,
                                const SpectralOperator& a) {
  const int n = a.dim();
  const Vector& mu = a.eigenvalues();
  Perturbation out;
  out.kind = kind;

  switch (kind) {
    case PerturbationKind::zero:
      out.matrix = Matrix::Zero(n, n);
      return out;

    case PerturbationKind::inverse_power: {
      if (!(p.c >= 0.0) || !(p.s >= 1.0)) {
        fail(ErrorCode::validation, "inverse_power: need c >= 0 and s >= 1");
      }
      if (mu(0) <= 0.0) fail(ErrorCode::validation, "inverse_power: A is singular");
      Vector d(n);
      for (int k = 0; k < n; ++k) d(k) = p.c * std::pow(mu(k), -p.s);
      out.matrix = d.asDiagonal();
      return out;
    }

    case PerturbationKind::finite_rank: {
      if (p.rank < 1 || p.rank > n) {
        fail(ErrorCode::validation, fmt::format("finite_rank: rank {} outside [1, {}]", p.rank, n));
      }
      if (!(p.c > 0.0)) fail(ErrorCode::validation, "finite_rank: need c > 0");
      if (!p.vectors.empty() && static_cast<int>(p.vectors.size()) != p.rank) {
        fail(ErrorCode::validation, "finite_rank: number of vectors differs from rank");
      }
      Matrix k = Matrix::Zero(n, n);
      for (int i = 0; i < p.rank; ++i) {
        Vector v(n);
        if (p.vectors.empty()) {
          for (int j = 0; j < n; ++j) v(j) = std::pow(j + 1.0, -(i + 2.0));
        } else {
          v = p.vectors[i];
          if (v.size() != n) fail(ErrorCode::validation, "finite_rank: vector length differs from N");
        }
        const double norm = v.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
          fail(ErrorCode::validation, "finite_rank: zero or non-finite direction");
        }
        v /= norm;
        k += p.c * v * v.transpose();
      }
      out.matrix = finalize_nonnegative(k, "finite_rank");
      return out;
    }

    case PerturbationKind::smoothing_kernel: {
      if (!(p.c > 0.0) || !(p.decay >= 1.0) || !(p.length > 0.0)) {
        fail(ErrorCode::validation, "smoothing_kernel: need c > 0, decay >= 1, length > 0");
      }
      // K = c D B B^T D with D = diag(k^-decay) and B banded random,
      // B_jl = g_jl exp(-|j-l| / length).
      Matrix b = Matrix::Zero(n, n);
      const int band = static_cast<int>(std::ceil(40.0 * p.length));
      for (int j = 0; j < n; ++j) {
        for (int l = std::max(0, j - band); l < std::min(n, j + band + 1); ++l) {
          b(j, l) = entry_normal(p.seed, j, l) * std::exp(-std::abs(j - l) / p.length);
        }
      }
      Vector d(n);
      for (int j = 0; j < n; ++j) d(j) = std::pow(j + 1.0, -p.decay);
      const Matrix db = d.asDiagonal() * b;
      out.matrix = finalize_nonnegative(p.c * db * db.transpose(), "smoothing_kernel");
      return out;
    }

    case PerturbationKind::custom:
      fail(ErrorCode::argument, "build_perturbation: use custom_perturbation for custom matrices");
  }
  fail(ErrorCode::argument, "build_perturbation: unknown kind");
}

Perturbation custom_perturbation(const Matrix& k) {
  if (k.rows() != k.cols() || k.rows() == 0) {
    fail(ErrorCode::validation, "custom perturbation must be a non-empty square matrix");
  }
  if (!k.allFinite()) fail(ErrorCode::validation, "custom perturbation has non-finite entries");
  if (!is_symmetric(k, 1e-12)) {
    fail(ErrorCode::validation, "custom perturbation is not symmetric to 1e-12 relative");
  }
  Perturbation out;
  out.kind = PerturbationKind::custom;
  out.matrix = finalize_nonnegative(k, "custom perturbation");
  return out;
}

ObservationMap make_observation(Matrix c) {
  if (c.rows() < 1 || c.cols() < 1) fail(ErrorCode::validation, "observation map must be at least 1x1");
  if (!c.allFinite()) fail(ErrorCode::validation, "observation map has non-finite entries");
  return ObservationMap{std::move(c)};
}

// ---------------------------------------------------------------------------

SpectralOperator build_dirichlet_laplacian(int n, std::optional<int> guard_band) {
  if (n < 8) fail(ErrorCode::validation, fmt::format("Laplacian truncation N = {} is below 8", n));
  Vector mu(n);
  for (int k = 0; k < n; ++k) mu(k) = (k + 1.0) * (k + 1.0) * pi * pi;
  return SpectralOperator(mu, Matrix::Identity(n, n), guard_band);
}

Matrix window_gram(int n, double a, double b) {
  if (!(0.0 <= a && a < b && b <= 1.0)) {
    fail(ErrorCode::validation,
         fmt::format("window ({}, {}) must satisfy 0 <= a < b <= 1", a, b));
  }
  // int_a^b 2 sin(j pi x) sin(k pi x) dx = int_a^b cos((j-k) pi x) - cos((j+k) pi x) dx
  auto sinc_primitive = [](int m, double x) { return std::sin(m * pi * x) / (m * pi); };
  Matrix g(n, n);
  for (int j = 1; j <= n; ++j) {
    for (int k = j; k <= n; ++k) {
      double v;
      if (j == k) {
        v = (b - a) - (std::sin(2.0 * k * pi * b) - std::sin(2.0 * k * pi * a)) / (2.0 * k * pi);
      } else {
        v = (sinc_primitive(j - k, b) - sinc_primitive(j - k, a)) -
            (sinc_primitive(j + k, b) - sinc_primitive(j + k, a));
      }
      g(j - 1, k - 1) = v;
      g(k - 1, j - 1) = v;
    }
  }
  return g;
}

ObservationMap build_window_observation(int n, double a, double b) {
  const Matrix g = window_gram(n, a, b);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(g);
  if (solver.info() != Eigen::Success) fail(ErrorCode::numeric, "window observation: eigensolver failed");
  const Matrix& v = solver.eigenvectors();
  const Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return make_observation(v * root.asDiagonal() * v.transpose());
}

SpectralOperator custom_operator_from_matrix(const Matrix& s, std::optional<int> guard_band) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    fail(ErrorCode::validation, "custom operator must be a non-empty square matrix");
  }
  if (!s.allFinite()) fail(ErrorCode::validation, "custom operator has non-finite entries");
  Eigendecomposition e = eig_sym(s);
  const double scale = e.values.cwiseAbs().maxCoeff();
  if (e.values(0) < -1e-10 * scale) {
    fail(ErrorCode::validation,
         fmt::format("custom operator has negative eigenvalue {:.6e}", e.values(0)));
  }
  e.values = e.values.cwiseMax(0.0);
  return SpectralOperator(e.values, e.vectors, guard_band);
}

ObservationMap annihilate_direction(const ObservationMap& c, const Vector& direction) {
  if (direction.size() != c.dim()) fail(ErrorCode::argument, "annihilate_direction: dimension mismatch");
  const double norm = direction.norm();
  if (!(norm > 0.0)) fail(ErrorCode::argument, "annihilate_direction: zero direction");
  const Vector v = direction / norm;
  return ObservationMap{c.matrix - (c.matrix * v) * v.transpose()};
}

DecayDiagnostic singular_value_decay(const Matrix& m, double slope_threshold) {
  DecayDiagnostic out;
  Eigen::JacobiSVD<Matrix> svd(m);
  out.singular_values = svd.singularValues();
  const Eigen::Index n = out.singular_values.size();
  const double top = n > 0 ? out.singular_values(0) : 0.0;
  if (!(top > 0.0)) {
    out.tail_ratio = 0.0;
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.decaying = true;
    return out;
  }
  out.tail_ratio = out.singular_values((n + 1) / 2 - 1) / top;

  // Fit only the part of the spectrum above round-off.
  std::vector<double> xs, ys;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (out.singular_values(j) > 1e-13 * top) {
      xs.push_back(std::log(j + 1.0));
      ys.push_back(std::log(out.singular_values(j)));
    }
  }
  if (xs.size() < 2) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.decaying = true;  // numerically finite rank
    return out;
  }
  const double count = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  out.slope = sxy / sxx;
  out.decaying = out.slope < slope_threshold;
  return out;
}

}  // namespace obsv

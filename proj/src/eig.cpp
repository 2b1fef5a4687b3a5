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

#include "obsv/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "obsv/model.hpp"
#include "obsv/parallel.hpp"

namespace obsv {

bool Eigendecomposition::any_degenerate() const {
  return std::any_of(degenerate.begin(), degenerate.end(), [](bool b) { return b; });
}

std::vector<bool> cluster_flags(const Vector& values) {
  const int n = static_cast<int>(values.size());
  std::vector<bool> flags(n, false);
  for (int k = 0; k + 1 < n; ++k) {
    if (values(k + 1) - values(k) < kClusterTolerance * (1.0 + std::abs(values(k)))) {
      flags[k] = true;
      flags[k + 1] = true;
    }
  }
  return flags;
}

void normalize_signs(Matrix& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    auto col = vectors.col(j);
    const double scale = col.cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) > 1e-8 * scale) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
  }
}

Eigendecomposition eig_sym(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    fail(ErrorCode::argument, fmt::format("eig_sym: expected a non-empty square matrix, got {}x{}",
                                          s.rows(), s.cols()));
  }
  if (!is_symmetric(s, 1e-10)) {
    fail(ErrorCode::validation, "eig_sym: matrix is not symmetric to 1e-10 relative");
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::numeric, "eig_sym: QR iteration did not converge");
  }

  Eigendecomposition out;
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  normalize_signs(out.vectors);

  double residual = 0.0;
  for (int k = 0; k < out.size(); ++k) {
    const double r = (sym * out.vectors.col(k) - out.values(k) * out.vectors.col(k)).norm();
    residual = std::max(residual, r);
  }
  out.residual_norm = residual;
  const double bound = 1e-8 * (1.0 + out.values.cwiseAbs().maxCoeff());
  if (!(residual <= bound)) {
    fail(ErrorCode::numeric,
         fmt::format("eig_sym: residual {:.3e} exceeds {:.3e}", residual, bound));
  }
  out.degenerate = cluster_flags(out.values);
  return out;
}

// ---------------------------------------------------------------------------
// Resolvent

struct Resolvent::Factor {
  CVector dl, d, du, du2;
  std::vector<bool> swapped;

  void solve(CVector& b) const {
    const Eigen::Index n = d.size();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b(i + 1) -= dl(i) * b(i);
      } else {
        const Complex t = b(i);
        b(i) = b(i + 1);
        b(i + 1) = t - dl(i) * b(i);
      }
    }
    b(n - 1) /= d(n - 1);
    if (n > 1) b(n - 2) = (b(n - 2) - du(n - 2) * b(n - 1)) / d(n - 2);
    for (Eigen::Index i = n - 3; i >= 0; --i) {
      b(i) = (b(i) - du(i) * b(i + 1) - du2(i) * b(i + 2)) / d(i);
    }
  }
};

Resolvent::Resolvent(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    fail(ErrorCode::argument, "Resolvent: expected a non-empty square matrix");
  }
  if (!is_symmetric(s, 1e-10)) {
    fail(ErrorCode::validation, "Resolvent: matrix is not symmetric to 1e-10 relative");
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  if (sym.rows() == 1) {
    q_ = Matrix::Identity(1, 1);
    diag_ = sym.diagonal();
    offdiag_.resize(0);
  } else {
    Eigen::Tridiagonalization<Matrix> tri(sym);
    q_ = tri.matrixQ();
    diag_ = tri.diagonal();
    offdiag_ = tri.subDiagonal();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> values;
  values.computeFromTridiagonal(diag_, offdiag_, Eigen::EigenvaluesOnly);
  if (values.info() != Eigen::Success) {
    fail(ErrorCode::numeric, "Resolvent: tridiagonal eigenvalue iteration did not converge");
  }
  spectrum_ = values.eigenvalues();
  norm_ = spectrum_.cwiseAbs().maxCoeff();
}

double Resolvent::distance_to_spectrum(Complex mu) const {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < spectrum_.size(); ++i) {
    best = std::min(best, std::abs(mu - spectrum_(i)));
  }
  return best;
}

void Resolvent::check_shift(Complex mu) const {
  const double dist = distance_to_spectrum(mu);
  if (dist == 0.0 || dist < 1e-8 * norm_) {
    fail(ErrorCode::numeric,
         fmt::format("resolvent: shift ({}, {}) lies within {:.3e} of the spectrum", mu.real(),
                     mu.imag(), dist));
  }
}

Resolvent::Factor Resolvent::factor(Complex mu) const {
  const Eigen::Index n = diag_.size();
  Factor f;
  f.d = (mu - diag_.cast<Complex>().array()).matrix();
  f.dl = (-offdiag_).cast<Complex>();
  f.du = f.dl;
  f.du2 = CVector::Zero(std::max<Eigen::Index>(n - 2, 0));
  f.swapped.assign(std::max<Eigen::Index>(n - 1, 0), false);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(f.d(i)) >= std::abs(f.dl(i))) {
      if (f.d(i) == Complex(0.0)) fail(ErrorCode::numeric, "resolvent: singular shifted matrix");
      const Complex fact = f.dl(i) / f.d(i);
      f.dl(i) = fact;
      f.d(i + 1) -= fact * f.du(i);
    } else {
      f.swapped[i] = true;
      const Complex fact = f.d(i) / f.dl(i);
      f.d(i) = f.dl(i);
      f.dl(i) = fact;
      const Complex t = f.du(i);
      f.du(i) = f.d(i + 1);
      f.d(i + 1) = t - fact * f.d(i + 1);
      if (i + 2 < n) {
        f.du2(i) = f.du(i + 1);
        f.du(i + 1) = -fact * f.du(i + 1);
      }
    }
  }
  if (f.d(n - 1) == Complex(0.0)) fail(ErrorCode::numeric, "resolvent: singular shifted matrix");
  return f;
}

CVector Resolvent::apply(Complex mu, const CVector& rhs) const {
  if (rhs.size() != dim()) {
    fail(ErrorCode::argument, fmt::format("resolvent: rhs has length {}, expected {}",
                                          rhs.size(), dim()));
  }
  check_shift(mu);
  const Factor f = factor(mu);
  CVector y = q_.transpose().cast<Complex>() * rhs;
  f.solve(y);
  return q_.cast<Complex>() * y;
}

CMatrix Resolvent::reduced_inverse(Complex mu) const {
  check_shift(mu);
  const Factor f = factor(mu);
  const int n = dim();
  CMatrix out(n, n);
  CVector col(n);
  for (int j = 0; j < n; ++j) {
    col.setZero();
    col(j) = 1.0;
    f.solve(col);
    out.col(j) = col;
  }
  return out;
}

CVector resolvent_apply(const Matrix& s, Complex mu, const CVector& rhs) {
  const Resolvent r(s);
  CVector out = r.apply(mu, rhs);
  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0.0) {
    const CVector shifted = mu * out - s.cast<Complex>() * out;
    const double rel = (shifted - rhs).norm() / rhs_norm;
    if (!(rel <= 1e-9)) {
      fail(ErrorCode::numeric, fmt::format("resolvent: relative residual {:.3e} above 1e-9", rel));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variational checks

CompressionResult compress_and_maximize(const Matrix& op, const Matrix& subspace) {
  if (op.rows() != op.cols() || subspace.rows() != op.rows() || subspace.cols() == 0) {
    fail(ErrorCode::argument, "compress_and_maximize: dimension mismatch");
  }
  const Eigen::Index m = subspace.cols();
  const double ortho =
      (subspace.transpose() * subspace - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-10)) {
    fail(ErrorCode::validation,
         fmt::format("compress_and_maximize: subspace columns not orthonormal (defect {:.3e}); "
                     "rank-deficient subspace",
                     ortho));
  }
  Matrix compressed = subspace.transpose() * op * subspace;
  compressed = 0.5 * (compressed + compressed.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(compressed);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::numeric, "compress_and_maximize: eigensolver did not converge");
  }
  CompressionResult out;
  out.subspace_dim = static_cast<int>(m);
  out.top_value = solver.eigenvalues()(m - 1);
  out.top_vector = subspace * solver.eigenvectors().col(m - 1);
  out.top_vector.normalize();
  Matrix as_matrix = out.top_vector;
  normalize_signs(as_matrix);
  out.top_vector = as_matrix.col(0);
  return out;
}

namespace {

Matrix random_subspace(int n, int dim, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Matrix g(n, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = normal(gen);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(n, dim);
}

}  // namespace

Matrix random_subspace(int n, int dim, std::uint64_t seed) {
  if (dim < 1 || dim > n) fail(ErrorCode::argument, "random_subspace: need 1 <= dim <= n");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 gen(seq);
  return random_subspace(n, dim, gen);
}

MinmaxReport minmax_upper_bound_check(const SpectralOperator& a, int trials,
                                      std::uint64_t seed) {
  if (trials < 1) fail(ErrorCode::argument, "minmax_upper_bound_check: trials must be >= 1");
  const int n = a.dim();
  const int top = a.trusted();
  const Vector& mu = a.eigenvalues();
  const Matrix op = a.matrix();

  MinmaxReport report;
  report.seed = seed;
  report.trials = trials;
  report.max_dim = top;
  report.worst_margin = Vector::Zero(top);
  std::vector<char> ok(top, 1);

  parallel_for(top, [&](int idx) {
    const int dim = idx + 1;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(dim)};
    std::mt19937_64 gen(seq);
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const Matrix q = random_subspace(n, dim, gen);
      const double top_value = compress_and_maximize(op, q).top_value;
      worst = std::min(worst, top_value - mu(idx));
    }
    report.worst_margin(idx) = worst;
    ok[idx] = worst >= -1e-9 * std::abs(mu(idx)) - 1e-12;
  });

  report.worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < top; ++i) {
    if (report.worst_margin(i) < report.worst) {
      report.worst = report.worst_margin(i);
      report.worst_dim = i + 1;
    }
    report.pass = report.pass && ok[i];
  }
  return report;
}

}  // namespace obsv

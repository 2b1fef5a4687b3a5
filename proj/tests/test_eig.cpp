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

#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "obsv/eig.hpp"
#include "obsv/model.hpp"
#include "oracles.hpp"

using namespace obsv;

TEST(EigSym, SortsDiagonal) {
  Vector d(3);
  d << 3, 1, 2;
  Eigendecomposition e = eig_sym(d.asDiagonal());
  EXPECT_DOUBLE_EQ(e.values(0), 1.0);
  EXPECT_DOUBLE_EQ(e.values(1), 2.0);
  EXPECT_DOUBLE_EQ(e.values(2), 3.0);
  EXPECT_LE(e.residual_norm, 1e-8 * 4);
}

TEST(EigSym, TwoByTwoByHand) {
  Matrix s(2, 2);
  s << 2, 1, 1, 2;
  Eigendecomposition e = eig_sym(s);
  EXPECT_NEAR(e.values(0), 1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 3.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(e.vectors(0, 0), r, 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), -r, 1e-14);
  EXPECT_NEAR(e.vectors(0, 1), r, 1e-14);
  EXPECT_NEAR(e.vectors(1, 1), r, 1e-14);
}

TEST(EigSym, LaplacianUnperturbedIsExact) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  Perturbation k = build_perturbation(PerturbationKind::zero, {}, a);
  Eigendecomposition e = eig_sym(a.matrix() + k.matrix);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(e.values(i), a.eigenvalues()(i));
}

TEST(EigSym, RejectsAsymmetric) {
  Matrix s(2, 2);
  s << 1, 2, 0, 1;
  EXPECT_THROW(eig_sym(s), Error);
  EXPECT_THROW(eig_sym(Matrix(2, 3)), Error);
}

TEST(EigSym, SignConventionAndDeterminism) {
  Matrix s = oracle::random_symmetric(12, 5);
  Eigendecomposition a = eig_sym(s), b = eig_sym(s);
  EXPECT_EQ(a.vectors, b.vectors);
  for (int k = 0; k < 12; ++k) {
    const double scale = a.vectors.col(k).cwiseAbs().maxCoeff();
    for (int i = 0; i < 12; ++i) {
      if (std::abs(a.vectors(i, k)) > 1e-8 * scale) {
        EXPECT_GT(a.vectors(i, k), 0.0);
        break;
      }
    }
  }
}

TEST(EigSym, ReconstructionAndOrthonormality) {
  for (unsigned seed = 0; seed < 8; ++seed) {
    Matrix s = oracle::random_symmetric(30, seed);
    Eigendecomposition e = eig_sym(s);
    Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LT((back - s).norm(), 1e-9 * s.norm());
    EXPECT_LT((e.vectors.transpose() * e.vectors - Matrix::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 1; i < 30; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
    EXPECT_LE(e.residual_norm, 1e-8 * (1 + e.values.cwiseAbs().maxCoeff()));
    Vector jac = oracle::jacobi_eigenvalues(s);
    EXPECT_LT((jac - e.values).cwiseAbs().maxCoeff(), 1e-10 * (1 + jac.cwiseAbs().maxCoeff()));
  }
}

TEST(EigSym, WeylPerturbationBound) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    Matrix s = oracle::random_symmetric(25, 100 + seed);
    Matrix e = 0.1 * oracle::random_symmetric(25, 200 + seed);
    Vector a = eig_sym(s).values, b = eig_sym(s + e).values;
    const double bound = Eigen::JacobiSVD<Matrix>(e).singularValues()(0);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), bound + 1e-12) << seed;
  }
}

TEST(EigSym, ClusterFlags) {
  Vector v(5);
  v << 1.0, 2.0, 2.0 + 1e-12, 3.0, 4.0;
  auto flags = cluster_flags(v);
  EXPECT_EQ(flags, (std::vector<bool>{false, true, true, false, false}));
  Matrix s = v.asDiagonal();
  EXPECT_TRUE(eig_sym(s).any_degenerate());
}

TEST(Resolvent, DiagonalAtImaginaryShift) {
  Vector d(2);
  d << 1, 2;
  CVector rhs(2);
  rhs << 1, 0;
  CVector out = resolvent_apply(d.asDiagonal(), Complex(0, 1), rhs);
  EXPECT_NEAR(std::abs(out(0) - Complex(-0.5, -0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(out(1)), 0.0, 1e-15);
}

TEST(Resolvent, ScalarZero) {
  CVector rhs(1);
  rhs << 3;
  CVector out = resolvent_apply(Matrix::Zero(1, 1), Complex(2, 0), rhs);
  EXPECT_NEAR(std::abs(out(0) - Complex(1.5, 0)), 0.0, 1e-15);
}

TEST(Resolvent, RealShiftBetweenEigenvalues) {
  Vector d(2);
  d << 1, 4;
  CVector rhs(2);
  rhs << 1, 1;
  CVector out = resolvent_apply(d.asDiagonal(), Complex(2.5, 0), rhs);
  EXPECT_NEAR(std::abs(out(0) - Complex(2.0 / 3.0, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(out(1) - Complex(-2.0 / 3.0, 0)), 0.0, 1e-15);
}

TEST(Resolvent, RejectsShiftOnSpectrum) {
  Vector d(3);
  d << 1, 2, 3;
  CVector rhs = CVector::Ones(3);
  EXPECT_THROW(resolvent_apply(d.asDiagonal(), Complex(2, 0), rhs), Error);
  EXPECT_THROW(resolvent_apply(d.asDiagonal(), Complex(2, 1e-12), rhs), Error);
}

TEST(Resolvent, AgreesWithEigenSumAndSmallResidual) {
  for (unsigned seed = 0; seed < 6; ++seed) {
    const int n = 40;
    Matrix s = oracle::random_symmetric(n, seed);
    Eigendecomposition e = eig_sym(s);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    CVector rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = Complex(g(gen), g(gen));
    for (Complex mu : {Complex(0.3, 0.7), Complex(e.values(3) + 1e-3, 0.0), Complex(-50, 2)}) {
      CVector got = resolvent_apply(s, mu, rhs);
      CVector want = CVector::Zero(n);
      for (int k = 0; k < n; ++k) {
        CVector v = e.vectors.col(k).cast<Complex>();
        want += (v.dot(rhs) / (mu - e.values(k))) * v;
      }
      EXPECT_LT((got - want).norm(), 1e-8 * want.norm()) << seed;
      CVector res = mu * got - s.cast<Complex>() * got - rhs;
      EXPECT_LT(res.norm(), 1e-9 * rhs.norm());
    }
  }
}

TEST(Resolvent, ReducedInverseMatchesDenseInverse) {
  const int n = 20;
  Matrix s = oracle::random_symmetric(n, 9);
  Resolvent r(s);
  const Complex mu(0.25, 0.5);
  CMatrix dense = (mu * CMatrix::Identity(n, n) - s.cast<Complex>()).inverse();
  CMatrix red = r.reduced_inverse(mu);
  CMatrix back = r.basis().cast<Complex>() * red * r.basis().transpose().cast<Complex>();
  EXPECT_LT((back - dense).norm(), 1e-10 * dense.norm());
  EXPECT_TRUE(r.from_reduced(r.to_reduced(s)).isApprox(s, 1e-12));
}

TEST(Compress, CoordinateSubspace) {
  Vector d(3);
  d << 1, 2, 3;
  Matrix q = Matrix::Identity(3, 2);
  CompressionResult r = compress_and_maximize(d.asDiagonal(), q);
  EXPECT_EQ(r.subspace_dim, 2);
  EXPECT_NEAR(r.top_value, 2.0, 1e-15);
  EXPECT_NEAR((r.top_vector - Vector::Unit(3, 1)).norm(), 0.0, 1e-15);
}

TEST(Compress, UnperturbedEigenSubspaces) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  for (int n = 1; n <= 12; ++n) {
    CompressionResult r = compress_and_maximize(a.matrix(), a.basis().leftCols(n));
    EXPECT_NEAR(r.top_value, a.eigenvalues()(n - 1), 1e-10 * a.eigenvalues()(n - 1));
    EXPECT_NEAR(std::abs(r.top_vector.dot(a.basis().col(n - 1))), 1.0, 1e-12);
  }
}

TEST(Compress, TwoByTwoClosedForm) {
  // [[1.1, 0.1], [0.1, 2.1]]: lambda_max = tr/2 + sqrt(((a - d)/2)^2 + b^2).
  Matrix op(2, 2);
  op << 1.1, 0.1, 0.1, 2.1;
  const double want = 1.6 + std::sqrt(0.25 + 0.01);
  CompressionResult r = compress_and_maximize(op, Matrix::Identity(2, 2));
  EXPECT_NEAR(r.top_value, want, 1e-14);
  EXPECT_NEAR(r.top_value, 2.1099, 1e-4);
}

TEST(Compress, InvariantsOnRandomSubspaces) {
  Matrix s = oracle::random_symmetric(24, 4);
  for (int dim = 1; dim <= 24; dim += 5) {
    Matrix q = random_subspace(24, dim, 17 + dim);
    CompressionResult r = compress_and_maximize(s, q);
    EXPECT_NEAR(r.top_vector.norm(), 1.0, 1e-12);
    EXPECT_NEAR(r.top_value, r.top_vector.dot(s * r.top_vector), 1e-10);
    // top_vector lies in range(q)
    EXPECT_LT((q * (q.transpose() * r.top_vector) - r.top_vector).norm(), 1e-12);
    // no unit vector of the subspace beats it
    Vector w = q * Vector::Ones(dim).normalized();
    EXPECT_LE(w.dot(s * w), r.top_value + 1e-12);
  }
}

TEST(Compress, RejectsRankDeficientSubspace) {
  Matrix q = Matrix::Zero(4, 2);
  q(0, 0) = 1;
  q(0, 1) = 1;
  EXPECT_THROW(compress_and_maximize(Matrix::Identity(4, 4), q), Error);
}

TEST(RandomSubspace, OrthonormalAndSeeded) {
  Matrix a = random_subspace(30, 7, 42), b = random_subspace(30, 7, 42), c = random_subspace(30, 7, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_LT((a.transpose() * a - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Minmax, MinimisingSubspaceAndSecondMode) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  CompressionResult r = compress_and_maximize(a.matrix(), a.basis().col(1));
  EXPECT_NEAR(r.top_value, a.eigenvalues()(1), 1e-12);
  EXPECT_GE(r.top_value, a.eigenvalues()(0));
}

TEST(Minmax, RandomSubspacesRespectUpperBound) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  Matrix q = random_subspace(16, 2, 7);
  EXPECT_GE(compress_and_maximize(a.matrix(), q).top_value - a.eigenvalues()(1), 0.0);
  MinmaxReport rep = minmax_upper_bound_check(a, 4, 7);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.seed, 7u);
  EXPECT_EQ(rep.max_dim, a.trusted());
  EXPECT_GE(rep.worst, -1e-9);
  MinmaxReport again = minmax_upper_bound_check(a, 4, 7);
  EXPECT_EQ(rep.worst_margin, again.worst_margin);
}

TEST(Minmax, CustomOperatorPasses) {
  Matrix r = oracle::random_symmetric(20, 3);
  SpectralOperator a = custom_operator_from_matrix(r * r.transpose());
  EXPECT_TRUE(minmax_upper_bound_check(a, 3, 11).pass);
}

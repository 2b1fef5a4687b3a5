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
#include <random>

#include <gtest/gtest.h>

#include "obsv/observability.hpp"
#include "oracles.hpp"

using namespace obsv;
using oracle::pi;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST(Gap, LaplacianMinimumAtFirstPair) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  GapReport g = check_gap(a.eigenvalues(), a.trusted());
  EXPECT_NEAR(g.gamma_hat, 3 * pi * pi, 1e-12);
  EXPECT_NEAR(g.gamma_hat, 29.608, 1e-3);
  EXPECT_EQ(g.argmin, 1);
  EXPECT_TRUE(g.pass);
  EXPECT_DOUBLE_EQ(g.gamma_hat, g.gaps.minCoeff());
}

TEST(Gap, RepeatedEigenvalueFails) {
  GapReport g = check_gap(vec({1, 1, 2}), 2);
  EXPECT_EQ(g.gamma_hat, 0.0);
  EXPECT_FALSE(g.pass);
}

TEST(Gap, DirectDifferences) {
  GapReport g = check_gap(vec({1, 3, 6, 10}), 4);
  EXPECT_DOUBLE_EQ(g.gamma_hat, 2.0);
  EXPECT_THROW(check_gap(vec({1, 3, 6, 10}), 1), Error);
}

TEST(SpectralObs, FullWindow) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  SpectralObsReport r = spectral_obs_test(build_window_observation(16, 0, 1), a.basis(), a.trusted());
  EXPECT_NEAR(r.delta_hat, 1.0, 1e-12);
  for (int k = 0; k < r.norms.size(); ++k) EXPECT_NEAR(r.norms(k), 1.0, 1e-12);
}

TEST(SpectralObs, HalfWindowEvenModes) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  SpectralObsReport r = spectral_obs_test(build_window_observation(16, 0, 0.5), a.basis(), a.trusted());
  for (int k = 2; k <= a.trusted(); k += 2) EXPECT_NEAR(r.norms(k - 1), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(r.delta_hat, r.norms.minCoeff());
  EXPECT_GE(r.norms.minCoeff(), 0.0);
}

TEST(SpectralObs, ZeroMap) {
  SpectralOperator a = build_dirichlet_laplacian(8);
  SpectralObsReport r = spectral_obs_test(make_observation(Matrix::Zero(1, 8)), a.basis(), a.trusted());
  EXPECT_EQ(r.delta_hat, 0.0);
  EXPECT_THROW(spectral_obs_test(make_observation(Matrix::Zero(1, 7)), a.basis(), a.trusted()), Error);
}

TEST(Hautus, IdentityObservation) {
  Matrix s = oracle::random_symmetric(10, 2);
  Eigendecomposition e = eig_sym(s);
  ObservationMap c = make_observation(Matrix::Identity(10, 10));
  HautusGrid grid = default_hautus_grid(e.values, 10, 1.0, 64);
  HautusReport r = hautus_scan(s, c, grid);
  EXPECT_GE(r.rho_hat, 1.0 - 1e-12);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(hautus_rho(s, c.matrix, e.values(k)), 1.0, 1e-12);
}

TEST(Hautus, ZeroObservationVanishesOnSpectrum) {
  SpectralOperator a = build_dirichlet_laplacian(8);
  EXPECT_NEAR(hautus_rho(a.matrix(), Matrix::Zero(1, 8), a.eigenvalues()(0)), 0.0, 1e-20);
}

TEST(Hautus, DiagonalBruteForce) {
  const int n = 12;
  SpectralOperator a = build_dirichlet_laplacian(n);
  const Vector& mu = a.eigenvalues();
  Vector ck(n);
  for (int k = 0; k < n; ++k) ck(k) = 0.1 + 0.05 * ((k * 7) % 5);
  ObservationMap c = make_observation(Matrix(ck.cwiseSqrt().asDiagonal()));
  auto brute = [&](double w) {
    double best = INFINITY;
    for (int k = 0; k < n; ++k) best = std::min(best, (mu(k) - w) * (mu(k) - w) + ck(k));
    return best;
  };
  HautusGrid grid = default_hautus_grid(mu, a.trusted(), 3 * pi * pi, 200);
  HautusReport r = hautus_scan(a.matrix(), c, grid);
  for (int i = 0; i < r.omega.size(); ++i) {
    const double want = brute(r.omega(i));
    EXPECT_NEAR(r.rho(i), want, 1e-10 * std::max(1.0, want)) << r.omega(i);
  }
  // at omega = mu_j the formula reduces to min(c_j, min_{k != j} (mu_k - mu_j)^2 + c_k)
  for (int j = 0; j < n; ++j) EXPECT_NEAR(hautus_rho(a.matrix(), c.matrix, mu(j)), ck(j), 1e-10);
  EXPECT_NEAR(r.rho_hat, ck.head(a.trusted()).minCoeff(), 1e-10);
  EXPECT_DOUBLE_EQ(r.rho_hat, r.rho.minCoeff());
}

TEST(Hautus, GridContainsEigenvaluesAndRhoNonNegative) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  ObservationMap c = build_window_observation(16, 0.0, 0.5);
  HautusReport r = hautus_scan(a.matrix(), c, default_hautus_grid(a.eigenvalues(), a.trusted(), 3 * pi * pi, 128));
  for (int k = 0; k < 16; ++k) {
    bool found = false;
    for (int i = 0; i < r.omega.size(); ++i) found = found || r.omega(i) == a.eigenvalues()(k);
    EXPECT_TRUE(found) << k;
  }
  EXPECT_GE(r.rho.minCoeff(), 0.0);
  EXPECT_LE(r.rho_hat, r.grid_rho_hat);
  for (int i = 1; i < r.omega.size(); ++i) EXPECT_LE(r.omega(i - 1), r.omega(i));
}

TEST(Hautus, CoerciveFarFromSpectrum) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  ObservationMap c = build_window_observation(16, 0.2, 0.4);
  const double top = a.eigenvalues()(15);
  for (double w : {2.0 * top + 1, 2.5 * top, 4.0 * top}) {
    EXPECT_GE(hautus_rho(a.matrix(), c.matrix, w), (w - top) * (w - top) * (1 - 1e-12));
  }
}

TEST(Hautus, EmptyGridRejected) {
  HautusGrid g;
  g.points = 0;
  g.lo = g.hi = 0;
  EXPECT_THROW(hautus_scan(Matrix::Identity(2, 2), make_observation(Matrix::Identity(2, 2)), g), Error);
}

TEST(Gramian, SingleMode) {
  Vector mu = vec({5.0});
  ObservationMap c = make_observation(Matrix::Constant(1, 1, std::sqrt(0.3)));
  GramianReport g = observability_gramian(mu, c, 2.0);
  EXPECT_NEAR(g.k_T, 0.6, 1e-14);
  EXPECT_NEAR(g.K_T, 0.6, 1e-14);
}

TEST(Gramian, IdentityObservationGivesTIdentity) {
  SpectralOperator a = build_dirichlet_laplacian(8);
  GramianReport g = observability_gramian(a.eigenvalues(), make_observation(Matrix::Identity(8, 8)), 0.7);
  EXPECT_LT((g.gramian - 0.7 * CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(g.k_T, 0.7, 1e-14);
}

TEST(Gramian, MatchesTimeSteppedSimulation) {
  for (int n : {4, 16}) {
    Vector mu(n);
    for (int k = 0; k < n; ++k) mu(k) = (k + 1) * (k + 1) * pi * pi;
    ObservationMap c = build_window_observation(n, 0.0, 0.5);
    const double T = n == 4 ? 1.0 : 2 * pi / (3 * pi * pi);
    GramianReport g = observability_gramian(mu, c, T);
    EXPECT_GT(g.k_T, 0.0);
    std::mt19937_64 gen(n);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 3; ++trial) {
      CVector z0(n);
      for (int k = 0; k < n; ++k) z0(k) = Complex(nd(gen), nd(gen));
      auto energy = [&](double t) {
        CVector z(n);
        for (int k = 0; k < n; ++k) z(k) = std::exp(Complex(0, mu(k) * t)) * z0(k);
        return (c.matrix.cast<Complex>() * z).squaredNorm();
      };
      const double sim = oracle::simpson(energy, 0.0, T, 40000);
      const double form = (z0.adjoint() * g.gramian * z0)(0).real();
      EXPECT_NEAR(form, sim, 1e-4 * sim) << "N=" << n;
    }
    // Hermitian PSD, k_T <= K_T
    EXPECT_LT((g.gramian - g.gramian.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(g.k_T, g.K_T);
  }
}

TEST(Gramian, MonotoneInHorizon) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  ObservationMap c = build_window_observation(16, 0.1, 0.3);
  GramianReport g1 = observability_gramian(a.eigenvalues(), c, 0.05);
  GramianReport g2 = observability_gramian(a.eigenvalues(), c, 0.2);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g2.gramian - g1.gramian);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_THROW(observability_gramian(a.eigenvalues(), c, 0.0), Error);
}

TEST(Characterisations, AgreeOnPresetsAndAnnihilatedMode) {
  struct Case {
    ObservationMap c;
    bool observable;
  };
  SpectralOperator a = build_dirichlet_laplacian(16);
  std::vector<Case> cases = {
      {build_window_observation(16, 0, 1), true},
      {build_window_observation(16, 0, 0.5), true},
      {build_window_observation(16, 0.3, 0.45), true},
      {make_observation(Matrix::Identity(16, 16)), true},
      {annihilate_direction(build_window_observation(16, 0, 0.5), Vector::Unit(16, 2)), false},
      {make_observation(Matrix::Zero(1, 16)), false},
  };
  const double floor = 1e-10;
  for (const auto& cs : cases) {
    GapReport gap = check_gap(a.eigenvalues(), a.trusted());
    SpectralObsReport s = spectral_obs_test(cs.c, a.basis(), a.trusted());
    HautusReport h = hautus_scan(a.matrix(), cs.c, default_hautus_grid(a.eigenvalues(), a.trusted(), gap.gamma_hat, 256));
    // The Gramian sees every mode; the Hautus and spectral tests see the trusted ones,
    // which is where the annihilated mode lives.
    GramianReport g = observability_gramian(a.eigenvalues(), cs.c, default_horizon(gap.gamma_hat));
    EXPECT_EQ(s.delta_hat > floor, cs.observable);
    EXPECT_EQ(h.rho_hat > floor, cs.observable);
    EXPECT_EQ(g.k_T > floor, cs.observable);
  }
}

TEST(Verdict, UnperturbedExamples) {
  SpectralOperator a = build_dirichlet_laplacian(16);
  GapReport gap = check_gap(a.eigenvalues(), a.trusted());
  UnperturbedVerdict v =
      verdict_unperturbed(gap, spectral_obs_test(build_window_observation(16, 0, 1), a.basis(), a.trusted()));
  EXPECT_TRUE(v.observable);
  EXPECT_EQ(v.status, UnperturbedStatus::observable);
  EXPECT_NEAR(v.gamma_hat, 3 * pi * pi, 1e-12);
  EXPECT_NEAR(v.delta_hat, 1.0, 1e-12);

  GapReport rep = check_gap(vec({1, 1, 4, 9}), 3);
  SpectralObsReport full = spectral_obs_test(make_observation(Matrix::Identity(4, 4)), Matrix::Identity(4, 4), 3);
  UnperturbedVerdict r = verdict_unperturbed(rep, full);
  EXPECT_FALSE(r.observable);
  EXPECT_EQ(r.reason, "gap");
  EXPECT_EQ(r.status, UnperturbedStatus::inconclusive);

  UnperturbedVerdict z =
      verdict_unperturbed(gap, spectral_obs_test(make_observation(Matrix::Zero(1, 16)), a.basis(), a.trusted()));
  EXPECT_FALSE(z.observable);
  EXPECT_EQ(z.reason, "delta");
}

TEST(Horizon, DefaultIsTwoPiOverGap) {
  EXPECT_NEAR(default_horizon(3 * pi * pi), 2.0 / (3 * pi), 1e-15);
  EXPECT_THROW(default_horizon(0.0), Error);
}

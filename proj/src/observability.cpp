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

#include "obsv/observability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "obsv/parallel.hpp"

namespace obsv {

GapReport check_gap(const Vector& values, int trusted, double gap_floor) {
  const int n = static_cast<int>(values.size());
  if (trusted < 2 || trusted > n) {
    fail(ErrorCode::argument,
         fmt::format("check_gap: need 2 <= trusted <= {}, got {}", n, trusted));
  }
  const int count = std::min(trusted, n - 1);
  GapReport report;
  report.floor = gap_floor;
  report.gaps.resize(count);
  report.gamma_hat = std::numeric_limits<double>::infinity();
  for (int k = 0; k < count; ++k) {
    report.gaps(k) = values(k + 1) - values(k);
    if (report.gaps(k) < report.gamma_hat) {
      report.gamma_hat = report.gaps(k);
      report.argmin = k + 1;
    }
  }
  report.pass = report.gamma_hat > gap_floor;
  return report;
}

SpectralObsReport spectral_obs_test(const ObservationMap& c, const Matrix& modes, int trusted) {
  if (c.dim() != modes.rows()) {
    fail(ErrorCode::argument, fmt::format("spectral_obs_test: C acts on dimension {}, modes have {}",
                                          c.dim(), modes.rows()));
  }
  if (trusted < 1 || trusted > modes.cols()) {
    fail(ErrorCode::argument, "spectral_obs_test: empty or oversized trusted range");
  }
  SpectralObsReport report;
  report.norms = (c.matrix * modes.leftCols(trusted)).colwise().squaredNorm().transpose();
  Eigen::Index arg = 0;
  report.delta_hat = report.norms.minCoeff(&arg);
  report.argmin = static_cast<int>(arg) + 1;
  return report;
}

HautusGrid default_hautus_grid(const Vector& eigenvalues, int trusted, double gamma_hat,
                               int points) {
  const int n = static_cast<int>(eigenvalues.size());
  if (trusted < 1 || trusted > n) fail(ErrorCode::argument, "default_hautus_grid: bad trusted range");
  const double pad = std::isfinite(gamma_hat) ? std::max(gamma_hat, 0.0) : 0.0;
  HautusGrid grid;
  grid.lo = eigenvalues(0) - pad;
  grid.hi = eigenvalues(trusted - 1) + pad;
  grid.points = points;
  for (int k = 0; k < n; ++k) {
    grid.extra.push_back(eigenvalues(k));
    if (k + 1 < n) grid.extra.push_back(0.5 * (eigenvalues(k) + eigenvalues(k + 1)));
  }
  return grid;
}

double hautus_rho(const Matrix& a, const Matrix& c, double omega) {
  // sigma_min([A - w I; C])^2 instead of lambda_min((A - w)^2 + C^T C): the
  // stacked form keeps the absolute error at eps * |A - w| rather than its
  // square.
  const Eigen::Index n = a.rows();
  Matrix stacked(n + c.rows(), n);
  stacked.topRows(n) = a;
  stacked.topRows(n).diagonal().array() -= omega;
  stacked.bottomRows(c.rows()) = c;
  Eigen::BDCSVD<Matrix> svd(stacked);
  const double s = svd.singularValues().minCoeff();
  return s * s;
}

HautusReport hautus_scan(const Matrix& a, const ObservationMap& c, const HautusGrid& grid) {
  if (a.rows() != a.cols() || a.rows() != c.dim()) {
    fail(ErrorCode::argument, "hautus_scan: dimension mismatch between A and C");
  }
  std::vector<double> omega;
  if (grid.points >= 2 && grid.hi > grid.lo) {
    for (int i = 0; i < grid.points; ++i) {
      omega.push_back(grid.lo + (grid.hi - grid.lo) * i / (grid.points - 1));
    }
  } else if (grid.points >= 1) {
    omega.push_back(grid.lo);
  }
  omega.insert(omega.end(), grid.extra.begin(), grid.extra.end());
  std::sort(omega.begin(), omega.end());
  omega.erase(std::unique(omega.begin(), omega.end()), omega.end());
  if (omega.empty()) fail(ErrorCode::argument, "hautus_scan: empty frequency grid");

  const int m = static_cast<int>(omega.size());
  std::vector<double> rho(m);
  parallel_for(m, [&](int i) { rho[i] = hautus_rho(a, c.matrix, omega[i]); });

  HautusReport report;
  const auto best = std::min_element(rho.begin(), rho.end());
  report.grid_rho_hat = *best;

  if (grid.refine && m >= 3) {
    // Brent on the bracket around the lowest interior grid minima.
    std::vector<int> candidates;
    for (int i = 1; i + 1 < m; ++i) {
      if (rho[i] <= rho[i - 1] && rho[i] <= rho[i + 1]) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](int l, int r) { return rho[l] < rho[r]; });
    if (candidates.size() > 8) candidates.resize(8);
    std::vector<std::pair<double, double>> refined(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), [&](int j) {
      const int i = candidates[j];
      auto f = [&](double w) { return hautus_rho(a, c.matrix, w); };
      std::uintmax_t iterations = 200;
      refined[j] = boost::math::tools::brent_find_minima(f, omega[i - 1], omega[i + 1],
                                                         std::numeric_limits<double>::digits,
                                                         iterations);
    });
    for (const auto& [w, r] : refined) {
      omega.push_back(w);
      rho.push_back(r);
    }
    std::vector<int> order(omega.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return omega[l] < omega[r]; });
    std::vector<double> so, sr;
    for (int i : order) {
      if (!so.empty() && so.back() == omega[i]) {
        sr.back() = std::min(sr.back(), rho[i]);
        continue;
      }
      so.push_back(omega[i]);
      sr.push_back(rho[i]);
    }
    omega = std::move(so);
    rho = std::move(sr);
  }

  report.omega = Eigen::Map<const Vector>(omega.data(), static_cast<Eigen::Index>(omega.size()));
  report.rho = Eigen::Map<const Vector>(rho.data(), static_cast<Eigen::Index>(rho.size()));
  Eigen::Index arg = 0;
  report.rho_hat = report.rho.minCoeff(&arg);
  report.omega_star = report.omega(arg);
  return report;
}

GramianReport observability_gramian(const Vector& eigenvalues, const ObservationMap& c, double T) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    fail(ErrorCode::validation, fmt::format("observability_gramian: horizon T = {} must be positive", T));
  }
  const int n = static_cast<int>(eigenvalues.size());
  if (c.dim() != n) fail(ErrorCode::argument, "observability_gramian: dimension mismatch");
  const Matrix gram = c.gram();
  GramianReport report;
  report.T = T;
  report.gramian.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      // int_0^T e^{i d t} dt = T e^{i d T / 2} sinc(d T / 2)
      const double half = 0.5 * (eigenvalues(k) - eigenvalues(j)) * T;
      const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
      report.gramian(j, k) = gram(k, j) * T * sinc * std::polar(1.0, half);
    }
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(report.gramian, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) fail(ErrorCode::numeric, "observability_gramian: eigensolver failed");
  report.k_T = solver.eigenvalues()(0);
  report.K_T = solver.eigenvalues()(n - 1);
  return report;
}

double default_horizon(double gamma_hat) {
  if (!(gamma_hat > 0.0)) {
    fail(ErrorCode::validation, "default horizon 2 pi / gamma needs a positive gap");
  }
  return 2.0 * std::numbers::pi / gamma_hat;
}

std::string to_string(UnperturbedStatus status) {
  switch (status) {
    case UnperturbedStatus::observable: return "observable";
    case UnperturbedStatus::not_observable: return "not-observable";
    case UnperturbedStatus::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

UnperturbedVerdict verdict_unperturbed(const GapReport& gap, const SpectralObsReport& spec,
                                       double delta_floor) {
  UnperturbedVerdict v;
  v.gamma_hat = gap.gamma_hat;
  v.delta_hat = spec.delta_hat;
  const bool delta_ok = spec.delta_hat > delta_floor;
  if (!delta_ok) {
    // An unobserved eigenvector rules out observability with or without a gap.
    v.status = UnperturbedStatus::not_observable;
    v.reason = "delta";
  } else if (!gap.pass) {
    v.status = UnperturbedStatus::inconclusive;
    v.reason = "gap";
  } else {
    v.status = UnperturbedStatus::observable;
  }
  v.observable = v.status == UnperturbedStatus::observable;
  return v;
}

}  // namespace obsv

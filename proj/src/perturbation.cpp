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

#include "obsv/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "obsv/parallel.hpp"

namespace obsv {

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.empty()) {
    fail(ErrorCode::argument, "PiecewiseLinear: need matching, non-empty knots and values");
  }
  if (!std::is_sorted(x_.begin(), x_.end())) {
    fail(ErrorCode::argument, "PiecewiseLinear: knots must be sorted");
  }
}

double PiecewiseLinear::operator()(double t) const {
  if (x_.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  const auto hi = std::upper_bound(x_.begin(), x_.end(), t);
  const size_t j = static_cast<size_t>(hi - x_.begin());
  const size_t i = j - 1;
  if (x_[i] == t) return y_[i];
  const double w = (t - x_[i]) / (x_[j] - x_[i]);
  return y_[i] + w * (y_[j] - y_[i]);
}

PerturbedSpectrum perturbed_spectrum(const SpectralOperator& a, const Perturbation& k) {
  const int n = a.dim();
  if (k.dim() != n) {
    fail(ErrorCode::argument,
         fmt::format("perturbed_spectrum: K is {}x{}, A has dimension {}", k.dim(), k.dim(), n));
  }
  if (!(a.eigenvalues()(0) > 0.0)) {
    fail(ErrorCode::numeric, "perturbed_spectrum: A is singular, relative shifts are undefined");
  }
  const Eigendecomposition e = eig_sym(a.matrix() + k.matrix);

  PerturbedSpectrum out;
  out.mu = a.eigenvalues();
  out.mu_tilde = e.values;
  out.phi_tilde = e.vectors;
  out.degenerate = e.degenerate;
  out.residual_norm = e.residual_norm;
  out.trusted = a.trusted();
  out.theta.resize(out.trusted);
  std::vector<double> xs(out.trusted), ys(out.trusted);
  for (int i = 0; i < out.trusted; ++i) {
    // shift as a Rayleigh quotient, no cancellation against mu_i
    const auto phi = out.phi_tilde.col(i);
    const double shift =
        (out.mu.array() - out.mu(i)).matrix().dot(phi.cwiseAbs2()) + phi.dot(k.matrix * phi);
    out.theta(i) = shift / out.mu(i);
    xs[i] = out.mu(i);
    ys[i] = out.theta(i);
  }
  out.f = PiecewiseLinear(std::move(xs), std::move(ys));
  return out;
}

SandwichReport sandwich_sequences(const SpectralOperator& a, const Perturbation& k,
                                  const PerturbedSpectrum& spectrum, double tolerance) {
  const int n = a.dim();
  if (k.dim() != n || spectrum.dim() != n) fail(ErrorCode::argument, "sandwich_sequences: dimension mismatch");
  const Vector& mu = a.eigenvalues();
  if (!(mu(0) > 0.0)) fail(ErrorCode::numeric, "sandwich_sequences: A is singular");
  const int top = spectrum.trusted;
  const Matrix op_a = a.matrix();
  const Matrix op_ak = op_a + k.matrix;

  SandwichReport r;
  r.tolerance = tolerance;
  r.alpha.resize(top);
  r.beta.resize(top);
  r.lower.resize(top);
  r.upper.resize(top);
  r.upper_certified.resize(top);
  r.ratio.resize(top);
  r.discrepancy.resize(top);

  parallel_for(top, [&](int i) {
    const int dim = i + 1;
    // First case: maximiser of <(A+K)x, x> over E_n = span(e_1..e_n).
    const Vector phi_hat = compress_and_maximize(op_ak, Matrix::Identity(n, dim)).top_vector;
    const double shift = phi_hat.dot(k.matrix * phi_hat);
    r.alpha(i) = phi_hat.dot(k.matrix * phi_hat.cwiseQuotient(mu));
    r.upper(i) = 1.0 + r.alpha(i);
    r.upper_certified(i) = 1.0 + shift / mu(i);
    r.discrepancy(i) = std::abs(shift / mu(i) - r.alpha(i));

    // Second case: maximiser of <A x, x> over the perturbed eigenspace.
    const Matrix q = spectrum.phi_tilde.leftCols(dim);
    const Vector psi_hat = compress_and_maximize(op_a, q).top_vector;
    const Vector coeff = q.transpose() * psi_hat;
    const Vector inv_psi = q * coeff.cwiseQuotient(spectrum.mu_tilde.head(dim));
    r.beta(i) = psi_hat.dot(k.matrix * inv_psi);
    r.lower(i) = r.beta(i) < 1.0 ? 1.0 / (1.0 - r.beta(i))
                                 : std::numeric_limits<double>::infinity();
    r.ratio(i) = spectrum.mu_tilde(i) / mu(i);
  });

  for (int i = 0; i < top; ++i) {
    if (r.ratio(i) < r.lower(i) - tolerance || r.ratio(i) > r.upper_certified(i) + tolerance) {
      r.violations.push_back(i + 1);
    }
    if (r.ratio(i) > r.upper(i) + tolerance) r.upper_violations.push_back(i + 1);
  }
  return r;
}

ConditionOneReport fit_condition_one(const PerturbedSpectrum& spectrum, const GapReport& gap) {
  const int top = spectrum.trusted;
  if (top < 3) fail(ErrorCode::argument, "fit_condition_one: need at least 3 trusted indices");
  const Vector& mu = spectrum.mu;
  const Vector& mt = spectrum.mu_tilde;
  for (int i = 0; i + 1 < top; ++i) {
    if (!(mu(i + 1) > mu(i))) {
      fail(ErrorCode::numeric,
           fmt::format("fit_condition_one: mu is not strictly increasing at n = {}", i + 1));
    }
  }

  ConditionOneReport r;
  r.gamma_hat = gap.gamma_hat;
  r.first_index = 1;
  r.last_index = top;
  r.tilde_gaps.resize(top - 1);
  double kappa = 0.0;
  for (int i = 0; i + 1 < top; ++i) {
    const double tilde_gap = mt(i + 1) - mt(i);
    r.tilde_gaps(i) = tilde_gap;
    double term;
    if (tilde_gap < kClusterTolerance * (1.0 + std::abs(mt(i)))) {
      term = 1.0;  // clustered: no gap left at all
    } else {
      // -(mu_{n+1} theta_{n+1} - mu_n theta_n) / (mu_{n+1} - mu_n)
      const double shift_next = mt(i + 1) - mu(i + 1);
      const double shift = mt(i) - mu(i);
      term = -(shift_next - shift) / (mu(i + 1) - mu(i));
    }
    kappa = std::max(kappa, term);
  }
  r.kappa_star = kappa;
  r.pass = kappa < 1.0;
  r.gamma_tilde = (1.0 - kappa) * gap.gamma_hat;
  if (r.pass) {
    for (int i = 0; i + 1 < top; ++i) {
      if (!(r.tilde_gaps(i) > r.gamma_tilde - 1e-9)) r.gap_violations.push_back(i + 1);
    }
  }
  return r;
}

CommutatorReport commutator_diagnostics(const SpectralOperator& a, const Perturbation& k,
                                        const PerturbedSpectrum& spectrum,
                                        double slope_threshold) {
  const int n = a.dim();
  if (k.dim() != n || spectrum.dim() != n) {
    fail(ErrorCode::argument, "commutator_diagnostics: dimension mismatch");
  }
  const Vector& mu = a.eigenvalues();
  CommutatorReport out;
  out.r.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) out.r(i, j) = (mu(i) - mu(j)) * k.matrix(i, j);
  }
  out.decay = singular_value_decay(out.r, slope_threshold);
  out.op_norm = out.decay.singular_values.size() > 0 ? out.decay.singular_values(0) : 0.0;
  out.rphi_norms =
      (out.r * spectrum.phi_tilde.leftCols(spectrum.trusted)).colwise().norm().transpose();
  return out;
}

RefinementReport refine_commutator(const CommutatorReport& coarse, const CommutatorReport& fine,
                                   double tolerance) {
  const int tc = static_cast<int>(coarse.rphi_norms.size());
  const int tf = static_cast<int>(fine.rphi_norms.size());
  if (tc < 1 || tf < tc) fail(ErrorCode::argument, "refine_commutator: fine run must cover the coarse range");
  RefinementReport r;
  r.coarse_dim = static_cast<int>(coarse.r.rows());
  r.fine_dim = static_cast<int>(fine.r.rows());
  for (int k = 0; k < tc; ++k) {
    r.max_norm_change =
        std::max(r.max_norm_change, std::abs(coarse.rphi_norms(k) - fine.rphi_norms(k)));
  }
  r.stable = r.max_norm_change <= tolerance;
  for (int k = (3 * tc) / 4; k < tc; ++k) r.coarse_tail = std::max(r.coarse_tail, coarse.rphi_norms(k));
  for (int k = tc; k < tf; ++k) r.fine_tail = std::max(r.fine_tail, fine.rphi_norms(k));
  r.tail_shrinks = r.fine_tail <= r.coarse_tail;
  return r;
}

NecessaryReport necessary_condition_sequence(const ObservationMap& c,
                                             const PerturbedSpectrum& spectrum,
                                             double zero_floor) {
  if (c.dim() != spectrum.dim()) {
    fail(ErrorCode::argument, "necessary_condition_sequence: dimension mismatch");
  }
  const int top = spectrum.trusted;
  if (top < 1) fail(ErrorCode::argument, "necessary_condition_sequence: empty trusted range");
  NecessaryReport r;
  r.zero_floor = zero_floor;
  r.norms = (c.matrix * spectrum.phi_tilde.leftCols(top)).colwise().norm().transpose();
  r.c.resize(top);
  double running = std::numeric_limits<double>::infinity();
  for (int k = 0; k < top; ++k) {
    running = std::min(running, r.norms(k));
    r.c(k) = running;
    if (r.norms(k) <= zero_floor) r.flagged.push_back(k + 1);
  }
  return r;
}

}  // namespace obsv

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

#include "obsv/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace obsv {

namespace {

double complex_spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m.adjoint() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

void check_index(const PerturbedSpectrum& spectrum, int k, const char* who) {
  if (k < 1 || k > spectrum.dim()) {
    fail(ErrorCode::argument, fmt::format("{}: index {} outside [1, {}]", who, k, spectrum.dim()));
  }
  if (spectrum.degenerate[k - 1]) {
    fail(ErrorCode::numeric, fmt::format("{}: eigenvalue {} is not simple", who, k));
  }
}

double local_gap(const PerturbedSpectrum& spectrum, int k) {
  double gap = std::numeric_limits<double>::infinity();
  for (int j = 0; j < spectrum.dim(); ++j) {
    if (j != k - 1) gap = std::min(gap, std::abs(spectrum.mu_tilde(k - 1) - spectrum.mu_tilde(j)));
  }
  return gap;
}

}  // namespace

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.transpose() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

double contour_radius(const PerturbedSpectrum& spectrum, int k, double radius, bool* shrunk) {
  const double gap = local_gap(spectrum, k);
  const bool shrink = gap < 2.0 * radius;
  if (shrunk) *shrunk = shrink;
  return shrink ? 0.4 * gap : radius;
}

RieszProjector riesz_project(const Resolvent& resolvent, const PerturbedSpectrum& spectrum, int k,
                             double radius, int nodes) {
  check_index(spectrum, k, "riesz_project");
  if (nodes < 16) fail(ErrorCode::argument, fmt::format("riesz_project: {} nodes, need >= 16", nodes));
  if (resolvent.dim() != spectrum.dim()) fail(ErrorCode::argument, "riesz_project: dimension mismatch");
  if (!(radius > 0.0)) fail(ErrorCode::argument, "riesz_project: radius must be positive");

  RieszProjector out;
  out.k = k;
  out.nodes = nodes;
  out.center = spectrum.mu_tilde(k - 1);
  out.local_gap = local_gap(spectrum, k);
  out.radius = contour_radius(spectrum, k, radius, &out.radius_shrunk);
  if (!(out.radius > 0.0)) {
    fail(ErrorCode::numeric, fmt::format("riesz_project: contour around index {} collapses", k));
  }

  // mu = c + r e^{i t}: (1 / 2 pi i) dmu = (r / 2 pi) e^{i t} dt.
  const int n = spectrum.dim();
  CMatrix sum = CMatrix::Zero(n, n);
  for (int j = 0; j < nodes; ++j) {
    const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * j / nodes);
    sum += z * resolvent.reduced_inverse(out.center + out.radius * z);
  }
  const Matrix reduced = (out.radius / nodes) * sum.real();
  out.p = resolvent.from_reduced(reduced);

  const Vector phi = spectrum.phi_tilde.col(k - 1);
  out.quadrature_residual = spectral_norm(out.p - phi * phi.transpose());
  out.idempotency_defect = spectral_norm(out.p * out.p - out.p);
  out.trace_defect = std::abs(out.p.trace() - 1.0);
  out.asymmetry = spectral_norm(out.p - out.p.transpose());
  return out;
}

ResidueSanity residue_sanity(const Resolvent& resolvent, const PerturbedSpectrum& spectrum,
                             const Matrix& r, int k, double radius, int nodes) {
  const RieszProjector proj = riesz_project(resolvent, spectrum, k, radius, nodes);
  const Matrix p = resolvent.to_reduced(proj.p);
  const Matrix rr = resolvent.to_reduced(r);
  const CMatrix prp = (p * rr * p).cast<Complex>();
  const int n = spectrum.dim();
  CMatrix first = CMatrix::Zero(n, n);
  CMatrix second = CMatrix::Zero(n, n);
  for (int j = 0; j < nodes; ++j) {
    const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * j / nodes);
    const Complex mu = proj.center + proj.radius * z;
    const Complex w = proj.radius * z / static_cast<double>(nodes);
    const Complex pole = mu - proj.center;
    first += (w / (pole * pole)) * prp;
    const CMatrix f = resolvent.reduced_inverse(mu) - p.cast<Complex>() / pole;
    second += w * (f * rr * f);
  }
  return ResidueSanity{complex_spectral_norm(first), complex_spectral_norm(second)};
}

Matrix reduced_resolvent(const PerturbedSpectrum& spectrum, int k) {
  check_index(spectrum, k, "reduced_resolvent");
  const int n = spectrum.dim();
  Vector w(n);
  for (int j = 0; j < n; ++j) {
    w(j) = j == k - 1 ? 0.0 : 1.0 / (spectrum.mu_tilde(k - 1) - spectrum.mu_tilde(j));
  }
  return spectrum.phi_tilde * w.asDiagonal() * spectrum.phi_tilde.transpose();
}

IdentityResidualReport commutator_identity_check(const Perturbation& k_op,
                                              const PerturbedSpectrum& spectrum, const Matrix& p,
                                              const Matrix& r, int k) {
  check_index(spectrum, k, "commutator_identity_check");
  const int n = spectrum.dim();
  if (k_op.dim() != n || p.rows() != n || r.rows() != n) {
    fail(ErrorCode::argument, "commutator_identity_check: dimension mismatch");
  }
  const Matrix f = reduced_resolvent(spectrum, k);
  const Matrix& kk = k_op.matrix;
  const Matrix lhs = p * kk;
  const Matrix rhs = kk * p + f * r * p + p * r * f;

  IdentityResidualReport out;
  out.k = k;
  out.lhs_rhs_gap = spectral_norm(lhs - rhs);
  out.F_norm = spectral_norm(f);
  out.F_bound = 1.0 / local_gap(spectrum, k);
  out.F_phi_norm = (f * spectrum.phi_tilde.col(k - 1)).norm();
  out.tolerance = 1e-7 * (1.0 + spectral_norm(kk));
  out.pass = out.lhs_rhs_gap <= out.tolerance;
  return out;
}

TailReport tail_bound_check(const Perturbation& k_op, const ObservationMap& c,
                            const PerturbedSpectrum& spectrum,
                            const std::vector<Matrix>& projectors, const Matrix& r,
                            double gamma_tilde, double rho_hat, double tolerance) {
  if (!(rho_hat > 0.0)) {
    fail(ErrorCode::validation,
         "tail_bound_check: Hautus constant is not positive; the unperturbed pair is not observable");
  }
  if (!(gamma_tilde > 0.0)) fail(ErrorCode::argument, "tail_bound_check: gamma_tilde must be positive");
  const int n = spectrum.dim();
  const int top = spectrum.trusted;
  if (k_op.dim() != n || c.dim() != n || r.rows() != n) {
    fail(ErrorCode::argument, "tail_bound_check: dimension mismatch");
  }
  if (static_cast<int>(projectors.size()) < top) {
    fail(ErrorCode::argument, "tail_bound_check: missing projectors for the trusted range");
  }

  TailReport out;
  out.gamma_tilde = gamma_tilde;
  out.rho_hat = rho_hat;
  out.tolerance = tolerance;
  out.rows.resize(top);
  const double half = 0.5 * rho_hat;
  for (int i = 0; i < top; ++i) {
    TailRow& row = out.rows[i];
    row.k = i + 1;
    row.mu_tilde = spectrum.mu_tilde(i);
    const Vector phi = spectrum.phi_tilde.col(i);
    row.c_sq = (c.matrix * phi).squaredNorm();
    const Matrix& p = projectors[i];
    if (spectrum.degenerate[i] || p.rows() != n) {
      row.skipped = true;
      continue;
    }
    const Vector kphi = k_op.matrix * phi;
    row.sigma = phi.dot(kphi);
    row.omega = row.mu_tilde - row.sigma;
    row.t = (kphi - p * kphi).squaredNorm();
    row.rphi_sq = (r * phi).squaredNorm();
    row.b = 4.0 / gamma_tilde * row.rphi_sq;
    row.b_alt = row.rphi_sq / (gamma_tilde * gamma_tilde);
    row.mode_bound = row.t + row.c_sq >= rho_hat - tolerance;
    // Relative slack for round-off in t when both sides are tiny.
    const double slack = 1e-12 * kphi.squaredNorm() + 1e-15;
    row.chain_linear = row.t <= row.b + slack;
    row.chain_square = row.t <= row.b_alt + slack;
    row.pass = row.mode_bound;
    out.mode_bound_all = out.mode_bound_all && row.mode_bound;
    out.chain_linear_all = out.chain_linear_all && row.chain_linear;
    out.chain_square_all = out.chain_square_all && row.chain_square;
  }

  out.k_rho = 0;
  for (int i = top - 1; i >= 0; --i) {
    const TailRow& row = out.rows[i];
    if (row.skipped || row.b > half) {
      out.k_rho = i + 1;
      break;
    }
  }
  out.k_rho_found = out.k_rho < top;
  return out;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::observable: return "observable";
    case Verdict::hypotheses_unmet: return "hypotheses-unmet";
    case Verdict::not_observable: return "not-observable";
  }
  return "hypotheses-unmet";
}

Certificate assemble_certificate(const CertificateInputs& in) {
  if (!in.gap || !in.spectral || !in.hautus || !in.gramian) {
    fail(ErrorCode::argument, "assemble_certificate: missing unperturbed reports");
  }
  Certificate cert;
  cert.unperturbed = verdict_unperturbed(*in.gap, *in.spectral, in.delta_floor);
  cert.gamma_hat = in.gap->gamma_hat;
  cert.delta_hat = in.spectral->delta_hat;
  cert.rho_hat = in.hautus->rho_hat;
  cert.horizon = in.gramian->T;
  cert.k_T = in.gramian->k_T;
  cert.K_T = in.gramian->K_T;
  cert.perturbed_rho_hat = in.perturbed_rho_hat;

  auto unmet = [&](const std::string& what) {
    cert.verdict = Verdict::hypotheses_unmet;
    cert.failed_condition = what;
    cert.reason = "hypotheses-unmet: " + what;
    return cert;
  };

  if (in.condition_one) {
    cert.kappa_star = in.condition_one->kappa_star;
    cert.gamma_tilde = in.condition_one->gamma_tilde;
    cert.condition_one = in.condition_one->pass;
  }
  if (in.commutator) {
    cert.commutator_norm = in.commutator->op_norm;
    cert.commutator_tail_ratio = in.commutator->decay.tail_ratio;
    cert.commutator_slope = in.commutator->decay.slope;
    cert.commutator_decaying = in.commutator->decay.decaying;
    if (in.commutator->refinement) {
      cert.refinement_stable = in.commutator->refinement->stable;
      cert.refinement_tail_shrinks = in.commutator->refinement->tail_shrinks;
    }
  }
  if (in.necessary) {
    cert.necessary_flags = in.necessary->flagged;
    cert.min_c_sq = in.necessary->norms.cwiseAbs2().minCoeff();
  }
  if (in.tail) cert.k_rho = in.tail->k_rho;

  if (cert.unperturbed.status == UnperturbedStatus::not_observable) {
    // Gap holds and some mode is invisible: the spectral criterion is an
    // equivalence, so this is a definite negative.
    cert.verdict = Verdict::not_observable;
    cert.failed_condition = cert.unperturbed.reason;
    cert.reason = "not-observable: " + cert.unperturbed.reason;
    return cert;
  }
  if (!cert.unperturbed.observable) return unmet(cert.unperturbed.reason);
  if (!(cert.rho_hat > in.rho_floor)) return unmet("hautus");
  if (!in.condition_one) fail(ErrorCode::argument, "assemble_certificate: missing condition (i) report");
  if (!in.condition_one->pass) return unmet("condition (i)");
  if (!in.necessary) fail(ErrorCode::argument, "assemble_certificate: missing necessary-condition report");
  if (!in.necessary->flagged.empty()) return unmet("necessary condition");
  if (!in.tail) fail(ErrorCode::argument, "assemble_certificate: missing tail report");
  if (!in.tail->k_rho_found) return unmet("condition (ii)");

  // c_0 is read as c_1: with k_rho = 0 the tail bound covers every index and
  // only the first mode needs the necessary-condition floor.
  const int index = std::max(in.tail->k_rho, 1);
  const double c = in.necessary->c(index - 1);
  cert.c_k_rho = c;
  cert.c_k_rho_sq = c * c;
  cert.delta_tilde = std::min(c * c, 0.5 * cert.rho_hat);
  cert.perturbed_gap_holds = in.condition_one->gap_violations.empty();

  const bool bound_holds = *cert.min_c_sq >= *cert.delta_tilde - in.tolerance;
  if (!*cert.perturbed_gap_holds) {
    cert.verdict = Verdict::not_observable;
    cert.failed_condition = "perturbed gap";
    cert.reason = "not-observable: perturbed gap";
  } else if (!bound_holds) {
    cert.verdict = Verdict::not_observable;
    cert.failed_condition = "perturbed spectral bound";
    cert.reason = "not-observable: perturbed spectral bound";
  } else {
    cert.verdict = Verdict::observable;
    cert.reason = "observable";
  }
  return cert;
}

}  // namespace obsv

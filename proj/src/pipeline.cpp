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

#include "obsv/pipeline.hpp"

#include <chrono>

#include <fmt/format.h>

#include "obsv/parallel.hpp"

namespace obsv {

namespace {

bool is_preset(const Scenario& sc) {
  return sc.op.kind == "dirichlet_laplacian" && sc.perturbation.kind != PerturbationKind::custom &&
         sc.perturbation.params.vectors.empty() && sc.observation.kind != "custom";
}

template <class F>
void timed(std::vector<StageTiming>& log, const char* name, F&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  log.push_back({name, dt.count()});
}

}  // namespace

Model build_model(const Scenario& sc, std::optional<int> n_override) {
  if (n_override && !is_preset(sc)) {
    fail(ErrorCode::argument, "build_model: only preset scenarios can be rebuilt at another size");
  }
  const int n = n_override.value_or(sc.n);
  const std::optional<int> guard = n_override ? std::nullopt : sc.guard;

  std::optional<SpectralOperator> a;
  if (sc.op.kind == "dirichlet_laplacian") {
    a.emplace(build_dirichlet_laplacian(n, guard));
  } else {
    a.emplace(custom_operator_from_matrix(*sc.op.matrix, guard));
  }

  Perturbation k;
  if (sc.perturbation.kind == PerturbationKind::custom) {
    k = custom_perturbation(a->to_eigen_coordinates(*sc.perturbation.matrix));
  } else {
    PerturbationParams params = sc.perturbation.params;
    for (Vector& v : params.vectors) v = a->basis().transpose() * v;
    k = build_perturbation(sc.perturbation.kind, params, *a);
  }

  ObservationMap c;
  const auto& ob = sc.observation;
  if (ob.kind == "window") {
    c = build_window_observation(n, ob.a, ob.b);
  } else if (ob.kind == "identity") {
    c = make_observation(Matrix::Identity(n, n));
  } else if (ob.kind == "zero") {
    c = make_observation(Matrix::Zero(1, n));
  } else {
    c = make_observation(*ob.matrix * a->basis());
  }
  if (ob.annihilate_mode) {
    const int m = *ob.annihilate_mode;
    if (m > n) fail(ErrorCode::validation, "observation.annihilate.mode exceeds N");
    Vector dir;
    if (ob.annihilate_perturbed) {
      Eigendecomposition e = eig_sym(a->matrix() + k.matrix);
      dir = e.vectors.col(m - 1);
    } else {
      dir = Vector::Unit(n, m - 1);
    }
    c = annihilate_direction(c, dir);
  }
  return Model{std::move(*a), std::move(k), std::move(c)};
}

Analysis run_analysis(const Scenario& sc) {
  Analysis out;
  out.scenario = sc;
  out.digest = scenario_digest(sc);
  const auto& tol = sc.tolerances;
  auto& log = out.timings;

  timed(log, "model", [&] { out.model = std::make_shared<const Model>(build_model(sc)); });
  const Model& m = *out.model;
  const SpectralOperator& a = m.a;
  const int trusted = a.trusted();
  if (trusted < 1) fail(ErrorCode::validation, "guard band leaves no trusted indices");
  const Vector& mu = a.eigenvalues();

  timed(log, "unperturbed", [&] {
    out.gap = check_gap(mu, trusted, tol.gap_floor);
    out.spectral = spectral_obs_test(m.c, Matrix::Identity(a.dim(), a.dim()), trusted);
    out.unperturbed = verdict_unperturbed(out.gap, out.spectral, tol.delta_floor);
  });
  timed(log, "hautus", [&] {
    out.hautus = hautus_scan(a.matrix(), m.c,
                             default_hautus_grid(mu, trusted, out.gap.gamma_hat, sc.analysis.grid));
  });
  timed(log, "gramian", [&] {
    double horizon = 1.0;
    if (sc.analysis.horizon) {
      horizon = *sc.analysis.horizon;
    } else if (out.gap.gamma_hat > 0.0) {
      horizon = default_horizon(out.gap.gamma_hat);
    } else {
      out.notes.push_back("no positive gap: Gramian horizon defaults to T = 1");
    }
    out.gramian = observability_gramian(mu, m.c, horizon);
  });
  timed(log, "minmax", [&] { out.minmax = minmax_upper_bound_check(a, sc.analysis.trials, sc.analysis.seed); });
  out.k_decay = singular_value_decay(m.k.matrix, sc.analysis.decay_slope);

  // theta_n and the monotone fit need mu_1 > 0 and a strictly ordered spectrum.
  const bool perturbed_ok = out.gap.pass && mu(0) > 0.0;
  if (!perturbed_ok) {
    out.notes.push_back("perturbed stages skipped: gap condition fails or mu_1 = 0");
  } else {
    timed(log, "perturbed_spectrum", [&] {
      out.spectrum = perturbed_spectrum(a, m.k);
      out.sandwich = sandwich_sequences(a, m.k, *out.spectrum, tol.sandwich);
      out.condition_one = fit_condition_one(*out.spectrum, out.gap);
    });
    timed(log, "commutator", [&] {
      out.commutator = commutator_diagnostics(a, m.k, *out.spectrum, sc.analysis.decay_slope);
      if (sc.analysis.refine && is_preset(sc)) {
        Model fine = build_model(sc, 2 * a.dim());
        PerturbedSpectrum fine_sp = perturbed_spectrum(fine.a, fine.k);
        CommutatorReport fine_cr =
            commutator_diagnostics(fine.a, fine.k, fine_sp, sc.analysis.decay_slope);
        out.commutator->refinement = refine_commutator(*out.commutator, fine_cr, tol.refinement);
      }
      out.necessary = necessary_condition_sequence(m.c, *out.spectrum, tol.zero_floor);
    });
  }

  const bool projectors_ok = out.spectrum && out.condition_one->pass && out.unperturbed.observable &&
                             out.hautus.rho_hat > tol.rho_floor;
  if (out.spectrum && !projectors_ok) {
    out.notes.push_back("projector stages skipped: an earlier hypothesis fails");
  }
  if (projectors_ok) {
    const PerturbedSpectrum& sp = *out.spectrum;
    const double gamma_tilde = out.condition_one->gamma_tilde;
    const double eps = gamma_tilde / 4.0;
    const Matrix s = a.matrix() + m.k.matrix;
    std::vector<Matrix> p(static_cast<std::size_t>(trusted));
    std::vector<std::optional<RieszProjector>> proj(static_cast<std::size_t>(trusted));
    std::vector<std::optional<IdentityResidualReport>> ident(static_cast<std::size_t>(trusted));

    timed(log, "riesz", [&] {
      const Resolvent res(s);
      parallel_for(static_cast<std::size_t>(trusted), [&](std::size_t i) {
        if (sp.degenerate[i]) return;
        RieszProjector rp = riesz_project(res, sp, static_cast<int>(i) + 1, eps, sc.analysis.nodes);
        p[i] = rp.p;
        rp.p = Matrix();
        proj[i] = std::move(rp);
      });
      if (!sp.degenerate[0]) out.residue = residue_sanity(res, sp, out.commutator->r, 1, eps, sc.analysis.nodes);
    });
    for (int i = 0; i < trusted; ++i) {
      if (!proj[i]) {
        out.notes.push_back(fmt::format("k = {}: clustered eigenvalue, projector skipped", i + 1));
      } else {
        if (proj[i]->radius_shrunk) {
          out.notes.push_back(fmt::format("k = {}: contour radius shrunk to {:.17g} (local gap {:.17g})",
                                          i + 1, proj[i]->radius, proj[i]->local_gap));
        }
        out.projectors.push_back(std::move(*proj[i]));
      }
    }
    timed(log, "identity", [&] {
      parallel_for(static_cast<std::size_t>(trusted), [&](std::size_t i) {
        if (p[i].size() == 0) return;
        ident[i] = commutator_identity_check(m.k, sp, p[i], out.commutator->r, static_cast<int>(i) + 1);
      });
      for (auto& r : ident)
        if (r) out.identity.push_back(std::move(*r));
    });
    timed(log, "tail", [&] {
      out.tail = tail_bound_check(m.k, m.c, sp, p, out.commutator->r, gamma_tilde, out.hautus.rho_hat,
                                  tol.mode_bound);
    });
    timed(log, "perturbed_hautus", [&] {
      // Orthogonal invariance: rho is unchanged in the eigenbasis of A + K.
      ObservationMap ct = make_observation(m.c.matrix * sp.phi_tilde);
      Matrix at = sp.mu_tilde.asDiagonal();
      out.perturbed_hautus = hautus_scan(
          at, ct, default_hautus_grid(sp.mu_tilde, trusted, gamma_tilde, sc.analysis.grid));
    });
  }

  CertificateInputs in;
  in.gap = &out.gap;
  in.spectral = &out.spectral;
  in.hautus = &out.hautus;
  in.gramian = &out.gramian;
  in.condition_one = out.condition_one ? &*out.condition_one : nullptr;
  in.commutator = out.commutator ? &*out.commutator : nullptr;
  in.necessary = out.necessary ? &*out.necessary : nullptr;
  in.tail = out.tail ? &*out.tail : nullptr;
  if (out.perturbed_hautus) in.perturbed_rho_hat = out.perturbed_hautus->rho_hat;
  in.delta_floor = tol.delta_floor;
  in.rho_floor = tol.rho_floor;
  in.tolerance = tol.verdict;
  out.certificate = assemble_certificate(in);
  return out;
}

}  // namespace obsv

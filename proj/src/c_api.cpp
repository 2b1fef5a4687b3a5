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

#include "obsv/obsv.h"

#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "obsv/pipeline.hpp"
#include "obsv/report_io.hpp"
#include "obsv/scenario.hpp"

struct obsv_scenario {
  obsv::Scenario value;
};

struct obsv_analysis {
  obsv::Analysis value;
  std::string certificate;
  std::chrono::system_clock::time_point started;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_warnings;

obsv_status code_of(obsv::ErrorCode c) {
  switch (c) {
    case obsv::ErrorCode::io: return OBSV_ERR_IO;
    case obsv::ErrorCode::parse: return OBSV_ERR_PARSE;
    case obsv::ErrorCode::validation: return OBSV_ERR_VALIDATION;
    case obsv::ErrorCode::numeric: return OBSV_ERR_NUMERIC;
    case obsv::ErrorCode::argument: return OBSV_ERR_ARGUMENT;
  }
  return OBSV_ERR_INTERNAL;
}

template <class F>
obsv_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    fn();
    return OBSV_OK;
  } catch (const obsv::Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return OBSV_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OBSV_ERR_INTERNAL;
  }
}

obsv_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return OBSV_ERR_ARGUMENT;
}

double or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

extern "C" {

const char* obsv_version(void) { return OBSV_VERSION_STRING; }

const char* obsv_last_error(void) { return g_last_error.c_str(); }

const char* obsv_status_name(obsv_status status) {
  switch (status) {
    case OBSV_OK: return "ok";
    case OBSV_ERR_IO: return "io";
    case OBSV_ERR_PARSE: return "parse";
    case OBSV_ERR_VALIDATION: return "validation";
    case OBSV_ERR_NUMERIC: return "numeric";
    case OBSV_ERR_ARGUMENT: return "argument";
    case OBSV_ERR_SELF_CHECK: return "self-check";
    case OBSV_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

obsv_status obsv_scenario_load(const char* path, obsv_scenario** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new obsv_scenario{obsv::load_scenario(path)}; });
}

obsv_status obsv_scenario_parse(const char* json_text, const char* base_dir, obsv_scenario** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new obsv_scenario{obsv::parse_scenario_text(json_text, base_dir ? base_dir : ".")};
  });
}

obsv_status obsv_scenario_set_number(obsv_scenario* scenario, const char* name, double value) {
  if (!scenario) return null_arg("scenario");
  if (!name) return null_arg("name");
  return guarded([&] { obsv::set_scenario_number(scenario->value, name, value); });
}

obsv_status obsv_scenario_digest(const obsv_scenario* scenario, char* buf, size_t len) {
  if (!scenario) return null_arg("scenario");
  if (!buf) return null_arg("buf");
  return guarded([&] {
    std::string d = obsv::scenario_digest(scenario->value);
    if (len < d.size() + 1) obsv::fail(obsv::ErrorCode::argument, "digest buffer too small");
    std::memcpy(buf, d.c_str(), d.size() + 1);
  });
}

void obsv_scenario_free(obsv_scenario* scenario) { delete scenario; }

obsv_status obsv_analyze(const obsv_scenario* scenario, obsv_analysis** out) {
  if (!scenario) return null_arg("scenario");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto started = std::chrono::system_clock::now();
    auto a = std::make_unique<obsv_analysis>();
    a->started = started;
    a->value = obsv::run_analysis(scenario->value);
    a->certificate = obsv::certificate_text(a->value);
    *out = a.release();
  });
}

obsv_verdict obsv_analysis_verdict(const obsv_analysis* analysis) {
  if (!analysis) return OBSV_VERDICT_HYPOTHESES_UNMET;
  return static_cast<obsv_verdict>(static_cast<int>(analysis->value.certificate.verdict));
}

const char* obsv_analysis_reason(const obsv_analysis* analysis) {
  return analysis ? analysis->value.certificate.reason.c_str() : "";
}

obsv_status obsv_analysis_constants(const obsv_analysis* analysis, obsv_constants* out) {
  if (!analysis) return null_arg("analysis");
  if (!out) return null_arg("out");
  const auto& c = analysis->value.certificate;
  const auto& a = analysis->value.model->a;
  out->N = a.dim();
  out->trusted = a.trusted();
  out->gamma_hat = c.gamma_hat;
  out->delta_hat = c.delta_hat;
  out->rho_hat = c.rho_hat;
  out->horizon = c.horizon;
  out->k_T = c.k_T;
  out->K_T = c.K_T;
  out->kappa_star = or_nan(c.kappa_star);
  out->gamma_tilde = or_nan(c.gamma_tilde);
  out->k_rho = c.k_rho ? *c.k_rho : -1;
  out->c_k_rho = or_nan(c.c_k_rho);
  out->delta_tilde = or_nan(c.delta_tilde);
  out->min_c_sq = or_nan(c.min_c_sq);
  out->perturbed_rho_hat = or_nan(c.perturbed_rho_hat);
  return OBSV_OK;
}

const char* obsv_analysis_certificate_json(const obsv_analysis* analysis) {
  return analysis ? analysis->certificate.c_str() : "";
}

obsv_status obsv_analysis_self_check(const obsv_analysis* analysis) {
  if (!analysis) return null_arg("analysis");
  g_last_error.clear();
  auto failures = obsv::self_check_failures(analysis->value);
  if (failures.empty()) return OBSV_OK;
  for (std::size_t i = 0; i < failures.size(); ++i) g_last_error += (i ? "; " : "") + failures[i];
  return OBSV_ERR_SELF_CHECK;
}

obsv_status obsv_analysis_write(const obsv_analysis* analysis, const char* out_dir) {
  if (!analysis) return null_arg("analysis");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] { obsv::write_reports(analysis->value, out_dir, analysis->started); });
}

void obsv_analysis_free(obsv_analysis* analysis) { delete analysis; }

obsv_status obsv_emit_plot_data(const char* dir, int strict, obsv_plot_result* out) {
  if (!dir) return null_arg("dir");
  g_warnings.clear();
  obsv::PlotDataResult res;
  obsv_status st = guarded([&] { res = obsv::emit_plot_data(dir, strict != 0); });
  for (std::size_t i = 0; i < res.warnings.size(); ++i) g_warnings += (i ? "\n" : "") + res.warnings[i];
  if (out) {
    out->files_written = static_cast<int>(res.written.size());
    out->warning_count = static_cast<int>(res.warnings.size());
    out->warnings = g_warnings.c_str();
  }
  return st;
}

}  // extern "C"

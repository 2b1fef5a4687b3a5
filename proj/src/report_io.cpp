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

#include "obsv/report_io.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "obsv/parallel.hpp"

namespace obsv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json to_array(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string iso_utc(std::chrono::system_clock::time_point t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) fail(ErrorCode::io, fmt::format("write failed for '{}'", path.string()));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, fmt::format("cannot read '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Header-keyed CSV table with optional blank cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    std::size_t end = line.find(',', pos);
    cells.push_back(line.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return cells;
}

Table read_table(const fs::path& path) {
  std::istringstream in(read_file(path));
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      t.header = split(line);
      first = false;
    } else {
      t.rows.push_back(split(line));
      if (t.rows.back().size() != t.header.size()) {
        fail(ErrorCode::parse, fmt::format("{}: ragged row", path.string()));
      }
    }
  }
  if (first) fail(ErrorCode::parse, fmt::format("{}: empty file", path.string()));
  return t;
}

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return x;
}

// Copies the named columns of `t` into a new CSV, dropping rows with blanks.
std::string project(const Table& t, const std::vector<std::string>& cols, const fs::path& src) {
  std::vector<int> idx;
  for (const auto& c : cols) {
    int i = t.column(c);
    if (i < 0) fail(ErrorCode::parse, fmt::format("{}: missing column '{}'", src.string(), c));
    idx.push_back(i);
  }
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const auto& row : t.rows) {
    bool complete = true;
    for (int i : idx) complete = complete && parse_cell(row[static_cast<std::size_t>(i)]).has_value();
    if (!complete) continue;
    for (std::size_t i = 0; i < idx.size(); ++i) out += (i ? "," : "") + row[static_cast<std::size_t>(idx[i])];
    out += "\n";
  }
  return out;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  return fmt::format("{:.17g}", x);
}

json certificate_json(const Analysis& an) {
  const Certificate& c = an.certificate;
  const Model& m = *an.model;
  json doc;
  doc["schema_version"] = c.schema_version;
  doc["toolkit_version"] = OBSV_VERSION_STRING;
  doc["scenario_hash"] = an.digest;
  doc["seed"] = an.scenario.analysis.seed;
  doc["verdict"] = to_string(c.verdict);
  doc["observable"] = c.verdict == Verdict::observable;
  doc["exit_code"] = static_cast<int>(c.verdict);
  doc["failed_condition"] = c.failed_condition;
  doc["reason"] = c.reason;
  doc["truncation"] = {{"N", m.a.dim()}, {"guard", m.a.guard_band()}, {"trusted", m.a.trusted()}};
  doc["unperturbed"] = {{"status", to_string(c.unperturbed.status)},
                        {"observable", c.unperturbed.observable},
                        {"reason", c.unperturbed.reason}};
  doc["constants"] = {
      {"gamma_hat", c.gamma_hat},
      {"delta_hat", c.delta_hat},
      {"rho_hat", c.rho_hat},
      {"T", c.horizon},
      {"k_T", c.k_T},
      {"K_T", c.K_T},
      {"kappa_star", opt(c.kappa_star)},
      {"gamma_tilde", opt(c.gamma_tilde)},
      {"condition_one", opt(c.condition_one)},
      {"k_rho", opt(c.k_rho)},
      {"c_k_rho", opt(c.c_k_rho)},
      {"c_k_rho_sq", opt(c.c_k_rho_sq)},
      {"delta_tilde", opt(c.delta_tilde)},
      {"min_c_sq", opt(c.min_c_sq)},
      {"perturbed_gap_holds", opt(c.perturbed_gap_holds)},
      {"perturbed_rho_hat", opt(c.perturbed_rho_hat)},
      {"commutator_norm", opt(c.commutator_norm)},
      {"commutator_tail_ratio", opt(c.commutator_tail_ratio)},
      {"commutator_slope", opt(c.commutator_slope)},
      {"commutator_decaying", opt(c.commutator_decaying)},
      {"refinement_stable", opt(c.refinement_stable)},
      {"refinement_tail_shrinks", opt(c.refinement_tail_shrinks)},
      {"necessary_flags", c.necessary_flags},
  };

  json rep;
  rep["gap"] = {{"gamma_hat", an.gap.gamma_hat}, {"argmin", an.gap.argmin}, {"floor", an.gap.floor},
                {"pass", an.gap.pass}, {"gaps", to_array(an.gap.gaps)}};
  rep["spectral"] = {{"delta_hat", an.spectral.delta_hat}, {"argmin", an.spectral.argmin},
                     {"norms_sq", to_array(an.spectral.norms)}};
  rep["hautus"] = {{"rho_hat", an.hautus.rho_hat}, {"omega_star", an.hautus.omega_star},
                   {"grid_rho_hat", an.hautus.grid_rho_hat}, {"omega", to_array(an.hautus.omega)},
                   {"rho", to_array(an.hautus.rho)}};
  rep["gramian"] = {{"T", an.gramian.T}, {"k_T", an.gramian.k_T}, {"K_T", an.gramian.K_T}};
  rep["minmax"] = {{"seed", an.minmax.seed}, {"trials", an.minmax.trials}, {"max_dim", an.minmax.max_dim},
                   {"worst", an.minmax.worst}, {"worst_dim", an.minmax.worst_dim}, {"pass", an.minmax.pass}};
  rep["perturbation_decay"] = {{"tail_ratio", an.k_decay.tail_ratio}, {"slope", an.k_decay.slope},
                               {"decaying", an.k_decay.decaying},
                               {"singular_values", to_array(an.k_decay.singular_values)}};
  if (an.condition_one) {
    const auto& r = *an.condition_one;
    rep["condition_one"] = {{"kappa_star", r.kappa_star}, {"pass", r.pass}, {"gamma_hat", r.gamma_hat},
                            {"gamma_tilde", r.gamma_tilde}, {"first_index", r.first_index},
                            {"last_index", r.last_index}, {"gap_violations", r.gap_violations}};
  }
  if (an.sandwich) {
    const auto& r = *an.sandwich;
    rep["sandwich"] = {{"tolerance", r.tolerance}, {"violations", r.violations},
                       {"upper_violations", r.upper_violations},
                       {"max_discrepancy", r.discrepancy.size() ? r.discrepancy.maxCoeff() : 0.0}};
  }
  if (an.commutator) {
    const auto& r = *an.commutator;
    json cj = {{"op_norm", r.op_norm}, {"tail_ratio", r.decay.tail_ratio}, {"slope", r.decay.slope},
               {"decaying", r.decay.decaying}, {"singular_values", to_array(r.decay.singular_values)},
               {"rphi_norms", to_array(r.rphi_norms)}};
    if (r.refinement) {
      const auto& f = *r.refinement;
      cj["refinement"] = {{"coarse_dim", f.coarse_dim}, {"fine_dim", f.fine_dim},
                          {"max_norm_change", f.max_norm_change}, {"stable", f.stable},
                          {"coarse_tail", f.coarse_tail}, {"fine_tail", f.fine_tail},
                          {"tail_shrinks", f.tail_shrinks}};
    }
    rep["commutator"] = cj;
  }
  if (an.necessary) {
    rep["necessary"] = {{"zero_floor", an.necessary->zero_floor}, {"flagged", an.necessary->flagged},
                        {"c", to_array(an.necessary->c)}};
  }
  if (!an.projectors.empty()) {
    json arr = json::array();
    for (const auto& p : an.projectors) {
      arr.push_back({{"k", p.k}, {"center", p.center}, {"radius", p.radius},
                     {"radius_shrunk", p.radius_shrunk}, {"local_gap", p.local_gap}, {"nodes", p.nodes},
                     {"quadrature_residual", p.quadrature_residual},
                     {"idempotency_defect", p.idempotency_defect}, {"trace_defect", p.trace_defect},
                     {"asymmetry", p.asymmetry}});
    }
    rep["riesz"] = arr;
  }
  if (!an.identity.empty()) {
    json arr = json::array();
    for (const auto& r : an.identity) {
      arr.push_back({{"k", r.k}, {"lhs_rhs_gap", r.lhs_rhs_gap}, {"F_norm", r.F_norm},
                     {"F_bound", r.F_bound}, {"F_phi_norm", r.F_phi_norm}, {"tolerance", r.tolerance},
                     {"pass", r.pass}});
    }
    rep["identity"] = arr;
  }
  if (an.tail) {
    const auto& t = *an.tail;
    rep["tail"] = {{"gamma_tilde", t.gamma_tilde}, {"rho_hat", t.rho_hat}, {"tolerance", t.tolerance},
                   {"k_rho", t.k_rho}, {"k_rho_found", t.k_rho_found},
                   {"chain_linear_all", t.chain_linear_all}, {"chain_square_all", t.chain_square_all},
                   {"mode_bound_all", t.mode_bound_all}};
  }
  if (an.residue) {
    rep["residue"] = {{"double_pole", an.residue->double_pole}, {"holomorphic", an.residue->holomorphic}};
  }
  if (an.perturbed_hautus) {
    rep["perturbed_hautus"] = {{"rho_hat", an.perturbed_hautus->rho_hat},
                               {"omega_star", an.perturbed_hautus->omega_star}};
  }
  doc["reports"] = rep;
  doc["notes"] = an.notes;
  return doc;
}

std::string certificate_text(const Analysis& an) { return certificate_json(an).dump(2) + "\n"; }

std::string sequences_csv(const Analysis& an) {
  const Vector& mu = an.model->a.eigenvalues();
  const int trusted = an.model->a.trusted();
  std::string out =
      "n,mu,mu_tilde,theta,alpha,beta,lower,upper,upper_certified,ratio,gap,gap_tilde,c_norm,c_n,r_phi_norm\n";
  auto cell = [](const Vector* v, int i) {
    return v && i < v->size() ? format_number((*v)(i)) : std::string();
  };
  const auto* sp = an.spectrum ? &*an.spectrum : nullptr;
  const auto* sw = an.sandwich ? &*an.sandwich : nullptr;
  const auto* c1 = an.condition_one ? &*an.condition_one : nullptr;
  const auto* ne = an.necessary ? &*an.necessary : nullptr;
  const auto* cr = an.commutator ? &*an.commutator : nullptr;
  for (int i = 0; i < trusted; ++i) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", i + 1, format_number(mu(i)),
                       cell(sp ? &sp->mu_tilde : nullptr, i), cell(sp ? &sp->theta : nullptr, i),
                       cell(sw ? &sw->alpha : nullptr, i), cell(sw ? &sw->beta : nullptr, i),
                       cell(sw ? &sw->lower : nullptr, i), cell(sw ? &sw->upper : nullptr, i),
                       cell(sw ? &sw->upper_certified : nullptr, i), cell(sw ? &sw->ratio : nullptr, i),
                       cell(&an.gap.gaps, i), cell(c1 ? &c1->tilde_gaps : nullptr, i),
                       cell(ne ? &ne->norms : nullptr, i), cell(ne ? &ne->c : nullptr, i),
                       cell(cr ? &cr->rphi_norms : nullptr, i));
  }
  return out;
}

std::string tail_table_csv(const Analysis& an) {
  std::string out = "k,mu_tilde,t_k,b_k,c_norm_sq,pass,sigma,omega,rphi_sq,b_alt,mode_bound,chain_linear,chain_square\n";
  if (!an.tail) return out;
  auto flag = [](bool b) { return b ? "true" : "false"; };
  for (const TailRow& r : an.tail->rows) {
    if (r.skipped) {
      out += fmt::format("{},{},,,,false,,,,,,,\n", r.k, format_number(r.mu_tilde));
      continue;
    }
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.k, format_number(r.mu_tilde),
                       format_number(r.t), format_number(r.b), format_number(r.c_sq), flag(r.pass),
                       format_number(r.sigma), format_number(r.omega), format_number(r.rphi_sq),
                       format_number(r.b_alt), flag(r.mode_bound), flag(r.chain_linear), flag(r.chain_square));
  }
  return out;
}

WrittenReports write_reports(const Analysis& an, const fs::path& out_dir,
                             std::chrono::system_clock::time_point started) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io, fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  WrittenReports w;
  w.certificate = out_dir / "certificate.json";
  w.sequences = out_dir / "sequences.csv";
  w.tail_table = out_dir / "tail_table.csv";
  w.manifest = out_dir / "manifest.json";
  write_file(w.certificate, certificate_text(an));
  write_file(w.sequences, sequences_csv(an));
  write_file(w.tail_table, tail_table_csv(an));

  json man;
  man["scenario_hash"] = an.digest;
  man["toolkit_version"] = OBSV_VERSION_STRING;
  man["seed"] = an.scenario.analysis.seed;
  man["threads"] = worker_count();
  man["started_at"] = iso_utc(started);
  man["finished_at"] = iso_utc(std::chrono::system_clock::now());
  man["verdict"] = to_string(an.certificate.verdict);
  man["exit_code"] = an.exit_code();
  auto abs = [](const fs::path& p) { return fs::absolute(p).lexically_normal().string(); };
  man["outputs"] = {{"certificate", abs(w.certificate)}, {"sequences", abs(w.sequences)},
                    {"tail_table", abs(w.tail_table)}, {"manifest", abs(w.manifest)}};
  json stages = json::array();
  double total = 0.0;
  for (const auto& s : an.timings) {
    stages.push_back({{"stage", s.name}, {"seconds", s.seconds}});
    total += s.seconds;
  }
  man["stages"] = stages;
  man["total_seconds"] = total;
  write_file(w.manifest, man.dump(2) + "\n");
  return w;
}

std::vector<std::string> self_check_failures(const Analysis& an) {
  std::vector<std::string> f;
  if (!an.minmax.pass) {
    f.push_back(fmt::format("min-max check failed at n = {} (margin {:.3g})", an.minmax.worst_dim, an.minmax.worst));
  }
  if (an.sandwich && !an.sandwich->violations.empty()) {
    f.push_back(fmt::format("sandwich bounds violated at {} indices", an.sandwich->violations.size()));
  }
  for (const auto& p : an.projectors) {
    if (!p.valid() || p.quadrature_residual > 1e-8) {
      f.push_back(fmt::format("projector k = {} inaccurate (residual {:.3g})", p.k, p.quadrature_residual));
    }
  }
  for (const auto& r : an.identity) {
    if (!r.pass) f.push_back(fmt::format("projector identity fails at k = {} (gap {:.3g})", r.k, r.lhs_rhs_gap));
    if (r.F_phi_norm > 1e-9) f.push_back(fmt::format("reduced resolvent does not annihilate phi_{}", r.k));
  }
  if (an.tail && !an.tail->mode_bound_all) f.push_back("Hautus tail inequality fails for some trusted k");
  if (an.certificate.verdict == Verdict::observable && an.perturbed_hautus &&
      !(an.perturbed_hautus->rho_hat > 0.0)) {
    f.push_back("certificate says observable but the direct perturbed Hautus constant is not positive");
  }
  return f;
}

PlotDataResult emit_plot_data(const fs::path& dir, bool strict) {
  if (!fs::is_directory(dir)) fail(ErrorCode::io, fmt::format("'{}' is not a directory", dir.string()));
  PlotDataResult res;
  const fs::path cert = dir / "certificate.json";
  const fs::path seq = dir / "sequences.csv";
  const fs::path tail = dir / "tail_table.csv";

  int present = 0;
  auto missing = [&](const fs::path& p, const char* series) {
    std::string msg = fmt::format("missing '{}': {} not emitted", p.filename().string(), series);
    if (strict) fail(ErrorCode::io, msg);
    res.warnings.push_back(msg);
  };
  auto emit = [&](const char* name, const std::string& text) {
    fs::path p = dir / name;
    write_file(p, text);
    res.written.push_back(p);
  };
  // Check everything first so strict mode writes nothing on failure.
  const bool have_cert = fs::exists(cert), have_seq = fs::exists(seq), have_tail = fs::exists(tail);
  present = have_cert + have_seq + have_tail;
  if (present == 0) fail(ErrorCode::io, fmt::format("no report files in '{}'", dir.string()));
  if (!have_seq) missing(seq, "theta and gap series");
  if (!have_cert) missing(cert, "rho series");
  if (!have_tail) missing(tail, "tail series");

  if (have_seq) {
    Table t = read_table(seq);
    emit("plot_theta.csv", project(t, {"n", "theta"}, seq));
    emit("plot_gaps.csv", project(t, {"n", "gap", "gap_tilde"}, seq));
  }
  if (have_cert) {
    json doc;
    try {
      doc = json::parse(read_file(cert));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::parse, fmt::format("{}: {}", cert.string(), e.what()));
    }
    const json* h = nullptr;
    if (doc.contains("reports") && doc["reports"].contains("hautus")) h = &doc["reports"]["hautus"];
    if (!h || !h->contains("omega") || !h->contains("rho") || (*h)["omega"].size() != (*h)["rho"].size()) {
      fail(ErrorCode::parse, fmt::format("{}: no Hautus series", cert.string()));
    }
    std::string out = "omega,rho\n";
    for (std::size_t i = 0; i < (*h)["omega"].size(); ++i) {
      const json& w = (*h)["omega"][i];
      const json& r = (*h)["rho"][i];
      if (!w.is_number() || !r.is_number()) continue;
      out += format_number(w.get<double>()) + "," + format_number(r.get<double>()) + "\n";
    }
    emit("plot_rho.csv", out);
  }
  if (have_tail) {
    Table t = read_table(tail);
    emit("plot_tail.csv", project(t, {"k", "t_k", "b_k"}, tail));
  }
  return res;
}

}  // namespace obsv

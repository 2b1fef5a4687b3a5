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

#include "obsv/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace obsv {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(ErrorCode::validation, fmt::format("{}: expected an object", where));
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      fail(ErrorCode::validation, fmt::format("{}: unknown key '{}'", where, it.key()));
    }
  }
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(ErrorCode::validation, fmt::format("{}.{}: expected a number", where, key));
  double x = v.get<double>();
  if (!std::isfinite(x)) fail(ErrorCode::validation, fmt::format("{}.{}: not finite", where, key));
  return x;
}

long long get_integer(const json& obj, const std::string& where, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9.0e15) return static_cast<long long>(x);
  }
  fail(ErrorCode::validation, fmt::format("{}.{}: expected an integer", where, key));
}

std::string get_string(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    fail(ErrorCode::validation, fmt::format("{}.{}: expected a string", where, key));
  }
  return obj.at(key).get<std::string>();
}

Matrix matrix_from_rows(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) {
    fail(ErrorCode::validation, fmt::format("{}: expected a non-empty array of rows", where));
  }
  const auto m = rows.size();
  if (!rows[0].is_array() || rows[0].empty()) {
    fail(ErrorCode::validation, fmt::format("{}: rows must be non-empty arrays", where));
  }
  const auto n = rows[0].size();
  Matrix out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < m; ++i) {
    if (!rows[i].is_array() || rows[i].size() != n) {
      fail(ErrorCode::validation, fmt::format("{}: row {} has the wrong length", where, i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!rows[i][j].is_number()) {
        fail(ErrorCode::validation, fmt::format("{}: entry ({},{}) is not a number", where, i, j));
      }
      double x = rows[i][j].get<double>();
      if (!std::isfinite(x)) fail(ErrorCode::validation, fmt::format("{}: entry ({},{}) not finite", where, i, j));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
    }
  }
  return out;
}

// "matrix": [[...]] or "csv": "file.csv"; exactly one.
Matrix matrix_field(const json& obj, const std::string& where, const std::filesystem::path& base) {
  const bool inline_m = obj.contains("matrix");
  const bool csv = obj.contains("csv");
  if (inline_m == csv) {
    fail(ErrorCode::validation, fmt::format("{}: give exactly one of 'matrix' or 'csv'", where));
  }
  if (inline_m) return matrix_from_rows(obj.at("matrix"), where + ".matrix");
  std::filesystem::path p = get_string(obj, where, "csv");
  if (p.is_relative()) p = base / p;
  return read_csv_matrix(p);
}

Scenario decode(const json& doc, const std::filesystem::path& base) {
  check_keys(doc, "scenario",
             {"operator", "perturbation", "observation", "truncation", "tolerances", "analysis"});
  Scenario sc;
  sc.source = doc;
  sc.base_dir = base;

  // truncation
  std::optional<long long> n_req;
  if (doc.contains("truncation")) {
    const json& t = doc.at("truncation");
    check_keys(t, "truncation", {"N", "guard"});
    if (t.contains("N")) n_req = get_integer(t, "truncation", "N", 0);
    if (t.contains("guard")) sc.guard = static_cast<int>(get_integer(t, "truncation", "guard", 0));
  }

  // operator
  if (!doc.contains("operator")) fail(ErrorCode::validation, "scenario: missing 'operator'");
  {
    const json& o = doc.at("operator");
    check_keys(o, "operator", {"kind", "matrix", "csv"});
    sc.op.kind = get_string(o, "operator", "kind");
    if (sc.op.kind == "dirichlet_laplacian") {
      if (o.contains("matrix") || o.contains("csv")) {
        fail(ErrorCode::validation, "operator: dirichlet_laplacian takes no matrix");
      }
      if (!n_req) fail(ErrorCode::validation, "truncation.N is required for dirichlet_laplacian");
      sc.n = static_cast<int>(*n_req);
    } else if (sc.op.kind == "custom") {
      sc.op.matrix = matrix_field(o, "operator", base);
      if (sc.op.matrix->rows() != sc.op.matrix->cols()) {
        fail(ErrorCode::validation, "operator: custom matrix must be square");
      }
      sc.n = static_cast<int>(sc.op.matrix->rows());
      if (n_req && *n_req != sc.n) {
        fail(ErrorCode::validation,
             fmt::format("truncation.N = {} does not match the operator size {}", *n_req, sc.n));
      }
    } else {
      fail(ErrorCode::validation, fmt::format("operator: unknown kind '{}'", sc.op.kind));
    }
  }
  if (sc.n < 8) fail(ErrorCode::validation, fmt::format("truncation N = {} (need N >= 8)", sc.n));
  if (sc.guard && (*sc.guard < 0 || *sc.guard >= sc.n)) {
    fail(ErrorCode::validation, fmt::format("truncation.guard = {} out of range [0, N)", *sc.guard));
  }

  // perturbation
  if (doc.contains("perturbation")) {
    const json& p = doc.at("perturbation");
    const std::string w = "perturbation";
    check_keys(p, w, {"kind", "c", "s", "rank", "vectors", "decay", "length", "seed", "matrix", "csv"});
    sc.perturbation.kind = perturbation_kind_from_string(get_string(p, w, "kind"));
    auto& prm = sc.perturbation.params;
    prm.c = get_number(p, w, "c", prm.c);
    prm.s = get_number(p, w, "s", prm.s);
    prm.rank = static_cast<int>(get_integer(p, w, "rank", prm.rank));
    prm.decay = get_number(p, w, "decay", prm.decay);
    prm.length = get_number(p, w, "length", prm.length);
    long long seed = get_integer(p, w, "seed", 0);
    if (seed < 0) fail(ErrorCode::validation, "perturbation.seed must be non-negative");
    prm.seed = static_cast<std::uint64_t>(seed);
    if (p.contains("vectors")) {
      Matrix rows = matrix_from_rows(p.at("vectors"), "perturbation.vectors");
      if (rows.cols() != sc.n) fail(ErrorCode::validation, "perturbation.vectors: length must equal N");
      for (Eigen::Index i = 0; i < rows.rows(); ++i) prm.vectors.emplace_back(rows.row(i).transpose());
    }
    if (sc.perturbation.kind == PerturbationKind::custom) {
      sc.perturbation.matrix = matrix_field(p, w, base);
      if (sc.perturbation.matrix->rows() != sc.n || sc.perturbation.matrix->cols() != sc.n) {
        fail(ErrorCode::validation, "perturbation: custom matrix must be N x N");
      }
    } else if (p.contains("matrix") || p.contains("csv")) {
      fail(ErrorCode::validation, "perturbation: matrix given for a preset kind");
    }
  }

  // observation
  if (doc.contains("observation")) {
    const json& o = doc.at("observation");
    const std::string w = "observation";
    check_keys(o, w, {"kind", "a", "b", "matrix", "csv", "annihilate"});
    auto& ob = sc.observation;
    ob.kind = get_string(o, w, "kind");
    if (ob.kind == "window") {
      ob.a = get_number(o, w, "a", ob.a);
      ob.b = get_number(o, w, "b", ob.b);
      if (!(0.0 <= ob.a && ob.a < ob.b && ob.b <= 1.0)) {
        fail(ErrorCode::validation, fmt::format("observation: window ({}, {}) must satisfy 0 <= a < b <= 1", ob.a, ob.b));
      }
    } else if (ob.kind == "custom") {
      ob.matrix = matrix_field(o, w, base);
      if (ob.matrix->cols() != sc.n) fail(ErrorCode::validation, "observation: custom matrix must have N columns");
    } else if (ob.kind != "identity" && ob.kind != "zero") {
      fail(ErrorCode::validation, fmt::format("observation: unknown kind '{}'", ob.kind));
    }
    if (ob.kind != "window" && (o.contains("a") || o.contains("b"))) {
      fail(ErrorCode::validation, "observation: a/b only apply to the window kind");
    }
    if (ob.kind != "custom" && (o.contains("matrix") || o.contains("csv"))) {
      fail(ErrorCode::validation, "observation: matrix only applies to the custom kind");
    }
    if (o.contains("annihilate")) {
      const json& an = o.at("annihilate");
      check_keys(an, "observation.annihilate", {"mode", "perturbed"});
      long long mode = get_integer(an, "observation.annihilate", "mode", 0);
      if (mode < 1 || mode > sc.n) fail(ErrorCode::validation, "observation.annihilate.mode out of range");
      ob.annihilate_mode = static_cast<int>(mode);
      if (an.contains("perturbed")) {
        if (!an.at("perturbed").is_boolean()) {
          fail(ErrorCode::validation, "observation.annihilate.perturbed: expected a boolean");
        }
        ob.annihilate_perturbed = an.at("perturbed").get<bool>();
      }
    }
  }

  if (sc.observation.kind == "window" && sc.op.kind != "dirichlet_laplacian") {
    fail(ErrorCode::validation, "observation: window requires the dirichlet_laplacian operator");
  }

  // tolerances
  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    const std::string w = "tolerances";
    check_keys(t, w, {"gap_floor", "delta_floor", "rho_floor", "zero_floor", "sandwich", "mode_bound",
                      "verdict", "refinement"});
    auto& tl = sc.tolerances;
    tl.gap_floor = get_number(t, w, "gap_floor", tl.gap_floor);
    tl.delta_floor = get_number(t, w, "delta_floor", tl.delta_floor);
    tl.rho_floor = get_number(t, w, "rho_floor", tl.rho_floor);
    tl.zero_floor = get_number(t, w, "zero_floor", tl.zero_floor);
    tl.sandwich = get_number(t, w, "sandwich", tl.sandwich);
    tl.mode_bound = get_number(t, w, "mode_bound", tl.mode_bound);
    tl.verdict = get_number(t, w, "verdict", tl.verdict);
    tl.refinement = get_number(t, w, "refinement", tl.refinement);
    for (double v : {tl.gap_floor, tl.delta_floor, tl.rho_floor, tl.zero_floor, tl.sandwich, tl.mode_bound,
                     tl.verdict, tl.refinement}) {
      if (!(v > 0.0)) fail(ErrorCode::validation, "tolerances: every tolerance must be > 0");
    }
  }

  // analysis
  if (doc.contains("analysis")) {
    const json& a = doc.at("analysis");
    const std::string w = "analysis";
    check_keys(a, w, {"nodes", "grid", "T", "seed", "trials", "refine", "decay_slope"});
    auto& an = sc.analysis;
    an.nodes = static_cast<int>(get_integer(a, w, "nodes", an.nodes));
    an.grid = static_cast<int>(get_integer(a, w, "grid", an.grid));
    if (a.contains("T")) an.horizon = get_number(a, w, "T", 0.0);
    long long seed = get_integer(a, w, "seed", 0);
    if (seed < 0) fail(ErrorCode::validation, "analysis.seed must be non-negative");
    an.seed = static_cast<std::uint64_t>(seed);
    an.trials = static_cast<int>(get_integer(a, w, "trials", an.trials));
    if (a.contains("refine")) {
      if (!a.at("refine").is_boolean()) fail(ErrorCode::validation, "analysis.refine: expected a boolean");
      an.refine = a.at("refine").get<bool>();
    }
    an.decay_slope = get_number(a, w, "decay_slope", an.decay_slope);
    if (an.nodes < 16) fail(ErrorCode::validation, "analysis.nodes must be >= 16");
    if (an.grid < 8) fail(ErrorCode::validation, "analysis.grid must be >= 8");
    if (an.horizon && !(*an.horizon > 0.0)) fail(ErrorCode::validation, "analysis.T must be > 0");
    if (an.trials < 1) fail(ErrorCode::validation, "analysis.trials must be >= 1");
  }
  return sc;
}

}  // namespace

Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, fmt::format("cannot open '{}'", path.string()));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      std::size_t end = line.find(',', pos);
      std::string cell = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      auto b = cell.find_first_not_of(" \t");
      auto e = cell.find_last_not_of(" \t");
      if (b == std::string::npos) {
        fail(ErrorCode::parse, fmt::format("{}:{}: empty cell", path.string(), lineno));
      }
      cell = cell.substr(b, e - b + 1);
      if (cell.front() == '+') cell.erase(0, 1);
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(x)) {
        fail(ErrorCode::parse, fmt::format("{}:{}: bad number '{}'", path.string(), lineno, cell));
      }
      row.push_back(x);
      if (end == std::string::npos) break;
      pos = end + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::parse, fmt::format("{}:{}: ragged row", path.string(), lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::parse, fmt::format("{}: no data", path.string()));
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  return decode(doc, base_dir);
}

Scenario parse_scenario_text(const std::string& text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::parse, fmt::format("malformed scenario JSON: {}", e.what()));
  }
  return decode(doc, base_dir);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, fmt::format("cannot read scenario '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path.parent_path());
}

void set_scenario_number(Scenario& scenario, const std::string& dotted_path, double value) {
  static const std::set<std::string> numeric = {
      "truncation.N", "truncation.guard",
      "perturbation.c", "perturbation.s", "perturbation.rank", "perturbation.decay",
      "perturbation.length", "perturbation.seed",
      "observation.a", "observation.b", "observation.annihilate.mode",
      "tolerances.gap_floor", "tolerances.delta_floor", "tolerances.rho_floor",
      "tolerances.zero_floor", "tolerances.sandwich", "tolerances.mode_bound", "tolerances.verdict",
      "tolerances.refinement",
      "analysis.nodes", "analysis.grid", "analysis.T", "analysis.seed", "analysis.trials",
      "analysis.decay_slope"};
  if (!numeric.count(dotted_path)) {
    fail(ErrorCode::argument, fmt::format("unknown numeric parameter '{}'", dotted_path));
  }
  if (!std::isfinite(value)) fail(ErrorCode::argument, "parameter value must be finite");
  nlohmann::json doc = scenario.source;
  nlohmann::json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = dotted_path.find('.', pos);
    std::string key = dotted_path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (dot == std::string::npos) {
      if (value == std::floor(value) && std::abs(value) < 9.0e15) {
        (*node)[key] = static_cast<long long>(value);
      } else {
        (*node)[key] = value;
      }
      break;
    }
    if (!node->contains(key)) (*node)[key] = nlohmann::json::object();
    node = &(*node)[key];
    pos = dot + 1;
  }
  scenario = decode(doc, scenario.base_dir);
}

std::string scenario_digest(const Scenario& scenario) {
  const std::string text = scenario.source.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::numeric, "SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

}  // namespace obsv

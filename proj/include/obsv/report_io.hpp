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

#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "obsv/pipeline.hpp"

namespace obsv {

/// 17 significant digits, '.' separator regardless of locale; empty for NaN.
std::string format_number(double x);

/// Deterministic certificate document (no timestamps).
nlohmann::json certificate_json(const Analysis& analysis);
std::string certificate_text(const Analysis& analysis);

std::string sequences_csv(const Analysis& analysis);
std::string tail_table_csv(const Analysis& analysis);

struct WrittenReports {
  std::filesystem::path certificate, sequences, tail_table, manifest;
};

/// Writes certificate.json, sequences.csv, tail_table.csv and manifest.json.
WrittenReports write_reports(const Analysis& analysis, const std::filesystem::path& out_dir,
                             std::chrono::system_clock::time_point started);

/// Internal consistency checks that --strict turns into errors. Empty when clean.
std::vector<std::string> self_check_failures(const Analysis& analysis);

struct PlotDataResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

/// Reads report files in `dir` and writes plot_theta.csv, plot_gaps.csv,
/// plot_rho.csv and plot_tail.csv. Missing inputs are warnings, or errors
/// when `strict`; having no inputs at all is always an error.
PlotDataResult emit_plot_data(const std::filesystem::path& dir, bool strict);

}  // namespace obsv

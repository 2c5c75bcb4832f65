/*
 * Copyright 2026 The capfi authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

#include "capfi/engine.hpp"
#include "capfi/jsonio.hpp"
#include "capfi/metrics.hpp"
#include "capfi/oracle.hpp"

// Machine-readable run outputs. All reports are schema-versioned JSON written
// through the canonical emitter, so identical runs produce identical bytes;
// wall-clock information lives only in the sidecar run log, never in reports.

namespace capfi::report {

struct RunMeta {
  std::string kind;  // "baseline", "capfi" or "cross"
  uint64_t seed = 0;
  std::string dataset_path;
  std::string layout;
  ModalityDims dims;
  std::vector<std::string> metric_names;
  std::vector<oracle::OracleInfo> oracles;
  std::vector<std::pair<std::string, uint64_t>> contexts;  // notation, cardinality
};

// Baseline performance per (oracle, context).
struct BaselineCell {
  std::string model;
  std::string context;
  uint64_t cardinality = 0;
  metrics::EvalResult result;
};

jsonio::OrderedJson baseline_report(const RunMeta& meta, std::span<const BaselineCell> cells);

// Full CAPFI report.
jsonio::OrderedJson capfi_report(const RunMeta& meta, const engine::AnalysisResult& analysis);

// Flat tabular export: one row per importance record, tab-separated.
std::string capfi_tabular(std::span<const engine::ImportanceRecord> records);

// Cross-context permutation report.
struct CrossCell {
  std::string model;
  metrics::EvalResult baseline;
  metrics::EvalResult permuted;
};

struct CrossSetup {
  std::string feature;
  std::string source;
  uint64_t source_cardinality = 0;
  std::string donor;
  uint64_t donor_cardinality = 0;
  std::string eval;
  uint64_t eval_cardinality = 0;
};

jsonio::OrderedJson cross_report(const RunMeta& meta, const CrossSetup& setup,
                                 std::span<const CrossCell> cells);

// Static box-plot rendering for one context: features on the x axis, one
// quartile box per (feature, model) with median line, whiskers, and a
// baseline marker; the mean importance score is printed above each box.
std::string boxplot_svg(const std::string& context,
                        std::span<const engine::ImportanceRecord> records,
                        std::span<const std::string> model_order);

// Loads a report and verifies its schema version.
nlohmann::json load_report(const std::string& path);

// Filesystem-safe name for a context notation.
std::string sanitize_filename(const std::string& notation);

}  // namespace capfi::report

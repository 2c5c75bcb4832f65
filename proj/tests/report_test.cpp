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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "capfi/report.hpp"
#include "capfi/rng.hpp"
#include "capfi/version.hpp"

using namespace capfi;
namespace fs = std::filesystem;

TEST_CASE("canonical doubles round-trip exactly") {
  auto rng = rng::derive(20260406, "roundtrip", 0);
  for (int iter = 0; iter < 2000; ++iter) {
    double v;
    switch (iter % 4) {
      case 0: v = rng.next_range(-1.0, 1.0); break;
      case 1: v = rng.next_range(-1e12, 1e12); break;
      case 2: v = rng.next_range(0.0, 1e-9); break;
      default: v = static_cast<double>(rng.next()) * 1e-3; break;
    }
    const std::string text = jsonio::format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
  CHECK(jsonio::format_double(0.0) == "0");
  CHECK(jsonio::format_double(1.0) == "1");
}

TEST_CASE("canonical dump is deterministic and order preserving") {
  jsonio::OrderedJson doc;
  doc["zeta"] = 1;
  doc["alpha"] = {1.5, 2.5};
  doc["nested"] = {{"b", 1}, {"a", 2}};
  doc["nul"] = nullptr;
  doc["text"] = "quote \" backslash \\ tab \t";
  const auto a = jsonio::dump_canonical(doc);
  const auto b = jsonio::dump_canonical(doc);
  CHECK(a == b);
  // Insertion order survives (no alphabetical resorting).
  CHECK(a.find("zeta") < a.find("alpha"));
  CHECK(a.find("\"b\"") < a.find("\"a\""));
  // Parses back cleanly.
  const auto parsed = nlohmann::json::parse(a);
  CHECK(parsed["alpha"][1] == 2.5);
  CHECK(parsed["text"].get<std::string>() == "quote \" backslash \\ tab \t");
}

TEST_CASE("report loading enforces the schema version") {
  const auto dir = fs::temp_directory_path() / "capfi_report_test";
  fs::create_directories(dir);
  const auto good = (dir / "good.json").string();
  const auto bad = (dir / "bad.json").string();

  report::RunMeta meta;
  meta.kind = "baseline";
  meta.seed = 3;
  meta.dataset_path = "x.json";
  jsonio::write_file(good,
                     jsonio::dump_canonical(report::baseline_report(meta, {})));
  const auto doc = report::load_report(good);
  CHECK(doc["kind"] == "baseline");
  CHECK(doc["schema_version"] == kReportSchema);
  CHECK(doc["seed"] == 3);

  jsonio::write_file(bad, "{\"schema_version\": \"something-else\"}\n");
  CHECK_THROWS_AS(report::load_report(bad), ValidationError);
}

TEST_CASE("filenames are sanitized for set-algebra notations") {
  CHECK(report::sanitize_filename("S_C∪S_NC") == "S_C_S_NC");
  CHECK(report::sanitize_filename("S_C ∩ S_MB ∩ S_NZC") == "S_C_S_MB_S_NZC");
  CHECK(report::sanitize_filename("S_FW") == "S_FW");
  CHECK(report::sanitize_filename("∩∪") == "context");
}

namespace {

engine::ImportanceRecord record(const std::string& model, const std::string& feature,
                                const std::string& metric, double baseline,
                                std::vector<double> values) {
  engine::ImportanceRecord r;
  r.model = model;
  r.feature = feature;
  r.context = "S_C";
  r.metric = metric;
  r.baseline = baseline;
  r.permuted_values = std::move(values);
  r.permuted_stats = stats::box_stats(r.permuted_values);
  double sum = 0.0;
  for (double v : r.permuted_values) sum += baseline - v;
  r.pi = sum / static_cast<double>(r.permuted_values.size());
  r.repetitions = r.permuted_values.size();
  r.context_cardinality = 10;
  return r;
}

}  // namespace

TEST_CASE("box plot rendering is deterministic and carries the box geometry") {
  const std::vector<engine::ImportanceRecord> records{
      record("m1", "bbox", "acc", 0.9, {0.8, 0.82, 0.85, 0.7}),
      record("m1", "speed", "acc", 0.9, {0.88, 0.9, 0.86, 0.89}),
      record("m2", "bbox", "acc", 0.8, {0.75, 0.72, 0.7, 0.78}),
  };
  const std::vector<std::string> models{"m1", "m2"};
  const auto svg = report::boxplot_svg("S_C", records, models);
  CHECK(svg == report::boxplot_svg("S_C", records, models));
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("context S_C") != std::string::npos);
  CHECK(svg.find("<rect") != std::string::npos);   // quartile boxes
  CHECK(svg.find("<path") != std::string::npos);   // baseline triangles
  CHECK(svg.find("bbox") != std::string::npos);
  CHECK(svg.find("speed") != std::string::npos);
  // Box for an absent (model, feature) pair is simply skipped.
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("tabular export has one row per record") {
  const std::vector<engine::ImportanceRecord> records{
      record("m1", "bbox", "acc", 0.9, {0.8}),
      record("m1", "bbox", "auc", 0.95, {0.9}),
  };
  const auto tsv = report::capfi_tabular(records);
  size_t lines = 0;
  for (char c : tsv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 3);  // header + 2 records
  CHECK(tsv.rfind("model\tfeature\tcontext\tmetric", 0) == 0);
}

TEST_CASE("cross report carries signed deltas and absent aucs") {
  report::RunMeta meta;
  meta.kind = "cross";
  report::CrossSetup setup;
  setup.feature = "speed";
  setup.source = "S_C ∪ S_Dec";
  setup.donor = "S_Const";
  setup.eval = "S_C ∪ S_Dec";

  report::CrossCell cell;
  cell.model = "m";
  cell.baseline.acc = 0.9;
  cell.baseline.auc = 0.95;
  cell.baseline.f1 = 0.88;
  cell.permuted.acc = 0.8;
  cell.permuted.auc = 0.7;
  cell.permuted.f1 = 0.75;
  const std::vector<report::CrossCell> cells{cell};
  const auto doc = report::cross_report(meta, setup, cells);
  CHECK(doc["results"][0]["delta"]["auc"].get<double>() == doctest::Approx(-0.25));
  CHECK(doc["results"][0]["delta"]["f1"].get<double>() == doctest::Approx(-0.13));

  report::CrossCell absent = cell;
  absent.baseline.auc = std::nullopt;
  const std::vector<report::CrossCell> cells2{absent};
  const auto doc2 = report::cross_report(meta, setup, cells2);
  CHECK(doc2["results"][0]["delta"]["auc"].is_null());
}

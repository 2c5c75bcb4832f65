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

#include "capfi/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "capfi/version.hpp"

namespace capfi::report {

namespace {

using jsonio::OrderedJson;

OrderedJson optional_number(const std::optional<double>& v) {
  if (!v.has_value()) return nullptr;
  return *v;
}

OrderedJson meta_header(const RunMeta& meta) {
  OrderedJson doc;
  doc["schema_version"] = kReportSchema;
  doc["toolkit_version"] = kToolkitVersion;
  doc["kind"] = meta.kind;
  doc["seed"] = meta.seed;
  doc["dataset"] = meta.dataset_path;
  doc["layout"] = meta.layout;
  doc["dims"] = {{"frames", meta.dims.frames},
                 {"pose_joints", meta.dims.pose_joints},
                 {"context_dim", meta.dims.context_dim}};
  doc["metrics"] = meta.metric_names;
  auto oracles = OrderedJson::array();
  for (const auto& o : meta.oracles) {
    oracles.push_back(
        {{"name", o.name}, {"kind", o.kind}, {"version", o.version}, {"layout", o.layout}});
  }
  doc["oracles"] = std::move(oracles);
  auto contexts = OrderedJson::array();
  for (const auto& [notation, cardinality] : meta.contexts) {
    contexts.push_back({{"notation", notation}, {"cardinality", cardinality}});
  }
  doc["contexts"] = std::move(contexts);
  doc["conventions"] = {
      {"hard_label_threshold", metrics::kHardLabelThreshold},
      {"quartiles", "linear interpolation between closest ranks"},
      {"sigma", "population standard deviation"},
      {"f1_degenerate",
       "no positive labels and no positive predictions -> 1; zero precision+recall -> 0"},
      {"auc_single_class", "absent (null); excluded from importance averaging and counted"},
  };
  return doc;
}

OrderedJson eval_to_json(const metrics::EvalResult& r) {
  OrderedJson j;
  j["acc"] = r.acc;
  j["auc"] = optional_number(r.auc);
  j["f1"] = r.f1;
  j["n"] = r.n;
  j["positives"] = r.n_positive;
  return j;
}

OrderedJson box_to_json(const stats::BoxStats& s) {
  OrderedJson j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["q1"] = s.q1;
  j["q3"] = s.q3;
  j["iqr"] = s.iqr;
  j["sigma"] = s.sigma;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

std::string hex_digest(uint64_t d) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

std::string tsv_number(const std::optional<double>& v) {
  return v.has_value() ? jsonio::format_double(*v) : "absent";
}

}  // namespace

std::string sanitize_filename(const std::string& notation) {
  std::string out;
  for (unsigned char c : notation) {
    if (std::isalnum(c) || c == '_' || c == '-') {
      out += static_cast<char>(c);
    } else if (out.empty() || out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "context" : out;
}

jsonio::OrderedJson baseline_report(const RunMeta& meta, std::span<const BaselineCell> cells) {
  OrderedJson doc = meta_header(meta);
  auto rows = OrderedJson::array();
  for (const auto& c : cells) {
    OrderedJson row;
    row["model"] = c.model;
    row["context"] = c.context;
    row["cardinality"] = c.cardinality;
    row["result"] = eval_to_json(c.result);
    rows.push_back(std::move(row));
  }
  doc["results"] = std::move(rows);
  return doc;
}

jsonio::OrderedJson capfi_report(const RunMeta& meta, const engine::AnalysisResult& analysis) {
  OrderedJson doc = meta_header(meta);

  auto records = OrderedJson::array();
  for (const auto& r : analysis.records) {
    OrderedJson row;
    row["model"] = r.model;
    row["feature"] = r.feature;
    row["context"] = r.context;
    row["metric"] = r.metric;
    row["baseline"] = optional_number(r.baseline);
    row["pi"] = optional_number(r.pi);
    row["repetitions"] = r.repetitions;
    row["absent_repetitions"] = r.absent_repetitions;
    row["context_cardinality"] = r.context_cardinality;
    row["permuted_stats"] = box_to_json(r.permuted_stats);
    row["permuted_values"] = r.permuted_values;
    records.push_back(std::move(row));
  }
  doc["records"] = std::move(records);

  auto digests = OrderedJson::array();
  for (const auto& d : analysis.digests) {
    digests.push_back({{"model", d.model},
                       {"context", d.context},
                       {"feature", d.feature},
                       {"digest", hex_digest(d.digest)}});
  }
  doc["permutation_digests"] = std::move(digests);
  doc["digests_consistent"] = analysis.digests_consistent;

  auto summary = OrderedJson::array();
  for (const auto& s : analysis.summary) {
    OrderedJson row;
    row["feature"] = s.feature;
    row["context"] = s.context;
    row["metric"] = s.metric;
    row["importance"] = box_to_json(s.importance);
    summary.push_back(std::move(row));
  }
  doc["summary"] = std::move(summary);

  auto aggregates = OrderedJson::array();
  for (const auto& a : analysis.aggregates) {
    aggregates.push_back({{"feature", a.feature},
                          {"metric", a.metric},
                          {"unweighted", a.unweighted},
                          {"cardinality_weighted", a.cardinality_weighted},
                          {"contexts", a.contexts}});
  }
  doc["aggregates"] = std::move(aggregates);

  auto failures = OrderedJson::array();
  for (const auto& f : analysis.failures) {
    failures.push_back({{"model", f.model},
                        {"context", f.context},
                        {"feature", f.feature},
                        {"error", f.error}});
  }
  doc["failures"] = std::move(failures);
  doc["warnings"] = analysis.warnings;
  return doc;
}

std::string capfi_tabular(std::span<const engine::ImportanceRecord> records) {
  std::string out =
      "model\tfeature\tcontext\tmetric\tbaseline\tpi\trepetitions\tabsent\tcardinality\t"
      "mean\tmedian\tq1\tq3\tiqr\tsigma\tmin\tmax\n";
  for (const auto& r : records) {
    out += r.model + '\t' + r.feature + '\t' + r.context + '\t' + r.metric + '\t';
    out += tsv_number(r.baseline) + '\t' + tsv_number(r.pi) + '\t';
    out += std::to_string(r.repetitions) + '\t' + std::to_string(r.absent_repetitions) + '\t' +
           std::to_string(r.context_cardinality) + '\t';
    const auto& s = r.permuted_stats;
    out += jsonio::format_double(s.mean) + '\t' + jsonio::format_double(s.median) + '\t' +
           jsonio::format_double(s.q1) + '\t' + jsonio::format_double(s.q3) + '\t' +
           jsonio::format_double(s.iqr) + '\t' + jsonio::format_double(s.sigma) + '\t' +
           jsonio::format_double(s.min) + '\t' + jsonio::format_double(s.max) + '\n';
  }
  return out;
}

jsonio::OrderedJson cross_report(const RunMeta& meta, const CrossSetup& setup,
                                 std::span<const CrossCell> cells) {
  OrderedJson doc = meta_header(meta);
  doc["cross"] = {{"feature", setup.feature},
                  {"source", {{"notation", setup.source}, {"cardinality", setup.source_cardinality}}},
                  {"donor", {{"notation", setup.donor}, {"cardinality", setup.donor_cardinality}}},
                  {"eval", {{"notation", setup.eval}, {"cardinality", setup.eval_cardinality}}}};
  auto rows = OrderedJson::array();
  for (const auto& c : cells) {
    OrderedJson row;
    row["model"] = c.model;
    row["baseline"] = eval_to_json(c.baseline);
    row["permuted"] = eval_to_json(c.permuted);
    OrderedJson delta;
    delta["acc"] = c.permuted.acc - c.baseline.acc;
    if (c.baseline.auc.has_value() && c.permuted.auc.has_value()) {
      delta["auc"] = *c.permuted.auc - *c.baseline.auc;
    } else {
      delta["auc"] = nullptr;
    }
    delta["f1"] = c.permuted.f1 - c.baseline.f1;
    row["delta"] = std::move(delta);
    rows.push_back(std::move(row));
  }
  doc["results"] = std::move(rows);
  return doc;
}

// ---------------------------------------------------------------------------
// SVG box plots
// ---------------------------------------------------------------------------

namespace {

void svg_num(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  out += buf;
}

void svg_label(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  out += buf;
}

const char* kPalette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4",
                          "#8c613c", "#dc7ec0", "#797979"};

}  // namespace

std::string boxplot_svg(const std::string& context,
                        std::span<const engine::ImportanceRecord> records,
                        std::span<const std::string> model_order) {
  // Collect features present for this context, canonical order.
  std::vector<std::string> feature_order;
  for (Feature f : kAllFeatures) {
    const std::string name(to_string(f));
    for (const auto& r : records) {
      if (r.context == context && r.feature == name) {
        feature_order.push_back(name);
        break;
      }
    }
  }
  std::vector<std::string> metric_order;
  for (metrics::Metric m : metrics::kAllMetrics) {
    const std::string name(to_string(m));
    for (const auto& r : records) {
      if (r.context == context && r.metric == name) {
        metric_order.push_back(name);
        break;
      }
    }
  }

  const double box_w = 18.0, box_gap = 8.0, group_gap = 30.0;
  const double panel_h = 190.0, panel_gap = 46.0, left = 58.0, top = 34.0;
  const size_t n_models = model_order.size();
  const double group_w = n_models * box_w + (n_models - 1) * box_gap;
  const double width =
      left + feature_order.size() * (group_w + group_gap) + 40.0;
  const double height = top + metric_order.size() * (panel_h + panel_gap) + 30.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  svg_num(svg, width);
  svg += "\" height=\"";
  svg_num(svg, height);
  svg += "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  svg += "<text x=\"" ;
  svg_num(svg, left);
  svg += "\" y=\"16\" font-size=\"13\">context " + context + "</text>\n";

  for (size_t mi = 0; mi < metric_order.size(); ++mi) {
    const std::string& metric = metric_order[mi];
    const double y0 = top + mi * (panel_h + panel_gap);         // panel top
    const double y1 = y0 + panel_h;                             // panel bottom
    auto y_of = [&](double value) { return y1 - value * panel_h; };  // metric in [0,1]

    // Axis, gridlines, label.
    svg += "<text x=\"8\" y=\"";
    svg_num(svg, y0 + panel_h / 2);
    svg += "\" transform=\"rotate(-90 12 ";
    svg_num(svg, y0 + panel_h / 2);
    svg += ")\">" + metric + "</text>\n";
    for (int g = 0; g <= 4; ++g) {
      const double gv = g / 4.0;
      svg += "<line x1=\"";
      svg_num(svg, left - 4);
      svg += "\" y1=\"";
      svg_num(svg, y_of(gv));
      svg += "\" x2=\"";
      svg_num(svg, width - 30);
      svg += "\" y2=\"";
      svg_num(svg, y_of(gv));
      svg += "\" stroke=\"#dddddd\" stroke-width=\"0.6\"/>\n";
      svg += "<text x=\"";
      svg_num(svg, left - 32);
      svg += "\" y=\"";
      svg_num(svg, y_of(gv) + 3);
      svg += "\">";
      svg_label(svg, gv);
      svg += "</text>\n";
    }

    for (size_t fi = 0; fi < feature_order.size(); ++fi) {
      const std::string& feature = feature_order[fi];
      const double gx = left + fi * (group_w + group_gap);
      svg += "<text x=\"";
      svg_num(svg, gx + group_w / 2 - 12);
      svg += "\" y=\"";
      svg_num(svg, y1 + 14);
      svg += "\">" + feature + "</text>\n";

      for (size_t oi = 0; oi < n_models; ++oi) {
        const engine::ImportanceRecord* rec = nullptr;
        for (const auto& r : records) {
          if (r.context == context && r.feature == feature && r.metric == metric &&
              r.model == model_order[oi]) {
            rec = &r;
            break;
          }
        }
        if (rec == nullptr || rec->permuted_stats.n == 0) continue;
        const auto& s = rec->permuted_stats;
        const double x = gx + oi * (box_w + box_gap);
        const char* color = kPalette[oi % (sizeof(kPalette) / sizeof(kPalette[0]))];

        // Whiskers min..max, box q1..q3, median line, baseline triangle.
        svg += "<line x1=\"";
        svg_num(svg, x + box_w / 2);
        svg += "\" y1=\"";
        svg_num(svg, y_of(s.min));
        svg += "\" x2=\"";
        svg_num(svg, x + box_w / 2);
        svg += "\" y2=\"";
        svg_num(svg, y_of(s.max));
        svg += "\" stroke=\"" + std::string(color) + "\" stroke-width=\"1\"/>\n";
        svg += "<rect x=\"";
        svg_num(svg, x);
        svg += "\" y=\"";
        svg_num(svg, y_of(s.q3));
        svg += "\" width=\"";
        svg_num(svg, box_w);
        svg += "\" height=\"";
        svg_num(svg, std::max(0.8, y_of(s.q1) - y_of(s.q3)));
        svg += "\" fill=\"" + std::string(color) + "\" fill-opacity=\"0.45\" stroke=\"" +
               std::string(color) + "\"/>\n";
        svg += "<line x1=\"";
        svg_num(svg, x);
        svg += "\" y1=\"";
        svg_num(svg, y_of(s.median));
        svg += "\" x2=\"";
        svg_num(svg, x + box_w);
        svg += "\" y2=\"";
        svg_num(svg, y_of(s.median));
        svg += "\" stroke=\"#222222\" stroke-width=\"1.4\"/>\n";
        if (rec->baseline.has_value()) {
          const double by = y_of(*rec->baseline);
          svg += "<path d=\"M";
          svg_num(svg, x + box_w / 2 - 4);
          svg += " ";
          svg_num(svg, by + 6);
          svg += " L";
          svg_num(svg, x + box_w / 2 + 4);
          svg += " ";
          svg_num(svg, by + 6);
          svg += " L";
          svg_num(svg, x + box_w / 2);
          svg += " ";
          svg_num(svg, by);
          svg += " Z\" fill=\"#222222\"/>\n";
        }
        if (rec->pi.has_value()) {
          svg += "<text x=\"";
          svg_num(svg, x - 2);
          svg += "\" y=\"";
          svg_num(svg, y0 - 4 + 10);
          svg += "\" font-size=\"8\">";
          svg_label(svg, *rec->pi);
          svg += "</text>\n";
        }
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

nlohmann::json load_report(const std::string& path) {
  nlohmann::json doc = jsonio::parse_file(path);
  if (!doc.is_object() || doc.value("schema_version", "") != kReportSchema) {
    throw ValidationError(path + ": not a " + std::string(kReportSchema) + " report");
  }
  return doc;
}

}  // namespace capfi::report

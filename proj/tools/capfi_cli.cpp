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

// Command-line surface: baseline evaluation, context-aware permutation
// importance, cross-context permutation, and synthetic dataset generation.
// Exit codes: 0 success, 1 runtime failure, 2 configuration or validation
// failure. Reports carry no timestamps; wall-clock info goes to run.log.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capfi/engine.hpp"
#include "capfi/manifest.hpp"
#include "capfi/report.hpp"
#include "capfi/subsets.hpp"
#include "capfi/synth.hpp"
#include "capfi/version.hpp"

namespace fs = std::filesystem;
using namespace capfi;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    std::string item = s.substr(start, comma - start);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.erase(0, 1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.pop_back();
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

struct CommonArgs {
  std::string dataset;
  std::vector<std::string> oracle_specs;
  std::string contexts = "S_C∪S_NC";
  std::string features = "bbox,pose,local_context,speed";
  std::string metric_names = "acc,auc,f1";
  uint64_t seed = 0;
  std::string out_dir;
  std::vector<std::string> formats = {"structured"};
  uint64_t repetitions = 0;
  bool serial = false;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool with_features) {
  cmd->add_option("--dataset", args.dataset, "Manifest file to evaluate")->required();
  cmd->add_option("--oracle", args.oracle_specs,
                  "Oracle spec, repeatable: builtin:<config.json> or exec:<command>")
      ->required();
  cmd->add_option("--contexts", args.contexts,
                  "Comma list of context notations or set-algebra expressions");
  if (with_features) {
    cmd->add_option("--features", args.features, "Comma list of features to permute");
    cmd->add_option("--repetitions", args.repetitions,
                    "Shuffle repetitions per context (0 = context cardinality)");
  }
  cmd->add_option("--metrics", args.metric_names, "Comma list from acc,auc,f1");
  cmd->add_option("--seed", args.seed, "Base seed for every permutation stream")->required();
  cmd->add_option("--out", args.out_dir, "Output directory")->required();
  cmd->add_option("--format", args.formats,
                  "Output formats, repeatable: structured, tabular, plot");
  cmd->add_flag("--serial", args.serial, "Run kernels on the serial reference path");
}

struct LoadedRun {
  Manifest manifest;
  std::map<std::string, ContextSet> base_subsets;
  std::vector<ContextSet> contexts;
  std::vector<std::unique_ptr<oracle::Oracle>> oracles;
  std::vector<Feature> permute_features;
  std::vector<metrics::Metric> metric_selection;
  engine::EvalOptions options;
  std::string layout;
  std::vector<std::string> warnings;
};

LoadedRun prepare_run(const CommonArgs& args) {
  LoadedRun run;
  run.manifest = load_manifest(args.dataset, &run.warnings);
  run.base_subsets = build_subsets(run.manifest);

  for (const auto& expr : split_csv(args.contexts)) {
    run.contexts.push_back(subset_algebra(expr, run.base_subsets, run.manifest.size()));
  }
  if (run.contexts.empty()) throw ConfigError("no contexts requested");

  for (const auto& name : split_csv(args.features)) {
    run.permute_features.push_back(feature_from_string(name));
  }
  if (run.permute_features.empty()) throw ConfigError("no features requested");

  for (const auto& name : split_csv(args.metric_names)) {
    run.metric_selection.push_back(metrics::metric_from_string(name));
  }
  if (run.metric_selection.empty()) throw ConfigError("no metrics requested");

  run.options.metric_selection = run.metric_selection;
  run.options.repetitions_override = args.repetitions;
  run.options.policy = args.serial ? ExecPolicy::serial : ExecPolicy::parallel;
  run.layout = features::layout_signature(run.manifest.dims, run.options.oracle_inputs);

  if (args.oracle_specs.empty()) throw ConfigError("at least one --oracle is required");
  std::vector<uint32_t> all_ids(run.manifest.size());
  for (uint32_t i = 0; i < all_ids.size(); ++i) all_ids[i] = i;
  for (const auto& spec : args.oracle_specs) {
    if (spec.rfind("builtin:", 0) == 0) {
      oracle::TrainConfig cfg = oracle::load_train_config(spec.substr(8));
      const auto cfg_layout = features::layout_signature(run.manifest.dims, cfg.features);
      if (cfg_layout != run.layout) {
        throw ConfigError("builtin oracle '" + cfg.name + "' feature selection (" + cfg_layout +
                          ") must match the run layout (" + run.layout + ")");
      }
      run.oracles.push_back(std::make_unique<oracle::BuiltinModel>(
          oracle::train_builtin(run.manifest, all_ids, cfg, run.options.policy)));
    } else if (spec.rfind("exec:", 0) == 0) {
      run.oracles.push_back(std::make_unique<oracle::ExternalOracle>(spec.substr(5), run.layout));
    } else {
      throw ConfigError("oracle spec must start with builtin: or exec: (got '" + spec + "')");
    }
  }
  return run;
}

report::RunMeta make_meta(const std::string& kind, const CommonArgs& args, const LoadedRun& run) {
  report::RunMeta meta;
  meta.kind = kind;
  meta.seed = args.seed;
  meta.dataset_path = args.dataset;
  meta.layout = run.layout;
  meta.dims = run.manifest.dims;
  for (auto m : run.metric_selection) meta.metric_names.push_back(std::string(to_string(m)));
  for (const auto& o : run.oracles) meta.oracles.push_back(o->info());
  for (const auto& c : run.contexts) meta.contexts.push_back({c.notation, c.cardinality()});
  return meta;
}

bool wants(const CommonArgs& args, const std::string& format) {
  for (const auto& f : args.formats) {
    for (const auto& item : split_csv(f)) {
      if (item == format) return true;
    }
  }
  return false;
}

void write_run_log(const CommonArgs& args, const std::string& command,
                   const std::vector<std::string>& warnings) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::string log = std::string(stamp) + " " + command + " dataset=" + args.dataset +
                    " seed=" + std::to_string(args.seed) + " toolkit=" + kToolkitVersion + "\n";
  for (const auto& w : warnings) log += "warning: " + w + "\n";
  jsonio::write_file((fs::path(args.out_dir) / "run.log").string(), log);
}

int run_baseline(const CommonArgs& args) {
  LoadedRun run = prepare_run(args);
  fs::create_directories(args.out_dir);

  std::vector<report::BaselineCell> cells;
  const auto view = engine::identity_view(run.manifest);
  for (const auto& o : run.oracles) {
    for (const auto& context : run.contexts) {
      if (context.members.empty()) {
        throw ValidationError("context '" + context.notation + "' is empty");
      }
      report::BaselineCell cell;
      cell.model = o->info().name;
      cell.context = context.notation;
      cell.cardinality = context.cardinality();
      cell.result = metrics::evaluate(
          engine::predict_members(*o, view, context.members, run.options.oracle_inputs));
      cells.push_back(std::move(cell));
    }
  }

  const auto doc = report::baseline_report(make_meta("baseline", args, run), cells);
  jsonio::write_file((fs::path(args.out_dir) / "baseline.json").string(),
                     jsonio::dump_canonical(doc));
  if (wants(args, "tabular")) {
    std::string tsv = "model\tcontext\tcardinality\tpositives\tacc\tauc\tf1\n";
    for (const auto& c : cells) {
      tsv += c.model + '\t' + c.context + '\t' + std::to_string(c.cardinality) + '\t' +
             std::to_string(c.result.n_positive) + '\t' + jsonio::format_double(c.result.acc) +
             '\t' + (c.result.auc ? jsonio::format_double(*c.result.auc) : "absent") + '\t' +
             jsonio::format_double(c.result.f1) + '\n';
    }
    jsonio::write_file((fs::path(args.out_dir) / "baseline.tsv").string(), tsv);
  }
  write_run_log(args, "baseline", run.warnings);
  std::cout << "baseline: " << cells.size() << " (oracle, context) cells -> "
            << (fs::path(args.out_dir) / "baseline.json").string() << "\n";
  return 0;
}

int run_capfi(const CommonArgs& args) {
  LoadedRun run = prepare_run(args);
  fs::create_directories(args.out_dir);

  std::vector<const oracle::Oracle*> oracle_ptrs;
  for (const auto& o : run.oracles) oracle_ptrs.push_back(o.get());

  const auto analysis = engine::run_full_analysis(run.manifest, oracle_ptrs, run.contexts,
                                                  run.permute_features, args.seed, run.options);

  const auto doc = report::capfi_report(make_meta("capfi", args, run), analysis);
  jsonio::write_file((fs::path(args.out_dir) / "report.json").string(),
                     jsonio::dump_canonical(doc));
  if (wants(args, "tabular")) {
    jsonio::write_file((fs::path(args.out_dir) / "report.tsv").string(),
                       report::capfi_tabular(analysis.records));
  }
  if (wants(args, "plot")) {
    const fs::path plot_dir = fs::path(args.out_dir) / "plots";
    fs::create_directories(plot_dir);
    std::vector<std::string> model_order;
    for (const auto& o : run.oracles) model_order.push_back(o->info().name);
    for (const auto& context : run.contexts) {
      const std::string svg =
          report::boxplot_svg(context.notation, analysis.records, model_order);
      jsonio::write_file(
          (plot_dir / ("boxplot_" + report::sanitize_filename(context.notation) + ".svg"))
              .string(),
          svg);
    }
  }
  write_run_log(args, "capfi", run.warnings);

  std::cout << "capfi: " << analysis.records.size() << " records, " << analysis.failures.size()
            << " failed cells -> " << (fs::path(args.out_dir) / "report.json").string() << "\n";
  for (const auto& f : analysis.failures) {
    std::cerr << "cell failed: " << f.model << " x " << f.context << " x " << f.feature << ": "
              << f.error << "\n";
  }
  return 0;
}

int run_cross(const CommonArgs& args, const std::string& feature_name, const std::string& source,
              const std::string& donor, const std::string& eval_expr) {
  LoadedRun run = prepare_run(args);
  fs::create_directories(args.out_dir);

  const Feature feature = feature_from_string(feature_name);
  const auto src = subset_algebra(source, run.base_subsets, run.manifest.size());
  const auto don = subset_algebra(donor, run.base_subsets, run.manifest.size());
  const auto eva = eval_expr.empty()
                       ? src
                       : subset_algebra(eval_expr, run.base_subsets, run.manifest.size());
  if (eva.members.empty()) throw ValidationError("evaluation set '" + eva.notation + "' is empty");

  const auto cross = engine::cross_context_permute(run.manifest, feature, src, don, args.seed);
  const auto base_view = engine::identity_view(run.manifest);

  std::vector<report::CrossCell> cells;
  for (const auto& o : run.oracles) {
    report::CrossCell cell;
    cell.model = o->info().name;
    cell.baseline = metrics::evaluate(
        engine::predict_members(*o, base_view, eva.members, run.options.oracle_inputs));
    cell.permuted = metrics::evaluate(
        engine::predict_members(*o, cross.view, eva.members, run.options.oracle_inputs));
    cells.push_back(std::move(cell));
  }

  report::CrossSetup setup;
  setup.feature = feature_name;
  setup.source = src.notation;
  setup.source_cardinality = src.cardinality();
  setup.donor = don.notation;
  setup.donor_cardinality = don.cardinality();
  setup.eval = eva.notation;
  setup.eval_cardinality = eva.cardinality();

  const auto doc = report::cross_report(make_meta("cross", args, run), setup, cells);
  jsonio::write_file((fs::path(args.out_dir) / "cross.json").string(),
                     jsonio::dump_canonical(doc));
  write_run_log(args, "cross", run.warnings);
  std::cout << "cross: feature " << feature_name << ", " << src.notation << " <- " << don.notation
            << " -> " << (fs::path(args.out_dir) / "cross.json").string() << "\n";
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir, bool sidecar) {
  const auto spec = synth::load_generator_spec(spec_path);
  Manifest manifest = synth::generate(spec);
  fs::create_directories(out_dir);
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  if (sidecar) {
    save_manifest_with_sidecar(manifest, manifest_path.string(), "manifest.f32");
  } else {
    save_manifest(manifest, manifest_path.string());
  }

  // Cardinality table for the generated dataset.
  const auto subsets = build_subsets(manifest);
  struct Row {
    const char* group;
    const char* context;
    const char* notation;
  };
  const Row rows[] = {
      {"Crossing State", "Cross", "S_C"},
      {"", "Not Cross", "S_NC"},
      {"Roadway Type", "Four-Way Intersection", "S_FW"},
      {"", "Midblock Crossing", "S_MB"},
      {"", "T-Junction", "S_TJ"},
      {"Traffic-Light State", "Red", "S_Red"},
      {"", "Yellow", "S_Yellow"},
      {"", "Green", "S_Green"},
      {"Crosswalk State", "Zebra Crossing", "S_ZC"},
      {"", "Non-Zebra Crossing", "S_NZC"},
      {"Proximity Level", "Close Proximity", "S_CP"},
      {"", "Medium Proximity", "S_MP"},
      {"", "Far Proximity", "S_FP"},
      {"Ego-Vehicle Speed", "Accelerating", "S_Acc"},
      {"", "Constant", "S_Const"},
      {"", "Stopped", "S_Stopped"},
      {"", "Decelerating", "S_Dec"},
  };
  std::printf("%-20s %-22s %-10s %s\n", "Group Name", "Scenario Context", "Notation", "C");
  for (const auto& row : rows) {
    std::printf("%-20s %-22s %-10s %zu\n", row.group, row.context, row.notation,
                subsets.at(row.notation).cardinality());
  }
  std::cout << "manifest: " << manifest.size() << " samples -> " << manifest_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware permutation feature importance toolkit"};
  app.set_version_flag("--version", kToolkitVersion);
  app.require_subcommand(1);

  CommonArgs baseline_args;
  auto* baseline_cmd =
      app.add_subcommand("baseline", "Evaluate oracle metrics per context subset");
  add_common_flags(baseline_cmd, baseline_args, false);

  CommonArgs capfi_args;
  auto* capfi_cmd = app.add_subcommand(
      "capfi", "Within-context permutation feature importance with box-plot renderings");
  add_common_flags(capfi_cmd, capfi_args, true);

  CommonArgs cross_args;
  std::string cross_feature, cross_source, cross_donor, cross_eval;
  auto* cross_cmd =
      app.add_subcommand("cross", "Cross-context permutation of one feature");
  add_common_flags(cross_cmd, cross_args, false);
  cross_cmd->add_option("--feature", cross_feature, "Feature to donate across contexts")
      ->required();
  cross_cmd->add_option("--source", cross_source, "Context whose members receive donor values")
      ->required();
  cross_cmd->add_option("--donor", cross_donor, "Context donated from (with replacement)")
      ->required();
  cross_cmd->add_option("--eval", cross_eval,
                        "Context to evaluate metrics on (default: the source set)");

  std::string synth_spec, synth_out;
  bool synth_sidecar = false;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic context-tagged manifest");
  synth_cmd->add_option("spec", synth_spec, "Generator spec file")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_flag("--sidecar", synth_sidecar,
                      "Store local_context embeddings in a binary sidecar");

  try {
    app.parse(argc, argv);
    if (baseline_cmd->parsed()) return run_baseline(baseline_args);
    if (capfi_cmd->parsed()) return run_capfi(capfi_args);
    if (cross_cmd->parsed()) {
      return run_cross(cross_args, cross_feature, cross_source, cross_donor, cross_eval);
    }
    if (synth_cmd->parsed()) return run_synth(synth_spec, synth_out, synth_sidecar);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

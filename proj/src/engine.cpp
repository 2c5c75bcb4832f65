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

#include "capfi/engine.hpp"

#include <algorithm>
#include <map>

#include "capfi/rng.hpp"

namespace capfi::engine {

namespace {

std::string perm_purpose(const PermutationPlan& plan) {
  return "perm:" + plan.context.notation + ":" + std::string(to_string(plan.feature));
}

void copy_feature(Feature f, const Sample& from, Sample& to) {
  switch (f) {
    case Feature::bbox: to.bbox = from.bbox; break;
    case Feature::pose: to.pose = from.pose; break;
    case Feature::local_context: to.local_context = from.local_context; break;
    case Feature::speed: to.speed = from.speed; break;
  }
}

}  // namespace

DatasetView identity_view(const Manifest& manifest) {
  DatasetView v;
  v.manifest = &manifest;
  return v;
}

Manifest materialize(const DatasetView& view) {
  Manifest out = *view.manifest;
  for (Feature f : kAllFeatures) {
    const auto& remap = view.remap[static_cast<size_t>(f)];
    if (remap.empty()) continue;
    for (uint32_t row = 0; row < out.samples.size(); ++row) {
      if (remap[row] != row) {
        copy_feature(f, view.manifest->samples[remap[row]], out.samples[row]);
      }
    }
  }
  return out;
}

std::vector<uint32_t> sample_permutation(const PermutationPlan& plan, uint64_t j) {
  auto stream = rng::derive(plan.base_seed, perm_purpose(plan), j);
  return rng::permutation(plan.context.cardinality(), stream);
}

DatasetView apply_permutation(const DatasetView& base, Feature feature, const ContextSet& context,
                              std::span<const uint32_t> perm) {
  if (perm.size() != context.cardinality()) {
    throw ConfigError("apply_permutation: permutation size does not match context cardinality");
  }
  DatasetView out = base;
  auto& remap = out.remap[static_cast<size_t>(feature)];
  if (remap.empty()) {
    remap.resize(base.manifest->samples.size());
    for (uint32_t i = 0; i < remap.size(); ++i) remap[i] = i;
  }
  const auto& base_remap = base.remap[static_cast<size_t>(feature)];
  for (size_t p = 0; p < perm.size(); ++p) {
    const uint32_t dest = context.members[p];
    const uint32_t src = context.members[perm[p]];
    remap[dest] = base_remap.empty() ? src : base_remap[src];
  }
  return out;
}

std::vector<uint32_t> invert_permutation(std::span<const uint32_t> perm) {
  std::vector<uint32_t> inv(perm.size());
  for (uint32_t p = 0; p < perm.size(); ++p) inv[perm[p]] = p;
  return inv;
}

DatasetView permute_within_context(const Manifest& manifest, const PermutationPlan& plan,
                                   uint64_t j, bool* degenerate) {
  if (j >= plan.effective_repetitions()) {
    throw ConfigError("permute_within_context: repetition index out of range");
  }
  if (degenerate != nullptr) *degenerate = plan.context.cardinality() < 2;
  const auto perm = sample_permutation(plan, j);
  return apply_permutation(identity_view(manifest), plan.feature, plan.context, perm);
}

uint64_t permutation_stream_digest(const PermutationPlan& plan) {
  const uint64_t reps = plan.effective_repetitions();
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint64_t j = 0; j < reps; ++j) {
    for (uint32_t p : sample_permutation(plan, j)) {
      h ^= p;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

CrossPermutation cross_context_permute(const Manifest& manifest, Feature feature,
                                       const ContextSet& source, const ContextSet& donor,
                                       uint64_t seed) {
  if (donor.members.empty()) throw ValidationError("cross_context_permute: empty donor set");
  if (source.members.empty()) throw ValidationError("cross_context_permute: empty source set");
  auto stream = rng::derive(
      seed, "cross:" + std::string(to_string(feature)) + ":" + source.notation + "->" +
                donor.notation,
      0);
  CrossPermutation out;
  out.view = identity_view(manifest);
  auto& remap = out.view.remap[static_cast<size_t>(feature)];
  remap.resize(manifest.samples.size());
  for (uint32_t i = 0; i < remap.size(); ++i) remap[i] = i;
  out.donor_assignment.reserve(source.members.size());
  for (uint32_t dest : source.members) {
    const uint32_t pick = donor.members[stream.next_below(donor.members.size())];
    remap[dest] = pick;
    out.donor_assignment.push_back(pick);
  }
  return out;
}

metrics::PredictionBatch predict_members(const oracle::Oracle& oracle, const DatasetView& view,
                                         std::span<const uint32_t> members,
                                         std::span<const Feature> selection) {
  const Manifest& m = *view.manifest;
  const auto sel = features::canonical_selection(selection);
  const size_t dim = features::flatten_dim(m.dims, sel);

  oracle::FeatureMatrix X;
  X.rows = members.size();
  X.cols = dim;
  X.data.reserve(X.rows * dim);
  std::vector<double> row;
  for (uint32_t member : members) {
    row.clear();
    features::flatten_into(view.lens(member), m.dims, sel, row);
    X.data.insert(X.data.end(), row.begin(), row.end());
  }

  std::vector<double> scores(X.rows);
  oracle.predict(X, scores);
  std::vector<int> labels(members.size());
  for (size_t i = 0; i < members.size(); ++i) labels[i] = m.samples[members[i]].label;
  return metrics::make_batch(scores, labels);
}

CellOutput compute_pi(const oracle::Oracle& oracle, const Manifest& manifest,
                      const PermutationPlan& plan, const EvalOptions& options) {
  if (plan.context.members.empty()) {
    throw ValidationError("compute_pi: empty context '" + plan.context.notation + "'");
  }
  const auto expected_layout = features::layout_signature(manifest.dims, options.oracle_inputs);
  if (oracle.info().layout != expected_layout) {
    throw ConfigError("compute_pi: oracle '" + oracle.info().name + "' declares layout '" +
                      oracle.info().layout + "' but the run uses '" + expected_layout + "'");
  }

  PermutationPlan effective = plan;
  if (options.repetitions_override != 0) effective.repetitions = options.repetitions_override;
  const uint64_t reps = effective.effective_repetitions();

  CellOutput out;
  if (plan.context.cardinality() < 2) {
    out.warnings.push_back("context '" + plan.context.notation +
                           "' has cardinality < 2: permutations are the identity");
  }

  const DatasetView base = identity_view(manifest);
  const auto baseline =
      metrics::evaluate(predict_members(oracle, base, plan.context.members, options.oracle_inputs));
  bool any_defined = false;
  for (metrics::Metric metric : options.metric_selection) {
    any_defined = any_defined || baseline.get(metric).has_value();
  }
  if (!any_defined) {
    throw ValidationError("compute_pi: every selected metric is undefined on context '" +
                          plan.context.notation + "' (single-class subset?)");
  }

  std::vector<metrics::EvalResult> per_rep(reps);
  const ExecPolicy policy =
      oracle.thread_safe() ? options.policy : ExecPolicy::serial;
  parallel_for(policy, reps, [&](size_t j) {
    const auto view = apply_permutation(base, effective.feature, effective.context,
                                        sample_permutation(effective, j));
    per_rep[j] =
        metrics::evaluate(predict_members(oracle, view, plan.context.members, options.oracle_inputs));
  });

  out.perm_digest = permutation_stream_digest(effective);

  for (metrics::Metric metric : options.metric_selection) {
    ImportanceRecord rec;
    rec.model = oracle.info().name;
    rec.feature = std::string(to_string(plan.feature));
    rec.context = plan.context.notation;
    rec.metric = std::string(to_string(metric));
    rec.repetitions = reps;
    rec.context_cardinality = plan.context.cardinality();
    rec.baseline = baseline.get(metric);

    double delta_sum = 0.0;
    for (uint64_t j = 0; j < reps; ++j) {
      const auto value = per_rep[j].get(metric);
      if (!value.has_value() || !rec.baseline.has_value()) {
        ++rec.absent_repetitions;
        continue;
      }
      rec.permuted_values.push_back(*value);
      delta_sum += *rec.baseline - *value;
    }
    if (rec.baseline.has_value() && !rec.permuted_values.empty()) {
      // Mean of per-repetition deltas: exact zero when nothing changed.
      rec.pi = delta_sum / static_cast<double>(rec.permuted_values.size());
    }
    rec.permuted_stats = stats::box_stats(rec.permuted_values);
    out.records.push_back(std::move(rec));
  }

  return out;
}

std::vector<StatRow> importance_stats(std::span<const ImportanceRecord> records) {
  std::vector<StatRow> rows;
  std::map<std::tuple<std::string, std::string, std::string>, size_t> index;
  std::vector<std::vector<double>> pools;

  for (const auto& rec : records) {
    if (!rec.baseline.has_value()) continue;
    const auto key = std::make_tuple(rec.feature, rec.context, rec.metric);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({rec.feature, rec.context, rec.metric, {}});
      pools.emplace_back();
    }
    for (double v : rec.permuted_values) pools[it->second].push_back(*rec.baseline - v);
  }
  for (size_t i = 0; i < rows.size(); ++i) rows[i].importance = stats::box_stats(pools[i]);
  return rows;
}

std::vector<AggregateRow> aggregate_importance(std::span<const ImportanceRecord> records) {
  struct Acc {
    double sum = 0.0;
    double weighted_sum = 0.0;
    double weight = 0.0;
    uint64_t n = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& rec : records) {
    if (!rec.pi.has_value()) continue;
    auto& a = acc[{rec.feature, rec.metric}];
    a.sum += *rec.pi;
    a.weighted_sum += *rec.pi * static_cast<double>(rec.context_cardinality);
    a.weight += static_cast<double>(rec.context_cardinality);
    a.n += 1;
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, a] : acc) {
    AggregateRow r;
    r.feature = key.first;
    r.metric = key.second;
    r.unweighted = a.sum / static_cast<double>(a.n);
    r.cardinality_weighted = a.weight > 0.0 ? a.weighted_sum / a.weight : 0.0;
    r.contexts = a.n;
    rows.push_back(std::move(r));
  }
  return rows;
}

AnalysisResult run_full_analysis(const Manifest& manifest,
                                 std::span<const oracle::Oracle* const> oracles,
                                 std::span<const ContextSet> contexts,
                                 std::span<const Feature> features, uint64_t seed,
                                 const EvalOptions& options) {
  AnalysisResult result;
  for (const ContextSet& context : contexts) {
    for (Feature feature : features) {
      for (const oracle::Oracle* oracle : oracles) {
        PermutationPlan plan;
        plan.feature = feature;
        plan.context = context;
        plan.base_seed = seed;
        plan.repetitions = options.repetitions_override;
        try {
          CellOutput cell = compute_pi(*oracle, manifest, plan, options);
          result.digests.push_back(
              {oracle->info().name, context.notation, std::string(to_string(feature)),
               cell.perm_digest});
          for (auto& rec : cell.records) result.records.push_back(std::move(rec));
          for (auto& w : cell.warnings) {
            if (std::find(result.warnings.begin(), result.warnings.end(), w) ==
                result.warnings.end()) {
              result.warnings.push_back(w);
            }
          }
        } catch (const std::exception& e) {
          result.failures.push_back({oracle->info().name, context.notation,
                                     std::string(to_string(feature)), e.what()});
        }
      }
    }
  }

  // The stream is oracle-independent by construction; verify it anyway.
  std::map<std::pair<std::string, std::string>, uint64_t> first_seen;
  for (const auto& d : result.digests) {
    auto [it, inserted] = first_seen.try_emplace({d.context, d.feature}, d.digest);
    if (!inserted && it->second != d.digest) result.digests_consistent = false;
  }

  result.summary = importance_stats(result.records);
  result.aggregates = aggregate_importance(result.records);
  return result;
}

}  // namespace capfi::engine

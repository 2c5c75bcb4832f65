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

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capfi/features.hpp"
#include "capfi/metrics.hpp"
#include "capfi/oracle.hpp"
#include "capfi/stats.hpp"
#include "capfi/types.hpp"

// Context-aware permutation feature importance. A feature's whole per-sample
// sequence (all T frames) moves as one block; shuffles happen only among the
// members of one context subset, labels stay fixed, and the permutation
// stream depends on (seed, context, feature, repetition) alone — never on the
// oracle — so every model sees identical shuffles.

namespace capfi::engine {

// ---------------------------------------------------------------------------
// Permuted dataset views
// ---------------------------------------------------------------------------

// A lightweight reindexing over an immutable manifest: row i reads feature f
// from samples[remap[f][i]]. The manifest is never mutated.
struct DatasetView {
  const Manifest* manifest = nullptr;
  std::array<std::vector<uint32_t>, kNumFeatures> remap;  // empty = identity

  uint32_t source_row(Feature f, uint32_t row) const {
    const auto& r = remap[static_cast<size_t>(f)];
    return r.empty() ? row : r[row];
  }

  features::SampleLens lens(uint32_t row) const {
    const auto& samples = manifest->samples;
    return {&samples[source_row(Feature::bbox, row)],
            &samples[source_row(Feature::pose, row)],
            &samples[source_row(Feature::local_context, row)],
            &samples[source_row(Feature::speed, row)]};
  }
};

DatasetView identity_view(const Manifest& manifest);

// Copies the manifest with every feature sequence resolved through the view.
Manifest materialize(const DatasetView& view);

// ---------------------------------------------------------------------------
// Within-context permutation
// ---------------------------------------------------------------------------

struct PermutationPlan {
  Feature feature = Feature::bbox;
  ContextSet context;
  uint64_t repetitions = 0;  // 0 means N = C, the context cardinality
  uint64_t base_seed = 0;

  uint64_t effective_repetitions() const {
    return repetitions != 0 ? repetitions : context.cardinality();
  }
};

// Uniform permutation (without replacement) of the context members for
// repetition j; entry p is the member position whose sequence lands on
// position p. Depends only on (base_seed, context notation, feature, j).
std::vector<uint32_t> sample_permutation(const PermutationPlan& plan, uint64_t j);

// Reassigns the planned feature among context members according to perm,
// composing with `base`. All other features, labels, and out-of-context rows
// are untouched.
DatasetView apply_permutation(const DatasetView& base, Feature feature, const ContextSet& context,
                              std::span<const uint32_t> perm);

std::vector<uint32_t> invert_permutation(std::span<const uint32_t> perm);

// View for repetition j of the plan. Contexts with fewer than 2 members can
// only produce the identity; *degenerate is set when given.
DatasetView permute_within_context(const Manifest& manifest, const PermutationPlan& plan,
                                   uint64_t j, bool* degenerate = nullptr);

// Order-sensitive digest of the full permutation index stream (repetitions
// 0..N-1); equal digests across oracles certify identical shuffles.
uint64_t permutation_stream_digest(const PermutationPlan& plan);

// ---------------------------------------------------------------------------
// Cross-context permutation
// ---------------------------------------------------------------------------

// Each source member's feature sequence is replaced by that of a donor member
// drawn uniformly with replacement; donors are unmodified. Overlapping
// samples are eligible donors and are replaced like any source member.
struct CrossPermutation {
  DatasetView view;
  std::vector<uint32_t> donor_assignment;  // per source member, chosen donor row
};

CrossPermutation cross_context_permute(const Manifest& manifest, Feature feature,
                                       const ContextSet& source, const ContextSet& donor,
                                       uint64_t seed);

// ---------------------------------------------------------------------------
// Permutation importance (deltas averaged over repetitions)
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::vector<metrics::Metric> metric_selection{metrics::kAllMetrics.begin(),
                                                metrics::kAllMetrics.end()};
  std::vector<Feature> oracle_inputs{kAllFeatures.begin(), kAllFeatures.end()};
  uint64_t repetitions_override = 0;  // 0 keeps N = C
  ExecPolicy policy = ExecPolicy::parallel;
};

struct ImportanceRecord {
  std::string model;
  std::string feature;
  std::string context;
  std::string metric;
  std::optional<double> baseline;
  std::optional<double> pi;  // mean over present repetitions of (baseline - permuted_j)
  std::vector<double> permuted_values;
  stats::BoxStats permuted_stats;
  uint64_t repetitions = 0;
  uint64_t absent_repetitions = 0;
  uint64_t context_cardinality = 0;
};

struct CellOutput {
  std::vector<ImportanceRecord> records;  // one per selected metric
  uint64_t perm_digest = 0;
  std::vector<std::string> warnings;
};

// Baseline once on the unpermuted context, then one evaluation per
// repetition. Repetitions run in parallel for thread-safe oracles; results
// land in per-repetition slots so the schedule never affects output.
CellOutput compute_pi(const oracle::Oracle& oracle, const Manifest& manifest,
                      const PermutationPlan& plan, const EvalOptions& options);

// Scores of the view's rows restricted to `members`, flattened per selection.
metrics::PredictionBatch predict_members(const oracle::Oracle& oracle, const DatasetView& view,
                                         std::span<const uint32_t> members,
                                         std::span<const Feature> selection);

// ---------------------------------------------------------------------------
// Distribution statistics and the full run
// ---------------------------------------------------------------------------

struct StatRow {
  std::string feature;
  std::string context;
  std::string metric;
  stats::BoxStats importance;  // pooled per-repetition deltas across models
};

std::vector<StatRow> importance_stats(std::span<const ImportanceRecord> records);

// Mean PI per (feature, metric) across contexts, both unweighted and weighted
// by context cardinality (contexts vary widely in size; both views are
// reported and labeled).
struct AggregateRow {
  std::string feature;
  std::string metric;
  double unweighted = 0.0;
  double cardinality_weighted = 0.0;
  uint64_t contexts = 0;
};

std::vector<AggregateRow> aggregate_importance(std::span<const ImportanceRecord> records);

struct CellFailure {
  std::string model;
  std::string context;
  std::string feature;
  std::string error;
};

struct PermDigestRecord {
  std::string model;
  std::string context;
  std::string feature;
  uint64_t digest = 0;
};

struct AnalysisResult {
  std::vector<ImportanceRecord> records;
  std::vector<PermDigestRecord> digests;
  std::vector<StatRow> summary;
  std::vector<AggregateRow> aggregates;
  std::vector<CellFailure> failures;  // per-cell errors; the run continues
  std::vector<std::string> warnings;
  bool digests_consistent = true;  // equal across models per (context, feature)
};

// Every (oracle x context x feature x metric) cell. Per-cell failures are
// collected, not fatal.
AnalysisResult run_full_analysis(const Manifest& manifest,
                                 std::span<const oracle::Oracle* const> oracles,
                                 std::span<const ContextSet> contexts,
                                 std::span<const Feature> features, uint64_t seed,
                                 const EvalOptions& options);

}  // namespace capfi::engine

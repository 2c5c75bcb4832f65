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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capfi/errors.hpp"

namespace capfi::metrics {

// Hard labels come from a fixed probability threshold.
inline constexpr double kHardLabelThreshold = 0.5;

enum class Metric { acc, auc, f1 };
std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);
inline constexpr std::array<Metric, 3> kAllMetrics = {Metric::acc, Metric::auc, Metric::f1};

// Scores in [0,1] paired with binary labels; order carries sample identity.
struct PredictionBatch {
  std::vector<double> scores;
  std::vector<int> labels;

  size_t size() const { return scores.size(); }
  int hard_label(size_t i) const { return scores[i] >= kHardLabelThreshold ? 1 : 0; }
};

PredictionBatch make_batch(std::span<const double> scores, std::span<const int> labels);

// (TP+TN)/n. Throws on an empty batch.
double accuracy(const PredictionBatch& batch);

// Mann-Whitney pairwise concordance via rank sums; ties count one half.
// Returns nullopt when the batch holds a single class (the metric is
// undefined there, never silently 0 or 0.5). Throws on an empty batch.
std::optional<double> auc_roc(const PredictionBatch& batch);

// Harmonic mean of precision and recall. Degenerate conventions: with no
// positive labels and no positive predictions F1 = 1 (trivially all correct);
// otherwise if precision+recall = 0, F1 = 0.
double f1(const PredictionBatch& batch);

// All three metrics plus sample count and class balance.
struct EvalResult {
  double acc = 0.0;
  std::optional<double> auc;  // absent on single-class batches
  double f1 = 0.0;
  size_t n = 0;
  size_t n_positive = 0;

  std::optional<double> get(Metric m) const {
    switch (m) {
      case Metric::acc: return acc;
      case Metric::auc: return auc;
      case Metric::f1: return f1;
    }
    return std::nullopt;
  }
};

EvalResult evaluate(const PredictionBatch& batch);

}  // namespace capfi::metrics

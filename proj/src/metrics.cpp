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

#include "capfi/metrics.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace capfi::metrics {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::acc: return "acc";
    case Metric::auc: return "auc";
    case Metric::f1: return "f1";
  }
  return "acc";
}

Metric metric_from_string(std::string_view s) {
  if (s == "acc") return Metric::acc;
  if (s == "auc") return Metric::auc;
  if (s == "f1") return Metric::f1;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected acc, auc or f1)");
}

PredictionBatch make_batch(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("prediction batch: score/label count mismatch");
  }
  PredictionBatch b;
  b.scores.assign(scores.begin(), scores.end());
  b.labels.assign(labels.begin(), labels.end());
  for (size_t i = 0; i < b.size(); ++i) {
    if (!(b.scores[i] >= 0.0 && b.scores[i] <= 1.0)) {
      throw ValidationError("prediction batch: score out of [0,1] at index " + std::to_string(i));
    }
    if (b.labels[i] != 0 && b.labels[i] != 1) {
      throw ValidationError("prediction batch: non-binary label at index " + std::to_string(i));
    }
  }
  return b;
}

namespace {
struct ConfusionCounts {
  double tp = 0, tn = 0, fp = 0, fn = 0;
};

ConfusionCounts confusion(const PredictionBatch& b) {
  ConfusionCounts c;
  for (size_t i = 0; i < b.size(); ++i) {
    const int pred = b.hard_label(i);
    if (b.labels[i] == 1) {
      (pred == 1 ? c.tp : c.fn) += 1;
    } else {
      (pred == 1 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}
}  // namespace

double accuracy(const PredictionBatch& batch) {
  if (batch.size() == 0) throw ValidationError("accuracy: empty batch");
  const auto c = confusion(batch);
  return (c.tp + c.tn) / static_cast<double>(batch.size());
}

std::optional<double> auc_roc(const PredictionBatch& batch) {
  const size_t n = batch.size();
  if (n == 0) throw ValidationError("auc: empty batch");

  size_t n_pos = 0;
  for (int y : batch.labels) n_pos += static_cast<size_t>(y);
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return batch.scores[a] < batch.scores[b];
  });

  // Midranks over tie groups; equal scores share the average 1-based rank,
  // which makes each tied positive/negative pair contribute exactly 1/2.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && batch.scores[order[j + 1]] == batch.scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) {
      if (batch.labels[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j + 1;
  }

  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

double f1(const PredictionBatch& batch) {
  if (batch.size() == 0) throw ValidationError("f1: empty batch");
  const auto c = confusion(batch);
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) return 1.0;  // no positives anywhere
  const double denom = 2.0 * c.tp + c.fp + c.fn;
  if (denom == 0.0) return 0.0;
  return 2.0 * c.tp / denom;
}

EvalResult evaluate(const PredictionBatch& batch) {
  EvalResult r;
  r.n = batch.size();
  for (int y : batch.labels) r.n_positive += static_cast<size_t>(y);
  r.acc = accuracy(batch);
  r.auc = auc_roc(batch);
  r.f1 = f1(batch);
  return r;
}

}  // namespace capfi::metrics

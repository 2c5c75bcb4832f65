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

#include <algorithm>
#include <cmath>

#include "capfi/features.hpp"
#include "capfi/jsonio.hpp"
#include "capfi/oracle.hpp"
#include "capfi/version.hpp"

namespace capfi::oracle {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(-signed_margin)) without overflow.
double logistic_term(double signed_margin) {
  if (signed_margin > 0.0) return std::log1p(std::exp(-signed_margin));
  return -signed_margin + std::log1p(std::exp(signed_margin));
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  TrainConfig cfg;
  cfg.name = doc.value("name", cfg.name);
  cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.l2 = doc.value("l2", cfg.l2);
  cfg.seed = doc.value("seed", cfg.seed);
  if (doc.contains("features")) {
    cfg.features.clear();
    for (const auto& f : doc["features"]) {
      cfg.features.push_back(feature_from_string(f.get<std::string>()));
    }
  }
  if (cfg.epochs < 0) throw ConfigError("train config: epochs must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be > 0");
  if (cfg.l2 < 0.0) throw ConfigError("train config: l2 must be >= 0");
  if (cfg.features.empty()) throw ConfigError("train config: empty feature selection");
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  return train_config_from_json(jsonio::parse_file(path));
}

BuiltinModel::BuiltinModel(std::vector<double> weights_and_bias, OracleInfo info)
    : coef_(std::move(weights_and_bias)), info_(std::move(info)) {
  if (coef_.size() < 2) throw ConfigError("builtin model: weight vector too short");
  for (double w : coef_) {
    if (!std::isfinite(w)) throw ConfigError("builtin model: non-finite weight");
  }
}

void BuiltinModel::predict(const FeatureMatrix& rows, std::span<double> out_scores) const {
  if (rows.cols != feature_dim()) {
    throw ConfigError("builtin model: feature dim mismatch (model " +
                      std::to_string(feature_dim()) + ", rows " + std::to_string(rows.cols) + ")");
  }
  if (out_scores.size() != rows.rows) {
    throw ConfigError("builtin model: output span size mismatch");
  }
  const size_t dim = feature_dim();
  const double bias = coef_[dim];
  for (size_t i = 0; i < rows.rows; ++i) {
    const double* r = rows.row(i);
    double m = bias;
    for (size_t j = 0; j < dim; ++j) m += coef_[j] * r[j];
    out_scores[i] = sigmoid(m);
  }
}

void BuiltinModel::dump_weights(const std::string& path) const {
  std::string text = info_.layout + "\n";
  for (double w : coef_) {
    text += jsonio::format_double(w);
    text += '\n';
  }
  jsonio::write_file(path, text);
}

double logistic_loss(std::span<const double> coef, const FeatureMatrix& X,
                     std::span<const int> labels, double l2, ExecPolicy policy) {
  const size_t n = X.rows;
  const size_t dim = coef.size() - 1;
  const double bias = coef[dim];
  std::vector<double> terms(n);
  parallel_for(policy, n, [&](size_t i) {
    const double* r = X.row(i);
    double m = bias;
    for (size_t j = 0; j < dim; ++j) m += coef[j] * r[j];
    const double sign = labels[i] == 1 ? 1.0 : -1.0;
    terms[i] = logistic_term(sign * m);
  });
  double loss = 0.0;
  for (double t : terms) loss += t;  // fixed order
  loss /= static_cast<double>(n);
  double penalty = 0.0;
  for (size_t j = 0; j < dim; ++j) penalty += coef[j] * coef[j];
  return loss + 0.5 * l2 * penalty;
}

void logistic_gradient(std::span<const double> coef, const FeatureMatrix& X,
                       std::span<const int> labels, double l2, std::span<double> out_grad,
                       ExecPolicy policy) {
  const size_t n = X.rows;
  const size_t dim = coef.size() - 1;
  const double bias = coef[dim];
  std::vector<double> residual(n);
  parallel_for(policy, n, [&](size_t i) {
    const double* r = X.row(i);
    double m = bias;
    for (size_t j = 0; j < dim; ++j) m += coef[j] * r[j];
    residual[i] = sigmoid(m) - static_cast<double>(labels[i]);
  });
  // Row blocks of fixed size, each accumulated in row order, then reduced in
  // block order: row-major access, and bitwise identical results for any
  // thread count or policy.
  constexpr size_t kBlock = 256;
  const size_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(n_blocks * (dim + 1), 0.0);
  parallel_for(policy, n_blocks, [&](size_t b) {
    double* acc = partial.data() + b * (dim + 1);
    const size_t end = std::min(n, (b + 1) * kBlock);
    for (size_t i = b * kBlock; i < end; ++i) {
      const double r = residual[i];
      const double* row = X.row(i);
      for (size_t j = 0; j < dim; ++j) acc[j] += r * row[j];
      acc[dim] += r;
    }
  });
  std::fill(out_grad.begin(), out_grad.end(), 0.0);
  for (size_t b = 0; b < n_blocks; ++b) {
    const double* acc = partial.data() + b * (dim + 1);
    for (size_t j = 0; j <= dim; ++j) out_grad[j] += acc[j];
  }
  for (size_t j = 0; j < dim; ++j) {
    out_grad[j] = out_grad[j] / static_cast<double>(n) + l2 * coef[j];
  }
  out_grad[dim] /= static_cast<double>(n);
}

double gradient_check(std::span<const double> coef, const FeatureMatrix& X,
                      std::span<const int> labels, double l2, double step) {
  std::vector<double> analytic(coef.size());
  logistic_gradient(coef, X, labels, l2, analytic);
  std::vector<double> probe(coef.begin(), coef.end());
  double worst = 0.0;
  for (size_t j = 0; j < probe.size(); ++j) {
    const double keep = probe[j];
    probe[j] = keep + step;
    const double up = logistic_loss(probe, X, labels, l2);
    probe[j] = keep - step;
    const double down = logistic_loss(probe, X, labels, l2);
    probe[j] = keep;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[j] - numeric) / denom);
  }
  return worst;
}

BuiltinModel train_builtin(const Manifest& manifest, std::span<const uint32_t> ids,
                           const TrainConfig& config, ExecPolicy policy) {
  const auto selection = features::canonical_selection(config.features);
  const size_t dim = features::flatten_dim(manifest.dims, selection);
  const size_t n = ids.size();

  size_t n_pos = 0;
  for (uint32_t id : ids) n_pos += static_cast<size_t>(manifest.samples[id].label);
  if (n_pos < 2 || n - n_pos < 2) {
    throw ValidationError("train_builtin: need at least 2 samples per class, got " +
                          std::to_string(n_pos) + " positive of " + std::to_string(n));
  }

  FeatureMatrix X;
  X.rows = n;
  X.cols = dim;
  X.data.resize(n * dim);
  std::vector<int> y(n);
  parallel_for(policy, n, [&](size_t i) {
    const Sample& s = manifest.samples[ids[i]];
    std::vector<double> row;
    row.reserve(dim);
    features::SampleLens lens{&s, &s, &s, &s};
    features::flatten_into(lens, manifest.dims, selection, row);
    std::copy(row.begin(), row.end(), X.row(i));
    y[i] = s.label;
  });

  // Column standardization; constant columns become zeros and stay inert.
  std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < dim; ++j) mu[j] += X.data[i * dim + j];
  }
  for (size_t j = 0; j < dim; ++j) mu[j] /= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < dim; ++j) {
      const double d = X.data[i * dim + j] - mu[j];
      sd[j] += d * d;
    }
  }
  for (size_t j = 0; j < dim; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    if (sd[j] < 1e-12) sd[j] = 1.0;
  }
  parallel_for(policy, n, [&](size_t i) {
    for (size_t j = 0; j < dim; ++j) {
      X.data[i * dim + j] = (X.data[i * dim + j] - mu[j]) / sd[j];
    }
  });

  std::vector<double> coef(dim + 1, 0.0);
  std::vector<double> grad(dim + 1, 0.0);
  std::vector<double> trial(dim + 1, 0.0);
  double loss = logistic_loss(coef, X, y, config.l2, policy);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    logistic_gradient(coef, X, y, config.l2, grad, policy);
    double gnorm2 = 0.0;
    for (double g : grad) gnorm2 += g * g;
    if (gnorm2 < 1e-20) break;

    double step = config.learning_rate;
    bool accepted = false;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      for (size_t j = 0; j <= dim; ++j) trial[j] = coef[j] - step * grad[j];
      const double trial_loss = logistic_loss(trial, X, y, config.l2, policy);
      if (std::isfinite(trial_loss) && trial_loss <= loss - 1e-4 * step * gnorm2) {
        coef.swap(trial);
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow: converged
    if (!std::isfinite(loss)) {
      throw ValidationError("train_builtin: loss diverged to a non-finite value");
    }
  }

  // Fold standardization back into raw-space weights.
  std::vector<double> raw(dim + 1, 0.0);
  double bias = coef[dim];
  for (size_t j = 0; j < dim; ++j) {
    raw[j] = coef[j] / sd[j];
    bias -= coef[j] * mu[j] / sd[j];
  }
  raw[dim] = bias;

  OracleInfo info;
  info.name = config.name;
  info.kind = "builtin";
  info.version = kToolkitVersion;
  info.layout = features::layout_signature(manifest.dims, selection);
  return BuiltinModel(std::move(raw), std::move(info));
}

}  // namespace capfi::oracle

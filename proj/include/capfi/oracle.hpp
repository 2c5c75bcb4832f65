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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "capfi/parallel.hpp"
#include "capfi/types.hpp"

namespace capfi::oracle {

// Row-major matrix of flattened feature vectors.
struct FeatureMatrix {
  std::vector<double> data;
  size_t rows = 0;
  size_t cols = 0;

  const double* row(size_t i) const { return data.data() + i * cols; }
  double* row(size_t i) { return data.data() + i * cols; }
};

struct OracleInfo {
  std::string name;
  std::string kind;     // "builtin" or "external"
  std::string version;
  std::string layout;   // flatten layout signature the oracle expects
};

// A black-box crossing-probability predictor over flattened feature vectors.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual const OracleInfo& info() const = 0;

  // Scores in [0,1], one per row, in row order. Pure with respect to
  // (oracle state, features).
  virtual void predict(const FeatureMatrix& rows, std::span<double> out_scores) const = 0;

  // Whether predict() may be called from several threads at once.
  virtual bool thread_safe() const = 0;
};

// ---------------------------------------------------------------------------
// Builtin surrogate: L2-regularized logistic regression
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::string name = "builtin-lr";
  double learning_rate = 1.0;  // initial step; per-epoch backtracking halves it
  int epochs = 300;
  double l2 = 1e-3;
  uint64_t seed = 0;           // reserved for stochastic variants; unused by full-batch GD
  std::vector<Feature> features = {Feature::bbox, Feature::pose, Feature::local_context,
                                   Feature::speed};
};

TrainConfig train_config_from_json(const nlohmann::json& doc);
TrainConfig load_train_config(const std::string& path);

class BuiltinModel final : public Oracle {
 public:
  BuiltinModel(std::vector<double> weights_and_bias, OracleInfo info);

  const OracleInfo& info() const override { return info_; }
  void predict(const FeatureMatrix& rows, std::span<double> out_scores) const override;
  bool thread_safe() const override { return true; }

  // Feature weights followed by the bias term.
  const std::vector<double>& weights() const { return coef_; }
  size_t feature_dim() const { return coef_.size() - 1; }

  void dump_weights(const std::string& path) const;

 private:
  std::vector<double> coef_;
  OracleInfo info_;
};

// Full-batch gradient descent on the logistic loss with per-epoch backtracking
// (loss never increases). Deterministic for fixed inputs regardless of the
// execution policy. Training standardizes columns internally and folds the
// affine transform back into the returned weights.
BuiltinModel train_builtin(const Manifest& manifest, std::span<const uint32_t> ids,
                           const TrainConfig& config, ExecPolicy policy = ExecPolicy::parallel);

// Mean logistic loss plus (l2/2)*|w|^2 (bias excluded from the penalty).
double logistic_loss(std::span<const double> weights_and_bias, const FeatureMatrix& X,
                     std::span<const int> labels, double l2,
                     ExecPolicy policy = ExecPolicy::serial);
void logistic_gradient(std::span<const double> weights_and_bias, const FeatureMatrix& X,
                       std::span<const int> labels, double l2, std::span<double> out_grad,
                       ExecPolicy policy = ExecPolicy::serial);

// Max relative error between the analytic gradient and central finite
// differences with the given step.
double gradient_check(std::span<const double> weights_and_bias, const FeatureMatrix& X,
                      std::span<const int> labels, double l2, double step = 1e-4);

// ---------------------------------------------------------------------------
// External oracle: child process speaking newline-delimited JSON
// ---------------------------------------------------------------------------

// Wire protocol (capfi-oracle-v1), UTF-8, one JSON object per line:
//   child -> parent on start:
//     {"type":"handshake","protocol":"capfi-oracle-v1","name":...,"version":...,"layout":...}
//   parent -> child per sample:
//     {"type":"request","id":N,"features":[...]}
//   child -> parent:
//     {"type":"response","id":N,"score":S}
// Unknown fields are ignored. A malformed line aborts the run with the
// offending line quoted. Responses must arrive in request order; a count or
// id mismatch is a protocol error, never silent truncation.
class ExternalOracle final : public Oracle {
 public:
  // Spawns `command` via /bin/sh -c; reads and checks the handshake against
  // the expected layout signature.
  ExternalOracle(const std::string& command, const std::string& expected_layout);
  ~ExternalOracle() override;

  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  const OracleInfo& info() const override { return info_; }
  void predict(const FeatureMatrix& rows, std::span<double> out_scores) const override;
  bool thread_safe() const override { return false; }  // strictly sequential stream

 private:
  std::string read_line() const;
  void send_line(const std::string& line) const;

  OracleInfo info_;
  std::string command_;
  int pid_ = -1;
  mutable int to_child_ = -1;
  mutable int from_child_ = -1;
  mutable std::string read_buffer_;
  mutable uint64_t next_id_ = 0;
};

}  // namespace capfi::oracle

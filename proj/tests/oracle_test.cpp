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

#include <cmath>

#include "capfi/features.hpp"
#include "capfi/jsonio.hpp"
#include "capfi/oracle.hpp"
#include "capfi/rng.hpp"
#include "capfi/synth.hpp"

using namespace capfi;
using namespace capfi::oracle;

namespace {

// Two interleaved clusters, linearly separable along the speed axis.
Manifest separable_manifest(size_t n) {
  synth::GeneratorSpec spec;
  spec.n_samples = n;
  spec.seed = 7;
  spec.dims = {4, 2, 2};
  spec.dependency = {{"speed", 1.0}};
  spec.noise = 0.0;
  return synth::generate(spec);
}

std::vector<uint32_t> all_ids(const Manifest& m) {
  std::vector<uint32_t> ids(m.size());
  for (uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return ids;
}

FeatureMatrix random_matrix(size_t rows, size_t cols, uint64_t seed) {
  auto rng = rng::derive(seed, "matrix", 0);
  FeatureMatrix X;
  X.rows = rows;
  X.cols = cols;
  X.data.resize(rows * cols);
  for (auto& v : X.data) v = rng.next_range(-2.0, 2.0);
  return X;
}

}  // namespace

TEST_CASE("training separates a separable set within 500 epochs") {
  const auto m = separable_manifest(200);
  TrainConfig cfg;
  cfg.epochs = 500;
  const auto model = train_builtin(m, all_ids(m), cfg);

  FeatureMatrix X;
  X.rows = m.size();
  X.cols = model.feature_dim();
  for (const auto& s : m.samples) {
    const auto row = features::flatten(s, m.dims, cfg.features);
    X.data.insert(X.data.end(), row.begin(), row.end());
  }
  std::vector<double> scores(X.rows);
  model.predict(X, scores);
  size_t correct = 0;
  for (size_t i = 0; i < m.size(); ++i) {
    correct += ((scores[i] >= 0.5) ? 1 : 0) == m.samples[i].label ? 1 : 0;
  }
  CHECK(correct == m.size());
}

TEST_CASE("zero epochs leave zero weights and 0.5 scores") {
  const auto m = separable_manifest(40);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto model = train_builtin(m, all_ids(m), cfg);
  for (double w : model.weights()) CHECK(w == 0.0);

  auto X = random_matrix(5, model.feature_dim(), 3);
  std::vector<double> scores(5);
  model.predict(X, scores);
  for (double s : scores) CHECK(s == 0.5);
}

TEST_CASE("training is bitwise deterministic") {
  const auto m = separable_manifest(120);
  TrainConfig cfg;
  cfg.epochs = 120;
  const auto a = train_builtin(m, all_ids(m), cfg, ExecPolicy::parallel);
  const auto b = train_builtin(m, all_ids(m), cfg, ExecPolicy::parallel);
  const auto c = train_builtin(m, all_ids(m), cfg, ExecPolicy::serial);
  CHECK(a.weights() == b.weights());
  CHECK(a.weights() == c.weights());  // schedule independent
}

TEST_CASE("single-class training sets are rejected") {
  auto m = separable_manifest(30);
  for (auto& s : m.samples) s.label = 1;
  CHECK_THROWS_AS(train_builtin(m, all_ids(m), TrainConfig{}), ValidationError);
}

TEST_CASE("training loss is non-increasing across epochs") {
  const auto m = separable_manifest(100);
  TrainConfig cfg;
  cfg.features = {Feature::speed, Feature::bbox};

  // Rebuild the training matrix the same way training does, then check the
  // sequence of losses implied by progressively longer runs.
  double previous = std::numeric_limits<double>::infinity();
  for (int epochs : {0, 5, 20, 80, 200}) {
    cfg.epochs = epochs;
    const auto model = train_builtin(m, all_ids(m), cfg);
    FeatureMatrix X;
    X.rows = m.size();
    X.cols = model.feature_dim();
    std::vector<int> y;
    for (const auto& s : m.samples) {
      const auto row = features::flatten(s, m.dims, cfg.features);
      X.data.insert(X.data.end(), row.begin(), row.end());
      y.push_back(s.label);
    }
    const double loss = logistic_loss(model.weights(), X, y, 0.0);
    CHECK(loss <= previous + 1e-9);
    previous = loss;
  }
}

TEST_CASE("prediction is a pure function of weights and features") {
  const auto m = separable_manifest(60);
  TrainConfig cfg;
  cfg.epochs = 50;
  const auto model = train_builtin(m, all_ids(m), cfg);

  auto X = random_matrix(8, model.feature_dim(), 11);
  // Duplicate row 3 into row 7.
  for (size_t j = 0; j < X.cols; ++j) X.data[7 * X.cols + j] = X.data[3 * X.cols + j];
  std::vector<double> s1(8), s2(8);
  model.predict(X, s1);
  model.predict(X, s2);
  CHECK(s1 == s2);
  CHECK(s1[3] == s1[7]);
}

TEST_CASE("monotone link: larger weighted sums give larger scores") {
  std::vector<double> coef{1.0, -2.0, 0.5};  // 2 features + bias
  BuiltinModel model(coef, {"m", "builtin", "t", "layout"});
  FeatureMatrix X;
  X.rows = 3;
  X.cols = 2;
  X.data = {0.0, 0.0, 1.0, 0.0, 2.0, 0.0};  // increasing along w0 > 0
  std::vector<double> s(3);
  model.predict(X, s);
  CHECK(s[0] < s[1]);
  CHECK(s[1] < s[2]);
}

TEST_CASE("analytic gradient agrees with central differences") {
  auto rng = rng::derive(20260404, "gradcheck", 0);

  auto run_check = [&](size_t rows, size_t cols, bool zero_weights) {
    auto X = random_matrix(rows, cols, rng.next());
    std::vector<int> y(rows);
    for (auto& v : y) v = static_cast<int>(rng.next_below(2));
    std::vector<double> coef(cols + 1, 0.0);
    if (!zero_weights) {
      for (auto& w : coef) w = rng.next_range(-1.0, 1.0);
    }
    return gradient_check(coef, X, y, 1e-3, 1e-4);
  };

  CHECK(run_check(20, 6, false) < 1e-5);
  CHECK(run_check(20, 6, true) < 1e-5);
  CHECK(run_check(1, 4, false) < 1e-5);  // single sample
}

// ---------------------------------------------------------------------------
// External oracle protocol
// ---------------------------------------------------------------------------

namespace {

const std::string kEcho = ORACLE_ECHO_PATH;
const std::string kLayout = "flat-v1;T=15;K=17;D=8;features=bbox+pose+local_context+speed";

}  // namespace

TEST_CASE("external echo oracle round-trips scores") {
  ExternalOracle oracle(kEcho + " --score 0.9 --layout '" + kLayout + "'", kLayout);
  CHECK(oracle.info().name == "echo-oracle");
  CHECK(oracle.info().kind == "external");

  auto X = random_matrix(6, 10, 5);
  std::vector<double> scores(6);
  oracle.predict(X, scores);
  for (double s : scores) CHECK(s == 0.9);

  // A second batch over the same stream still lines up.
  oracle.predict(X, scores);
  for (double s : scores) CHECK(s == 0.9);
}

TEST_CASE("external oracle layout mismatch is fatal") {
  CHECK_THROWS_AS(
      ExternalOracle(kEcho + " --score 0.5 --layout 'flat-v1;T=2;K=1;D=1;features=speed'",
                     kLayout),
      ProtocolError);
}

TEST_CASE("protocol violations abort with the offending line") {
  auto X = random_matrix(3, 4, 9);
  std::vector<double> scores(3);

  {
    ExternalOracle bad_id(kEcho + " --mode badid --layout '" + kLayout + "'", kLayout);
    CHECK_THROWS_AS(bad_id.predict(X, scores), ProtocolError);
  }
  {
    ExternalOracle garbage(kEcho + " --mode garbage --layout '" + kLayout + "'", kLayout);
    try {
      garbage.predict(X, scores);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(std::string(e.what()).find("this is not a protocol record") != std::string::npos);
    }
  }
  {
    // Early exit after one response: count mismatch, not silent truncation.
    ExternalOracle truncating(kEcho + " --mode truncate --layout '" + kLayout + "'", kLayout);
    CHECK_THROWS_AS(truncating.predict(X, scores), ProtocolError);
  }
  {
    CHECK_THROWS_AS(ExternalOracle("true", kLayout), ProtocolError);  // no handshake
  }
}

TEST_CASE("weight dump writes layout plus one weight per line") {
  const auto m = separable_manifest(40);
  TrainConfig cfg;
  cfg.epochs = 10;
  const auto model = train_builtin(m, all_ids(m), cfg);
  const auto path = std::string("/tmp/capfi_oracle_test_weights.txt");
  model.dump_weights(path);
  const auto text = jsonio::read_file(path);
  CHECK(text.find("flat-v1") == 0);
  size_t lines = 0;
  for (char c : text) lines += c == '\n' ? 1 : 0;
  CHECK(lines == model.weights().size() + 1);
}

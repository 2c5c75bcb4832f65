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

// Compares the serial reference path against the OpenMP path on generation,
// training, and the permutation-importance sweep, and checks that the two
// produce identical output.

#include <chrono>
#include <cstdio>
#include <string>

#include "capfi/engine.hpp"
#include "capfi/report.hpp"
#include "capfi/subsets.hpp"
#include "capfi/synth.hpp"

using namespace capfi;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SweepResult {
  double gen_s = 0.0;
  double train_s = 0.0;
  double capfi_s = 0.0;
  std::string records_fingerprint;
};

SweepResult sweep(ExecPolicy policy, size_t n_samples, uint64_t reps) {
  SweepResult r;

  synth::GeneratorSpec spec;
  spec.n_samples = n_samples;
  spec.seed = 20260331;
  spec.dims = {15, 8, 8};
  spec.dependency = {{"bbox", 0.7}, {"speed", 0.3}};
  spec.noise = 0.1;

  auto t0 = std::chrono::steady_clock::now();
  const Manifest manifest = synth::generate(spec, policy);
  r.gen_s = seconds_since(t0);

  std::vector<uint32_t> ids(manifest.size());
  for (uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
  oracle::TrainConfig cfg;
  cfg.epochs = 150;
  t0 = std::chrono::steady_clock::now();
  const auto model = oracle::train_builtin(manifest, ids, cfg, policy);
  r.train_s = seconds_since(t0);

  const auto subsets = build_subsets(manifest);
  std::vector<ContextSet> contexts;
  for (auto notation : kBaseNotations) contexts.push_back(subsets.at(std::string(notation)));

  engine::EvalOptions options;
  options.policy = policy;
  options.repetitions_override = reps;
  const oracle::Oracle* oracles[] = {&model};

  t0 = std::chrono::steady_clock::now();
  const auto analysis =
      engine::run_full_analysis(manifest, oracles, contexts, kAllFeatures, 99, options);
  r.capfi_s = seconds_since(t0);

  r.records_fingerprint = report::capfi_tabular(analysis.records);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  size_t n = 1000;
  uint64_t reps = 20;
  if (argc > 1) n = static_cast<size_t>(std::stoul(argv[1]));
  if (argc > 2) reps = static_cast<uint64_t>(std::stoul(argv[2]));

  std::printf("benchmark: %zu samples, %llu repetitions per cell, %d thread(s) available\n", n,
              static_cast<unsigned long long>(reps), max_threads());

  const auto serial = sweep(ExecPolicy::serial, n, reps);
  const auto parallel = sweep(ExecPolicy::parallel, n, reps);

  std::printf("%-10s %12s %12s %12s\n", "path", "generate", "train", "capfi");
  std::printf("%-10s %11.3fs %11.3fs %11.3fs\n", "serial", serial.gen_s, serial.train_s,
              serial.capfi_s);
  std::printf("%-10s %11.3fs %11.3fs %11.3fs\n", "openmp", parallel.gen_s, parallel.train_s,
              parallel.capfi_s);
  std::printf("speedup: generate %.2fx, train %.2fx, capfi %.2fx\n",
              serial.gen_s / parallel.gen_s, serial.train_s / parallel.train_s,
              serial.capfi_s / parallel.capfi_s);

  if (serial.records_fingerprint != parallel.records_fingerprint) {
    std::printf("MISMATCH: serial and parallel sweeps disagree\n");
    return 1;
  }
  std::printf("outputs identical across paths\n");
  return 0;
}

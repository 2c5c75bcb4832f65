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

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "capfi/parallel.hpp"
#include "capfi/types.hpp"

// Synthetic context-tagged datasets with planted feature-label dependencies.
// Each modality reduces to one scalar summary (mean speed, relative bbox area
// growth, pose spread, first embedding component); the label thresholds a
// weighted sum of standardized summaries through a steep logistic link, with
// an epsilon fraction of labels resampled uniformly. Everything is a pure
// function of (spec, seed): per-sample draws come from derived streams, so
// generation parallelizes without affecting output.

namespace capfi::synth {

struct GeneratorSpec {
  uint64_t n_samples = 0;
  uint64_t seed = 0;
  ModalityDims dims;
  double fps = 30.0;

  // axis -> value -> weight; weights on an axis must sum to 1. Axes:
  // roadway, light, crosswalk, proximity, ego_speed_state. Missing axes use
  // built-in defaults.
  std::map<std::string, std::map<std::string, double>> tag_weights;

  // axis -> value -> exact count; overrides weights on that axis. The pseudo
  // axis "label" (values cross / not_cross) pins class counts. Counts must
  // sum to n_samples, except roadway/light where the remainder falls into
  // other/none.
  std::map<std::string, std::map<std::string, uint32_t>> tag_quotas;

  // feature name -> w in [0,1]; how strongly the label depends on it.
  std::map<std::string, double> dependency;

  double noise = 0.0;  // epsilon in [0,1): fraction of label mass resampled

  double speed_min_kmh = 0.0;
  double speed_max_kmh = 60.0;
  double image_width = 1920.0;
  double image_height = 1080.0;
};

GeneratorSpec spec_from_json(const nlohmann::json& doc);
GeneratorSpec load_generator_spec(const std::string& path);

// Throws ConfigError on invalid or infeasible specs.
void validate_spec(const GeneratorSpec& spec);

Manifest generate(const GeneratorSpec& spec, ExecPolicy policy = ExecPolicy::parallel);

// The scalar summary the label link consumes for one modality.
double modality_summary(const Sample& sample, Feature feature, const ModalityDims& dims);

// Empirical label correlation per modality. Modalities with zero weight must
// come out statistically indistinguishable from zero (|r| <= 3/sqrt(n)).
struct PlantDiagnostic {
  Feature feature = Feature::bbox;
  double weight = 0.0;
  double correlation = 0.0;
  double null_bound = 0.0;  // 3/sqrt(n)
  bool consistent = true;   // weight==0 implies |r| <= bound
};

struct PlantReport {
  size_t n = 0;
  std::vector<PlantDiagnostic> rows;  // empty for an empty manifest
};

PlantReport plant_check(const Manifest& manifest, const GeneratorSpec& spec);

}  // namespace capfi::synth

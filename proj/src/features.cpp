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

#include "capfi/features.hpp"

#include <algorithm>
#include <sstream>

namespace capfi::features {

MotionFeature proximity_change_rate(std::span<const double> distances, int dt) {
  if (dt < 1) throw ValidationError("proximity_change_rate: dt must be >= 1");
  if (distances.size() < static_cast<size_t>(dt) + 1) {
    throw ValidationError("proximity_change_rate: need at least dt+1 distance entries, got " +
                          std::to_string(distances.size()));
  }
  for (double d : distances) {
    if (!(d > 0.0)) throw ValidationError("proximity_change_rate: non-positive distance");
  }
  MotionFeature m;
  m.dt = dt;
  m.delta_t0 = distances[0];
  m.delta_tn = distances[static_cast<size_t>(dt)];
  m.delta_p = (m.delta_t0 - m.delta_tn) / static_cast<double>(dt);
  return m;
}

std::vector<std::array<double, 4>> normalize_bbox(
    std::span<const std::array<double, 4>> boxes, double image_width, double image_height) {
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw ValidationError("normalize_bbox: image dimensions must be positive");
  }
  std::vector<std::array<double, 4>> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    if (!(b[0] < b[2]) || !(b[1] < b[3])) {
      throw ValidationError("normalize_bbox: degenerate box (requires x1 < x2 and y1 < y2)");
    }
    out.push_back({b[0] / image_width, b[1] / image_height, b[2] / image_width, b[3] / image_height});
  }
  return out;
}

int modality_width(Feature f, const ModalityDims& dims) {
  switch (f) {
    case Feature::bbox: return 4;
    case Feature::pose: return 2 * dims.pose_joints;
    case Feature::local_context: return dims.context_dim;
    case Feature::speed: return 1;
  }
  return 0;
}

std::vector<Feature> canonical_selection(std::span<const Feature> selection) {
  std::vector<Feature> out;
  for (Feature f : kAllFeatures) {
    if (std::find(selection.begin(), selection.end(), f) != selection.end()) out.push_back(f);
  }
  return out;
}

size_t flatten_dim(const ModalityDims& dims, std::span<const Feature> selection) {
  if (selection.empty()) throw ConfigError("flatten: empty modality selection");
  size_t per_frame = 0;
  for (Feature f : canonical_selection(selection)) {
    per_frame += static_cast<size_t>(modality_width(f, dims));
  }
  return per_frame * static_cast<size_t>(dims.frames);
}

std::string layout_signature(const ModalityDims& dims, std::span<const Feature> selection) {
  std::ostringstream os;
  os << kFlattenLayoutVersion << ";T=" << dims.frames << ";K=" << dims.pose_joints
     << ";D=" << dims.context_dim << ";features=";
  bool first = true;
  for (Feature f : canonical_selection(selection)) {
    if (!first) os << '+';
    os << to_string(f);
    first = false;
  }
  return os.str();
}

void flatten_into(const SampleLens& lens, const ModalityDims& dims,
                  std::span<const Feature> selection, std::vector<double>& out) {
  if (selection.empty()) throw ConfigError("flatten: empty modality selection");
  const int T = dims.frames;
  for (int t = 0; t < T; ++t) {
    for (Feature f : selection) {
      switch (f) {
        case Feature::bbox: {
          const auto& b = lens.bbox->bbox[static_cast<size_t>(t)];
          out.insert(out.end(), b.begin(), b.end());
          break;
        }
        case Feature::pose: {
          const auto& p = lens.pose->pose[static_cast<size_t>(t)];
          out.insert(out.end(), p.begin(), p.end());
          break;
        }
        case Feature::local_context: {
          const auto& c = lens.local_context->local_context[static_cast<size_t>(t)];
          out.insert(out.end(), c.begin(), c.end());
          break;
        }
        case Feature::speed:
          out.push_back(lens.speed->speed[static_cast<size_t>(t)]);
          break;
      }
    }
  }
}

std::vector<double> flatten(const Sample& sample, const ModalityDims& dims,
                            std::span<const Feature> selection) {
  const auto sel = canonical_selection(selection);
  std::vector<double> out;
  out.reserve(flatten_dim(dims, sel));
  SampleLens lens{&sample, &sample, &sample, &sample};
  flatten_into(lens, dims, sel, out);
  return out;
}

SpeedState speed_state(std::span<const double> speeds_kmh) {
  const size_t n = speeds_kmh.size();
  if (n < 2) throw ValidationError("speed_state: need at least 2 frames");

  double max_speed = 0.0;
  for (double v : speeds_kmh) max_speed = std::max(max_speed, v);
  if (max_speed < kStopBandKmh) return SpeedState::stopped;

  // Least-squares slope of speed against frame index.
  const double nn = static_cast<double>(n);
  double sum_t = 0.0, sum_v = 0.0, sum_tv = 0.0, sum_tt = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    sum_t += t;
    sum_v += speeds_kmh[i];
    sum_tv += t * speeds_kmh[i];
    sum_tt += t * t;
  }
  const double denom = nn * sum_tt - sum_t * sum_t;
  const double slope = (nn * sum_tv - sum_t * sum_v) / denom;

  if (slope > kSlopeTauKmhPerFrame) return SpeedState::accelerating;
  if (slope < -kSlopeTauKmhPerFrame) return SpeedState::decelerating;
  return SpeedState::constant;
}

}  // namespace capfi::features

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

#include <span>
#include <string>
#include <vector>

#include "capfi/types.hpp"

namespace capfi::features {

// ---------------------------------------------------------------------------
// Proximity change rate
// ---------------------------------------------------------------------------

// Net pedestrian-vehicle distance change per frame over a dt-frame interval.
// Positive means net approach. Reported in meters per frame; multiply by the
// frame rate for meters per second.
struct MotionFeature {
  double delta_p = 0.0;   // (delta_t0 - delta_tn) / dt
  int dt = 1;             // frame interval
  double delta_t0 = 0.0;  // distance at the window start, meters
  double delta_tn = 0.0;  // distance dt frames later, meters

  // Alternate display unit (x30 at the default frame rate).
  double per_second(double fps) const { return delta_p * fps; }
};

// Uses distances[0] and distances[dt]. Requires dt >= 1, at least dt+1
// entries, and strictly positive distances.
MotionFeature proximity_change_rate(std::span<const double> distances, int dt);

// ---------------------------------------------------------------------------
// Bounding boxes
// ---------------------------------------------------------------------------

// Scale pixel boxes into [0,1] by image width/height.
std::vector<std::array<double, 4>> normalize_bbox(
    std::span<const std::array<double, 4>> boxes, double image_width, double image_height);

// ---------------------------------------------------------------------------
// Flattened oracle input
// ---------------------------------------------------------------------------

// Frame-major layout: for each frame, the selected modalities in the fixed
// order bbox, pose, local_context, speed. The selection is a subset of that
// order; duplicates are ignored.
inline constexpr const char* kFlattenLayoutVersion = "flat-v1";

// Per-frame width of one modality.
int modality_width(Feature f, const ModalityDims& dims);

// Total vector length for a selection. Throws ConfigError on empty selection.
size_t flatten_dim(const ModalityDims& dims, std::span<const Feature> selection);

// Normalizes a selection to canonical order with duplicates removed.
std::vector<Feature> canonical_selection(std::span<const Feature> selection);

// Layout signature stamped into models, reports, and the oracle handshake,
// e.g. "flat-v1;T=15;K=17;D=8;features=bbox+speed".
std::string layout_signature(const ModalityDims& dims, std::span<const Feature> selection);

// Per-modality sources for one evaluation row; the permutation engine points
// these at different samples without copying the manifest.
struct SampleLens {
  const Sample* bbox = nullptr;
  const Sample* pose = nullptr;
  const Sample* local_context = nullptr;
  const Sample* speed = nullptr;
};

// Appends the flattened vector for `lens` to `out`. `selection` must already
// be canonical.
void flatten_into(const SampleLens& lens, const ModalityDims& dims,
                  std::span<const Feature> selection, std::vector<double>& out);

std::vector<double> flatten(const Sample& sample, const ModalityDims& dims,
                            std::span<const Feature> selection);

// ---------------------------------------------------------------------------
// Ego speed state
// ---------------------------------------------------------------------------

// Stopped when every frame is inside the stop band; otherwise the sign of the
// least-squares slope of speed against frame index, compared to +-tau.
inline constexpr double kStopBandKmh = 0.5;
inline constexpr double kSlopeTauKmhPerFrame = 0.1;

SpeedState speed_state(std::span<const double> speeds_kmh);

}  // namespace capfi::features

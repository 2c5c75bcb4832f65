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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capfi/errors.hpp"

namespace capfi {

// ---------------------------------------------------------------------------
// Context tag axes
// ---------------------------------------------------------------------------

enum class Roadway { four_way, midblock, t_junction, other };
enum class Light { red, yellow, green, none };
enum class Crosswalk { zebra, non_zebra };
enum class Proximity { close, medium, far };
enum class SpeedState { accelerating, constant, stopped, decelerating };

std::string_view to_string(Roadway v);
std::string_view to_string(Light v);
std::string_view to_string(Crosswalk v);
std::string_view to_string(Proximity v);
std::string_view to_string(SpeedState v);

Roadway roadway_from_string(std::string_view s);
Light light_from_string(std::string_view s);
Crosswalk crosswalk_from_string(std::string_view s);
Proximity proximity_from_string(std::string_view s);
SpeedState speed_state_from_string(std::string_view s);

// One value per axis. Proximity and ego speed state may be derived from the
// per-frame features when the manifest does not tag them explicitly.
struct ContextTagBundle {
  Roadway roadway = Roadway::other;
  Light light = Light::none;
  Crosswalk crosswalk = Crosswalk::non_zebra;
  Proximity proximity = Proximity::medium;
  SpeedState ego_speed_state = SpeedState::constant;
};

// ---------------------------------------------------------------------------
// Permutable input features
// ---------------------------------------------------------------------------

enum class Feature : int { bbox = 0, pose = 1, local_context = 2, speed = 3 };

inline constexpr int kNumFeatures = 4;
inline constexpr std::array<Feature, 4> kAllFeatures = {
    Feature::bbox, Feature::pose, Feature::local_context, Feature::speed};

std::string_view to_string(Feature f);
Feature feature_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Samples and manifests
// ---------------------------------------------------------------------------

struct ModalityDims {
  int frames = 15;       // observation window T (0.5 s at 30 fps)
  int pose_joints = 17;  // K; pose carries 2K values per frame
  int context_dim = 8;   // D; appearance embedding width
};

// One pedestrian-vehicle interaction episode. All frame lists have length T.
struct Sample {
  std::string id;
  int label = 0;  // 1 = cross, 0 = not cross
  ContextTagBundle tags;
  bool explicit_proximity = false;
  bool explicit_speed_state = false;

  std::vector<std::array<double, 4>> bbox;          // [T] x1,y1,x2,y2 in pixels
  std::vector<std::vector<double>> pose;            // [T][2K] joint pixel coords
  std::vector<std::vector<double>> local_context;   // [T][D] appearance embedding
  std::vector<double> speed;                        // [T] ego speed, km/h
  std::vector<double> distance;                     // [T] meters; empty = absent
};

struct Manifest {
  std::string schema_version;
  ModalityDims dims;
  double fps = 30.0;
  std::string provenance;
  std::vector<Sample> samples;

  size_t size() const { return samples.size(); }
};

// ---------------------------------------------------------------------------
// Context subsets
// ---------------------------------------------------------------------------

// Named subset of sample rows. Members are indices into Manifest::samples,
// kept in manifest order and unique.
struct ContextSet {
  std::string notation;
  std::vector<uint32_t> members;

  size_t cardinality() const { return members.size(); }
};

}  // namespace capfi

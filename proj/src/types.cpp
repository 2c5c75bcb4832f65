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

#include "capfi/types.hpp"

namespace capfi {

std::string_view to_string(Roadway v) {
  switch (v) {
    case Roadway::four_way: return "four_way";
    case Roadway::midblock: return "midblock";
    case Roadway::t_junction: return "t_junction";
    case Roadway::other: return "other";
  }
  return "other";
}

std::string_view to_string(Light v) {
  switch (v) {
    case Light::red: return "red";
    case Light::yellow: return "yellow";
    case Light::green: return "green";
    case Light::none: return "none";
  }
  return "none";
}

std::string_view to_string(Crosswalk v) {
  return v == Crosswalk::zebra ? "zebra" : "non_zebra";
}

std::string_view to_string(Proximity v) {
  switch (v) {
    case Proximity::close: return "close";
    case Proximity::medium: return "medium";
    case Proximity::far: return "far";
  }
  return "medium";
}

std::string_view to_string(SpeedState v) {
  switch (v) {
    case SpeedState::accelerating: return "accelerating";
    case SpeedState::constant: return "constant";
    case SpeedState::stopped: return "stopped";
    case SpeedState::decelerating: return "decelerating";
  }
  return "constant";
}

std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::bbox: return "bbox";
    case Feature::pose: return "pose";
    case Feature::local_context: return "local_context";
    case Feature::speed: return "speed";
  }
  return "bbox";
}

namespace {
[[noreturn]] void bad_enum(std::string_view kind, std::string_view value) {
  throw ValidationError("unknown " + std::string(kind) + " value '" + std::string(value) + "'");
}
}  // namespace

Roadway roadway_from_string(std::string_view s) {
  if (s == "four_way") return Roadway::four_way;
  if (s == "midblock") return Roadway::midblock;
  if (s == "t_junction") return Roadway::t_junction;
  if (s == "other") return Roadway::other;
  bad_enum("roadway", s);
}

Light light_from_string(std::string_view s) {
  if (s == "red") return Light::red;
  if (s == "yellow") return Light::yellow;
  if (s == "green") return Light::green;
  if (s == "none") return Light::none;
  bad_enum("light", s);
}

Crosswalk crosswalk_from_string(std::string_view s) {
  if (s == "zebra") return Crosswalk::zebra;
  if (s == "non_zebra") return Crosswalk::non_zebra;
  bad_enum("crosswalk", s);
}

Proximity proximity_from_string(std::string_view s) {
  if (s == "close") return Proximity::close;
  if (s == "medium") return Proximity::medium;
  if (s == "far") return Proximity::far;
  bad_enum("proximity", s);
}

SpeedState speed_state_from_string(std::string_view s) {
  if (s == "accelerating") return SpeedState::accelerating;
  if (s == "constant") return SpeedState::constant;
  if (s == "stopped") return SpeedState::stopped;
  if (s == "decelerating") return SpeedState::decelerating;
  bad_enum("ego_speed_state", s);
}

Feature feature_from_string(std::string_view s) {
  if (s == "bbox") return Feature::bbox;
  if (s == "pose") return Feature::pose;
  if (s == "local_context") return Feature::local_context;
  if (s == "speed") return Feature::speed;
  throw ConfigError("unknown feature '" + std::string(s) +
                    "' (expected bbox, pose, local_context or speed)");
}

}  // namespace capfi

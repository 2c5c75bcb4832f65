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
#include <map>
#include <string>
#include <string_view>

#include "capfi/types.hpp"

namespace capfi {

// The 17 base context subsets, in display order: crossing state, roadway
// type, traffic-light state, crosswalk state, proximity level, ego speed
// state. A sample can belong to one subset per axis.
inline constexpr std::array<std::string_view, 17> kBaseNotations = {
    "S_C",     "S_NC",     "S_FW",  "S_MB",    "S_TJ",      "S_Red",
    "S_Yellow", "S_Green", "S_ZC",  "S_NZC",   "S_CP",      "S_MP",
    "S_FP",    "S_Acc",    "S_Const", "S_Stopped", "S_Dec"};

// Builds all 17 base subsets. Empty subsets are valid (cardinality 0).
std::map<std::string, ContextSet> build_subsets(const Manifest& manifest);

// Set-algebra expressions over known notations. Operators: intersection
// `∩` or `&`, union `∪` or `|`, difference `\` or `-`, with parentheses.
// Intersection and difference bind tighter than union; same-level operators
// associate left. The result keeps manifest order; the notation records the
// expression as written (trimmed).
ContextSet subset_algebra(std::string_view expression,
                          const std::map<std::string, ContextSet>& known,
                          size_t manifest_size);

// Proximity buckets from mean pedestrian-ego distance, boundaries closed on
// the right: close = (0,15], medium = (15,30], far = (30,inf).
inline constexpr double kCloseProximityMaxMeters = 15.0;
inline constexpr double kMediumProximityMaxMeters = 30.0;

Proximity proximity_bucket(double mean_distance_meters);

}  // namespace capfi

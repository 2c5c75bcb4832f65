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

#include <string>

#include <json.hpp>

namespace capfi::jsonio {

using OrderedJson = nlohmann::ordered_json;

// Canonical serialization: insertion-ordered keys, two-space indentation,
// floating-point numbers with 17 significant digits so every value round-trips
// exactly. Identical documents always produce identical bytes.
std::string dump_canonical(const OrderedJson& j);

// Formats one double the way dump_canonical does.
std::string format_double(double v);

// Reads and parses a JSON file; wraps failures in ParseError with the path.
nlohmann::json parse_file(const std::string& path);

// Writes text to a file atomically enough for our purposes (truncate+write).
void write_file(const std::string& path, const std::string& text);

// Reads a whole file; throws ParseError when unreadable.
std::string read_file(const std::string& path);

}  // namespace capfi::jsonio

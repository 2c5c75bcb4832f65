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

#include <stdexcept>
#include <string>

namespace capfi {

// Malformed input files (manifest, generator spec, report).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a documented invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration: unknown notation, missing flag, dimension clash.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// External oracle wire-protocol violation or process failure.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace capfi

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
#include <vector>

#include "capfi/jsonio.hpp"
#include "capfi/types.hpp"

// Manifest file format: a single UTF-8 JSON document with a mandatory
// schema_version field. Large local_context embeddings may live in a sidecar
// binary of little-endian 32-bit floats, row-major [sample][frame][dim]; each
// sample then carries a "local_context_ref" with its element offset into the
// sidecar. See README for the full schema.

namespace capfi {

// Parses and validates. Validation errors name the first offending sample id
// and field. Non-fatal findings (e.g. an explicit tag conflicting with the
// derived value) are appended to *warnings when given.
Manifest load_manifest(const std::string& path, std::vector<std::string>* warnings = nullptr);

// Validates every Sample invariant and fills in derivable tags (proximity
// from mean distance, ego speed state from the speed trace). Explicit tags
// win over derived values, with a warning on conflict.
void validate_manifest(Manifest& manifest, std::vector<std::string>* warnings = nullptr);

// Serialization with embedded embeddings; deterministic bytes.
jsonio::OrderedJson manifest_to_json(const Manifest& manifest);
std::string manifest_to_string(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::string& path);

// Serialization with local_context in a sidecar file next to the manifest.
// `sidecar_name` is stored in the manifest and resolved relative to it.
void save_manifest_with_sidecar(const Manifest& manifest, const std::string& path,
                                const std::string& sidecar_name);

// Mean of per-frame distances; the basis for derived proximity.
double mean_distance(const Sample& sample);

}  // namespace capfi

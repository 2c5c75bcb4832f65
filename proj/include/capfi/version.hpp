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

namespace capfi {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Schema identifiers; loaders reject anything they were not built for.
inline constexpr const char* kManifestSchema = "capfi-manifest-v1";
inline constexpr const char* kGenSpecSchema = "capfi-genspec-v1";
inline constexpr const char* kReportSchema = "capfi-report-v1";
inline constexpr const char* kOracleProtocol = "capfi-oracle-v1";

}  // namespace capfi

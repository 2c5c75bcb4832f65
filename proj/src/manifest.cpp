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

#include "capfi/manifest.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "capfi/features.hpp"
#include "capfi/subsets.hpp"
#include "capfi/version.hpp"

namespace capfi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

[[noreturn]] void fail_sample(const std::string& id, const std::string& field,
                              const std::string& what) {
  fail("sample '" + id + "': " + field + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

std::vector<float> read_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open sidecar file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) {
    throw ParseError("sidecar file size is not a multiple of 4 bytes: " + path);
  }
  std::vector<float> out(bytes.size() / 4);
  for (size_t i = 0; i < out.size(); ++i) {
    uint32_t word = static_cast<uint32_t>(bytes[4 * i]) |
                    (static_cast<uint32_t>(bytes[4 * i + 1]) << 8) |
                    (static_cast<uint32_t>(bytes[4 * i + 2]) << 16) |
                    (static_cast<uint32_t>(bytes[4 * i + 3]) << 24);
    float f;
    std::memcpy(&f, &word, 4);
    out[i] = f;
  }
  return out;
}

void write_sidecar(const std::string& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open sidecar file for writing: " + path);
  std::vector<unsigned char> bytes(values.size() * 4);
  for (size_t i = 0; i < values.size(); ++i) {
    uint32_t word;
    std::memcpy(&word, &values[i], 4);
    bytes[4 * i] = static_cast<unsigned char>(word & 0xff);
    bytes[4 * i + 1] = static_cast<unsigned char>((word >> 8) & 0xff);
    bytes[4 * i + 2] = static_cast<unsigned char>((word >> 16) & 0xff);
    bytes[4 * i + 3] = static_cast<unsigned char>((word >> 24) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError("short write: " + path);
}

Sample sample_from_json(const json& js, const ModalityDims& dims,
                        const std::vector<float>* sidecar) {
  Sample s;
  s.id = require(js, "id", "sample").get<std::string>();
  const std::string where = "sample '" + s.id + "'";
  s.label = require(js, "label", where).get<int>();

  const json& tags = require(js, "tags", where);
  s.tags.roadway = roadway_from_string(require(tags, "roadway", where + " tags").get<std::string>());
  s.tags.light = light_from_string(require(tags, "light", where + " tags").get<std::string>());
  s.tags.crosswalk =
      crosswalk_from_string(require(tags, "crosswalk", where + " tags").get<std::string>());
  if (tags.contains("proximity")) {
    s.tags.proximity = proximity_from_string(tags["proximity"].get<std::string>());
    s.explicit_proximity = true;
  }
  if (tags.contains("ego_speed_state")) {
    s.tags.ego_speed_state = speed_state_from_string(tags["ego_speed_state"].get<std::string>());
    s.explicit_speed_state = true;
  }

  for (const auto& frame : require(js, "bbox", where)) {
    if (!frame.is_array() || frame.size() != 4) {
      throw ParseError(where + ": bbox frame must be [x1,y1,x2,y2]");
    }
    s.bbox.push_back({frame[0].get<double>(), frame[1].get<double>(), frame[2].get<double>(),
                      frame[3].get<double>()});
  }
  for (const auto& frame : require(js, "pose", where)) {
    s.pose.push_back(frame.get<std::vector<double>>());
  }
  if (js.contains("local_context_ref")) {
    if (sidecar == nullptr) {
      throw ParseError(where + ": local_context_ref used but manifest declares no sidecar");
    }
    const size_t offset = js["local_context_ref"].at("offset").get<size_t>();
    const size_t block = static_cast<size_t>(dims.frames) * static_cast<size_t>(dims.context_dim);
    if (offset + block > sidecar->size()) {
      throw ParseError(where + ": local_context_ref offset " + std::to_string(offset) +
                       " out of range for sidecar of " + std::to_string(sidecar->size()) +
                       " floats");
    }
    for (int t = 0; t < dims.frames; ++t) {
      std::vector<double> row(static_cast<size_t>(dims.context_dim));
      for (int d = 0; d < dims.context_dim; ++d) {
        row[static_cast<size_t>(d)] =
            static_cast<double>((*sidecar)[offset + static_cast<size_t>(t) *
                                                        static_cast<size_t>(dims.context_dim) +
                                           static_cast<size_t>(d)]);
      }
      s.local_context.push_back(std::move(row));
    }
  } else {
    for (const auto& frame : require(js, "local_context", where)) {
      s.local_context.push_back(frame.get<std::vector<double>>());
    }
  }
  s.speed = require(js, "speed", where).get<std::vector<double>>();
  if (js.contains("distance") && !js["distance"].is_null()) {
    s.distance = js["distance"].get<std::vector<double>>();
  }
  return s;
}

}  // namespace

double mean_distance(const Sample& sample) {
  double sum = 0.0;
  for (double d : sample.distance) sum += d;
  return sum / static_cast<double>(sample.distance.size());
}

void validate_manifest(Manifest& manifest, std::vector<std::string>* warnings) {
  if (manifest.schema_version != kManifestSchema) {
    fail("unsupported manifest schema_version '" + manifest.schema_version + "' (expected '" +
         std::string(kManifestSchema) + "')");
  }
  const ModalityDims& dims = manifest.dims;
  if (dims.frames < 2) fail("dims.frames must be >= 2");
  if (dims.pose_joints < 1) fail("dims.pose_joints must be >= 1");
  if (dims.context_dim < 1) fail("dims.context_dim must be >= 1");
  if (!(manifest.fps > 0.0)) fail("fps must be positive");

  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(manifest.samples.size());
  const size_t T = static_cast<size_t>(dims.frames);

  for (Sample& s : manifest.samples) {
    if (s.id.empty()) fail("sample with empty id");
    if (!seen_ids.insert(s.id).second) fail("duplicate sample id '" + s.id + "'");
    if (s.label != 0 && s.label != 1) fail_sample(s.id, "label", "must be 0 or 1");

    if (s.bbox.size() != T || s.pose.size() != T || s.local_context.size() != T ||
        s.speed.size() != T || (!s.distance.empty() && s.distance.size() != T)) {
      fail_sample(s.id, "frames",
                  "frame length mismatch (expected " + std::to_string(T) + " frames)");
    }
    for (size_t t = 0; t < T; ++t) {
      const auto& b = s.bbox[t];
      if (!(b[0] < b[2]) || !(b[1] < b[3])) {
        fail_sample(s.id, "bbox",
                    "requires x1 < x2 and y1 < y2 at frame " + std::to_string(t));
      }
      if (s.pose[t].size() != 2 * static_cast<size_t>(dims.pose_joints)) {
        fail_sample(s.id, "pose",
                    "expected " + std::to_string(2 * dims.pose_joints) + " values per frame, got " +
                        std::to_string(s.pose[t].size()));
      }
      if (s.local_context[t].size() != static_cast<size_t>(dims.context_dim)) {
        fail_sample(s.id, "local_context",
                    "expected " + std::to_string(dims.context_dim) + " values per frame, got " +
                        std::to_string(s.local_context[t].size()));
      }
      if (!(s.speed[t] >= 0.0)) fail_sample(s.id, "speed", "must be >= 0");
      if (!s.distance.empty() && !(s.distance[t] > 0.0)) {
        fail_sample(s.id, "distance", "must be > 0 where present");
      }
    }

    // Derivable tags. Explicit values win; conflicts are warnings, not errors.
    if (!s.distance.empty()) {
      const Proximity derived = proximity_bucket(mean_distance(s));
      if (!s.explicit_proximity) {
        s.tags.proximity = derived;
      } else if (derived != s.tags.proximity && warnings != nullptr) {
        warnings->push_back("sample '" + s.id + "': explicit proximity '" +
                            std::string(to_string(s.tags.proximity)) +
                            "' conflicts with derived '" + std::string(to_string(derived)) +
                            "'; keeping explicit");
      }
    } else if (!s.explicit_proximity) {
      fail_sample(s.id, "proximity", "no explicit tag and no distance trace to derive it from");
    }

    const SpeedState derived_state = features::speed_state(s.speed);
    if (!s.explicit_speed_state) {
      s.tags.ego_speed_state = derived_state;
    } else if (derived_state != s.tags.ego_speed_state && warnings != nullptr) {
      warnings->push_back("sample '" + s.id + "': explicit ego_speed_state '" +
                          std::string(to_string(s.tags.ego_speed_state)) +
                          "' conflicts with derived '" + std::string(to_string(derived_state)) +
                          "'; keeping explicit");
    }
  }
}

Manifest load_manifest(const std::string& path, std::vector<std::string>* warnings) {
  const json doc = jsonio::parse_file(path);
  if (!doc.is_object()) throw ParseError(path + ": manifest must be a JSON object");

  Manifest m;
  m.schema_version = require(doc, "schema_version", path).get<std::string>();
  if (m.schema_version != kManifestSchema) {
    throw ValidationError(path + ": unsupported schema_version '" + m.schema_version + "'");
  }
  const json& dims = require(doc, "dims", path);
  m.dims.frames = require(dims, "frames", path + " dims").get<int>();
  m.dims.pose_joints = require(dims, "pose_joints", path + " dims").get<int>();
  m.dims.context_dim = require(dims, "context_dim", path + " dims").get<int>();
  m.fps = doc.value("fps", 30.0);
  m.provenance = doc.value("provenance", std::string{});

  std::vector<float> sidecar;
  const std::vector<float>* sidecar_ptr = nullptr;
  if (doc.contains("sidecar") && !doc["sidecar"].is_null()) {
    const std::string name = doc["sidecar"].at("path").get<std::string>();
    const fs::path sidecar_path = fs::path(path).parent_path() / name;
    sidecar = read_sidecar(sidecar_path.string());
    sidecar_ptr = &sidecar;
  }

  for (const auto& js : require(doc, "samples", path)) {
    m.samples.push_back(sample_from_json(js, m.dims, sidecar_ptr));
  }
  validate_manifest(m, warnings);
  return m;
}

jsonio::OrderedJson manifest_to_json(const Manifest& manifest) {
  jsonio::OrderedJson doc;
  doc["schema_version"] = manifest.schema_version.empty() ? kManifestSchema
                                                          : manifest.schema_version;
  doc["dims"] = {{"frames", manifest.dims.frames},
                 {"pose_joints", manifest.dims.pose_joints},
                 {"context_dim", manifest.dims.context_dim}};
  doc["fps"] = manifest.fps;
  doc["provenance"] = manifest.provenance;
  auto samples = jsonio::OrderedJson::array();
  for (const Sample& s : manifest.samples) {
    jsonio::OrderedJson js;
    js["id"] = s.id;
    js["label"] = s.label;
    jsonio::OrderedJson tags;
    tags["roadway"] = std::string(to_string(s.tags.roadway));
    tags["light"] = std::string(to_string(s.tags.light));
    tags["crosswalk"] = std::string(to_string(s.tags.crosswalk));
    tags["proximity"] = std::string(to_string(s.tags.proximity));
    tags["ego_speed_state"] = std::string(to_string(s.tags.ego_speed_state));
    js["tags"] = std::move(tags);
    auto bbox = jsonio::OrderedJson::array();
    for (const auto& b : s.bbox) bbox.push_back({b[0], b[1], b[2], b[3]});
    js["bbox"] = std::move(bbox);
    js["pose"] = s.pose;
    js["local_context"] = s.local_context;
    js["speed"] = s.speed;
    if (!s.distance.empty()) js["distance"] = s.distance;
    samples.push_back(std::move(js));
  }
  doc["samples"] = std::move(samples);
  return doc;
}

std::string manifest_to_string(const Manifest& manifest) {
  return jsonio::dump_canonical(manifest_to_json(manifest));
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  jsonio::write_file(path, manifest_to_string(manifest));
}

void save_manifest_with_sidecar(const Manifest& manifest, const std::string& path,
                                const std::string& sidecar_name) {
  jsonio::OrderedJson doc = manifest_to_json(manifest);
  doc.erase("samples");
  doc["sidecar"] = {{"path", sidecar_name}, {"dtype", "f32le"}, {"layout", "sample_frame_dim"}};

  std::vector<float> blob;
  const size_t block = static_cast<size_t>(manifest.dims.frames) *
                       static_cast<size_t>(manifest.dims.context_dim);
  blob.reserve(manifest.samples.size() * block);

  auto samples = jsonio::OrderedJson::array();
  size_t offset = 0;
  for (const Sample& s : manifest.samples) {
    jsonio::OrderedJson js = manifest_to_json({manifest.schema_version, manifest.dims,
                                               manifest.fps, manifest.provenance,
                                               {s}})["samples"][0];
    js.erase("local_context");
    js["local_context_ref"] = {{"offset", offset}};
    samples.push_back(std::move(js));
    for (const auto& frame : s.local_context) {
      for (double v : frame) blob.push_back(static_cast<float>(v));
    }
    offset += block;
  }
  doc["samples"] = std::move(samples);

  const fs::path sidecar_path = fs::path(path).parent_path() / sidecar_name;
  write_sidecar(sidecar_path.string(), blob);
  jsonio::write_file(path, jsonio::dump_canonical(doc));
}

}  // namespace capfi

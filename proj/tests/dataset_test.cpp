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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "capfi/jsonio.hpp"
#include "capfi/manifest.hpp"
#include "capfi/rng.hpp"
#include "capfi/subsets.hpp"
#include "capfi/synth.hpp"
#include "capfi/version.hpp"

using namespace capfi;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("capfi_dataset_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Minimal consistent sample as a JSON object.
jsonio::OrderedJson sample_json(const std::string& id, int label, int frames) {
  jsonio::OrderedJson s;
  s["id"] = id;
  s["label"] = label;
  s["tags"] = {{"roadway", "four_way"}, {"light", "green"}, {"crosswalk", "zebra"}};
  auto bbox = jsonio::OrderedJson::array();
  auto pose = jsonio::OrderedJson::array();
  auto ctx = jsonio::OrderedJson::array();
  auto speed = jsonio::OrderedJson::array();
  auto distance = jsonio::OrderedJson::array();
  for (int t = 0; t < frames; ++t) {
    bbox.push_back({10.0 + t, 20.0, 50.0 + t, 120.0});
    pose.push_back({1.0 * t, 2.0, 3.0, 4.0});  // K = 2
    ctx.push_back({0.5, -0.5});                // D = 2
    speed.push_back(10.0);
    distance.push_back(12.0);
  }
  s["bbox"] = bbox;
  s["pose"] = pose;
  s["local_context"] = ctx;
  s["speed"] = speed;
  s["distance"] = distance;
  return s;
}

jsonio::OrderedJson manifest_json(int n, int frames = 5) {
  jsonio::OrderedJson doc;
  doc["schema_version"] = kManifestSchema;
  doc["dims"] = {{"frames", frames}, {"pose_joints", 2}, {"context_dim", 2}};
  doc["fps"] = 30.0;
  auto samples = jsonio::OrderedJson::array();
  for (int i = 0; i < n; ++i) samples.push_back(sample_json("s" + std::to_string(i), i % 2, frames));
  doc["samples"] = samples;
  return doc;
}

std::string write_doc(const fs::path& dir, const jsonio::OrderedJson& doc) {
  const auto path = (dir / "manifest.json").string();
  jsonio::write_file(path, jsonio::dump_canonical(doc));
  return path;
}

}  // namespace

TEST_CASE("well-formed manifest loads with every sample") {
  const auto dir = scratch_dir("load_ok");
  const auto path = write_doc(dir, manifest_json(3));
  const auto m = load_manifest(path);
  CHECK(m.size() == 3);
  CHECK(m.samples[0].id == "s0");
  CHECK(m.samples[0].tags.proximity == Proximity::close);   // mean distance 12
  CHECK(m.samples[0].tags.ego_speed_state == SpeedState::constant);
}

TEST_CASE("bbox violation names the offending sample") {
  const auto dir = scratch_dir("load_badbbox");
  auto doc = manifest_json(3);
  doc["samples"][1]["bbox"][2] = {50.0, 20.0, 10.0, 120.0};  // x1 > x2
  const auto path = write_doc(dir, doc);
  try {
    load_manifest(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("s1") != std::string::npos);
    CHECK(what.find("bbox") != std::string::npos);
  }
}

TEST_CASE("mixed frame counts produce a frame length mismatch error") {
  const auto dir = scratch_dir("load_mixedframes");
  auto doc = manifest_json(3);
  doc["samples"][2]["speed"] = {1.0, 2.0};  // 2 frames instead of 5
  const auto path = write_doc(dir, doc);
  try {
    load_manifest(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("frame length mismatch") != std::string::npos);
  }
}

TEST_CASE("duplicate ids and missing schema are rejected") {
  const auto dir = scratch_dir("load_dups");
  auto doc = manifest_json(2);
  doc["samples"][1]["id"] = "s0";
  CHECK_THROWS_AS(load_manifest(write_doc(dir, doc)), ValidationError);

  auto doc2 = manifest_json(1);
  doc2.erase("schema_version");
  CHECK_THROWS_AS(load_manifest(write_doc(dir, doc2)), ParseError);

  auto doc3 = manifest_json(1);
  doc3["schema_version"] = "capfi-manifest-v999";
  CHECK_THROWS_AS(load_manifest(write_doc(dir, doc3)), ValidationError);
}

TEST_CASE("explicit tags win over derived values with a warning") {
  const auto dir = scratch_dir("load_conflict");
  auto doc = manifest_json(1);
  doc["samples"][0]["tags"]["proximity"] = "far";  // derived would be close (12 m)
  const auto path = write_doc(dir, doc);
  std::vector<std::string> warnings;
  const auto m = load_manifest(path, &warnings);
  CHECK(m.samples[0].tags.proximity == Proximity::far);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("proximity") != std::string::npos);
}

TEST_CASE("missing distance requires an explicit proximity tag") {
  const auto dir = scratch_dir("load_nodist");
  auto doc = manifest_json(1);
  doc["samples"][0].erase("distance");
  CHECK_THROWS_AS(load_manifest(write_doc(dir, doc)), ValidationError);

  doc["samples"][0]["tags"]["proximity"] = "medium";
  const auto m = load_manifest(write_doc(dir, doc));
  CHECK(m.samples[0].tags.proximity == Proximity::medium);
}

TEST_CASE("sidecar embeddings round-trip through the binary file") {
  const auto dir = scratch_dir("sidecar");
  synth::GeneratorSpec spec;
  spec.n_samples = 12;
  spec.seed = 5;
  spec.dims = {6, 2, 3};
  spec.dependency = {{"speed", 1.0}};
  const Manifest m = synth::generate(spec);

  const auto inline_path = (dir / "inline.json").string();
  const auto sidecar_path = (dir / "withside.json").string();
  save_manifest(m, inline_path);
  save_manifest_with_sidecar(m, sidecar_path, "blob.f32");
  CHECK(fs::exists(dir / "blob.f32"));

  const auto loaded = load_manifest(sidecar_path);
  REQUIRE(loaded.size() == m.size());
  for (size_t i = 0; i < m.size(); ++i) {
    for (int t = 0; t < m.dims.frames; ++t) {
      for (int d = 0; d < m.dims.context_dim; ++d) {
        // f32 storage: equality after the float round-trip.
        const double stored = static_cast<double>(
            static_cast<float>(m.samples[i].local_context[static_cast<size_t>(t)][static_cast<size_t>(d)]));
        CHECK(loaded.samples[i].local_context[static_cast<size_t>(t)][static_cast<size_t>(d)] ==
              stored);
      }
    }
  }

  // Out-of-range offset is caught.
  auto doc = nlohmann::json::parse(jsonio::read_file(sidecar_path));
  doc["samples"][0]["local_context_ref"]["offset"] = 1u << 20;
  jsonio::write_file(sidecar_path, doc.dump());
  CHECK_THROWS_AS(load_manifest(sidecar_path), ParseError);
}

TEST_CASE("proximity buckets are closed on the right") {
  CHECK(proximity_bucket(10.0) == Proximity::close);
  CHECK(proximity_bucket(15.0) == Proximity::close);
  CHECK(proximity_bucket(15.0001) == Proximity::medium);
  CHECK(proximity_bucket(30.0) == Proximity::medium);
  CHECK(proximity_bucket(30.0001) == Proximity::far);
  CHECK_THROWS_AS(proximity_bucket(0.0), ValidationError);
  CHECK_THROWS_AS(proximity_bucket(-3.0), ValidationError);
}

namespace {

Manifest tagged_manifest() {
  synth::GeneratorSpec spec;
  spec.n_samples = 200;
  spec.seed = 99;
  spec.dims = {5, 2, 2};
  spec.dependency = {{"bbox", 0.5}, {"speed", 0.5}};
  spec.noise = 0.2;
  return synth::generate(spec);
}

}  // namespace

TEST_CASE("build_subsets produces exactly the 17 base subsets") {
  const auto m = tagged_manifest();
  const auto subsets = build_subsets(m);
  REQUIRE(subsets.size() == 17);
  for (auto notation : kBaseNotations) {
    CHECK(subsets.count(std::string(notation)) == 1);
  }

  // A four-way + green + accelerating sample lands in all three subsets.
  bool checked = false;
  for (uint32_t i = 0; i < m.size(); ++i) {
    const auto& t = m.samples[i].tags;
    if (t.roadway == Roadway::four_way && t.light == Light::green &&
        t.ego_speed_state == SpeedState::accelerating) {
      auto member_of = [&](const char* notation) {
        const auto& mem = subsets.at(notation).members;
        return std::find(mem.begin(), mem.end(), i) != mem.end();
      };
      CHECK(member_of("S_FW"));
      CHECK(member_of("S_Green"));
      CHECK(member_of("S_Acc"));
      checked = true;
      break;
    }
  }
  CHECK(checked);
}

TEST_CASE("empty manifest yields 17 empty subsets") {
  Manifest empty;
  empty.schema_version = kManifestSchema;
  const auto subsets = build_subsets(empty);
  REQUIRE(subsets.size() == 17);
  for (const auto& [notation, set] : subsets) CHECK(set.cardinality() == 0);
}

TEST_CASE("partition and multiplicity properties hold") {
  const auto m = tagged_manifest();
  const auto subsets = build_subsets(m);
  auto in = [&](const char* notation, uint32_t i) {
    const auto& mem = subsets.at(notation).members;
    return std::find(mem.begin(), mem.end(), i) != mem.end();
  };
  for (uint32_t i = 0; i < m.size(); ++i) {
    CHECK(static_cast<int>(in("S_C", i)) + static_cast<int>(in("S_NC", i)) == 1);
    CHECK(static_cast<int>(in("S_CP", i)) + static_cast<int>(in("S_MP", i)) +
              static_cast<int>(in("S_FP", i)) ==
          1);
    CHECK(static_cast<int>(in("S_Acc", i)) + static_cast<int>(in("S_Const", i)) +
              static_cast<int>(in("S_Stopped", i)) + static_cast<int>(in("S_Dec", i)) ==
          1);
    CHECK(static_cast<int>(in("S_FW", i)) + static_cast<int>(in("S_MB", i)) +
              static_cast<int>(in("S_TJ", i)) <=
          1);
  }

  // Cardinalities on one axis sum to the samples carrying a non-sink value.
  size_t non_other = 0;
  for (const auto& s : m.samples) non_other += s.tags.roadway != Roadway::other ? 1 : 0;
  CHECK(subsets.at("S_FW").cardinality() + subsets.at("S_MB").cardinality() +
            subsets.at("S_TJ").cardinality() ==
        non_other);
}

namespace {

// Brute-force membership oracle over id sets.
std::set<uint32_t> to_set(const ContextSet& s) {
  return {s.members.begin(), s.members.end()};
}

}  // namespace

TEST_CASE("subset algebra on label subsets") {
  const auto m = tagged_manifest();
  const auto subsets = build_subsets(m);

  const auto disjoint = subset_algebra("S_C ∩ S_NC", subsets, m.size());
  CHECK(disjoint.cardinality() == 0);

  const auto all = subset_algebra("S_C ∪ S_NC", subsets, m.size());
  CHECK(all.cardinality() == m.size());

  // ASCII operator aliases.
  CHECK(subset_algebra("S_C & S_NC", subsets, m.size()).cardinality() == 0);
  CHECK(subset_algebra("S_C | S_NC", subsets, m.size()).cardinality() == m.size());
}

TEST_CASE("subset algebra matches a brute-force oracle on random sets") {
  const auto m = tagged_manifest();
  const auto base = build_subsets(m);
  auto rng = rng::derive(20260403, "algebra", 0);

  for (int iter = 0; iter < 60; ++iter) {
    std::map<std::string, ContextSet> known = base;
    ContextSet a, b;
    a.notation = "A";
    b.notation = "B";
    for (uint32_t i = 0; i < m.size(); ++i) {
      if (rng.next_unit() < 0.4) a.members.push_back(i);
      if (rng.next_unit() < 0.4) b.members.push_back(i);
    }
    known.emplace("A", a);
    known.emplace("B", b);

    const auto sa = to_set(a);
    const auto sb = to_set(b);

    std::set<uint32_t> expect_and;
    for (uint32_t v : sa) {
      if (sb.count(v)) expect_and.insert(v);
    }
    CHECK(to_set(subset_algebra("A ∩ B", known, m.size())) == expect_and);

    std::set<uint32_t> expect_or = sa;
    expect_or.insert(sb.begin(), sb.end());
    CHECK(to_set(subset_algebra("A ∪ B", known, m.size())) == expect_or);

    std::set<uint32_t> expect_diff;
    for (uint32_t v : sa) {
      if (!sb.count(v)) expect_diff.insert(v);
    }
    CHECK(to_set(subset_algebra("A \\ B", known, m.size())) == expect_diff);

    // Algebra laws.
    CHECK(to_set(subset_algebra("A ∩ B", known, m.size())) ==
          to_set(subset_algebra("B ∩ A", known, m.size())));
    CHECK(to_set(subset_algebra("(A ∩ B) ∩ S_C", known, m.size())) ==
          to_set(subset_algebra("A ∩ (B ∩ S_C)", known, m.size())));
    CHECK(to_set(subset_algebra("A ∩ A", known, m.size())) == sa);
    CHECK(subset_algebra("A \\ A", known, m.size()).cardinality() == 0);
  }
}

TEST_CASE("subset algebra keeps manifest order and reports the expression") {
  const auto m = tagged_manifest();
  const auto subsets = build_subsets(m);
  const auto r = subset_algebra("  S_C ∪ S_Dec ", subsets, m.size());
  CHECK(r.notation == "S_C ∪ S_Dec");
  CHECK(std::is_sorted(r.members.begin(), r.members.end()));
}

TEST_CASE("subset algebra rejects unknown notations and bad syntax") {
  const auto m = tagged_manifest();
  const auto subsets = build_subsets(m);
  CHECK_THROWS_AS(subset_algebra("S_Bogus", subsets, m.size()), ConfigError);
  CHECK_THROWS_AS(subset_algebra("S_C ∩", subsets, m.size()), ConfigError);
  CHECK_THROWS_AS(subset_algebra("(S_C", subsets, m.size()), ConfigError);
  CHECK_THROWS_AS(subset_algebra("", subsets, m.size()), ConfigError);
}

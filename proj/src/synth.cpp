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

#include "capfi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "capfi/jsonio.hpp"
#include "capfi/manifest.hpp"
#include "capfi/rng.hpp"
#include "capfi/stats.hpp"
#include "capfi/subsets.hpp"
#include "capfi/version.hpp"

namespace capfi::synth {

namespace {

constexpr double kLinkSteepness = 8.0;
constexpr double kPoseScalePx = 160.0;  // joint dispersion scale

const std::map<std::string, std::vector<std::string>> kAxisValues = {
    {"roadway", {"four_way", "midblock", "t_junction", "other"}},
    {"light", {"red", "yellow", "green", "none"}},
    {"crosswalk", {"zebra", "non_zebra"}},
    {"proximity", {"close", "medium", "far"}},
    {"ego_speed_state", {"accelerating", "constant", "stopped", "decelerating"}},
    {"label", {"cross", "not_cross"}},
};

// Axes where an unfilled quota remainder has a natural sink value.
const std::map<std::string, std::string> kRemainderValue = {
    {"roadway", "other"},
    {"light", "none"},
};

std::map<std::string, double> default_axis_weights(const std::string& axis) {
  if (axis == "roadway") {
    return {{"four_way", 0.45}, {"midblock", 0.2}, {"t_junction", 0.15}, {"other", 0.2}};
  }
  if (axis == "light") {
    return {{"red", 0.1}, {"yellow", 0.05}, {"green", 0.25}, {"none", 0.6}};
  }
  if (axis == "crosswalk") return {{"zebra", 0.3}, {"non_zebra", 0.7}};
  if (axis == "proximity") return {{"close", 0.2}, {"medium", 0.5}, {"far", 0.3}};
  return {{"accelerating", 0.25}, {"constant", 0.3}, {"stopped", 0.2}, {"decelerating", 0.25}};
}

void check_axis_values(const std::string& axis, const std::map<std::string, double>& m) {
  const auto& allowed = kAxisValues.at(axis);
  for (const auto& [value, w] : m) {
    if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
      throw ConfigError("generator spec: unknown value '" + value + "' on axis '" + axis + "'");
    }
    if (w < 0.0) throw ConfigError("generator spec: negative weight on axis '" + axis + "'");
  }
}

// Per-sample assigned value index on one axis, satisfying either exact quotas
// (deterministically shuffled) or per-sample categorical draws.
std::vector<uint8_t> assign_axis(const GeneratorSpec& spec, const std::string& axis) {
  const auto& values = kAxisValues.at(axis);
  const size_t n = spec.n_samples;
  std::vector<uint8_t> out(n, 0);

  auto quota_it = spec.tag_quotas.find(axis);
  if (quota_it != spec.tag_quotas.end()) {
    std::vector<uint8_t> pool;
    pool.reserve(n);
    uint64_t total = 0;
    for (const auto& [value, count] : quota_it->second) {
      const auto vit = std::find(values.begin(), values.end(), value);
      if (vit == values.end()) {
        throw ConfigError("generator spec: unknown value '" + value + "' on axis '" + axis + "'");
      }
      pool.insert(pool.end(), count, static_cast<uint8_t>(vit - values.begin()));
      total += count;
    }
    if (total > n) {
      throw ConfigError("generator spec: quota on axis '" + axis + "' exceeds n_samples");
    }
    if (total < n) {
      const auto rem = kRemainderValue.find(axis);
      if (rem == kRemainderValue.end()) {
        throw ConfigError("generator spec: quota on axis '" + axis + "' must sum to n_samples");
      }
      const auto vit = std::find(values.begin(), values.end(), rem->second);
      pool.insert(pool.end(), n - total, static_cast<uint8_t>(vit - values.begin()));
    }
    auto rng = rng::derive(spec.seed, "quota:" + axis, 0);
    rng::shuffle(pool, rng);
    return pool;
  }

  auto weights_it = spec.tag_weights.find(axis);
  const std::map<std::string, double> weights =
      weights_it != spec.tag_weights.end() ? weights_it->second : default_axis_weights(axis);
  std::vector<double> cumulative;
  std::vector<uint8_t> value_idx;
  double sum = 0.0;
  for (const auto& [value, w] : weights) {
    sum += w;
    cumulative.push_back(sum);
    value_idx.push_back(static_cast<uint8_t>(
        std::find(values.begin(), values.end(), value) - values.begin()));
  }
  for (size_t i = 0; i < n; ++i) {
    const double u = rng::derive(spec.seed, "tag:" + axis, i).next_unit() * sum;
    size_t k = 0;
    while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
    out[i] = value_idx[k];
  }
  return out;
}

struct SpeedRange {
  double lo;  // at least 1 km/h so non-stopped states stay out of the stop band
  double hi;
  double span() const { return hi - lo; }
};

std::vector<double> make_speed_trace(SpeedState state, const SpeedRange& r, int frames,
                                     rng::Stream& rng) {
  const int T = frames;
  std::vector<double> v(static_cast<size_t>(T), 0.0);
  switch (state) {
    case SpeedState::stopped:
      break;
    case SpeedState::constant: {
      const double s = rng.next_range(r.lo + 0.45 * r.span(), r.hi);
      std::fill(v.begin(), v.end(), s);
      break;
    }
    case SpeedState::accelerating: {
      const double v0 = rng.next_range(r.lo, r.lo + 0.25 * r.span());
      double slope = rng.next_range(0.2, 0.8);
      slope = std::min(slope, (r.hi - v0) / static_cast<double>(T - 1));
      for (int t = 0; t < T; ++t) v[static_cast<size_t>(t)] = v0 + slope * t;
      break;
    }
    case SpeedState::decelerating: {
      const double vend = rng.next_range(r.lo, r.lo + 0.15 * r.span());
      double slope = rng.next_range(0.2, 0.8);
      slope = std::min(slope, (r.hi - vend) / static_cast<double>(T - 1));
      for (int t = 0; t < T; ++t) v[static_cast<size_t>(t)] = vend + slope * (T - 1 - t);
      break;
    }
  }
  return v;
}

double target_mean_distance(Proximity bucket, rng::Stream& rng) {
  switch (bucket) {
    case Proximity::close: return rng.next_range(6.0, 14.5);
    case Proximity::medium: return rng.next_range(15.5, 29.5);
    case Proximity::far: return rng.next_range(30.5, 44.5);
  }
  return 20.0;
}

double standardized(double v, double mean, double sd) {
  return sd > 1e-12 ? (v - mean) / sd : 0.0;
}

double link_direction(Feature f) {
  // Crossing associates with slow ego motion and growing boxes.
  return f == Feature::speed ? -1.0 : 1.0;
}

}  // namespace

void validate_spec(const GeneratorSpec& spec) {
  if (spec.n_samples == 0) throw ConfigError("generator spec: n_samples must be positive");
  if (spec.dims.frames < 2) throw ConfigError("generator spec: dims.frames must be >= 2");
  if (spec.dims.pose_joints < 1) throw ConfigError("generator spec: pose_joints must be >= 1");
  if (spec.dims.context_dim < 1) throw ConfigError("generator spec: context_dim must be >= 1");
  if (!(spec.fps > 0.0)) throw ConfigError("generator spec: fps must be positive");
  if (!(spec.noise >= 0.0 && spec.noise < 1.0)) {
    throw ConfigError("generator spec: noise must be in [0, 1)");
  }
  for (const auto& [name, w] : spec.dependency) {
    feature_from_string(name);
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ConfigError("generator spec: dependency weight for '" + name + "' must be in [0,1]");
    }
  }
  for (const auto& [axis, weights] : spec.tag_weights) {
    if (kAxisValues.find(axis) == kAxisValues.end() || axis == "label") {
      throw ConfigError("generator spec: unknown tag axis '" + axis + "'");
    }
    check_axis_values(axis, weights);
    double sum = 0.0;
    for (const auto& [value, w] : weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("generator spec: weights on axis '" + axis + "' must sum to 1");
    }
  }
  for (const auto& [axis, quotas] : spec.tag_quotas) {
    if (kAxisValues.find(axis) == kAxisValues.end()) {
      throw ConfigError("generator spec: unknown tag axis '" + axis + "'");
    }
    (void)quotas;
  }
  if (!(spec.speed_max_kmh > spec.speed_min_kmh)) {
    throw ConfigError("generator spec: speed_max must exceed speed_min");
  }
  if (spec.speed_max_kmh - std::max(spec.speed_min_kmh, 1.0) < 10.0) {
    throw ConfigError("generator spec: speed range too narrow (need >= 10 km/h above 1 km/h)");
  }

  double total_w = 0.0;
  for (const auto& [name, w] : spec.dependency) total_w += w;
  const bool has_label_quota = spec.tag_quotas.find("label") != spec.tag_quotas.end();
  if (total_w == 0.0 && spec.noise == 0.0 && !has_label_quota) {
    throw ConfigError(
        "generator spec: infeasible — all dependency weights zero with zero noise "
        "would produce a constant label");
  }
}

GeneratorSpec spec_from_json(const nlohmann::json& doc) {
  GeneratorSpec spec;
  if (doc.value("schema_version", std::string(kGenSpecSchema)) != kGenSpecSchema) {
    throw ValidationError("generator spec: unsupported schema_version");
  }
  spec.n_samples = doc.at("n_samples").get<uint64_t>();
  spec.seed = doc.at("seed").get<uint64_t>();
  if (doc.contains("dims")) {
    spec.dims.frames = doc["dims"].value("frames", spec.dims.frames);
    spec.dims.pose_joints = doc["dims"].value("pose_joints", spec.dims.pose_joints);
    spec.dims.context_dim = doc["dims"].value("context_dim", spec.dims.context_dim);
  }
  spec.fps = doc.value("fps", spec.fps);
  if (doc.contains("tag_weights")) {
    spec.tag_weights =
        doc["tag_weights"].get<std::map<std::string, std::map<std::string, double>>>();
  }
  if (doc.contains("tag_quotas")) {
    spec.tag_quotas =
        doc["tag_quotas"].get<std::map<std::string, std::map<std::string, uint32_t>>>();
  }
  if (doc.contains("dependency")) {
    spec.dependency = doc["dependency"].get<std::map<std::string, double>>();
  }
  spec.noise = doc.value("noise", 0.0);
  if (doc.contains("kinematics")) {
    spec.speed_min_kmh = doc["kinematics"].value("speed_min", spec.speed_min_kmh);
    spec.speed_max_kmh = doc["kinematics"].value("speed_max", spec.speed_max_kmh);
  }
  if (doc.contains("image")) {
    spec.image_width = doc["image"].value("width", spec.image_width);
    spec.image_height = doc["image"].value("height", spec.image_height);
  }
  validate_spec(spec);
  return spec;
}

GeneratorSpec load_generator_spec(const std::string& path) {
  return spec_from_json(jsonio::parse_file(path));
}

double modality_summary(const Sample& sample, Feature feature, const ModalityDims& dims) {
  const size_t T = static_cast<size_t>(dims.frames);
  switch (feature) {
    case Feature::speed: {
      double sum = 0.0;
      for (double v : sample.speed) sum += v;
      return sum / static_cast<double>(T);
    }
    case Feature::bbox: {
      // Relative area growth per frame over the window.
      auto area = [](const std::array<double, 4>& b) { return (b[2] - b[0]) * (b[3] - b[1]); };
      const double a0 = area(sample.bbox.front());
      const double an = area(sample.bbox.back());
      return (an - a0) / (static_cast<double>(T - 1) * a0);
    }
    case Feature::pose: {
      // Mean per-frame joint dispersion.
      double acc = 0.0;
      for (size_t t = 0; t < T; ++t) {
        const auto& p = sample.pose[t];
        const size_t k2 = p.size();
        double mean = 0.0;
        for (double v : p) mean += v;
        mean /= static_cast<double>(k2);
        double var = 0.0;
        for (double v : p) var += (v - mean) * (v - mean);
        var /= static_cast<double>(k2);
        acc += std::sqrt(var);
      }
      return acc / static_cast<double>(T);
    }
    case Feature::local_context: {
      double sum = 0.0;
      for (size_t t = 0; t < T; ++t) sum += sample.local_context[t][0];
      return sum / static_cast<double>(T);
    }
  }
  return 0.0;
}

Manifest generate(const GeneratorSpec& spec, ExecPolicy policy) {
  validate_spec(spec);
  const size_t n = spec.n_samples;
  const int T = spec.dims.frames;
  const int K = spec.dims.pose_joints;
  const int D = spec.dims.context_dim;

  Manifest m;
  m.schema_version = kManifestSchema;
  m.dims = spec.dims;
  m.fps = spec.fps;
  m.provenance = "synthetic; generator seed " + std::to_string(spec.seed);
  m.samples.resize(n);

  const auto roadway_idx = assign_axis(spec, "roadway");
  const auto light_idx = assign_axis(spec, "light");
  const auto crosswalk_idx = assign_axis(spec, "crosswalk");
  const auto proximity_idx = assign_axis(spec, "proximity");
  const auto state_idx = assign_axis(spec, "ego_speed_state");

  const SpeedRange speed_range{std::max(spec.speed_min_kmh, 1.0), spec.speed_max_kmh};

  parallel_for(policy, n, [&](size_t i) {
    Sample& s = m.samples[i];
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "s%06zu", i);
    s.id = idbuf;

    s.tags.roadway = roadway_from_string(kAxisValues.at("roadway")[roadway_idx[i]]);
    s.tags.light = light_from_string(kAxisValues.at("light")[light_idx[i]]);
    s.tags.crosswalk = crosswalk_from_string(kAxisValues.at("crosswalk")[crosswalk_idx[i]]);
    s.tags.proximity = proximity_from_string(kAxisValues.at("proximity")[proximity_idx[i]]);
    s.tags.ego_speed_state =
        speed_state_from_string(kAxisValues.at("ego_speed_state")[state_idx[i]]);
    s.explicit_proximity = true;
    s.explicit_speed_state = true;

    // Speed trace and the distance trace it implies.
    auto speed_rng = rng::derive(spec.seed, "speed", i);
    s.speed = make_speed_trace(s.tags.ego_speed_state, speed_range, T, speed_rng);

    auto dist_rng = rng::derive(spec.seed, "distance", i);
    const double target_mean = target_mean_distance(s.tags.proximity, dist_rng);
    std::vector<double> cumulative(static_cast<size_t>(T), 0.0);
    for (int t = 1; t < T; ++t) {
      cumulative[static_cast<size_t>(t)] =
          cumulative[static_cast<size_t>(t - 1)] +
          s.speed[static_cast<size_t>(t - 1)] / 3.6 / spec.fps;
    }
    double mean_cum = 0.0;
    for (double c : cumulative) mean_cum += c;
    mean_cum /= static_cast<double>(T);
    const double d0 = target_mean + mean_cum;
    s.distance.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
      s.distance[static_cast<size_t>(t)] = d0 - cumulative[static_cast<size_t>(t)];
    }

    // Bounding boxes: drifting center, geometric area growth.
    auto bbox_rng = rng::derive(spec.seed, "bbox", i);
    const double h0 = bbox_rng.next_range(60.0, 300.0);
    const double aspect = bbox_rng.next_range(0.35, 0.45);
    const double w0 = aspect * h0;
    double cx = bbox_rng.next_range(0.2 * spec.image_width, 0.8 * spec.image_width);
    double cy = bbox_rng.next_range(0.35 * spec.image_height, 0.65 * spec.image_height);
    const double growth = bbox_rng.next_range(-0.02, 0.02);
    const double dx = bbox_rng.next_range(-2.0, 2.0);
    const double dy = bbox_rng.next_range(-2.0, 2.0);
    s.bbox.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
      const double scale = 1.0 + growth * t;
      const double w = w0 * scale;
      const double h = h0 * scale;
      double cxt = cx + dx * t;
      double cyt = cy + dy * t;
      cxt = std::clamp(cxt, w / 2 + 1.0, spec.image_width - w / 2 - 1.0);
      cyt = std::clamp(cyt, h / 2 + 1.0, spec.image_height - h / 2 - 1.0);
      s.bbox[static_cast<size_t>(t)] = {cxt - w / 2, cyt - h / 2, cxt + w / 2, cyt + h / 2};
    }

    // Pose: per-sample joint offsets around an independent anchor, scaled by
    // a spread factor. Deliberately decoupled from the bbox trace so planted
    // dependencies stay attributable to one modality.
    auto pose_rng = rng::derive(spec.seed, "pose", i);
    const double spread = pose_rng.next_range(0.5, 1.5);
    const double anchor_x = pose_rng.next_range(0.2 * spec.image_width, 0.8 * spec.image_width);
    const double anchor_y = pose_rng.next_range(0.3 * spec.image_height, 0.7 * spec.image_height);
    std::vector<double> ox(static_cast<size_t>(K)), oy(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
      ox[static_cast<size_t>(k)] = pose_rng.next_range(-0.5, 0.5);
      oy[static_cast<size_t>(k)] = pose_rng.next_range(-0.5, 0.5);
    }
    s.pose.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
      auto& row = s.pose[static_cast<size_t>(t)];
      row.resize(2 * static_cast<size_t>(K));
      for (int k = 0; k < K; ++k) {
        row[2 * static_cast<size_t>(k)] =
            anchor_x + ox[static_cast<size_t>(k)] * kPoseScalePx * spread * 0.5 +
            pose_rng.next_normal();
        row[2 * static_cast<size_t>(k) + 1] =
            anchor_y + oy[static_cast<size_t>(k)] * kPoseScalePx * spread +
            pose_rng.next_normal();
      }
    }

    // Appearance embedding: planted first component, white elsewhere.
    auto ctx_rng = rng::derive(spec.seed, "local_context", i);
    const double c0 = ctx_rng.next_normal();
    s.local_context.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
      auto& row = s.local_context[static_cast<size_t>(t)];
      row.resize(static_cast<size_t>(D));
      row[0] = c0 + 0.3 * ctx_rng.next_normal();
      for (int d = 1; d < D; ++d) row[static_cast<size_t>(d)] = ctx_rng.next_normal();
    }
  });

  // Label pass: standardized summaries through the logistic link.
  std::array<double, kNumFeatures> w{};
  for (const auto& [name, weight] : spec.dependency) {
    w[static_cast<size_t>(feature_from_string(name))] = weight;
  }
  std::vector<std::array<double, kNumFeatures>> summaries(n);
  parallel_for(policy, n, [&](size_t i) {
    for (Feature f : kAllFeatures) {
      summaries[i][static_cast<size_t>(f)] = modality_summary(m.samples[i], f, spec.dims);
    }
  });
  std::array<double, kNumFeatures> mean{}, sd{};
  for (size_t i = 0; i < n; ++i) {
    for (int f = 0; f < kNumFeatures; ++f) mean[static_cast<size_t>(f)] += summaries[i][static_cast<size_t>(f)];
  }
  for (int f = 0; f < kNumFeatures; ++f) mean[static_cast<size_t>(f)] /= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    for (int f = 0; f < kNumFeatures; ++f) {
      const double d = summaries[i][static_cast<size_t>(f)] - mean[static_cast<size_t>(f)];
      sd[static_cast<size_t>(f)] += d * d;
    }
  }
  for (int f = 0; f < kNumFeatures; ++f) {
    sd[static_cast<size_t>(f)] = std::sqrt(sd[static_cast<size_t>(f)] / static_cast<double>(n));
  }

  std::vector<double> z(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (Feature f : kAllFeatures) {
      const size_t fi = static_cast<size_t>(f);
      z[i] += w[fi] * link_direction(f) *
              standardized(summaries[i][fi], mean[fi], sd[fi]);
    }
  }
  double zm = 0.0, zs = 0.0;
  for (double v : z) zm += v;
  zm /= static_cast<double>(n);
  for (double v : z) zs += (v - zm) * (v - zm);
  zs = std::sqrt(zs / static_cast<double>(n));

  std::vector<double> latent(n);
  for (size_t i = 0; i < n; ++i) {
    const double zt = standardized(z[i], zm, zs);
    const double p = 1.0 / (1.0 + std::exp(-kLinkSteepness * zt));
    const double u = rng::derive(spec.seed, "label-noise", i).next_unit();
    latent[i] = (1.0 - spec.noise) * p + spec.noise * u;
  }

  auto label_quota = spec.tag_quotas.find("label");
  if (label_quota != spec.tag_quotas.end()) {
    uint64_t n_cross = 0, total = 0;
    for (const auto& [value, count] : label_quota->second) {
      if (value == "cross") {
        n_cross = count;
      } else if (value != "not_cross") {
        throw ConfigError("generator spec: label quota values must be cross / not_cross");
      }
      total += count;
    }
    if (total != n) throw ConfigError("generator spec: label quota must sum to n_samples");
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) { return latent[a] > latent[b]; });
    for (size_t r = 0; r < n; ++r) m.samples[order[r]].label = r < n_cross ? 1 : 0;
  } else {
    for (size_t i = 0; i < n; ++i) m.samples[i].label = latent[i] > 0.5 ? 1 : 0;
  }

  return m;
}

PlantReport plant_check(const Manifest& manifest, const GeneratorSpec& spec) {
  PlantReport report;
  report.n = manifest.samples.size();
  if (report.n == 0) return report;

  std::vector<double> labels(report.n);
  for (size_t i = 0; i < report.n; ++i) labels[i] = manifest.samples[i].label;

  for (Feature f : kAllFeatures) {
    std::vector<double> s(report.n);
    for (size_t i = 0; i < report.n; ++i) {
      s[i] = modality_summary(manifest.samples[i], f, manifest.dims);
    }
    PlantDiagnostic d;
    d.feature = f;
    auto it = spec.dependency.find(std::string(to_string(f)));
    d.weight = it != spec.dependency.end() ? it->second : 0.0;
    d.correlation = stats::pearson(s, labels);
    d.null_bound = 3.0 / std::sqrt(static_cast<double>(report.n));
    d.consistent = d.weight > 0.0 || std::abs(d.correlation) <= d.null_bound;
    report.rows.push_back(d);
  }
  return report;
}

}  // namespace capfi::synth

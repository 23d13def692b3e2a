#pragma once

// Synthetic street scenes: static clutter, constant-velocity rectangular
// blockers moving along lanes, a ray-cast 2-D LiDAR and geometric link status.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "blockpred/digest.hpp"
#include "blockpred/error.hpp"
#include "blockpred/geometry.hpp"
#include "blockpred/numfmt.hpp"
#include "blockpred/rng.hpp"

namespace blockpred {

struct SpuriousPoint {
  double angle = 0.0;
  double distance = 0.0;
};

struct NoiseConfig {
  double range_sigma = 0.0;
  double dropout_prob = 0.0;
  double angle_jitter_sigma = 0.0;
  std::vector<SpuriousPoint> spurious_static_points;
  double spurious_prob = 1.0; // per point, per scan
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct Lane {
  Vec2 origin;          // where blockers enter
  double heading = 0.0; // travel direction
  double length = 0.0;  // distance travelled before despawn
};

struct Bounds {
  Vec2 min{-30.0, -10.0};
  Vec2 max{30.0, 20.0};
  bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
};

struct SceneConfig {
  double street_width = 12.0;
  Vec2 tx_position{0.0, 12.0};
  Vec2 rx_position{0.0, 0.0}; // LiDAR is co-located with the receiving unit
  Bounds bounds;
  std::vector<Segment> static_objects;
  double blocker_spawn_rate = 0.0;
  Interval blocker_speed_range{4.0, 10.0};
  Interval blocker_length_range{3.5, 10.0};
  Interval blocker_width_range{1.6, 2.5};
  std::vector<Lane> lanes;
  NoiseConfig noise;
  double sample_rate = 10.0;
  int samples_per_scan = 460;
  double max_range = 16.0;
  bool random_phase = true;
  std::uint64_t seed = 0;
};

// Two-way street in front of the sensor with buildings, poles, a parked car
// and a tree. The tx-rx link crosses both lanes at x = 0.
inline SceneConfig default_scene_config() {
  SceneConfig c;
  const double w = c.street_width;
  auto box = [&](double x0, double y0, double x1, double y1) {
    c.static_objects.push_back({{x0, y0}, {x1, y0}});
    c.static_objects.push_back({{x1, y0}, {x1, y1}});
    c.static_objects.push_back({{x1, y1}, {x0, y1}});
    c.static_objects.push_back({{x0, y1}, {x0, y0}});
  };
  c.static_objects.push_back({{-20.0, w + 2.0}, {-1.5, w + 2.0}}); // far-side facades
  c.static_objects.push_back({{1.5, w + 2.0}, {20.0, w + 2.0}});
  c.static_objects.push_back({{-15.0, -3.0}, {15.0, -3.0}}); // building behind the sensor
  box(-6.2, 1.2, -5.9, 1.5);                                 // lamp posts
  box(6.9, 1.0, 7.2, 1.3);
  box(-12.3, w - 1.5, -12.0, w - 1.2);
  box(9.0, 0.4, 13.5, 2.2);   // parked car
  box(-10.6, 0.6, -9.4, 1.8); // tree trunk / planter
  c.lanes = {
      Lane{{-25.0, w / 3.0}, 0.0, 50.0},
      Lane{{25.0, 2.0 * w / 3.0}, std::numbers::pi, 50.0},
  };
  c.blocker_spawn_rate = 0.25;
  c.noise.range_sigma = 0.01;
  c.noise.dropout_prob = 0.01;
  c.noise.angle_jitter_sigma = 0.002;
  c.noise.spurious_static_points = {{0.35, 7.3}, {1.9, 11.2}, {2.6, 4.4}};
  c.noise.spurious_prob = 0.5;
  return c;
}

inline std::uint64_t config_digest(const SceneConfig& c) {
  Fnv1a h;
  h.add(std::string_view("scene-v1"));
  h.add(c.street_width);
  for (Vec2 p : {c.tx_position, c.rx_position, c.bounds.min, c.bounds.max}) {
    h.add(p.x);
    h.add(p.y);
  }
  h.add(static_cast<std::uint64_t>(c.static_objects.size()));
  for (const auto& s : c.static_objects) {
    for (double v : {s.a.x, s.a.y, s.b.x, s.b.y}) h.add(v);
  }
  h.add(c.blocker_spawn_rate);
  for (const auto& iv : {c.blocker_speed_range, c.blocker_length_range, c.blocker_width_range}) {
    h.add(iv.lo);
    h.add(iv.hi);
  }
  h.add(static_cast<std::uint64_t>(c.lanes.size()));
  for (const auto& l : c.lanes) {
    for (double v : {l.origin.x, l.origin.y, l.heading, l.length}) h.add(v);
  }
  h.add(c.noise.range_sigma);
  h.add(c.noise.dropout_prob);
  h.add(c.noise.angle_jitter_sigma);
  h.add(c.noise.spurious_prob);
  h.add(static_cast<std::uint64_t>(c.noise.spurious_static_points.size()));
  for (const auto& p : c.noise.spurious_static_points) {
    h.add(p.angle);
    h.add(p.distance);
  }
  h.add(c.sample_rate);
  h.add(static_cast<std::int64_t>(c.samples_per_scan));
  h.add(c.max_range);
  h.add(static_cast<std::uint8_t>(c.random_phase));
  h.add(c.seed);
  return h.value();
}

inline void validate(const SceneConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError("scene config: " + m); };
  if (c.tx_position == c.rx_position) fail("tx_position equals rx_position");
  if (!c.bounds.contains(c.tx_position) || !c.bounds.contains(c.rx_position))
    fail("tx/rx outside the scene bounds");
  if (c.samples_per_scan < 1) fail("samples_per_scan must be >= 1");
  if (!(c.sample_rate > 0.0)) fail("sample_rate must be > 0");
  if (!(c.max_range > 0.0)) fail("max_range must be > 0");
  if (!(c.blocker_spawn_rate >= 0.0)) fail("blocker_spawn_rate must be >= 0");
  if (c.blocker_spawn_rate > 0.0 && c.lanes.empty()) fail("nonzero spawn rate with no lanes");
  auto check_interval = [&](const Interval& iv, const char* name, bool strictly_positive) {
    if (!(iv.lo >= 0.0) || !(iv.hi >= iv.lo)) fail(std::string(name) + " must be ordered and nonnegative");
    if (strictly_positive && !(iv.lo > 0.0)) fail(std::string(name) + " must be > 0");
  };
  check_interval(c.blocker_speed_range, "blocker_speed_range", c.blocker_spawn_rate > 0.0);
  check_interval(c.blocker_length_range, "blocker_length_range", c.blocker_spawn_rate > 0.0);
  check_interval(c.blocker_width_range, "blocker_width_range", c.blocker_spawn_rate > 0.0);
  for (const auto& l : c.lanes) {
    if (!(l.length > 0.0)) fail("lane length must be > 0");
  }
  const auto& n = c.noise;
  if (!(n.range_sigma >= 0.0) || !(n.angle_jitter_sigma >= 0.0)) fail("noise sigmas must be >= 0");
  if (!(n.dropout_prob >= 0.0 && n.dropout_prob <= 1.0)) fail("dropout_prob must be in [0,1]");
  if (!(n.spurious_prob >= 0.0 && n.spurious_prob <= 1.0)) fail("spurious_prob must be in [0,1]");
  for (const auto& p : n.spurious_static_points) {
    if (!std::isfinite(p.angle) || !(p.distance >= 0.0 && p.distance <= c.max_range))
      fail("spurious point outside [0, max_range]");
  }
  const Segment link{c.tx_position, c.rx_position};
  for (const auto& s : c.static_objects) {
    if (segments_intersect(s, link)) fail("static object intersects the tx-rx link");
  }
}

struct Blocker {
  Vec2 center; // at spawn_time
  double heading = 0.0;
  double speed = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;
  double spawn_time = 0.0;
  double despawn_time = 0.0;

  bool active_at(double t) const { return t >= spawn_time && t < despawn_time; }
  Rect rect_at(double t) const {
    return {center + (speed * (t - spawn_time)) * unit_from_angle(heading), heading, half_length, half_width};
  }
  friend bool operator==(const Blocker&, const Blocker&) = default;
};

struct Sample {
  double angle = 0.0;
  double distance = 0.0;
  friend bool operator==(Sample, Sample) = default;
};

struct Scan {
  std::int64_t time_index = 0;
  std::vector<Sample> samples;
  friend bool operator==(const Scan&, const Scan&) = default;
};

struct ScanSequence {
  std::vector<Scan> scans;
  std::vector<std::uint8_t> link_status;
  double sample_rate = 10.0;
  double max_range = 16.0;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;

  std::size_t size() const { return scans.size(); }
  friend bool operator==(const ScanSequence&, const ScanSequence&) = default;
};

// Snapshot of the world at one instant.
struct SceneState {
  double time = 0.0;
  std::vector<Rect> blockers;
  std::span<const Segment> statics;
};

struct Scene {
  SceneConfig config;
  std::vector<Blocker> blockers;

  SceneState state_at(double t) const {
    SceneState s;
    s.time = t;
    s.statics = config.static_objects;
    for (const auto& b : blockers) {
      if (b.active_at(t)) s.blockers.push_back(b.rect_at(t));
    }
    return s;
  }
};

// Time before t = 0 over which blockers are scheduled, so that traffic is
// already in steady state at the first scan.
inline double prewarm_seconds(const SceneConfig& c) {
  if (c.blocker_spawn_rate <= 0.0 || c.lanes.empty()) return 0.0;
  double longest = 0.0;
  for (const auto& l : c.lanes) longest = std::max(longest, l.length);
  return longest / c.blocker_speed_range.lo;
}

// Poisson arrivals over [-prewarm, horizon). For each arrival the draws are,
// in order: inter-arrival gap, lane, speed, length, width.
inline Scene build_scene(const SceneConfig& config, double horizon) {
  validate(config);
  Scene scene{config, {}};
  if (config.blocker_spawn_rate <= 0.0) return scene;
  Rng rng = Rng::derive(config.seed, "schedule");
  double t = -prewarm_seconds(config);
  for (;;) {
    t += rng.exponential(config.blocker_spawn_rate);
    if (t >= horizon) break;
    const auto lane_index = rng.below(config.lanes.size());
    const Lane& lane = config.lanes[lane_index];
    Blocker b;
    b.center = lane.origin;
    b.heading = lane.heading;
    b.speed = rng.uniform(config.blocker_speed_range.lo, config.blocker_speed_range.hi);
    b.half_length = 0.5 * rng.uniform(config.blocker_length_range.lo, config.blocker_length_range.hi);
    b.half_width = 0.5 * rng.uniform(config.blocker_width_range.lo, config.blocker_width_range.hi);
    b.spawn_time = t;
    b.despawn_time = t + lane.length / b.speed;
    scene.blockers.push_back(b);
  }
  return scene;
}

// 1 iff the tx-rx segment passes through any active blocker.
inline std::uint8_t link_status(const SceneState& state, Vec2 tx, Vec2 rx) {
  for (const auto& r : state.blockers) {
    if (segment_hits_rect(tx, rx, r)) return 1;
  }
  return 0;
}

inline double nearest_hit(const SceneState& state, Vec2 origin, Vec2 dir) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : state.statics) {
    if (auto t = ray_segment(origin, dir, s); t && *t < best) best = *t;
  }
  for (const auto& r : state.blockers) {
    if (auto t = ray_rect(origin, dir, r); t && *t < best) best = *t;
  }
  return best;
}

// One 360 degree sweep. Rays are emitted in rotation order from a per-scan
// random phase, so the output is not sorted by angle. Every ray consumes the
// same draws (jitter, range noise, dropout) regardless of the noise settings.
inline Scan cast_scan(const SceneState& state, Vec2 sensor, const SceneConfig& config, std::int64_t time_index) {
  const auto P = static_cast<std::size_t>(config.samples_per_scan);
  const auto& noise = config.noise;
  Rng rng = Rng::derive(config.seed, "scan", static_cast<std::uint64_t>(time_index));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double step = two_pi / static_cast<double>(P);
  const double phase = config.random_phase ? rng.uniform(0.0, two_pi) : 0.0;

  Scan scan;
  scan.time_index = time_index;
  scan.samples.resize(P);
  for (std::size_t i = 0; i < P; ++i) {
    const double jitter = rng.normal(0.0, 1.0) * noise.angle_jitter_sigma;
    const double range_noise = rng.normal(0.0, 1.0) * noise.range_sigma;
    const bool dropped = rng.bernoulli(noise.dropout_prob);
    const double angle = wrap_angle(phase + static_cast<double>(i) * step + jitter);
    const double hit = nearest_hit(state, sensor, unit_from_angle(angle));
    double d = 0.0;
    if (hit <= config.max_range) d = std::clamp(hit + range_noise, 0.0, config.max_range);
    if (dropped) d = 0.0;
    scan.samples[i] = {angle, d};
  }
  for (const auto& sp : noise.spurious_static_points) {
    if (!rng.bernoulli(noise.spurious_prob)) continue;
    double rel = std::fmod(sp.angle - phase, two_pi);
    if (rel < 0.0) rel += two_pi;
    const auto i = static_cast<std::size_t>(std::llround(rel / step)) % P;
    scan.samples[i] = {wrap_angle(sp.angle), std::min(sp.distance, config.max_range)};
  }
  // Stored at the precision of the sequence file format so that files round-trip exactly.
  for (auto& s : scan.samples) {
    s.angle = round_g9(s.angle);
    s.distance = round_g9(s.distance);
  }
  return scan;
}

inline std::size_t scan_count(double duration, double sample_rate) {
  return static_cast<std::size_t>(std::floor(duration * sample_rate + 1e-9));
}

// Scans the given scene from the rx position at every sampling instant.
inline ScanSequence simulate_scene(const Scene& scene, double duration) {
  if (!(duration > 0.0)) throw ConfigError("duration must be > 0");
  const auto& c = scene.config;
  ScanSequence seq;
  seq.sample_rate = c.sample_rate;
  seq.max_range = c.max_range;
  seq.seed = c.seed;
  seq.config_digest = config_digest(c);
  const std::size_t n = scan_count(duration, c.sample_rate);
  seq.scans.reserve(n);
  seq.link_status.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / c.sample_rate;
    const SceneState state = scene.state_at(t);
    seq.scans.push_back(cast_scan(state, c.rx_position, c, static_cast<std::int64_t>(k)));
    seq.link_status.push_back(link_status(state, c.tx_position, c.rx_position));
  }
  return seq;
}

inline ScanSequence simulate_sequence(const SceneConfig& config, double duration) {
  if (!(duration > 0.0)) throw ConfigError("duration must be > 0");
  return simulate_scene(build_scene(config, duration), duration);
}

// Blocker-free recording of the same static world, used to build the SCR dictionary.
inline ScanSequence simulate_warmup(SceneConfig config, std::size_t num_scans) {
  config.blocker_spawn_rate = 0.0;
  const double duration = (static_cast<double>(num_scans) + 0.5) / config.sample_rate;
  return simulate_sequence(config, duration);
}

} // namespace blockpred

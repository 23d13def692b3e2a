#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "blockpred/ingest.hpp"
#include "blockpred/scene_sim.hpp"

using namespace blockpred;

namespace {

SceneConfig empty_scene() {
  SceneConfig c;
  c.bounds = {{-30, -10}, {30, 20}};
  c.noise = {};
  c.lanes.push_back({{-25, 4}, 0.0, 50});
  c.seed = 1;
  return c;
}

SceneState state_with(std::vector<Rect> blockers) {
  SceneState s;
  s.blockers = std::move(blockers);
  return s;
}

} // namespace

TEST(SceneSim, ZeroSpawnRateHasNoBlockers) {
  auto c = default_scene_config();
  c.blocker_spawn_rate = 0.0;
  EXPECT_TRUE(build_scene(c, 30.0).blockers.empty());
}

TEST(SceneSim, ScheduleIsDeterministic) {
  auto c = default_scene_config();
  c.seed = 42;
  const auto a = build_scene(c, 30.0);
  const auto b = build_scene(c, 30.0);
  ASSERT_EQ(a.blockers.size(), b.blockers.size());
  for (std::size_t i = 0; i < a.blockers.size(); ++i) {
    EXPECT_EQ(a.blockers[i].spawn_time, b.blockers[i].spawn_time);
    EXPECT_EQ(a.blockers[i].speed, b.blockers[i].speed);
    EXPECT_EQ(a.blockers[i].half_length, b.blockers[i].half_length);
  }
}

// Independent replay of the documented draw order: gap, lane, speed, length, width.
TEST(SceneSim, BlockerCountMatchesReplay) {
  auto c = default_scene_config();
  c.blocker_spawn_rate = 1.0;
  c.seed = 7;
  const double horizon = 30.0;
  std::mt19937_64 eng(splitmix64([&] {
    Fnv1a h;
    h.add(c.seed);
    h.add(std::string_view("schedule"));
    h.add(std::uint64_t{0});
    return h.value();
  }()));
  auto u = [&] { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
  double t = -50.0 / c.blocker_speed_range.lo;
  std::size_t count = 0;
  for (;;) {
    t += -std::log(1.0 - u()) / c.blocker_spawn_rate;
    if (t >= horizon) break;
    for (int k = 0; k < 4; ++k) u();
    ++count;
  }
  EXPECT_EQ(build_scene(c, horizon).blockers.size(), count);
  EXPECT_GT(count, 20u);
}

TEST(SceneSim, InvalidConfigsRejected) {
  auto c = default_scene_config();
  c.tx_position = c.rx_position;
  EXPECT_THROW(validate(c), ConfigError);
  c = default_scene_config();
  c.lanes.clear();
  EXPECT_THROW(validate(c), ConfigError);
  c = default_scene_config();
  c.blocker_speed_range = {5.0, 2.0};
  EXPECT_THROW(validate(c), ConfigError);
  c = default_scene_config();
  c.noise.dropout_prob = 1.5;
  EXPECT_THROW(validate(c), ConfigError);
  c = default_scene_config();
  c.static_objects.push_back({{-1, 6}, {1, 6}}); // across the link
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(SceneSim, LinkStatusGeometry) {
  const Vec2 tx{0, 12}, rx{0, 0};
  EXPECT_EQ(link_status(state_with({}), tx, rx), 0);
  EXPECT_EQ(link_status(state_with({Rect{{0, 6}, 0.0, 1.0, 0.5}}), tx, rx), 1);
  EXPECT_EQ(link_status(state_with({Rect{{0, -5}, 0.0, 1.0, 0.5}}), tx, rx), 0);
  EXPECT_EQ(link_status(state_with({Rect{{3, 6}, 0.0, 1.0, 0.5}}), tx, rx), 0);
}

TEST(SceneSim, LinkStatusIsSymmetric) {
  Rng rng(5);
  for (int k = 0; k < 2000; ++k) {
    const Vec2 a{rng.uniform(-5, 5), rng.uniform(-5, 5)}, b{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Rect r{{rng.uniform(-5, 5), rng.uniform(-5, 5)}, rng.uniform(-3.2, 3.2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
    const auto s = state_with({r});
    ASSERT_EQ(link_status(s, a, b), link_status(s, b, a));
  }
}

TEST(SceneSim, EmptySceneReturnsNoHits) {
  auto c = empty_scene();
  const auto scan = cast_scan(SceneState{}, {0, 0}, c, 0);
  ASSERT_EQ(scan.samples.size(), 460u);
  for (const auto& s : scan.samples) EXPECT_EQ(s.distance, 0.0);
}

TEST(SceneSim, PerpendicularWallAtFiveMeters) {
  auto c = empty_scene();
  c.random_phase = false;
  const std::vector<Segment> wall{{{5.0, -0.5}, {5.0, 0.5}}};
  SceneState s;
  s.statics = wall;
  const auto scan = cast_scan(s, {0, 0}, c, 0);
  EXPECT_EQ(scan.samples[0].angle, 0.0);
  EXPECT_EQ(scan.samples[0].distance, 5.0);
  for (const auto& smp : scan.samples) {
    const bool toward = std::abs(std::tan(smp.angle) * 5.0) <= 0.5 && std::cos(smp.angle) > 0;
    if (!toward) EXPECT_EQ(smp.distance, 0.0);
    else EXPECT_GT(smp.distance, 0.0);
  }
}

TEST(SceneSim, OutOfRangeObjectIsNoReturn) {
  auto c = empty_scene();
  c.random_phase = false;
  const std::vector<Segment> wall{{{16.5, -1}, {16.5, 1}}};
  SceneState s;
  s.statics = wall;
  EXPECT_EQ(cast_scan(s, {0, 0}, c, 0).samples[0].distance, 0.0);
}

TEST(SceneSim, ScanInvariantsUnderNoise) {
  auto c = default_scene_config();
  c.seed = 3;
  const auto seq = simulate_sequence(c, 4.0);
  ASSERT_EQ(seq.size(), 40u);
  ASSERT_EQ(seq.link_status.size(), seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    EXPECT_EQ(seq.scans[t].time_index, static_cast<std::int64_t>(t));
    ASSERT_EQ(seq.scans[t].samples.size(), 460u);
    for (const auto& s : seq.scans[t].samples) {
      EXPECT_GE(s.distance, 0.0);
      EXPECT_LE(s.distance, c.max_range);
      EXPECT_GT(s.angle, -std::numbers::pi);
      EXPECT_LE(s.angle, std::numbers::pi);
    }
  }
}

TEST(SceneSim, ScanCountAndDeterminism) {
  auto c = default_scene_config();
  c.seed = 11;
  const auto a = simulate_sequence(c, 3.0);
  EXPECT_EQ(a.size(), 30u);
  std::ostringstream sa, sb;
  write_sequence(sa, a);
  write_sequence(sb, simulate_sequence(c, 3.0));
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(SceneSim, StaticWorldIsConstantWithoutNoise) {
  auto c = default_scene_config();
  c.blocker_spawn_rate = 0.0;
  c.noise = {};
  c.random_phase = false;
  const auto seq = simulate_sequence(c, 2.0);
  for (std::size_t t = 1; t < seq.size(); ++t) EXPECT_EQ(seq.scans[t].samples, seq.scans[0].samples);
}

// A single blocker crossing the link: clear, then blocked for a contiguous stretch, then clear.
TEST(SceneSim, ConstructedCrossingShowsBlockedStretch) {
  auto c = default_scene_config();
  c.blocker_spawn_rate = 0.0;
  Scene scene = build_scene(c, 4.0);
  Blocker b;
  b.center = {-8.3, 4.0};
  b.heading = 0.0;
  b.speed = 4.0;
  b.half_length = 0.5;
  b.half_width = 0.8;
  b.spawn_time = 0.0;
  b.despawn_time = 10.0;
  scene.blockers.push_back(b);
  const auto seq = simulate_scene(scene, 4.0);
  std::vector<int> runs;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (t == 0 || seq.link_status[t] != seq.link_status[t - 1]) runs.push_back(seq.link_status[t]);
  }
  EXPECT_EQ(runs, (std::vector<int>{0, 1, 0}));
  const auto first = std::find(seq.link_status.begin(), seq.link_status.end(), 1) - seq.link_status.begin();
  EXPECT_GE(first, 13);
  EXPECT_LE(first, 26);
}

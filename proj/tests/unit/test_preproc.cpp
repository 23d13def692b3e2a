#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "blockpred/preproc.hpp"

using namespace blockpred;
constexpr double pi = std::numbers::pi;

namespace {

Scan make_scan(std::vector<Sample> s, std::int64_t t = 0) { return Scan{t, std::move(s)}; }

} // namespace

TEST(Fov, AllOutsideIsEmpty) {
  const auto out = fov_filter(make_scan({{-pi / 2, 3}, {-pi / 2, 4}}), {});
  EXPECT_TRUE(out.samples.empty());
}

TEST(Fov, LowerBoundIsClosed) {
  const FovConfig f;
  EXPECT_EQ(fov_filter(make_scan({{f.phi1, 3}}), f).samples.size(), 1u);
  EXPECT_EQ(fov_filter(make_scan({{f.phi2, 3}}), f).samples.size(), 1u);
  EXPECT_EQ(fov_filter(make_scan({{std::nextafter(f.phi1, -4.0), 3}}), f).samples.size(), 0u);
}

// Counting oracle: nominal angles 2*pi*i/460 mapped into (-pi, pi], counted directly.
TEST(Fov, UniformRaysRetainedCount) {
  std::vector<Sample> s;
  std::size_t expected = 0;
  for (int i = 0; i < 460; ++i) {
    double a = 2.0 * pi * i / 460.0;
    if (a > pi) a -= 2.0 * pi;
    s.push_back({a, 5.0});
    const double deg = (a * 180.0 / pi);
    if (deg >= -30.0 - 1e-9 && deg <= 180.0 + 1e-9) ++expected;
  }
  const auto kept = fov_filter(make_scan(s), {}).samples.size();
  EXPECT_EQ(kept, expected);
  EXPECT_NEAR(static_cast<double>(kept), 460.0 * 210.0 / 360.0, 1.5);
}

TEST(Sort, ExampleOrdering) {
  const auto out = sort_scan(make_scan({{0.5, 3.0}, {-0.2, 0.0}, {0.1, 2.0}}));
  EXPECT_EQ(out.samples, (std::vector<Sample>{{0.1, 2.0}, {0.5, 3.0}, {-0.2, 0.0}}));
}

TEST(Sort, SortedInputUnchangedAndZerosKeepOrder) {
  const std::vector<Sample> sorted{{-1, 1}, {0, 2}, {1, 3}};
  EXPECT_EQ(sort_scan(make_scan(sorted)).samples, sorted);
  const std::vector<Sample> zeros{{2, 0}, {-1, 0}, {0.5, 0}};
  EXPECT_EQ(sort_scan(make_scan(zeros)).samples, zeros);
}

TEST(Sort, IsPermutationWithZeroSuffix) {
  Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    std::vector<Sample> s;
    for (int i = 0; i < 50; ++i) s.push_back({rng.uniform(-pi, pi), rng.bernoulli(0.3) ? 0.0 : rng.uniform(0, 16)});
    const auto out = sort_scan(make_scan(s)).samples;
    auto key = [](const Sample& a, const Sample& b) { return std::pair(a.angle, a.distance) < std::pair(b.angle, b.distance); };
    auto a = s, b = out;
    std::sort(a.begin(), a.end(), key);
    std::sort(b.begin(), b.end(), key);
    ASSERT_EQ(a, b);
    const auto split = std::find_if(out.begin(), out.end(), [](const Sample& x) { return x.distance == 0.0; });
    ASSERT_TRUE(std::all_of(split, out.end(), [](const Sample& x) { return x.distance == 0.0; }));
    ASSERT_TRUE(std::is_sorted(out.begin(), split, [](const Sample& x, const Sample& y) { return x.angle < y.angle; }));
  }
}

TEST(Quantize, BinWidth) {
  EXPECT_NEAR(bin_width({}, {}), 0.016968, 5e-7);
  EXPECT_DOUBLE_EQ(bin_width({}, {}), (7.0 * pi / 6.0) / 216.0);
}

TEST(Quantize, MedianRules) {
  const FovConfig f;
  const QuantConfig q;
  const double c = bin_center(10, f, q), w = bin_width(f, q);
  const Scan odd = make_scan({{c - 0.3 * w, 4.1}, {c, 9.9}, {c + 0.3 * w, 4.3}});
  EXPECT_EQ(quantize_angles(odd, f, q).bins[10], (Sample{c, 9.9}));
  const Scan even = make_scan({{c - 0.2 * w, 4.1}, {c + 0.2 * w, 9.9}});
  EXPECT_EQ(quantize_angles(even, f, q).bins[10], (Sample{c - 0.2 * w, 4.1}));
}

TEST(Quantize, EmptyBinsAndTopEdge) {
  const FovConfig f;
  const QuantConfig q;
  const auto b = quantize_angles(make_scan({{f.phi2, 2.0}}), f, q);
  ASSERT_EQ(b.bins.size(), 216u);
  EXPECT_EQ(b.bins[215], (Sample{f.phi2, 2.0}));
  EXPECT_EQ(b.bins[0], (Sample{bin_center(0, f, q), 0.0}));
}

TEST(Quantize, DistanceExamples) {
  const QuantConfig q;
  const auto one = [&](double d) {
    BinnedScan s;
    s.bins = {{0.0, d}};
    return quantize_distance(s, q).bins[0].distance;
  };
  EXPECT_EQ(one(0.0), 0.0);
  EXPECT_DOUBLE_EQ(one(0.05), 0.034);
  EXPECT_EQ(distance_level(16.999, q), 499);
  EXPECT_NEAR(one(16.999), 16.966, 1e-12);
  EXPECT_EQ(q.span(), 17.0);
}

TEST(Quantize, DistanceIdempotentOnLattice) {
  const QuantConfig q;
  Rng rng(4);
  for (int k = 0; k < 5000; ++k) {
    BinnedScan s;
    s.bins = {{0.0, rng.uniform(0.0, 20.0)}};
    const auto once = quantize_distance(s, q);
    ASSERT_EQ(quantize_distance(once, q), once);
    const int level = lattice_level(once.bins[0].distance, q);
    ASSERT_EQ(once.bins[0].distance, level * q.distance_step);
    ASSERT_LE(level, 499);
  }
}

TEST(Dictionary, IdenticalScansDedup) {
  const FovConfig f;
  const QuantConfig q;
  const auto s = quantize_scan(make_scan({{0.1, 3.0}, {0.5, 4.0}, {1.0, 5.0}}), f, q);
  const std::vector<BinnedScan> scans(10, s);
  EXPECT_EQ(build_dictionary(scans, 10, q).size(), 3u);
  BinnedScan empty = quantize_scan(make_scan({}), f, q);
  EXPECT_TRUE(build_dictionary(std::vector<BinnedScan>(3, empty), 3, q).empty());
  EXPECT_THROW(build_dictionary(scans, 11, q), DataError);
  EXPECT_EQ(kDefaultDictionaryScans, 5000u);
}

TEST(RemoveStatic, ErasesKeysKeepsAngle) {
  const FovConfig f;
  const QuantConfig q;
  BinnedScan s = quantize_scan(make_scan({}), f, q);
  s.bins[10] = {bin_center(10, f, q) + 0.001, 42 * q.distance_step};
  s.bins[11] = {bin_center(11, f, q), 43 * q.distance_step};
  const StaticDictionary dict({{10, 42}}, s.lattice, 1);
  const auto out = remove_static(s, dict, q);
  EXPECT_EQ(out.bins[10], (Sample{s.bins[10].angle, 0.0}));
  EXPECT_EQ(out.bins[11], s.bins[11]);
  EXPECT_EQ(remove_static(out, dict, q), out);
  EXPECT_EQ(remove_static(s, StaticDictionary({}, s.lattice), q), s);
}

TEST(RemoveStatic, LatticeMismatchIsError) {
  const FovConfig f;
  QuantConfig q;
  const auto s = quantize_scan(make_scan({{0.1, 3.0}}), f, q);
  QuantConfig other = q;
  other.distance_step = 0.05;
  const StaticDictionary dict({}, lattice_digest(f, other));
  EXPECT_THROW(remove_static(s, dict, q), DigestMismatch);
}

TEST(Scr, OutputWidthAndZeroNoiseSelfCancellation) {
  auto c = default_scene_config();
  c.blocker_spawn_rate = 0.0;
  c.noise = {};
  const FovConfig f;
  const QuantConfig q;
  const auto warm = simulate_warmup(c, 50);
  const auto dict = build_dictionary(warm, 50, f, q);
  EXPECT_FALSE(dict.empty());
  for (const auto& s : simulate_sequence(c, 2.0).scans) {
    const auto out = scr_pipeline(s, f, q, dict);
    ASSERT_EQ(out.bins.size(), 216u);
    for (const auto& e : out.bins) ASSERT_EQ(e.distance, 0.0);
  }
}

TEST(Scr, SequenceOutputLiesOnLattice) {
  auto c = default_scene_config();
  c.seed = 8;
  const FovConfig f;
  const QuantConfig q;
  const auto dict = build_dictionary(simulate_warmup(c, 200), 200, f, q);
  const auto out = scr_sequence(simulate_sequence(c, 2.0), f, q, dict);
  EXPECT_EQ(out.max_range, 17.0);
  for (const auto& s : out.scans) {
    ASSERT_EQ(s.samples.size(), 216u);
    for (const auto& e : s.samples) {
      const double lv = e.distance / q.distance_step;
      ASSERT_NEAR(lv, std::round(lv), 1e-6);
    }
  }
}

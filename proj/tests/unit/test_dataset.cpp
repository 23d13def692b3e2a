#include <gtest/gtest.h>

#include <numbers>
#include <set>

#include "blockpred/dataset.hpp"

using namespace blockpred;

namespace {

std::vector<std::uint8_t> status(std::initializer_list<std::pair<int, int>> runs) {
  std::vector<std::uint8_t> s;
  for (auto [v, n] : runs) s.insert(s.end(), static_cast<std::size_t>(n), static_cast<std::uint8_t>(v));
  return s;
}

// Frames with a recognizable value per time instance.
ScanSequence frames_for(const std::vector<std::uint8_t>& st, std::size_t width) {
  ScanSequence s;
  s.max_range = 16;
  s.link_status = st;
  for (std::size_t t = 0; t < st.size(); ++t) {
    Scan sc{static_cast<std::int64_t>(t), {}};
    for (std::size_t l = 0; l < width; ++l) sc.samples.push_back({0.5, 0.01 * static_cast<double>(t % 100)});
    s.scans.push_back(sc);
  }
  return s;
}

} // namespace

TEST(Label, Examples) {
  const std::vector<std::uint8_t> a{0, 0, 0, 0}, b{0, 0, 1, 0}, c{0, 0, 0, 1};
  EXPECT_EQ(label_window(a, 0, 3), 0);
  EXPECT_EQ(label_window(b, 0, 3), 1);
  EXPECT_EQ(label_window(c, 0, 2), 0);
  EXPECT_THROW(label_window(a, 1, 3), DataError);
}

TEST(Label, FuzzAgainstSliceOracleAndMonotone) {
  Rng rng(17);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = 12 + rng.below(20);
    std::vector<std::uint8_t> s(n);
    for (auto& v : s) v = rng.bernoulli(0.15);
    const std::size_t t = rng.below(n - 1);
    std::uint8_t prev = 0;
    for (std::size_t tp = 1; t + tp < n && tp <= 10; ++tp) {
      const bool any = std::any_of(s.begin() + static_cast<std::ptrdiff_t>(t + 1),
                                   s.begin() + static_cast<std::ptrdiff_t>(t + tp + 1), [](auto v) { return v != 0; });
      const auto l = label_window(s, t, tp);
      ASSERT_EQ(l, any ? 1 : 0);
      ASSERT_GE(l, prev);
      prev = l;
    }
  }
}

TEST(Trajectories, Examples) {
  EXPECT_EQ(extract_trajectories(status({{0, 40}}), 16), (std::vector<Trajectory>{{0, 40}}));
  EXPECT_EQ(extract_trajectories(status({{0, 20}, {1, 5}, {0, 20}}), 16),
            (std::vector<Trajectory>{{0, 25}, {25, 20}}));
  EXPECT_TRUE(extract_trajectories(status({{0, 10}}), 16).empty());
  EXPECT_EQ(extract_trajectories(status({{1, 3}, {0, 17}}), 16), (std::vector<Trajectory>{{3, 17}}));
}

TEST(Windows, CountFormula) {
  WindowConfig cfg;
  cfg.variant = Variant::scr216;
  cfg.t_pred = 10;
  const auto f = frames_for(status({{0, 30}}), 216);
  EXPECT_EQ(build_windows(f, {0, 30}, cfg, 0).size(), 30u - 16 - 10 + 1);
  const auto g = frames_for(status({{0, 26}}), 216);
  EXPECT_EQ(build_windows(g, {0, 26}, cfg, 0).size(), 1u);
}

TEST(Windows, BlockedObservationSkippedAndLabelled) {
  WindowConfig cfg;
  cfg.variant = Variant::scr216;
  cfg.t_pred = 2;
  const auto st = status({{0, 20}, {1, 5}});
  const auto w = build_windows(frames_for(st, 216), {0, 25}, cfg, 3);
  // anchors 15..19 have clean observation; 20..22 see blockage inside the span
  ASSERT_EQ(w.size(), 5u);
  EXPECT_EQ(w.front().t, 15);
  EXPECT_EQ(w.back().t, 19);
  EXPECT_EQ(w.back().label, 1);
  EXPECT_EQ(w[3].label, 1);
  EXPECT_EQ(w[2].label, 0);
  EXPECT_EQ(w.front().sequence_id, 3);
}

TEST(Windows, WidthMismatchIsError) {
  WindowConfig cfg;
  cfg.variant = Variant::raw460;
  EXPECT_THROW(build_windows(frames_for(status({{0, 30}}), 216), {0, 30}, cfg, 0), ShapeError);
}

TEST(Normalize, Scaling) {
  WindowConfig cfg;
  cfg.variant = Variant::raw460;
  std::vector<Scan> s{Scan{0, {{std::numbers::pi, 8.5}, {0.0, 0.0}}}};
  const auto x = normalize(s, cfg);
  EXPECT_EQ(x.shape(), (nn::Shape{2, 1, 2}));
  EXPECT_EQ(x.at(0, 0, 0), 1.0f);
  EXPECT_EQ(x.at(1, 0, 0), 0.5f);
  EXPECT_EQ(x.at(1, 0, 1), 0.0f);
}

TEST(Normalize, ErasedScrEntriesUseBinCenter) {
  WindowConfig cfg;
  cfg.variant = Variant::scr216;
  std::vector<Scan> s{Scan{0, std::vector<Sample>(216, Sample{0.25, 0.0})}};
  s[0].samples[3] = {0.25, 1.7};
  const auto x = normalize(s, cfg);
  EXPECT_FLOAT_EQ(x.at(0, 0, 0), static_cast<float>(bin_center(0, cfg.fov, cfg.quant) / std::numbers::pi));
  EXPECT_FLOAT_EQ(x.at(0, 0, 3), static_cast<float>(0.25 / std::numbers::pi));
  EXPECT_FLOAT_EQ(x.at(1, 0, 3), 0.1f);
  std::vector<Scan> ragged{Scan{0, std::vector<Sample>(216)}, Scan{1, std::vector<Sample>(215)}};
  EXPECT_THROW(normalize(ragged, cfg), ShapeError);
}

TEST(Split, SequenceLevelAndDeterministic) {
  WindowConfig cfg;
  cfg.variant = Variant::scr216;
  std::vector<ObservationWindow> w;
  for (int s = 0; s < 10; ++s) {
    for (int k = 0; k < 3; ++k) w.push_back({nn::Tensor<float>(nn::Shape{1}), 0, s, k});
  }
  const auto a = split_dataset(w, cfg, 0.2, 1);
  const auto b = split_dataset(w, cfg, 0.2, 1);
  EXPECT_EQ(a.test_sequences.size(), 2u);
  EXPECT_EQ(a.test_sequences, b.test_sequences);
  std::set<std::int64_t> train(a.train_sequences.begin(), a.train_sequences.end());
  for (auto s : a.test_sequences) EXPECT_FALSE(train.contains(s));
  for (auto i : a.test_indices()) EXPECT_TRUE(a.is_test(w[i].sequence_id));
  EXPECT_EQ(a.train_indices().size() + a.test_indices().size(), w.size());

}

TEST(Split, TwoSequencesHalfAndErrors) {
  WindowConfig cfg;
  std::vector<ObservationWindow> w{{nn::Tensor<float>(nn::Shape{1}), 0, 4, 0}, {nn::Tensor<float>(nn::Shape{1}), 1, 9, 0}};
  const auto d = split_dataset(w, cfg, 0.5, 2);
  EXPECT_EQ(d.test_sequences.size(), 1u);
  EXPECT_EQ(d.train_sequences.size(), 1u);
  EXPECT_THROW(split_dataset(w, cfg, 0.0, 2), ConfigError);
  EXPECT_THROW(split_dataset({w[0]}, cfg, 0.5, 2), DataError);
}

TEST(WindowConfig, Validation) {
  WindowConfig c;
  c.t_pred = 11;
  EXPECT_THROW(validate(c), ConfigError);
  c.t_pred = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c.t_pred = 5;
  c.stride = 0;
  EXPECT_THROW(validate(c), ConfigError);
}

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "blockpred/analysis.hpp"

using namespace blockpred;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

AccuracyCurve two_variant_curve() {
  std::vector<CurveEntry> e;
  for (std::size_t tp = 1; tp <= 10; ++tp) {
    e.push_back({"scr-216", tp, {1.0 - 0.01 * static_cast<double>(tp), 0.99, 0.9}, 100});
    e.push_back({"raw-460", tp, {0.95 - 0.02 * static_cast<double>(tp), 0.97, 0.7}, 100});
  }
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), std::size_t{1});
  return accuracy_curve(e, all);
}

} // namespace

TEST(Latency, EndpointsAndRange) {
  EXPECT_DOUBLE_EQ(latency(0.0), 222.8);
  EXPECT_DOUBLE_EQ(latency(1.0), 11.4);
  EXPECT_NEAR(latency(0.5), (222.8 + 11.4) / 2, 1e-12);
  EXPECT_THROW(latency(-0.01), DataError);
  EXPECT_THROW(latency(1.01), DataError);
  EXPECT_THROW(latency(std::nan("")), DataError);
}

TEST(Latency, InvertsExactly) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform();
    const double d = latency(p);
    ASSERT_NEAR((222.8 - d) / (222.8 - 11.4), p, 1e-12);
    ASSERT_LE(d, 222.8);
    ASSERT_GE(d, 11.4);
  }
}

TEST(Latency, ReportRowsAndFormula) {
  const auto c = two_variant_curve();
  const auto rep = latency_report(c, {1, 5, 10});
  ASSERT_EQ(rep.rows.size(), 9u);
  EXPECT_EQ(rep.rows[0].variant, "reactive");
  EXPECT_EQ(rep.rows[0].delta_ms, 222.8);
  EXPECT_EQ(rep.rows[0].speedup, 1.0);
  for (const auto& r : rep.rows) {
    if (r.variant == "reactive") continue;
    const double expect = r.p_hat * 11.4 + (1 - r.p_hat) * 222.8;
    EXPECT_NEAR(r.delta_ms, expect, 1e-12);
    EXPECT_NEAR(r.speedup, 222.8 / expect, 1e-12);
    EXPECT_DOUBLE_EQ(r.seconds, static_cast<double>(r.t_pred) / 10.0);
    EXPECT_EQ(r.p_hat, c.find(r.variant, r.t_pred)->top1);
  }
  EXPECT_THROW(latency_report(c, {11}), DataError);
  EXPECT_THROW(latency_report(AccuracyCurve{}), DataError);
}

TEST(Latency, Baselines) {
  const auto c = two_variant_curve();
  const auto rep = latency_report(c, {1}, {{"other", {{1, 0.5}}}});
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows.back().variant, "other");
  EXPECT_NEAR(rep.rows.back().delta_ms, 117.1, 1e-12);
  EXPECT_THROW(latency_report(c, {5}, {{"other", {{1, 0.5}}}}), DataError);
}

TEST(Curve, MajorityPredictorAndSeconds) {
  // All-zero predictions: top-1 equals the share of the majority class.
  std::vector<std::uint8_t> labels(100, 0), pred(100, 0);
  for (int i = 0; i < 18; ++i) labels[static_cast<std::size_t>(i)] = 1;
  const auto r = summarize(labels, pred);
  AccuracyCurve c;
  c.add("majority", 10, r.top1, r.recall[0], r.recall[1], r.n);
  EXPECT_DOUBLE_EQ(c.rows[0].top1, 0.82);
  EXPECT_DOUBLE_EQ(c.rows[0].seconds, 1.0);
  EXPECT_EQ(c.rows[0].recall_blockage, 0.0);
}

TEST(Curve, MissingAndDuplicateEntries) {
  std::vector<CurveEntry> e{{"a", 1, {0.9, 1, 1}, 1}, {"a", 5, {0.9, 1, 1}, 1}};
  EXPECT_THROW(accuracy_curve(e, {1, 5, 10}), DataError);
  EXPECT_NO_THROW(accuracy_curve(e, {1, 5}));
  e.push_back(e.front());
  EXPECT_THROW(accuracy_curve(e, {1, 5}), DataError);
  AccuracyCurve bad;
  EXPECT_THROW(bad.add("x", 1, 1.5, 0, 0, 1), DataError);
}

TEST(Csv, GoldenHeadersAndRowCounts) {
  const auto c = two_variant_curve();
  const auto a = lines(accuracy_csv(c));
  ASSERT_EQ(a.size(), 21u);
  EXPECT_EQ(a[0], "variant,t_pred,seconds,top1,recall_no_blockage,recall_blockage,n_test");
  EXPECT_EQ(a[1].substr(0, 10), "raw-460,1,");
  const auto l = lines(latency_csv(latency_report(c)));
  ASSERT_EQ(l.size(), 10u);
  EXPECT_EQ(l[0], "variant,t_pred,seconds,p_hat,delta_ms,speedup");
  EXPECT_EQ(l[1].substr(0, 11), "reactive,1,");
  TrainReport tr;
  tr.epochs = {{1, 0.5, 0.8}, {2, 0.25, 0.9}};
  const auto t = lines(train_csv(tr));
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], "epoch,train_loss,test_top1");
  EXPECT_EQ(t[2], "2,0.25,0.9");
}

TEST(Svg, WellFormedEnough) {
  const auto c = two_variant_curve();
  for (const auto& s : {curve_svg(c), latency_svg(latency_report(c))}) {
    EXPECT_EQ(s.rfind("<svg", 0), 0u);
    EXPECT_NE(s.find("</svg>"), std::string::npos);
    EXPECT_NE(s.find("scr-216"), std::string::npos);
  }
}

TEST(Heatmap, ConstantBandsZeroFieldAndTrace) {
  ScanSequence seq;
  seq.max_range = 16;
  const std::size_t T = 20;
  for (std::size_t t = 0; t < T; ++t) {
    Scan s{static_cast<std::int64_t>(t), {}};
    // constant near object on the left, a target that sweeps across angles
    s.samples.push_back({-2.5, 3.0});
    s.samples.push_back({-2.5, 5.0});
    s.samples.push_back({-1.0 + 0.1 * static_cast<double>(t), 8.0});
    s.samples.push_back({0.0, 0.0});
    seq.scans.push_back(s);
    seq.link_status.push_back(t >= 10);
  }
  const auto g = heatmap_grid(seq, 64);
  const double w = 2 * std::numbers::pi / 64;
  const auto left = static_cast<std::size_t>((-2.5 + std::numbers::pi) / w);
  std::size_t nonzero = 0;
  for (std::size_t r = 0; r < T; ++r) {
    EXPECT_EQ(g.at(r, left), 3.0);
    const auto diag = static_cast<std::size_t>((-1.0 + 0.1 * static_cast<double>(r) + std::numbers::pi) / w);
    EXPECT_EQ(g.at(r, diag), 8.0);
    for (std::size_t c = 0; c < 64; ++c) nonzero += g.at(r, c) != 0.0;
  }
  EXPECT_EQ(nonzero, 2 * T);

  ScanSequence empty = seq;
  for (auto& s : empty.scans)
    for (auto& x : s.samples) x.distance = 0.0;
  const auto z = heatmap_grid(empty, 16);
  for (double v : z.cells) EXPECT_EQ(v, 0.0);
  const auto svg = heatmap_svg(z);
  EXPECT_EQ(svg.find("#000000") != std::string::npos, true);
  EXPECT_NE(heatmap_svg(g).find("#d62728"), std::string::npos);
  EXPECT_THROW(heatmap_grid(ScanSequence{}, 16), DataError);
  EXPECT_THROW(heatmap_grid(seq, 0), ConfigError);
}

TEST(Heatmap, ColorOrdering) {
  EXPECT_EQ(heat_color(0.0, 16), "#000000");
  EXPECT_NE(heat_color(1.0, 16), heat_color(15.0, 16));
  EXPECT_GT(std::stoi(heat_color(1.0, 16).substr(1, 2), nullptr, 16),
            std::stoi(heat_color(15.0, 16).substr(1, 2), nullptr, 16));
}

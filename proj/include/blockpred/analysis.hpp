#pragma once

// Result surfaces: accuracy versus prediction interval, hand-off latency, and
// the angle x time distance heatmap. CSV writers keep fixed headers; plots are
// plain SVG strings.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blockpred/dataset.hpp"
#include "blockpred/error.hpp"
#include "blockpred/model.hpp"
#include "blockpred/numfmt.hpp"
#include "blockpred/scene_sim.hpp"

namespace blockpred {

inline constexpr double kReactiveLatencyMs = 222.8;
inline constexpr double kProactiveLatencyMs = 11.4;

// Expected hand-off delay when a fraction p_hat of blockages is predicted in time.
inline double latency(double p_hat) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw DataError("latency: p_hat must lie in [0, 1], got " + format_g9(p_hat));
  return p_hat * kProactiveLatencyMs + (1.0 - p_hat) * kReactiveLatencyMs;
}

struct AccuracyRow {
  std::string variant;
  std::size_t t_pred = 0;
  double seconds = 0.0;
  double top1 = 0.0;
  double recall_no_blockage = 0.0;
  double recall_blockage = 0.0;
  std::size_t n_test = 0;
};

struct AccuracyCurve {
  std::vector<AccuracyRow> rows;
  double sample_rate = 10.0;

  void add(const std::string& variant, std::size_t t_pred, double top1, double recall0, double recall1,
           std::size_t n_test) {
    if (!(top1 >= 0.0 && top1 <= 1.0)) throw DataError("accuracy curve: top-1 outside [0, 1]");
    rows.push_back({variant, t_pred, static_cast<double>(t_pred) / sample_rate, top1, recall0, recall1, n_test});
    std::stable_sort(rows.begin(), rows.end(), [](const AccuracyRow& a, const AccuracyRow& b) {
      return a.variant != b.variant ? a.variant < b.variant : a.t_pred < b.t_pred;
    });
  }

  const AccuracyRow* find(const std::string& variant, std::size_t t_pred) const {
    for (const auto& r : rows) {
      if (r.variant == variant && r.t_pred == t_pred) return &r;
    }
    return nullptr;
  }

  std::vector<std::string> variants() const {
    std::vector<std::string> v;
    for (const auto& r : rows) {
      if (std::find(v.begin(), v.end(), r.variant) == v.end()) v.push_back(r.variant);
    }
    return v;
  }
};

// One evaluated model per (variant, T_P).
struct CurveEntry {
  std::string variant;
  std::size_t t_pred = 0;
  std::array<double, 3> metrics{}; // top-1, recall class 0, recall class 1
  std::size_t n_test = 0;
};

// Builds the curve and checks that every expected T_P is present for each variant.
inline AccuracyCurve accuracy_curve(const std::vector<CurveEntry>& entries, const std::vector<std::size_t>& expected_t_pred,
                                    double sample_rate = 10.0) {
  AccuracyCurve c;
  c.sample_rate = sample_rate;
  for (const auto& e : entries) {
    if (c.find(e.variant, e.t_pred)) throw DataError("accuracy curve: duplicate entry for " + e.variant);
    c.add(e.variant, e.t_pred, e.metrics[0], e.metrics[1], e.metrics[2], e.n_test);
  }
  for (const auto& v : c.variants()) {
    for (auto tp : expected_t_pred) {
      if (!c.find(v, tp))
        throw DataError("accuracy curve: " + v + " is missing T_P=" + std::to_string(tp));
    }
  }
  return c;
}

struct LatencyRow {
  std::string variant;
  std::size_t t_pred = 0;
  double seconds = 0.0;
  double p_hat = 0.0;
  double delta_ms = 0.0;
  double speedup = 0.0;
};

struct LatencyReport {
  std::vector<LatencyRow> rows;
};

inline LatencyRow latency_row(const std::string& variant, std::size_t t_pred, double seconds, double p_hat) {
  const double d = latency(p_hat);
  return {variant, t_pred, seconds, p_hat, d, kReactiveLatencyMs / d};
}

// Per pick: a reactive row, one row per curve variant, then any user-supplied
// baseline accuracies (name -> T_P -> accuracy).
inline LatencyReport latency_report(const AccuracyCurve& curve, const std::vector<std::size_t>& picks = {1, 5, 10},
                                    const std::map<std::string, std::map<std::size_t, double>>& baselines = {}) {
  LatencyReport rep;
  const auto variants = curve.variants();
  if (variants.empty()) throw DataError("latency report: empty accuracy curve");
  for (auto tp : picks) {
    const double sec = static_cast<double>(tp) / curve.sample_rate;
    rep.rows.push_back({"reactive", tp, sec, 0.0, kReactiveLatencyMs, 1.0});
    for (const auto& v : variants) {
      const auto* r = curve.find(v, tp);
      if (!r) throw DataError("latency report: curve lacks " + v + " at T_P=" + std::to_string(tp));
      rep.rows.push_back(latency_row(v, tp, sec, r->top1));
    }
    for (const auto& [name, acc] : baselines) {
      const auto it = acc.find(tp);
      if (it == acc.end()) throw DataError("latency report: baseline " + name + " lacks T_P=" + std::to_string(tp));
      rep.rows.push_back(latency_row(name, tp, sec, it->second));
    }
  }
  return rep;
}

inline constexpr std::string_view kAccuracyCsvHeader =
    "variant,t_pred,seconds,top1,recall_no_blockage,recall_blockage,n_test";
inline constexpr std::string_view kLatencyCsvHeader = "variant,t_pred,seconds,p_hat,delta_ms,speedup";
inline constexpr std::string_view kTrainCsvHeader = "epoch,train_loss,test_top1";

inline std::string accuracy_csv(const AccuracyCurve& c) {
  std::ostringstream os;
  os << kAccuracyCsvHeader << '\n';
  for (const auto& r : c.rows) {
    os << r.variant << ',' << r.t_pred << ',' << format_g9(r.seconds) << ',' << format_g9(r.top1) << ','
       << format_g9(r.recall_no_blockage) << ',' << format_g9(r.recall_blockage) << ',' << r.n_test << '\n';
  }
  return os.str();
}

inline std::string latency_csv(const LatencyReport& rep) {
  std::ostringstream os;
  os << kLatencyCsvHeader << '\n';
  for (const auto& r : rep.rows) {
    os << r.variant << ',' << r.t_pred << ',' << format_g9(r.seconds) << ',' << format_g9(r.p_hat) << ','
       << format_g9(r.delta_ms) << ',' << format_g9(r.speedup) << '\n';
  }
  return os.str();
}

inline std::string train_csv(const TrainReport& rep) {
  std::ostringstream os;
  os << kTrainCsvHeader << '\n';
  for (const auto& e : rep.epochs)
    os << e.epoch << ',' << format_g9(e.train_loss) << ',' << format_g9(e.test_top1) << '\n';
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrc::io, "cannot open " + path + " for writing");
  os << text;
  if (!os) throw FormatError(FormatErrc::io, "write failed: " + path);
}

// ---- SVG -------------------------------------------------------------------

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

inline const std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

inline std::string open(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " +
         num(w) + ' ' + num(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" "
         "height=\"100%\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const char* stroke = "#000") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"" + stroke + "\"/>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill) {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" fill=\"" + fill + "\"/>\n";
}

} // namespace svg

// Top-1 accuracy against prediction interval in seconds, one line per variant.
inline std::string curve_svg(const AccuracyCurve& c) {
  const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  double smax = 0.0;
  for (const auto& r : c.rows) smax = std::max(smax, r.seconds);
  if (smax <= 0.0) smax = 1.0;
  auto X = [&](double s) { return L + pw * s / smax; };
  auto Y = [&](double a) { return T + ph * (1.0 - a); };
  std::string o = svg::open(W, H);
  o += svg::text(W / 2, 22, "Top-1 accuracy vs prediction interval");
  o += svg::line(L, T + ph, L + pw, T + ph) + svg::line(L, T, L, T + ph);
  for (int k = 0; k <= 5; ++k) {
    const double a = k / 5.0;
    o += svg::line(L - 4, Y(a), L, Y(a)) + svg::text(L - 8, Y(a) + 4, format_g9(a), "end");
  }
  for (int k = 0; k <= 5; ++k) {
    const double s = smax * k / 5.0;
    o += svg::line(X(s), T + ph, X(s), T + ph + 4) + svg::text(X(s), T + ph + 18, format_g9(round_g9(s)));
  }
  o += svg::text(L + pw / 2, H - 16, "prediction interval (s)");
  o += "<text x=\"18\" y=\"" + svg::num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       svg::num(T + ph / 2) + ")\">top-1 accuracy</text>\n";
  const auto vs = c.variants();
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const char* col = svg::kPalette[i % svg::kPalette.size()];
    std::string pts;
    for (const auto& r : c.rows) {
      if (r.variant != vs[i]) continue;
      pts += svg::num(X(r.seconds)) + ',' + svg::num(Y(r.top1)) + ' ';
      o += "<circle cx=\"" + svg::num(X(r.seconds)) + "\" cy=\"" + svg::num(Y(r.top1)) + "\" r=\"3\" fill=\"" + col +
           "\"/>\n";
    }
    o += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    o += svg::rect(W - R + 12, T + 20.0 * static_cast<double>(i), 14, 4, col);
    o += svg::text(W - R + 32, T + 20.0 * static_cast<double>(i) + 6, vs[i], "start");
  }
  return o + "</svg>\n";
}

// Grouped bars: one group per pick, one bar per row variant.
inline std::string latency_svg(const LatencyReport& rep) {
  std::vector<std::size_t> picks;
  std::vector<std::string> names;
  for (const auto& r : rep.rows) {
    if (std::find(picks.begin(), picks.end(), r.t_pred) == picks.end()) picks.push_back(r.t_pred);
    if (std::find(names.begin(), names.end(), r.variant) == names.end()) names.push_back(r.variant);
  }
  const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  const double gw = pw / static_cast<double>(std::max<std::size_t>(1, picks.size()));
  const double bw = gw * 0.8 / static_cast<double>(std::max<std::size_t>(1, names.size()));
  auto Y = [&](double ms) { return T + ph * (1.0 - ms / 250.0); };
  std::string o = svg::open(W, H);
  o += svg::text(W / 2, 22, "Hand-off latency");
  o += svg::line(L, T + ph, L + pw, T + ph) + svg::line(L, T, L, T + ph);
  for (int ms = 0; ms <= 250; ms += 50) {
    o += svg::line(L - 4, Y(ms), L, Y(ms)) + svg::text(L - 8, Y(ms) + 4, std::to_string(ms), "end");
  }
  o += "<text x=\"18\" y=\"" + svg::num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       svg::num(T + ph / 2) + ")\">latency (ms)</text>\n";
  for (std::size_t g = 0; g < picks.size(); ++g) {
    const double gx = L + gw * static_cast<double>(g) + gw * 0.1;
    for (const auto& r : rep.rows) {
      if (r.t_pred != picks[g]) continue;
      const auto k = static_cast<std::size_t>(std::find(names.begin(), names.end(), r.variant) - names.begin());
      const double x = gx + bw * static_cast<double>(k);
      o += svg::rect(x, Y(r.delta_ms), bw * 0.9, T + ph - Y(r.delta_ms), svg::kPalette[k % svg::kPalette.size()]);
    }
    double sec = 0.0;
    for (const auto& r : rep.rows) {
      if (r.t_pred == picks[g]) sec = r.seconds;
    }
    o += svg::text(L + gw * (static_cast<double>(g) + 0.5), T + ph + 18, format_g9(round_g9(sec)) + " s");
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    o += svg::rect(W - R + 12, T + 20.0 * static_cast<double>(k), 14, 10, svg::kPalette[k % svg::kPalette.size()]);
    o += svg::text(W - R + 32, T + 20.0 * static_cast<double>(k) + 9, names[k], "start");
  }
  return o + "</svg>\n";
}

// Angle x time distance grid. Each sample lands in the column of its angle;
// a cell holds the nearest nonzero distance seen there, 0 when empty.
struct HeatmapGrid {
  std::size_t rows = 0;    // time instances
  std::size_t columns = 0; // angle columns over [angle_lo, angle_hi]
  double angle_lo = -std::numbers::pi;
  double angle_hi = std::numbers::pi;
  double max_distance = 0.0;
  std::vector<double> cells; // row-major
  std::vector<std::uint8_t> link_status;

  double at(std::size_t r, std::size_t c) const { return cells[r * columns + c]; }
};

inline HeatmapGrid heatmap_grid(const ScanSequence& seq, std::size_t columns, double angle_lo = -std::numbers::pi,
                                double angle_hi = std::numbers::pi) {
  if (seq.scans.empty()) throw DataError("heatmap: empty sequence");
  if (columns < 1 || !(angle_hi > angle_lo)) throw ConfigError("heatmap: bad grid");
  HeatmapGrid g;
  g.rows = seq.scans.size();
  g.columns = columns;
  g.angle_lo = angle_lo;
  g.angle_hi = angle_hi;
  g.max_distance = seq.max_range;
  g.cells.assign(g.rows * columns, 0.0);
  g.link_status = seq.link_status;
  const double w = (angle_hi - angle_lo) / static_cast<double>(columns);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (const auto& s : seq.scans[r].samples) {
      if (s.distance <= 0.0 || s.angle < angle_lo || s.angle > angle_hi) continue;
      const auto c = std::min(columns - 1, static_cast<std::size_t>(std::floor((s.angle - angle_lo) / w)));
      double& cell = g.cells[r * columns + c];
      if (cell == 0.0 || s.distance < cell) cell = s.distance;
    }
  }
  return g;
}

// Near = bright, far = dark; empty cells take the zero color.
inline std::string heat_color(double d, double max_d) {
  if (!(d > 0.0) || !(max_d > 0.0)) return "#000000";
  const double u = std::clamp(1.0 - d / max_d, 0.0, 1.0);
  const auto r = static_cast<int>(std::lround(40 + 215 * u));
  const auto g = static_cast<int>(std::lround(20 + 200 * u * u));
  const auto b = static_cast<int>(std::lround(90 * (1.0 - u) + 30));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string heatmap_svg(const HeatmapGrid& g, const std::string& title = "") {
  const double cw = std::max(1.0, 640.0 / static_cast<double>(g.columns));
  const double rh = std::max(1.0, std::min(6.0, 480.0 / static_cast<double>(g.rows)));
  const double L = 50, T = 30, strip = 12;
  const double pw = cw * static_cast<double>(g.columns), ph = rh * static_cast<double>(g.rows);
  const double W = L + pw + 20, H = T + ph + strip + 50;
  std::string o = svg::open(W, H);
  o += svg::text(L + pw / 2, 18, title.empty() ? "distance heatmap (angle x time)" : title);
  o += "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t r = 0; r < g.rows; ++r) {
    std::size_t c = 0;
    while (c < g.columns) {
      const auto col = heat_color(g.at(r, c), g.max_distance);
      std::size_t e = c + 1;
      while (e < g.columns && heat_color(g.at(r, e), g.max_distance) == col) ++e;
      o += svg::rect(L + cw * static_cast<double>(c), T + rh * static_cast<double>(r), cw * static_cast<double>(e - c),
                     rh, col);
      c = e;
    }
  }
  // Link status strip along the time axis: red where blocked.
  for (std::size_t r = 0; r < g.rows && r < g.link_status.size(); ++r) {
    o += svg::rect(L + pw * static_cast<double>(r) / static_cast<double>(g.rows), T + ph + 4,
                   pw / static_cast<double>(g.rows), strip, g.link_status[r] ? "#d62728" : "#cccccc");
  }
  o += "</g>\n";
  o += svg::text(L + pw / 2, T + ph + strip + 22, "angle (rad) " + format_g9(round_g9(g.angle_lo)) + " .. " +
                                                      format_g9(round_g9(g.angle_hi)) + ", time downwards; strip: link status");
  return o + "</svg>\n";
}

} // namespace blockpred

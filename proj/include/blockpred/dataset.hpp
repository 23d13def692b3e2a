#pragma once

// Observation windows labeled by future blockage, and the sequence-level
// train/test split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "blockpred/digest.hpp"
#include "blockpred/error.hpp"
#include "blockpred/nn/tensor.hpp"
#include "blockpred/preproc.hpp"
#include "blockpred/rng.hpp"
#include "blockpred/scene_sim.hpp"

namespace blockpred {

enum class Variant { raw460, scr216 };

inline const char* to_string(Variant v) { return v == Variant::raw460 ? "raw-460" : "scr-216"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "raw-460") return Variant::raw460;
  if (s == "scr-216") return Variant::scr216;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected raw-460 or scr-216)");
}

inline std::size_t variant_width(Variant v) { return v == Variant::raw460 ? 460 : 216; }

struct WindowConfig {
  std::size_t t_ob = 16;
  std::size_t t_pred = 1;
  std::size_t stride = 1;
  Variant variant = Variant::scr216;
  // Lattice of the SCR frames; erased entries are fed with their bin-center angle.
  FovConfig fov;
  QuantConfig quant;
};

inline void validate(const WindowConfig& c) {
  if (c.t_ob < 1) throw ConfigError("window: t_ob must be >= 1");
  if (c.t_pred < 1 || c.t_pred > 10) throw ConfigError("window: t_pred must be in 1..10");
  if (c.stride < 1) throw ConfigError("window: stride must be >= 1");
}

// Distances are scaled by the span of the distance lattice.
inline double distance_scale(const WindowConfig& c) { return c.quant.span(); }

struct ObservationWindow {
  nn::Tensor<float> x; // 2 x t_ob x W: channel 0 angle / pi, channel 1 distance / span
  std::uint8_t label = 0;
  std::int64_t sequence_id = 0;
  std::int64_t t = 0;
  friend bool operator==(const ObservationWindow&, const ObservationWindow&) = default;
};

// 1 iff any of status[t+1 .. t+t_pred] is blocked.
inline std::uint8_t label_window(std::span<const std::uint8_t> status, std::size_t t, std::size_t t_pred) {
  if (t_pred < 1 || t + t_pred >= status.size())
    throw DataError("label_window: t=" + std::to_string(t) + " with t_pred=" + std::to_string(t_pred) +
                    " exceeds status length " + std::to_string(status.size()));
  for (std::size_t n = 1; n <= t_pred; ++n) {
    if (status[t + n] != 0) return 1;
  }
  return 0;
}

struct Trajectory {
  std::size_t begin = 0;
  std::size_t length = 0;
  std::size_t end() const { return begin + length; }
  friend bool operator==(Trajectory, Trajectory) = default;
};

// Maximal unblocked runs, each extended by the blocked run that follows it.
// Leading blocked instances and trajectories shorter than t_ob + 1 are dropped.
inline std::vector<Trajectory> extract_trajectories(std::span<const std::uint8_t> status, std::size_t t_ob) {
  std::vector<Trajectory> out;
  std::size_t i = 0;
  const std::size_t n = status.size();
  while (i < n) {
    while (i < n && status[i] != 0) ++i;
    if (i == n) break;
    const std::size_t begin = i;
    while (i < n && status[i] == 0) ++i;
    while (i < n && status[i] != 0) ++i;
    if (i - begin >= t_ob + 1) out.push_back({begin, i - begin});
  }
  return out;
}

inline std::vector<Trajectory> extract_trajectories(const ScanSequence& seq, std::size_t t_ob) {
  return extract_trajectories(seq.link_status, t_ob);
}

// Packs scans into the channels-first network input.
inline nn::Tensor<float> normalize(std::span<const Scan> scans, const WindowConfig& cfg) {
  if (scans.empty()) throw DataError("normalize: empty window");
  const std::size_t W = scans.front().samples.size();
  const std::size_t T = scans.size();
  nn::Tensor<float> x({2, T, W});
  const double dscale = distance_scale(cfg);
  for (std::size_t r = 0; r < T; ++r) {
    const auto& s = scans[r].samples;
    if (s.size() != W)
      throw ShapeError("normalize: width " + std::to_string(s.size()) + " at row " + std::to_string(r) +
                       " differs from " + std::to_string(W));
    for (std::size_t l = 0; l < W; ++l) {
      double angle = s[l].angle;
      if (cfg.variant == Variant::scr216 && s[l].distance == 0.0)
        angle = bin_center(static_cast<int>(l), cfg.fov, cfg.quant);
      x.at(0, r, l) = static_cast<float>(angle / std::numbers::pi);
      x.at(1, r, l) = static_cast<float>(s[l].distance / dscale);
    }
  }
  return x;
}

// Stride-spaced anchors t (relative to the trajectory start) whose
// observation span [t - t_ob + 1, t] is entirely unblocked and whose future
// [t + 1, t + t_pred] lies inside the trajectory.
inline std::vector<ObservationWindow> build_windows(const ScanSequence& frames, const Trajectory& traj,
                                                    const WindowConfig& cfg, std::int64_t sequence_id) {
  validate(cfg);
  if (traj.end() > frames.size()) throw DataError("build_windows: trajectory exceeds sequence");
  const std::size_t width = variant_width(cfg.variant);
  std::vector<ObservationWindow> out;
  if (traj.length < cfg.t_ob + cfg.t_pred) return out;
  const std::span<const std::uint8_t> status(frames.link_status.data() + traj.begin, traj.length);
  std::vector<std::size_t> prefix(traj.length + 1, 0); // blocked count in [0, i)
  for (std::size_t i = 0; i < traj.length; ++i) prefix[i + 1] = prefix[i] + (status[i] != 0);
  for (std::size_t t = cfg.t_ob - 1; t + cfg.t_pred < traj.length; t += cfg.stride) {
    if (prefix[t + 1] - prefix[t + 1 - cfg.t_ob] != 0) continue;
    const std::span<const Scan> obs(frames.scans.data() + traj.begin + t + 1 - cfg.t_ob, cfg.t_ob);
    if (obs.front().samples.size() != width)
      throw ShapeError(std::string("build_windows: ") + to_string(cfg.variant) + " expects width " +
                       std::to_string(width) + ", frames have " + std::to_string(obs.front().samples.size()));
    out.push_back({normalize(obs, cfg), label_window(status, t, cfg.t_pred), sequence_id,
                   static_cast<std::int64_t>(traj.begin + t)});
  }
  return out;
}

inline std::vector<ObservationWindow> windows_from_sequence(const ScanSequence& frames, const WindowConfig& cfg,
                                                            std::int64_t sequence_id) {
  std::vector<ObservationWindow> out;
  for (const auto& traj : extract_trajectories(frames, cfg.t_ob)) {
    auto w = build_windows(frames, traj, cfg, sequence_id);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

struct DevDataset {
  WindowConfig config;
  std::vector<ObservationWindow> windows;
  std::vector<std::int64_t> train_sequences; // sorted
  std::vector<std::int64_t> test_sequences;  // sorted

  bool is_test(std::int64_t seq) const {
    return std::binary_search(test_sequences.begin(), test_sequences.end(), seq);
  }
  std::vector<std::size_t> train_indices() const { return indices(false); }
  std::vector<std::size_t> test_indices() const { return indices(true); }

  std::uint64_t digest() const {
    Fnv1a h;
    h.add(std::string_view("dataset-v1"));
    h.add(static_cast<std::uint64_t>(config.t_ob));
    h.add(static_cast<std::uint64_t>(config.t_pred));
    h.add(static_cast<std::uint64_t>(config.stride));
    h.add(std::string_view(to_string(config.variant)));
    h.add(std::span<const std::int64_t>(train_sequences));
    h.add(std::span<const std::int64_t>(test_sequences));
    for (const auto& w : windows) {
      h.add(w.sequence_id);
      h.add(w.t);
      h.add(w.label);
      h.add(w.x.data());
    }
    return h.value();
  }

  friend bool operator==(const DevDataset& a, const DevDataset& b) {
    return a.windows == b.windows && a.train_sequences == b.train_sequences && a.test_sequences == b.test_sequences;
  }

private:
  std::vector<std::size_t> indices(bool test) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (is_test(windows[i].sequence_id) == test) out.push_back(i);
    }
    return out;
  }
};

// Sequence-level split: round(test_fraction * n) sequences (at least one)
// go to the test side, chosen by a seeded shuffle.
inline DevDataset split_dataset(std::vector<ObservationWindow> windows, const WindowConfig& cfg, double test_fraction,
                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("split: test_fraction must be in (0, 1)");
  std::set<std::int64_t> ids;
  for (const auto& w : windows) ids.insert(w.sequence_id);
  std::vector<std::int64_t> seqs(ids.begin(), ids.end());
  const std::size_t n = seqs.size();
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(test_fraction * n)));
  if (n < 2 || n_test >= n)
    throw DataError("split: " + std::to_string(n) + " source sequences are too few for a nonempty split");
  Rng rng = Rng::derive(seed, "split");
  for (std::size_t i = n; i > 1; --i) std::swap(seqs[i - 1], seqs[rng.below(i)]);

  DevDataset ds;
  ds.config = cfg;
  ds.windows = std::move(windows);
  ds.test_sequences.assign(seqs.begin(), seqs.begin() + static_cast<std::ptrdiff_t>(n_test));
  ds.train_sequences.assign(seqs.begin() + static_cast<std::ptrdiff_t>(n_test), seqs.end());
  std::sort(ds.test_sequences.begin(), ds.test_sequences.end());
  std::sort(ds.train_sequences.begin(), ds.train_sequences.end());
  return ds;
}

} // namespace blockpred

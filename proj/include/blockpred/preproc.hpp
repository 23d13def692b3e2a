#pragma once

// Field-of-view filtering and Static Cluster Removal (SCR).
//
// SCR turns a raw, unordered scan into a fixed-width BinnedScan:
//   1. sort by angle, zero-distance samples moved to the end
//   2. quantize angles into Q bins over [phi1, phi2], keep the median sample of each bin
//   3. quantize distances onto a lattice of Qd levels
//   4. (offline) collect the (bin, level) keys of moving-object-free scans
//   5. erase every entry whose key is in that dictionary

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockpred/digest.hpp"
#include "blockpred/error.hpp"
#include "blockpred/scene_sim.hpp"

namespace blockpred {

struct FovConfig {
  double phi1 = -std::numbers::pi / 6.0;
  double phi2 = std::numbers::pi;
};

struct QuantConfig {
  int angle_bins = 216;
  int distance_levels = 500;
  double distance_step = 0.034;

  double span() const { return distance_levels * distance_step; }
};

inline void validate(const FovConfig& f) {
  if (!(f.phi1 > -std::numbers::pi && f.phi1 < f.phi2 && f.phi2 <= std::numbers::pi))
    throw ConfigError("fov: require -pi < phi1 < phi2 <= pi");
}

inline void validate(const QuantConfig& q) {
  if (q.angle_bins < 1 || q.distance_levels < 1 || !(q.distance_step > 0.0))
    throw ConfigError("quant: require angle_bins >= 1, distance_levels >= 1, distance_step > 0");
}

// Identifies the (bin, level) lattice. Bin edges depend on the FoV, so it is
// part of the digest along with the quantization constants.
inline std::uint64_t lattice_digest(const FovConfig& fov, const QuantConfig& q) {
  Fnv1a h;
  h.add(std::string_view("lattice-v1"));
  h.add(fov.phi1);
  h.add(fov.phi2);
  h.add(static_cast<std::int64_t>(q.angle_bins));
  h.add(static_cast<std::int64_t>(q.distance_levels));
  h.add(q.distance_step);
  return h.value();
}

struct BinnedScan {
  std::int64_t time_index = 0;
  std::vector<Sample> bins;
  std::uint64_t lattice = 0;
  friend bool operator==(const BinnedScan&, const BinnedScan&) = default;
};

struct DictKey {
  int angle_bin = 0;
  int distance_level = 0;
  friend auto operator<=>(const DictKey&, const DictKey&) = default;
};

// Keys are kept sorted; membership is a binary search.
class StaticDictionary {
public:
  StaticDictionary() = default;
  StaticDictionary(std::vector<DictKey> keys, std::uint64_t lattice, std::size_t n_d = 0)
      : keys_(std::move(keys)), lattice_(lattice), n_d_(n_d) {
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
  }

  bool contains(DictKey k) const { return std::binary_search(keys_.begin(), keys_.end(), k); }
  std::span<const DictKey> keys() const { return keys_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  std::uint64_t lattice() const { return lattice_; }
  std::size_t n_d() const { return n_d_; }

  friend bool operator==(const StaticDictionary&, const StaticDictionary&) = default;

private:
  std::vector<DictKey> keys_;
  std::uint64_t lattice_ = 0;
  std::size_t n_d_ = 0;
};

inline constexpr std::size_t kDefaultDictionaryScans = 5000;

inline bool in_fov(double angle, const FovConfig& fov) { return angle >= fov.phi1 && angle <= fov.phi2; }

// Keeps samples with angle in the closed interval [phi1, phi2].
inline Scan fov_filter(const Scan& scan, const FovConfig& fov) {
  Scan out;
  out.time_index = scan.time_index;
  for (const auto& s : scan.samples) {
    if (in_fov(s.angle, fov)) out.samples.push_back(s);
  }
  return out;
}

inline Scan sort_scan(const Scan& scan) {
  Scan out = scan;
  std::stable_partition(out.samples.begin(), out.samples.end(),
                        [](const Sample& s) { return s.distance != 0.0; });
  const auto nonzero_end = std::find_if(out.samples.begin(), out.samples.end(),
                                        [](const Sample& s) { return s.distance == 0.0; });
  std::stable_sort(out.samples.begin(), nonzero_end,
                   [](const Sample& a, const Sample& b) { return a.angle < b.angle; });
  return out;
}

inline double bin_width(const FovConfig& fov, const QuantConfig& q) {
  return (fov.phi2 - fov.phi1) / q.angle_bins;
}

inline double bin_center(int bin, const FovConfig& fov, const QuantConfig& q) {
  return fov.phi1 + (bin + 0.5) * bin_width(fov, q);
}

// Bin index of an in-FoV angle; the top edge phi2 belongs to the last bin.
inline int angle_bin(double angle, const FovConfig& fov, const QuantConfig& q) {
  const auto b = static_cast<int>(std::floor((angle - fov.phi1) / bin_width(fov, q)));
  return std::clamp(b, 0, q.angle_bins - 1);
}

inline int distance_level(double d, const QuantConfig& q) {
  if (d <= 0.0) return 0;
  // Largest k with k * step <= d as evaluated in floating point, so that
  // re-quantizing a lattice value returns the same level.
  double level = std::floor(d / q.distance_step);
  if ((level + 1.0) * q.distance_step <= d) level += 1.0;
  else if (level * q.distance_step > d) level -= 1.0;
  return static_cast<int>(std::min(level, static_cast<double>(q.distance_levels - 1)));
}

// Level of a distance that already lies on the lattice.
inline int lattice_level(double d, const QuantConfig& q) {
  return static_cast<int>(std::lround(d / q.distance_step));
}

// Expects sort_scan output. For each bin, the sample at the lower-median
// position of the bin's angle-sorted run is kept; empty bins get the bin
// center with distance 0.
inline BinnedScan quantize_angles(const Scan& sorted, const FovConfig& fov, const QuantConfig& q) {
  BinnedScan out;
  out.time_index = sorted.time_index;
  out.lattice = lattice_digest(fov, q);
  out.bins.resize(static_cast<std::size_t>(q.angle_bins));
  for (int b = 0; b < q.angle_bins; ++b) out.bins[static_cast<std::size_t>(b)] = {bin_center(b, fov, q), 0.0};

  const auto& s = sorted.samples;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i].distance == 0.0) break; // zero suffix
    if (!in_fov(s[i].angle, fov)) {
      ++i;
      continue;
    }
    const int b = angle_bin(s[i].angle, fov, q);
    std::size_t j = i;
    while (j < s.size() && s[j].distance != 0.0 && in_fov(s[j].angle, fov) && angle_bin(s[j].angle, fov, q) == b) ++j;
    out.bins[static_cast<std::size_t>(b)] = s[i + (j - i - 1) / 2];
    i = j;
  }
  return out;
}

inline BinnedScan quantize_distance(const BinnedScan& scan, const QuantConfig& q) {
  BinnedScan out = scan;
  for (auto& e : out.bins) {
    if (e.distance == 0.0) continue;
    e.distance = distance_level(e.distance, q) * q.distance_step;
  }
  return out;
}

// Union of the nonzero (bin, level) keys of the first n_d scans.
inline StaticDictionary build_dictionary(std::span<const BinnedScan> clean_scans, std::size_t n_d,
                                         const QuantConfig& q) {
  if (clean_scans.size() < n_d)
    throw DataError("build_dictionary: need " + std::to_string(n_d) + " scans, got " +
                    std::to_string(clean_scans.size()));
  std::vector<DictKey> keys;
  std::uint64_t lattice = 0;
  for (std::size_t t = 0; t < n_d; ++t) {
    const auto& scan = clean_scans[t];
    if (t == 0) lattice = scan.lattice;
    else if (scan.lattice != lattice) throw DigestMismatch("build_dictionary: scans quantized on different lattices");
    for (std::size_t b = 0; b < scan.bins.size(); ++b) {
      if (scan.bins[b].distance == 0.0) continue;
      keys.push_back({static_cast<int>(b), lattice_level(scan.bins[b].distance, q)});
    }
  }
  return StaticDictionary(std::move(keys), lattice, n_d);
}

inline BinnedScan remove_static(const BinnedScan& scan, const StaticDictionary& dict, const QuantConfig& q) {
  if (scan.lattice != dict.lattice())
    throw DigestMismatch("remove_static: scan lattice " + hex_digest(scan.lattice) + " != dictionary lattice " +
                         hex_digest(dict.lattice()));
  BinnedScan out = scan;
  for (std::size_t b = 0; b < out.bins.size(); ++b) {
    auto& e = out.bins[b];
    if (e.distance == 0.0) continue;
    if (dict.contains({static_cast<int>(b), lattice_level(e.distance, q)})) e.distance = 0.0;
  }
  return out;
}

// Steps 1-3 only; the input for dictionary construction.
inline BinnedScan quantize_scan(const Scan& scan, const FovConfig& fov, const QuantConfig& q) {
  return quantize_distance(quantize_angles(sort_scan(fov_filter(scan, fov)), fov, q), q);
}

inline BinnedScan scr_pipeline(const Scan& scan, const FovConfig& fov, const QuantConfig& q,
                               const StaticDictionary& dict) {
  return remove_static(quantize_scan(scan, fov, q), dict, q);
}

inline std::vector<BinnedScan> quantize_sequence(const ScanSequence& seq, const FovConfig& fov, const QuantConfig& q) {
  std::vector<BinnedScan> out;
  out.reserve(seq.size());
  for (const auto& s : seq.scans) out.push_back(quantize_scan(s, fov, q));
  return out;
}

inline StaticDictionary build_dictionary(const ScanSequence& warmup, std::size_t n_d, const FovConfig& fov,
                                         const QuantConfig& q) {
  const auto binned = quantize_sequence(warmup, fov, q);
  return build_dictionary(binned, n_d, q);
}

// SCR output of a whole sequence, as a Q-wide ScanSequence on the lattice span,
// rounded to the sequence file precision.
inline ScanSequence scr_sequence(const ScanSequence& seq, const FovConfig& fov, const QuantConfig& q,
                                 const StaticDictionary& dict) {
  ScanSequence out;
  out.sample_rate = seq.sample_rate;
  out.max_range = q.span();
  out.seed = seq.seed;
  out.config_digest = dict.lattice();
  out.link_status = seq.link_status;
  out.scans.reserve(seq.size());
  for (const auto& s : seq.scans) {
    auto b = scr_pipeline(s, fov, q, dict);
    for (auto& e : b.bins) {
      e.angle = round_g9(e.angle);
      e.distance = round_g9(e.distance);
    }
    out.scans.push_back({b.time_index, std::move(b.bins)});
  }
  return out;
}

} // namespace blockpred

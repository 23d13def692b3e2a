#pragma once

// On-disk formats:
//   .scanseq.csv  scan sequences (versioned header line + one row per sample)
//   .scrdict.csv  static dictionaries (sorted angle_bin,distance_level keys)
//   .winds.bin    observation-window datasets (binary container, JSON header)
// plus a column-mapped CSV adapter for externally recorded LiDAR data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blockpred/binio.hpp"
#include "blockpred/dataset.hpp"
#include "blockpred/digest.hpp"
#include "blockpred/error.hpp"
#include "blockpred/numfmt.hpp"
#include "blockpred/preproc.hpp"
#include "blockpred/scene_sim.hpp"

namespace blockpred {

inline constexpr int kSequenceFormatVersion = 1;
inline constexpr std::string_view kSequenceMagic = "# blockpred-scanseq";
inline constexpr std::string_view kSequenceColumns = "time_index,sample_index,angle,distance,link_status";
inline constexpr std::string_view kDictMagic = "# blockpred-scrdict";
inline constexpr std::string_view kDictColumns = "angle_bin,distance_level";
inline constexpr std::string_view kWindowsMagic = "BPWINDS1";
inline constexpr int kWindowsFormatVersion = 1;

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

// "# magic k1=v1 k2=v2 ..." -> map
inline std::map<std::string, std::string> parse_header_line(std::string_view line, std::string_view magic) {
  if (line.substr(0, magic.size()) != magic) throw FormatError(FormatErrc::malformed_header, "missing magic line");
  std::map<std::string, std::string> kv;
  std::istringstream is{std::string(line.substr(magic.size()))};
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw FormatError(FormatErrc::malformed_header, "bad field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& k) {
  const auto it = kv.find(k);
  if (it == kv.end()) throw FormatError(FormatErrc::malformed_header, "header lacks '" + k + "'");
  return it->second;
}

inline double header_double(const std::map<std::string, std::string>& kv, const std::string& k) {
  const auto v = parse_double(require_key(kv, k));
  if (!v) throw FormatError(FormatErrc::malformed_header, "header field '" + k + "' is not numeric");
  return *v;
}

template <class Int>
Int header_int(const std::map<std::string, std::string>& kv, const std::string& k) {
  const auto v = parse_int<Int>(require_key(kv, k));
  if (!v) throw FormatError(FormatErrc::malformed_header, "header field '" + k + "' is not an integer");
  return *v;
}

inline std::uint64_t header_digest(const std::map<std::string, std::string>& kv, const std::string& k) {
  const auto v = parse_hex_digest(require_key(kv, k));
  if (!v) throw FormatError(FormatErrc::malformed_header, "header field '" + k + "' is not a hex digest");
  return *v;
}

} // namespace detail

inline std::string sequence_header(const ScanSequence& seq) {
  const std::size_t P = seq.scans.empty() ? 0 : seq.scans.front().samples.size();
  std::string h(kSequenceMagic);
  h += " version=" + std::to_string(kSequenceFormatVersion);
  h += " samples_per_scan=" + std::to_string(P);
  h += " sample_rate=" + format_g9(seq.sample_rate);
  h += " max_range=" + format_g9(seq.max_range);
  h += " seed=" + std::to_string(seq.seed);
  h += " config_digest=" + hex_digest(seq.config_digest);
  h += " scans=" + std::to_string(seq.scans.size());
  return h;
}

inline void write_sequence(std::ostream& os, const ScanSequence& seq) {
  if (seq.link_status.size() != seq.scans.size())
    throw DataError("write_sequence: link_status length differs from scan count");
  os << sequence_header(seq) << '\n' << kSequenceColumns << '\n';
  std::string line;
  for (std::size_t t = 0; t < seq.scans.size(); ++t) {
    const auto& scan = seq.scans[t];
    const std::string prefix = std::to_string(scan.time_index) + ',';
    const std::string suffix = ',' + std::to_string(static_cast<int>(seq.link_status[t])) + '\n';
    for (std::size_t i = 0; i < scan.samples.size(); ++i) {
      line = prefix;
      line += std::to_string(i);
      line += ',';
      line += format_g9(scan.samples[i].angle);
      line += ',';
      line += format_g9(scan.samples[i].distance);
      line += suffix;
      os << line;
    }
  }
}

inline void write_sequence(const ScanSequence& seq, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrc::io, "cannot open " + path + " for writing");
  write_sequence(os, seq);
  if (!os) throw FormatError(FormatErrc::io, "write failed: " + path);
}

inline ScanSequence read_sequence(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(FormatErrc::malformed_header, name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto kv = detail::parse_header_line(line, kSequenceMagic);
  if (detail::header_int<int>(kv, "version") != kSequenceFormatVersion)
    throw FormatError(FormatErrc::unsupported_version, name + ": version " + detail::require_key(kv, "version"));
  const auto P = detail::header_int<std::size_t>(kv, "samples_per_scan");
  const auto n_scans = detail::header_int<std::size_t>(kv, "scans");
  ScanSequence seq;
  seq.sample_rate = detail::header_double(kv, "sample_rate");
  seq.max_range = detail::header_double(kv, "max_range");
  seq.seed = detail::header_int<std::uint64_t>(kv, "seed");
  seq.config_digest = detail::header_digest(kv, "config_digest");
  if (n_scans > 0 && P == 0) throw FormatError(FormatErrc::malformed_header, name + ": samples_per_scan is 0");

  if (!std::getline(is, line)) throw FormatError(FormatErrc::malformed_header, name + ": missing column header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSequenceColumns) throw FormatError(FormatErrc::malformed_header, name + ": unexpected columns");

  auto finish_scan = [&](std::int64_t t) {
    if (seq.scans.back().samples.size() != P)
      throw FormatError(FormatErrc::row_count, name + ": time_index " + std::to_string(t) + " has " +
                                                   std::to_string(seq.scans.back().samples.size()) +
                                                   " samples, expected " + std::to_string(P));
  };

  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = detail::split_csv(line);
    if (cols.size() != 5)
      throw FormatError(FormatErrc::inconsistent, name + ": row " + std::to_string(row) + " has " +
                                                      std::to_string(cols.size()) + " columns");
    const auto t = parse_int<std::int64_t>(cols[0]);
    const auto i = parse_int<std::size_t>(cols[1]);
    const auto angle = parse_double(cols[2]);
    const auto dist = parse_double(cols[3]);
    const auto link = parse_int<int>(cols[4]);
    if (!t || !i || !angle || !dist || !link)
      throw FormatError(FormatErrc::non_numeric, name + ": row " + std::to_string(row));
    if (!std::isfinite(*angle)) throw FormatError(FormatErrc::range, name + ": non-finite angle at row " + std::to_string(row));
    if (!(*dist >= 0.0 && *dist <= seq.max_range))
      throw FormatError(FormatErrc::range, name + ": distance " + std::string(cols[3]) + " outside [0, max_range] at row " +
                                               std::to_string(row));
    if (*link != 0 && *link != 1)
      throw FormatError(FormatErrc::range, name + ": link_status must be 0 or 1 at row " + std::to_string(row));

    if (seq.scans.empty() || *t != seq.scans.back().time_index) {
      if (!seq.scans.empty()) {
        finish_scan(seq.scans.back().time_index);
        if (*t != seq.scans.back().time_index + 1)
          throw FormatError(FormatErrc::inconsistent, name + ": time_index jumps from " +
                                                          std::to_string(seq.scans.back().time_index) + " to " +
                                                          std::to_string(*t));
      }
      seq.scans.push_back({*t, {}});
      seq.scans.back().samples.reserve(P);
      seq.link_status.push_back(static_cast<std::uint8_t>(*link));
    } else if (seq.link_status.back() != *link) {
      throw FormatError(FormatErrc::inconsistent, name + ": link_status changes within time_index " + std::to_string(*t));
    }
    auto& samples = seq.scans.back().samples;
    if (*i != samples.size())
      throw FormatError(FormatErrc::row_count, name + ": time_index " + std::to_string(*t) + " sample_index " +
                                                   std::to_string(*i) + " out of order (expected " +
                                                   std::to_string(samples.size()) + ")");
    if (samples.size() == P)
      throw FormatError(FormatErrc::row_count,
                        name + ": time_index " + std::to_string(*t) + " has more than " + std::to_string(P) + " samples");
    samples.push_back({*angle, *dist});
  }
  if (!seq.scans.empty()) finish_scan(seq.scans.back().time_index);
  if (seq.scans.size() != n_scans)
    throw FormatError(FormatErrc::row_count, name + ": header declares " + std::to_string(n_scans) + " scans, found " +
                                                 std::to_string(seq.scans.size()));
  return seq;
}

inline ScanSequence read_sequence(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrc::io, "cannot open " + path);
  return read_sequence(is, path);
}

// Column names for read_external_csv. One row per LiDAR sample; rows of one
// capture share a time value and must be contiguous.
struct CsvMapping {
  std::string time_column = "time";
  std::string angle_column = "angle";
  std::string distance_column = "distance";
  std::string link_column = "link_status";
  bool degrees = false;
  double max_range = 16.0;
  double sample_rate = 10.0;
};

// Angles are converted to radians and wrapped to (-pi, pi]; distances are
// clamped to [0, max_range]. Captures are renumbered 0, 1, 2, ...
inline ScanSequence read_external_csv(std::istream& is, const CsvMapping& m, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(FormatErrc::missing_column, name + ": empty file");
  const auto header = detail::split_csv(line);
  auto column = [&](const std::string& col) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (detail::trim(header[i]) == col) return i;
    }
    throw FormatError(FormatErrc::missing_column, name + ": missing column '" + col + "'");
  };
  const std::size_t ct = column(m.time_column), ca = column(m.angle_column), cd = column(m.distance_column),
                    cl = column(m.link_column);
  ScanSequence seq;
  seq.sample_rate = m.sample_rate;
  seq.max_range = m.max_range;
  std::string current_time;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = detail::split_csv(line);
    if (cols.size() != header.size())
      throw FormatError(FormatErrc::inconsistent, name + ": row " + std::to_string(row) + " has " +
                                                      std::to_string(cols.size()) + " columns");
    const auto angle = parse_double(detail::trim(cols[ca]));
    const auto dist = parse_double(detail::trim(cols[cd]));
    const auto link = parse_double(detail::trim(cols[cl]));
    if (!angle || !dist || !link || !std::isfinite(*angle) || !std::isfinite(*dist))
      throw FormatError(FormatErrc::non_numeric, name + ": row " + std::to_string(row));
    const std::string t(detail::trim(cols[ct]));
    if (seq.scans.empty() || t != current_time) {
      current_time = t;
      seq.scans.push_back({static_cast<std::int64_t>(seq.scans.size()), {}});
      seq.link_status.push_back(*link != 0.0 ? 1 : 0);
    }
    const double rad = m.degrees ? *angle * std::numbers::pi / 180.0 : *angle;
    seq.scans.back().samples.push_back({wrap_angle(rad), std::clamp(*dist, 0.0, m.max_range)});
  }
  if (!seq.scans.empty()) {
    const std::size_t P = seq.scans.front().samples.size();
    for (const auto& s : seq.scans) {
      if (s.samples.size() != P)
        throw FormatError(FormatErrc::row_count, name + ": capture " + std::to_string(s.time_index) + " has " +
                                                     std::to_string(s.samples.size()) + " samples, first capture has " +
                                                     std::to_string(P));
    }
  }
  return seq;
}

inline ScanSequence read_external_csv(const std::string& path, const CsvMapping& m) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrc::io, "cannot open " + path);
  return read_external_csv(is, m, path);
}

inline void write_dictionary(std::ostream& os, const StaticDictionary& dict, const QuantConfig& q) {
  os << kDictMagic << " version=1 lattice=" << hex_digest(dict.lattice()) << " n_d=" << dict.n_d()
     << " angle_bins=" << q.angle_bins << " distance_levels=" << q.distance_levels
     << " distance_step=" << format_g9(q.distance_step) << " keys=" << dict.size() << '\n';
  os << kDictColumns << '\n';
  for (const auto& k : dict.keys()) os << k.angle_bin << ',' << k.distance_level << '\n';
}

inline void write_dictionary(const StaticDictionary& dict, const QuantConfig& q, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrc::io, "cannot open " + path + " for writing");
  write_dictionary(os, dict, q);
  if (!os) throw FormatError(FormatErrc::io, "write failed: " + path);
}

inline StaticDictionary read_dictionary(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(FormatErrc::malformed_header, name + ": empty file");
  const auto kv = detail::parse_header_line(line, kDictMagic);
  if (detail::header_int<int>(kv, "version") != 1)
    throw FormatError(FormatErrc::unsupported_version, name + ": version " + detail::require_key(kv, "version"));
  const auto lattice = detail::header_digest(kv, "lattice");
  const auto n_d = detail::header_int<std::size_t>(kv, "n_d");
  const auto bins = detail::header_int<int>(kv, "angle_bins");
  const auto levels = detail::header_int<int>(kv, "distance_levels");
  const auto n_keys = detail::header_int<std::size_t>(kv, "keys");
  if (!std::getline(is, line) || detail::trim(line) != kDictColumns)
    throw FormatError(FormatErrc::malformed_header, name + ": unexpected columns");
  std::vector<DictKey> keys;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = detail::split_csv(line);
    if (cols.size() != 2) throw FormatError(FormatErrc::inconsistent, name + ": expected 2 columns");
    const auto b = parse_int<int>(cols[0]);
    const auto l = parse_int<int>(cols[1]);
    if (!b || !l) throw FormatError(FormatErrc::non_numeric, name + ": " + line);
    if (*b < 0 || *b >= bins || *l < 0 || *l >= levels)
      throw FormatError(FormatErrc::range, name + ": key (" + line + ") outside the lattice");
    if (!keys.empty() && !(keys.back() < DictKey{*b, *l}))
      throw FormatError(FormatErrc::inconsistent, name + ": keys not strictly sorted at (" + line + ")");
    keys.push_back({*b, *l});
  }
  if (keys.size() != n_keys)
    throw FormatError(FormatErrc::row_count, name + ": header declares " + std::to_string(n_keys) + " keys, found " +
                                                 std::to_string(keys.size()));
  return StaticDictionary(std::move(keys), lattice, n_d);
}

inline StaticDictionary read_dictionary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrc::io, "cannot open " + path);
  return read_dictionary(is, path);
}

// Binary window container. Windows of one sequence overlap, so each distinct
// frame is stored once. After the JSON header, per source sequence (ascending):
//   i64 sequence_id, u32 n_frames, n_frames x (i64 t, f32[2][W]),
//   u32 n_windows, n_windows x (i64 t, u8 label)
// A window anchored at t uses frames t - t_ob + 1 .. t.
inline void write_windows(const DevDataset& ds, const std::string& path) {
  const std::size_t W = variant_width(ds.config.variant);
  const std::size_t T = ds.config.t_ob;
  const nn::Shape shape{2, T, W};
  std::map<std::int64_t, std::map<std::int64_t, const ObservationWindow*>> frames; // seq -> frame t -> source window
  std::map<std::int64_t, std::vector<const ObservationWindow*>> anchors;
  for (const auto& w : ds.windows) {
    nn::require_shape(w.x, shape, "write_windows");
    for (std::size_t r = 0; r < T; ++r) {
      const auto ft = w.t - static_cast<std::int64_t>(T - 1 - r);
      const auto [it, fresh] = frames[w.sequence_id].try_emplace(ft, &w);
      if (!fresh) {
        // Same frame must carry the same values in every window that holds it.
        const auto& o = *it->second;
        const std::size_t ro = static_cast<std::size_t>(ft - (o.t - static_cast<std::int64_t>(T - 1)));
        for (std::size_t c = 0; c < 2; ++c) {
          if (!std::equal(&w.x.at(c, r, 0), &w.x.at(c, r, 0) + W, &o.x.at(c, ro, 0)))
            throw DataError("write_windows: sequence " + std::to_string(w.sequence_id) + " frame " +
                            std::to_string(ft) + " differs between windows");
        }
      }
    }
    anchors[w.sequence_id].push_back(&w);
  }
  nlohmann::json h;
  h["version"] = kWindowsFormatVersion;
  h["variant"] = to_string(ds.config.variant);
  h["t_ob"] = ds.config.t_ob;
  h["t_pred"] = ds.config.t_pred;
  h["stride"] = ds.config.stride;
  h["width"] = W;
  h["channels"] = 2;
  h["fov"] = {ds.config.fov.phi1, ds.config.fov.phi2};
  h["quant"] = {{"angle_bins", ds.config.quant.angle_bins},
                {"distance_levels", ds.config.quant.distance_levels},
                {"distance_step", ds.config.quant.distance_step}};
  h["count"] = ds.windows.size();
  h["sequences"] = anchors.size();
  h["train_sequences"] = ds.train_sequences;
  h["test_sequences"] = ds.test_sequences;
  h["digest"] = hex_digest(ds.digest());
  auto os = binio::open_out(path);
  binio::write_header(os, kWindowsMagic, h);
  std::vector<float> row(2 * W);
  for (const auto& [seq, fr] : frames) {
    binio::write_le(os, seq);
    binio::write_le(os, static_cast<std::uint32_t>(fr.size()));
    for (const auto& [ft, w] : fr) {
      const std::size_t r = static_cast<std::size_t>(ft - (w->t - static_cast<std::int64_t>(T - 1)));
      for (std::size_t c = 0; c < 2; ++c) std::copy_n(&w->x.at(c, r, 0), W, row.begin() + static_cast<std::ptrdiff_t>(c * W));
      binio::write_le(os, ft);
      binio::write_le(os, std::span<const float>(row));
    }
    const auto& an = anchors.at(seq);
    binio::write_le(os, static_cast<std::uint32_t>(an.size()));
    for (const auto* w : an) {
      binio::write_le(os, w->t);
      binio::write_le(os, w->label);
    }
  }
  if (!os) throw FormatError(FormatErrc::io, "write failed: " + path);
}

inline DevDataset read_windows(const std::string& path) {
  auto is = binio::open_in(path);
  const auto h = binio::read_header(is, kWindowsMagic);
  DevDataset ds;
  std::size_t count = 0, n_seq = 0;
  try {
    if (h.at("version").get<int>() != kWindowsFormatVersion)
      throw FormatError(FormatErrc::unsupported_version, path);
    ds.config.variant = parse_variant(h.at("variant").get<std::string>());
    ds.config.t_ob = h.at("t_ob").get<std::size_t>();
    ds.config.t_pred = h.at("t_pred").get<std::size_t>();
    ds.config.stride = h.at("stride").get<std::size_t>();
    ds.config.fov = {h.at("fov").at(0).get<double>(), h.at("fov").at(1).get<double>()};
    ds.config.quant = {h.at("quant").at("angle_bins").get<int>(), h.at("quant").at("distance_levels").get<int>(),
                       h.at("quant").at("distance_step").get<double>()};
    if (h.at("width").get<std::size_t>() != variant_width(ds.config.variant))
      throw FormatError(FormatErrc::inconsistent, path + ": width does not match variant");
    count = h.at("count").get<std::size_t>();
    n_seq = h.at("sequences").get<std::size_t>();
    ds.train_sequences = h.at("train_sequences").get<std::vector<std::int64_t>>();
    ds.test_sequences = h.at("test_sequences").get<std::vector<std::int64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_header, path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(FormatErrc::malformed_header, path + ": " + e.what());
  }
  if (ds.config.t_ob < 1) throw FormatError(FormatErrc::malformed_header, path + ": t_ob must be >= 1");
  const std::size_t W = variant_width(ds.config.variant);
  const std::size_t T = ds.config.t_ob;
  ds.windows.reserve(count);
  std::vector<float> buf;
  for (std::size_t s = 0; s < n_seq; ++s) {
    const auto seq = binio::read_le<std::int64_t>(is);
    const auto nf = binio::read_le<std::uint32_t>(is);
    std::map<std::int64_t, std::size_t> where;
    buf.resize(static_cast<std::size_t>(nf) * 2 * W);
    for (std::uint32_t f = 0; f < nf; ++f) {
      const auto ft = binio::read_le<std::int64_t>(is);
      if (!where.emplace(ft, f).second) throw FormatError(FormatErrc::inconsistent, path + ": duplicate frame");
      binio::read_le(is, std::span<float>(buf.data() + static_cast<std::size_t>(f) * 2 * W, 2 * W));
    }
    const auto nw = binio::read_le<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < nw; ++k) {
      ObservationWindow w;
      w.sequence_id = seq;
      w.t = binio::read_le<std::int64_t>(is);
      w.label = binio::read_le<std::uint8_t>(is);
      if (w.label > 1) throw FormatError(FormatErrc::range, path + ": label must be 0 or 1");
      w.x = nn::Tensor<float>({2, T, W});
      for (std::size_t r = 0; r < T; ++r) {
        const auto it = where.find(w.t - static_cast<std::int64_t>(T - 1 - r));
        if (it == where.end())
          throw FormatError(FormatErrc::inconsistent, path + ": window at t=" + std::to_string(w.t) + " lacks a frame");
        const float* src = buf.data() + it->second * 2 * W;
        for (std::size_t c = 0; c < 2; ++c) std::copy_n(src + c * W, W, &w.x.at(c, r, 0));
      }
      ds.windows.push_back(std::move(w));
    }
  }
  if (ds.windows.size() != count)
    throw FormatError(FormatErrc::row_count, path + ": header declares " + std::to_string(count) + " windows, found " +
                                                 std::to_string(ds.windows.size()));
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(FormatErrc::row_count, path + ": trailing bytes after " + std::to_string(count) + " windows");
  const auto declared = parse_hex_digest(h.value("digest", std::string()));
  if (!declared || *declared != ds.digest()) throw FormatError(FormatErrc::inconsistent, path + ": digest mismatch");
  return ds;
}

} // namespace blockpred

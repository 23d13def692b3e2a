#pragma once

// Pipeline configuration document. A TOML subset:
//   # comment
//   key = value            (top level: seed)
//   [section]
//   key = 1.5 | 42 | true | "text" | [1, 2, 3] | ["a", "b"] | -pi/6
// Unknown sections and keys are errors.

#include <cctype>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "blockpred/dataset.hpp"
#include "blockpred/error.hpp"
#include "blockpred/model.hpp"
#include "blockpred/numfmt.hpp"
#include "blockpred/preproc.hpp"
#include "blockpred/scene_sim.hpp"

namespace blockpred {

struct ConfigValue {
  std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>> v;
  std::string text; // as written, for messages
};

using ConfigDocument = std::map<std::string, std::map<std::string, ConfigValue>>; // "" is the top level

namespace detail {

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Numbers, plus multiples/fractions of pi: pi, -pi, pi/6, -pi/6, 2*pi/3.
inline std::optional<double> parse_number(std::string_view s) {
  s = strip(s);
  if (auto d = parse_double(s)) return d;
  double sign = 1.0;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    if (s.front() == '-') sign = -1.0;
    s.remove_prefix(1);
  }
  double mul = 1.0;
  if (const auto star = s.find('*'); star != std::string_view::npos) {
    const auto m = parse_double(s.substr(0, star));
    if (!m) return std::nullopt;
    mul = *m;
    s.remove_prefix(star + 1);
  }
  if (s.substr(0, 2) != "pi") return std::nullopt;
  s.remove_prefix(2);
  double div = 1.0;
  if (!s.empty()) {
    if (s.front() != '/') return std::nullopt;
    const auto d = parse_double(s.substr(1));
    if (!d || *d == 0.0) return std::nullopt;
    div = *d;
  }
  return sign * mul * std::numbers::pi / div;
}

inline std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline ConfigValue parse_value(std::string_view raw, const std::string& where) {
  const auto s = strip(raw);
  ConfigValue out;
  out.text = std::string(s);
  auto bad = [&] { return ConfigError(where + ": cannot parse value '" + std::string(s) + "'"); };
  if (s.empty()) throw bad();
  if (s == "true" || s == "false") {
    out.v = s == "true";
  } else if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw bad();
    out.v = std::string(s.substr(1, s.size() - 2));
  } else if (s.front() == '[') {
    if (s.back() != ']') throw bad();
    const auto inner = strip(s.substr(1, s.size() - 2));
    std::vector<double> nums;
    std::vector<std::string> strs;
    std::size_t start = 0;
    while (start <= inner.size() && !inner.empty()) {
      const auto comma = inner.find(',', start);
      const auto item = strip(inner.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (!item.empty()) {
        if (item.front() == '"') {
          if (item.size() < 2 || item.back() != '"') throw bad();
          strs.emplace_back(item.substr(1, item.size() - 2));
        } else {
          const auto d = parse_number(item);
          if (!d) throw bad();
          nums.push_back(*d);
        }
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!nums.empty() && !strs.empty()) throw ConfigError(where + ": mixed array");
    if (!strs.empty()) out.v = std::move(strs);
    else out.v = std::move(nums);
  } else {
    const auto d = parse_number(s);
    if (!d) throw bad();
    out.v = *d;
  }
  return out;
}

} // namespace detail

inline ConfigDocument parse_config_document(std::istream& is, const std::string& name = "<config>") {
  ConfigDocument doc;
  doc[""];
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto where = name + ":" + std::to_string(lineno);
    const auto s = detail::strip(detail::strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError(where + ": bad section header");
      section = std::string(detail::strip(s.substr(1, s.size() - 2)));
      if (doc.contains(section) && !section.empty()) throw ConfigError(where + ": duplicate section [" + section + "]");
      doc[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string key(detail::strip(s.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    auto& sec = doc[section];
    if (sec.contains(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    sec[key] = detail::parse_value(s.substr(eq + 1), where);
  }
  return doc;
}

inline ConfigDocument parse_config_document(const std::string& text, const std::string& name) {
  std::istringstream is(text);
  return parse_config_document(is, name);
}

inline ConfigDocument load_config_document(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  return parse_config_document(is, path);
}

// Everything the stages need. Defaults are the reference constants.
struct PipelineConfig {
  std::uint64_t seed = 2024;

  // scene
  SceneConfig scene = default_scene_config();
  std::size_t sequences = 400;
  double duration = 7.0;

  // preprocessing
  FovConfig fov;
  QuantConfig quant;
  std::size_t dictionary_scans = kDefaultDictionaryScans;

  // window
  std::size_t t_ob = 16;
  std::size_t stride = 1;
  double test_fraction = 0.2;

  // model / train
  double dropout_rate = 0.2;
  std::size_t epochs = 1000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::vector<Variant> variants{Variant::scr216, Variant::raw460};
  std::vector<std::size_t> t_pred{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  // report
  std::vector<std::size_t> latency_picks{1, 5, 10};
  std::size_t heatmap_sequences = 1;
  std::map<std::string, std::map<std::size_t, double>> baselines; // name -> T_P -> accuracy

  WindowConfig window(Variant v, std::size_t tp) const {
    WindowConfig w;
    w.t_ob = t_ob;
    w.t_pred = tp;
    w.stride = stride;
    w.variant = v;
    w.fov = fov;
    w.quant = quant;
    return w;
  }

  ModelConfig model(Variant v) const {
    ModelConfig m;
    m.variant = v;
    m.t_ob = t_ob;
    m.dropout_rate = dropout_rate;
    m.epochs = epochs;
    m.batch_size = batch_size;
    m.learning_rate = learning_rate;
    m.seed = seed;
    return m;
  }
};

inline void validate(const PipelineConfig& c) {
  validate(c.scene);
  validate(c.fov);
  validate(c.quant);
  if (c.sequences < 1) throw ConfigError("sequences must be >= 1");
  if (!(c.duration > 0.0)) throw ConfigError("duration must be > 0");
  if (c.dictionary_scans < 1) throw ConfigError("dictionary.scans must be >= 1");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("window.test_fraction must be in (0, 1)");
  if (!(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0)) throw ConfigError("model.dropout_rate must be in [0, 1)");
  if (c.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (c.batch_size < 1) throw ConfigError("model.batch_size must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("model.learning_rate must be > 0");
  if (c.variants.empty()) throw ConfigError("train.variants must not be empty");
  if (c.t_pred.empty()) throw ConfigError("train.t_pred must not be empty");
  for (auto tp : c.t_pred) validate(c.window(Variant::scr216, tp));
  validate(c.window(Variant::scr216, 1));
  for (auto p : c.latency_picks) {
    if (std::find(c.t_pred.begin(), c.t_pred.end(), p) == c.t_pred.end())
      throw ConfigError("report.latency_picks: T_P=" + std::to_string(p) + " is not in train.t_pred");
  }
  for (const auto& [name, acc] : c.baselines) {
    for (const auto& [tp, a] : acc) {
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("report.baseline." + name + ": accuracy outside [0, 1]");
    }
  }
}

namespace detail {

class SectionReader {
public:
  SectionReader(const std::string& name, const std::map<std::string, ConfigValue>& kv) : name_(name), kv_(kv) {}

  template <class T>
  void get(const std::string& key, T& out) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return;
    used_.push_back(key);
    assign(it->first, it->second, out);
  }

  void finish() const {
    for (const auto& [k, v] : kv_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        throw ConfigError("unknown key '" + k + "' in " + (name_.empty() ? "top level" : "[" + name_ + "]"));
    }
  }

private:
  std::string where(const std::string& key) const { return (name_.empty() ? "" : name_ + ".") + key; }

  double number(const std::string& key, const ConfigValue& v) const {
    if (const auto* d = std::get_if<double>(&v.v)) return *d;
    throw ConfigError(where(key) + ": expected a number, got '" + v.text + "'");
  }

  template <class Int>
  Int integer(const std::string& key, double d) const {
    if (!(d >= 0.0) || d != std::floor(d) || d > 9.0e15)
      throw ConfigError(where(key) + ": expected a non-negative integer, got " + format_g9(d));
    return static_cast<Int>(d);
  }

  void assign(const std::string& k, const ConfigValue& v, double& out) { out = number(k, v); }
  void assign(const std::string& k, const ConfigValue& v, int& out) {
    const double d = number(k, v);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(where(k) + ": expected an integer");
    out = static_cast<int>(d);
  }
  template <std::unsigned_integral U>
    requires(!std::is_same_v<U, bool>)
  void assign(const std::string& k, const ConfigValue& v, U& out) {
    out = integer<U>(k, number(k, v));
  }
  void assign(const std::string& k, const ConfigValue& v, bool& out) {
    if (const auto* b = std::get_if<bool>(&v.v)) out = *b;
    else throw ConfigError(where(k) + ": expected true or false");
  }
  void assign(const std::string& k, const ConfigValue& v, Interval& out) {
    const auto* a = std::get_if<std::vector<double>>(&v.v);
    if (!a || a->size() != 2) throw ConfigError(where(k) + ": expected [lo, hi]");
    out = {(*a)[0], (*a)[1]};
  }
  void assign(const std::string& k, const ConfigValue& v, std::vector<std::size_t>& out) {
    const auto* a = std::get_if<std::vector<double>>(&v.v);
    if (!a) throw ConfigError(where(k) + ": expected a list of integers");
    out.clear();
    for (double d : *a) out.push_back(integer<std::size_t>(k, d));
  }
  void assign(const std::string& k, const ConfigValue& v, std::vector<Variant>& out) {
    const auto* a = std::get_if<std::vector<std::string>>(&v.v);
    if (!a) throw ConfigError(where(k) + ": expected a list of variant names");
    out.clear();
    for (const auto& s : *a) out.push_back(parse_variant(s));
  }

  std::string name_;
  const std::map<std::string, ConfigValue>& kv_;
  std::vector<std::string> used_;
};

} // namespace detail

inline PipelineConfig config_from_document(const ConfigDocument& doc) {
  PipelineConfig c;
  for (const auto& [name, kv] : doc) {
    detail::SectionReader r(name, kv);
    if (name.empty()) {
      r.get("seed", c.seed);
    } else if (name == "scene") {
      r.get("sequences", c.sequences);
      r.get("duration", c.duration);
      r.get("spawn_rate", c.scene.blocker_spawn_rate);
      r.get("speed", c.scene.blocker_speed_range);
      r.get("length", c.scene.blocker_length_range);
      r.get("width", c.scene.blocker_width_range);
      r.get("samples_per_scan", c.scene.samples_per_scan);
      r.get("sample_rate", c.scene.sample_rate);
      r.get("max_range", c.scene.max_range);
      r.get("random_phase", c.scene.random_phase);
    } else if (name == "noise") {
      r.get("range_sigma", c.scene.noise.range_sigma);
      r.get("dropout_prob", c.scene.noise.dropout_prob);
      r.get("angle_jitter_sigma", c.scene.noise.angle_jitter_sigma);
      r.get("spurious_prob", c.scene.noise.spurious_prob);
      bool spurious = true;
      r.get("spurious_points", spurious);
      if (!spurious) c.scene.noise.spurious_static_points.clear();
    } else if (name == "fov") {
      r.get("phi1", c.fov.phi1);
      r.get("phi2", c.fov.phi2);
    } else if (name == "quant") {
      r.get("angle_bins", c.quant.angle_bins);
      r.get("distance_levels", c.quant.distance_levels);
      r.get("distance_step", c.quant.distance_step);
    } else if (name == "dictionary") {
      r.get("scans", c.dictionary_scans);
    } else if (name == "window") {
      r.get("t_ob", c.t_ob);
      r.get("stride", c.stride);
      r.get("test_fraction", c.test_fraction);
    } else if (name == "model") {
      r.get("dropout_rate", c.dropout_rate);
      r.get("batch_size", c.batch_size);
      r.get("learning_rate", c.learning_rate);
    } else if (name == "train") {
      r.get("epochs", c.epochs);
      r.get("variants", c.variants);
      r.get("t_pred", c.t_pred);
    } else if (name == "report") {
      r.get("latency_picks", c.latency_picks);
      r.get("heatmap_sequences", c.heatmap_sequences);
    } else if (name == "baselines") {
      // name = [accuracy at each latency pick]
      for (const auto& [k, v] : kv) {
        const auto* a = std::get_if<std::vector<double>>(&v.v);
        if (!a) throw ConfigError("baselines." + k + ": expected a list of accuracies");
        auto& acc = c.baselines[k];
        for (std::size_t i = 0; i < a->size(); ++i) acc[i] = (*a)[i]; // positional, re-keyed below
      }
      continue;
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
    r.finish();
  }
  // Baseline lists are positional over the latency picks.
  for (auto& [name, acc] : c.baselines) {
    if (acc.size() != c.latency_picks.size())
      throw ConfigError("baselines." + name + ": expected " + std::to_string(c.latency_picks.size()) +
                        " accuracies, one per latency pick");
    std::map<std::size_t, double> keyed;
    for (std::size_t i = 0; i < c.latency_picks.size(); ++i) keyed[c.latency_picks[i]] = acc.at(i);
    acc = std::move(keyed);
  }
  validate(c);
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) { return config_from_document(load_config_document(path)); }

// Resolved configuration, recorded in every manifest.
inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  const auto& s = c.scene;
  j["scene"] = {{"sequences", c.sequences},
                {"duration", c.duration},
                {"spawn_rate", s.blocker_spawn_rate},
                {"speed", {s.blocker_speed_range.lo, s.blocker_speed_range.hi}},
                {"length", {s.blocker_length_range.lo, s.blocker_length_range.hi}},
                {"width", {s.blocker_width_range.lo, s.blocker_width_range.hi}},
                {"samples_per_scan", s.samples_per_scan},
                {"sample_rate", s.sample_rate},
                {"max_range", s.max_range},
                {"random_phase", s.random_phase},
                {"config_digest", hex_digest(config_digest(s))}};
  j["noise"] = {{"range_sigma", s.noise.range_sigma},
                {"dropout_prob", s.noise.dropout_prob},
                {"angle_jitter_sigma", s.noise.angle_jitter_sigma},
                {"spurious_prob", s.noise.spurious_prob},
                {"spurious_points", s.noise.spurious_static_points.size()}};
  j["fov"] = {{"phi1", c.fov.phi1}, {"phi2", c.fov.phi2}};
  j["quant"] = {{"angle_bins", c.quant.angle_bins},
                {"distance_levels", c.quant.distance_levels},
                {"distance_step", c.quant.distance_step},
                {"lattice_digest", hex_digest(lattice_digest(c.fov, c.quant))}};
  j["dictionary"] = {{"scans", c.dictionary_scans}};
  j["window"] = {{"t_ob", c.t_ob}, {"stride", c.stride}, {"test_fraction", c.test_fraction}};
  j["model"] = {{"dropout_rate", c.dropout_rate}, {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate}};
  std::vector<std::string> vs;
  for (auto v : c.variants) vs.emplace_back(to_string(v));
  j["train"] = {{"epochs", c.epochs}, {"variants", vs}, {"t_pred", c.t_pred}};
  j["report"] = {{"latency_picks", c.latency_picks}, {"heatmap_sequences", c.heatmap_sequences}};
  nlohmann::json b = nlohmann::json::object();
  for (const auto& [name, acc] : c.baselines) {
    for (const auto& [tp, a] : acc) b[name][std::to_string(tp)] = a;
  }
  j["baselines"] = b;
  return j;
}

} // namespace blockpred

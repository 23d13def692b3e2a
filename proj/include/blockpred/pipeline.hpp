#pragma once

// Pipeline stages. Each stage has an in-memory core and a file-level wrapper
// that reads the previous stage's artifacts and writes its own plus a
// manifest.json recording the resolved configuration.
//
// Run directory layout (cmd pipeline):
//   sequences/  seq_NNNN.scanseq.csv, warmup.scanseq.csv, manifest.json
//   scr/        dictionary.scrdict.csv, seq_NNNN.scanseq.csv, manifest.json
//   datasets/   <variant>_tpNN.winds.bin
//   models/     <variant>_tpNN.ckpt, .best.ckpt, .train.csv, .eval.json
//   report/     accuracy_curve.csv, latency.csv, curve.svg, latency.svg, heatmap_seq_NNNN[_scr].svg

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockpred/analysis.hpp"
#include "blockpred/config.hpp"
#include "blockpred/dataset.hpp"
#include "blockpred/digest.hpp"
#include "blockpred/ingest.hpp"
#include "blockpred/model.hpp"
#include "blockpred/preproc.hpp"
#include "blockpred/scene_sim.hpp"

namespace blockpred {

namespace fs = std::filesystem;

// ---- in-memory cores -------------------------------------------------------

inline SceneConfig sequence_scene(const PipelineConfig& c, std::size_t index) {
  SceneConfig s = c.scene;
  s.seed = Rng::derive(c.seed, "sequence", index).next();
  return s;
}

inline SceneConfig warmup_scene(const PipelineConfig& c) {
  SceneConfig s = c.scene;
  s.seed = Rng::derive(c.seed, "warmup").next();
  return s;
}

inline ScanSequence simulate_one(const PipelineConfig& c, std::size_t index, double duration) {
  return simulate_sequence(sequence_scene(c, index), duration);
}

inline ScanSequence simulate_warmup(const PipelineConfig& c) { return simulate_warmup(warmup_scene(c), c.dictionary_scans); }

inline std::vector<ObservationWindow> corpus_windows(const std::vector<ScanSequence>& frames, const WindowConfig& w) {
  std::vector<ObservationWindow> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    auto ws = windows_from_sequence(frames[i], w, static_cast<std::int64_t>(i));
    out.insert(out.end(), std::make_move_iterator(ws.begin()), std::make_move_iterator(ws.end()));
  }
  return out;
}

inline DevDataset make_dataset(const PipelineConfig& c, const std::vector<ScanSequence>& frames, Variant v,
                               std::size_t t_pred) {
  const auto w = c.window(v, t_pred);
  auto windows = corpus_windows(frames, w);
  if (windows.empty()) throw DataError("dataset: no observation windows (sequences too short or always blocked?)");
  return split_dataset(std::move(windows), w, c.test_fraction, c.seed);
}

// ---- file helpers ----------------------------------------------------------

inline std::string sequence_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%04zu", index);
  return buf;
}

inline std::string run_name(Variant v, std::size_t t_pred) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_tp%02zu", to_string(v), t_pred);
  return buf;
}

inline std::uint64_t file_digest(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw FormatError(FormatErrc::io, "cannot open " + p.string());
  Fnv1a h;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    h.add_bytes(buf, static_cast<std::size_t>(is.gcount()));
  }
  return h.value();
}

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw FormatError(FormatErrc::io, "cannot create directory " + p.string() + ": " + ec.message());
}

inline void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw DataError("missing " + what + ": " + p.string());
}

// seq_NNNN.scanseq.csv files in name order, with their indices.
inline std::vector<std::pair<std::size_t, fs::path>> list_sequences(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("missing sequence directory: " + dir.string());
  std::vector<std::pair<std::size_t, fs::path>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    constexpr std::string_view suffix = ".scanseq.csv";
    if (!e.is_regular_file() || name.size() <= 4 + suffix.size() || name.rfind("seq_", 0) != 0 ||
        !name.ends_with(suffix))
      continue;
    const auto idx = parse_int<std::size_t>(std::string_view(name).substr(4, name.size() - 4 - suffix.size()));
    if (!idx) continue;
    out.emplace_back(*idx, e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no seq_NNNN.scanseq.csv files in " + dir.string());
  return out;
}

inline std::vector<ScanSequence> read_sequences(const fs::path& dir, std::vector<std::size_t>* ids = nullptr) {
  std::vector<ScanSequence> out;
  for (const auto& [idx, p] : list_sequences(dir)) {
    out.push_back(read_sequence(p.string()));
    if (ids) ids->push_back(idx);
  }
  return out;
}

// Writes manifest.json (stage, resolved config, file digests); returns the digest of its bytes.
inline std::uint64_t write_manifest(const fs::path& dir, const std::string& stage, const PipelineConfig& c,
                                    const std::vector<std::string>& files, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json m;
  m["stage"] = stage;
  m["seed"] = c.seed;
  m["config"] = to_json(c);
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& f : files) fl.push_back({{"name", f}, {"fnv1a64", hex_digest(file_digest(dir / f))}});
  m["files"] = fl;
  if (!extra.empty()) m["extra"] = std::move(extra);
  const auto text = m.dump(2) + "\n";
  write_text_file((dir / "manifest.json").string(), text);
  Fnv1a h;
  h.add_bytes(text.data(), text.size());
  return h.value();
}

inline void log_line(std::ostream* log, const std::string& s) {
  if (log) *log << s << '\n' << std::flush;
}

// ---- stages ----------------------------------------------------------------

struct SimulateResult {
  std::vector<std::string> files;
  std::uint64_t manifest_digest = 0;
};

// n sequences of the given duration plus the blocker-free warm-up recording.
inline SimulateResult stage_simulate(const PipelineConfig& c, const fs::path& out, std::size_t n, double duration,
                                     std::ostream* log = nullptr) {
  if (n < 1) throw ConfigError("sequences must be ≥ 1");
  if (!(duration > 0.0)) throw ConfigError("duration must be > 0");
  validate(c);
  ensure_dir(out);
  SimulateResult r;
  for (std::size_t i = 0; i < n; ++i) {
    const auto name = sequence_name(i) + ".scanseq.csv";
    write_sequence(simulate_one(c, i, duration), (out / name).string());
    r.files.push_back(name);
  }
  write_sequence(simulate_warmup(c), (out / "warmup.scanseq.csv").string());
  r.files.emplace_back("warmup.scanseq.csv");
  r.manifest_digest = write_manifest(out, "simulate", c, r.files, {{"sequences", n}, {"duration", duration}});
  log_line(log, "simulate: wrote " + std::to_string(n) + " sequences + warm-up to " + out.string() + " (manifest " +
                    hex_digest(r.manifest_digest) + ")");
  return r;
}

struct PreprocessResult {
  StaticDictionary dictionary;
  std::size_t sequences = 0;
  std::uint64_t manifest_digest = 0;
};

// Builds the dictionary from warmup.scanseq.csv in `in` (or the given warm-up
// file) or loads dict_path, then runs SCR over every sequence.
inline PreprocessResult stage_preprocess(const PipelineConfig& c, const fs::path& in, const fs::path& out,
                                         const fs::path& dict_path, bool build_dict, const fs::path& warmup_path = {},
                                         std::ostream* log = nullptr) {
  validate(c);
  ensure_dir(out);
  PreprocessResult r;
  const auto lattice = lattice_digest(c.fov, c.quant);
  std::vector<std::string> files;
  if (build_dict) {
    const fs::path wp = warmup_path.empty() ? in / "warmup.scanseq.csv" : warmup_path;
    require_file(wp, "warm-up sequence");
    r.dictionary = build_dictionary(read_sequence(wp.string()), c.dictionary_scans, c.fov, c.quant);
    write_dictionary(r.dictionary, c.quant, (out / "dictionary.scrdict.csv").string());
    files.emplace_back("dictionary.scrdict.csv");
  } else {
    require_file(dict_path, "dictionary");
    r.dictionary = read_dictionary(dict_path.string());
    if (r.dictionary.lattice() != lattice)
      throw DigestMismatch("dictionary lattice " + hex_digest(r.dictionary.lattice()) +
                           " does not match the configured fov/quant lattice " + hex_digest(lattice));
  }
  for (const auto& [idx, p] : list_sequences(in)) {
    const auto seq = read_sequence(p.string());
    const auto name = p.filename().string();
    write_sequence(scr_sequence(seq, c.fov, c.quant, r.dictionary), (out / name).string());
    files.push_back(name);
    ++r.sequences;
  }
  r.manifest_digest = write_manifest(out, "preprocess", c, files,
                                     {{"dictionary_keys", r.dictionary.size()}, {"lattice", hex_digest(lattice)}});
  log_line(log, "preprocess: " + std::to_string(r.sequences) + " sequences, dictionary " +
                    std::to_string(r.dictionary.size()) + " keys, " + std::to_string(c.quant.angle_bins) + " bins");
  return r;
}

// Windows from the sequences in `in`: raw sequences for raw-460, SCR output for scr-216.
inline DevDataset stage_dataset(const PipelineConfig& c, const fs::path& in, Variant v, std::size_t t_pred,
                                const fs::path& out_file, std::ostream* log = nullptr) {
  validate(c);
  std::vector<std::size_t> ids;
  const auto frames = read_sequences(in, &ids);
  const auto w = c.window(v, t_pred);
  std::vector<ObservationWindow> windows;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    auto ws = windows_from_sequence(frames[k], w, static_cast<std::int64_t>(ids[k]));
    windows.insert(windows.end(), std::make_move_iterator(ws.begin()), std::make_move_iterator(ws.end()));
  }
  if (windows.empty()) throw DataError("dataset: no observation windows in " + in.string());
  auto ds = split_dataset(std::move(windows), w, c.test_fraction, c.seed);
  if (out_file.has_parent_path()) ensure_dir(out_file.parent_path());
  write_windows(ds, out_file.string());
  log_line(log, "dataset: " + std::string(to_string(v)) + " T_P=" + std::to_string(t_pred) + ": " +
                    std::to_string(ds.windows.size()) + " windows (" + std::to_string(ds.train_indices().size()) +
                    " train / " + std::to_string(ds.test_indices().size()) + " test)");
  return ds;
}

inline std::string param_count_line(const Model& m) {
  std::string s = "parameters: " + std::to_string(m.param_count());
  if (m.config().variant == Variant::scr216 && m.param_count() != kPublishedScrParamCount)
    s += " (published figure for this variant is " + std::to_string(kPublishedScrParamCount) +
         "; the listed layers give " + std::to_string(m.param_count()) + ", recorded discrepancy)";
  return s;
}

// Writes <prefix>.ckpt (final), <prefix>.best.ckpt and <prefix>.train.csv.
inline TrainReport stage_train(const PipelineConfig& c, const fs::path& windows_file, const fs::path& prefix,
                               std::ostream* log = nullptr) {
  validate(c);
  require_file(windows_file, "window dataset");
  const auto ds = read_windows(windows_file.string());
  Model model(c.model(ds.config.variant));
  log_line(log, param_count_line(model));
  TrainHooks hooks;
  if (log) {
    hooks.on_epoch = [&](const EpochStats& e) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "epoch %zu/%zu loss %.5f test top-1 %.4f", e.epoch, c.epochs, e.train_loss,
                    e.test_top1);
      log_line(log, buf);
    };
  }
  std::vector<nn::NamedTensor<float>> best;
  const auto rep = train(model, ds, &best, hooks);
  if (prefix.has_parent_path()) ensure_dir(prefix.parent_path());
  const nlohmann::json extra = {{"t_pred", ds.config.t_pred},
                                {"dataset_digest", hex_digest(ds.digest())},
                                {"best_epoch", rep.best_epoch},
                                {"best_test_top1", rep.best_test_top1}};
  save_model(prefix.string() + ".ckpt", model, extra);
  Model best_model(model.config());
  best_model.load_state(best);
  save_model(prefix.string() + ".best.ckpt", best_model, extra);
  write_text_file(prefix.string() + ".train.csv", train_csv(rep));
  log_line(log, "train: final digest " + hex_digest(rep.final_digest) + ", best epoch " + std::to_string(rep.best_epoch) +
                    ", wall " + format_g9(round_g9(rep.wall_seconds)) + " s");
  return rep;
}

inline nlohmann::json eval_json(const EvalResult& r, Variant v, std::size_t t_pred) {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  return {{"variant", to_string(v)},
          {"t_pred", t_pred},
          {"top1", r.top1},
          {"recall_no_blockage", num(r.recall[0])},
          {"recall_blockage", num(r.recall[1])},
          {"n_test", r.n},
          {"confusion", {{r.confusion[0][0], r.confusion[0][1]}, {r.confusion[1][0], r.confusion[1][1]}}}};
}

// Test-split metrics of a checkpoint; written to out_json when given.
inline EvalResult stage_eval(const fs::path& checkpoint, const fs::path& windows_file, const fs::path& out_json = {},
                             std::ostream* log = nullptr) {
  require_file(checkpoint, "checkpoint");
  require_file(windows_file, "window dataset");
  const auto model = load_model(checkpoint.string());
  const auto ds = read_windows(windows_file.string());
  if (ds.config.variant != model.config().variant)
    throw ShapeError(std::string("eval: checkpoint is ") + to_string(model.config().variant) + ", dataset is " +
                     to_string(ds.config.variant));
  const auto idx = ds.test_indices();
  if (idx.empty()) throw DataError("eval: empty test set in " + windows_file.string());
  const auto r = evaluate(model, ds.windows, idx);
  if (!out_json.empty()) write_text_file(out_json.string(), eval_json(r, ds.config.variant, ds.config.t_pred).dump(2) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof buf, "eval: top-1 %.4f over %zu test windows", r.top1, r.n);
  log_line(log, buf);
  return r;
}

inline CurveEntry read_eval_json(const fs::path& p) {
  require_file(p, "evaluation result");
  std::ifstream is(p);
  try {
    const auto j = nlohmann::json::parse(is);
    auto num = [](const nlohmann::json& x) {
      return x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>();
    };
    return {j.at("variant").get<std::string>(), j.at("t_pred").get<std::size_t>(),
            {j.at("top1").get<double>(), num(j.at("recall_no_blockage")), num(j.at("recall_blockage"))},
            j.at("n_test").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_header, p.string() + ": " + e.what());
  }
}

struct ReportResult {
  AccuracyCurve curve;
  LatencyReport latency;
  std::vector<std::string> files;
};

inline ReportResult write_report(const PipelineConfig& c, const AccuracyCurve& curve, const fs::path& out) {
  ensure_dir(out);
  ReportResult r;
  r.curve = curve;
  r.latency = latency_report(curve, c.latency_picks, c.baselines);
  write_text_file((out / "accuracy_curve.csv").string(), accuracy_csv(curve));
  write_text_file((out / "latency.csv").string(), latency_csv(r.latency));
  write_text_file((out / "curve.svg").string(), curve_svg(curve));
  write_text_file((out / "latency.svg").string(), latency_svg(r.latency));
  r.files = {"accuracy_curve.csv", "latency.csv", "curve.svg", "latency.svg"};
  return r;
}

inline void write_heatmap(const ScanSequence& seq, const FovConfig& fov, const fs::path& path, const std::string& title) {
  const std::size_t cols = seq.scans.front().samples.size();
  write_text_file(path.string(), heatmap_svg(heatmap_grid(seq, cols, fov.phi1, fov.phi2), title));
}

// Reads models/*.eval.json for every configured (variant, T_P) and the
// sequence files for heatmaps; writes the report directory.
inline ReportResult stage_report(const PipelineConfig& c, const fs::path& run, std::ostream* log = nullptr) {
  validate(c);
  std::vector<CurveEntry> entries;
  for (auto v : c.variants) {
    for (auto tp : c.t_pred) entries.push_back(read_eval_json(run / "models" / (run_name(v, tp) + ".eval.json")));
  }
  const auto curve = accuracy_curve(entries, c.t_pred, c.scene.sample_rate);
  const fs::path out = run / "report";
  auto r = write_report(c, curve, out);
  for (std::size_t i = 0; i < c.heatmap_sequences; ++i) {
    const auto name = sequence_name(i);
    const auto raw = run / "sequences" / (name + ".scanseq.csv");
    if (!fs::is_regular_file(raw)) break;
    write_heatmap(read_sequence(raw.string()), c.fov, out / ("heatmap_" + name + ".svg"), name + " raw");
    r.files.push_back("heatmap_" + name + ".svg");
    const auto scr = run / "scr" / (name + ".scanseq.csv");
    if (fs::is_regular_file(scr)) {
      write_heatmap(read_sequence(scr.string()), c.fov, out / ("heatmap_" + name + "_scr.svg"), name + " SCR");
      r.files.push_back("heatmap_" + name + "_scr.svg");
    }
  }
  write_manifest(out, "report", c, r.files);
  log_line(log, "report: wrote " + std::to_string(r.files.size()) + " files to " + out.string());
  return r;
}

// All stages in order under one run directory.
inline ReportResult stage_pipeline(const PipelineConfig& c, const fs::path& run, std::ostream* log = nullptr) {
  validate(c);
  stage_simulate(c, run / "sequences", c.sequences, c.duration, log);
  stage_preprocess(c, run / "sequences", run / "scr", {}, true, {}, log);
  for (auto v : c.variants) {
    const fs::path src = v == Variant::scr216 ? run / "scr" : run / "sequences";
    for (auto tp : c.t_pred) {
      const auto name = run_name(v, tp);
      const auto winds = run / "datasets" / (name + ".winds.bin");
      stage_dataset(c, src, v, tp, winds, log);
      stage_train(c, winds, run / "models" / name, log);
      stage_eval(run / "models" / (name + ".ckpt"), winds, run / "models" / (name + ".eval.json"), log);
    }
  }
  return stage_report(c, run, log);
}

} // namespace blockpred

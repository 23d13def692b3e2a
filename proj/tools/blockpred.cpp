// blockpred: command-line front end for the pipeline stages.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "blockpred/pipeline.hpp"

namespace bp = blockpred;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  bool quiet = false;
};

bp::PipelineConfig resolve(const Globals& g) {
  bp::PipelineConfig c = g.config.empty() ? bp::PipelineConfig{} : bp::load_pipeline_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.epochs) c.epochs = *g.epochs;
  bp::validate(c);
  return c;
}

int exit_code(bp::ErrorKind k) {
  switch (k) {
  case bp::ErrorKind::usage: return 1;
  case bp::ErrorKind::data: return 2;
  case bp::ErrorKind::internal: return 3;
  }
  return 3;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-aided blockage prediction: simulate, preprocess, build datasets, train, evaluate, report"};
  app.require_subcommand(1);
  app.allow_extras(false);
  Globals g;
  app.add_option("-c,--config", g.config, "pipeline configuration file (TOML subset)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "override the global seed");
  app.add_option("--epochs", g.epochs, "override train.epochs")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", g.quiet, "only print errors");

  auto* sim = app.add_subcommand("simulate", "write simulated scan sequences, a blocker-free warm-up and a manifest");
  std::string sim_out;
  std::optional<long long> sim_n;
  std::optional<double> sim_duration;
  sim->add_option("-o,--out", sim_out, "output directory")->required();
  sim->add_option("-n,--sequences", sim_n, "number of sequences (default: scene.sequences)");
  sim->add_option("-d,--duration", sim_duration, "seconds per sequence (default: scene.duration)");

  auto* pre = app.add_subcommand("preprocess", "static cluster removal over a sequence directory");
  std::string pre_in, pre_out, pre_dict, pre_warmup;
  bool pre_build = false;
  pre->add_option("-i,--in", pre_in, "directory of seq_NNNN.scanseq.csv files")->required();
  pre->add_option("-o,--out", pre_out, "output directory")->required();
  auto* dict_opt = pre->add_option("--dict", pre_dict, "existing .scrdict.csv dictionary");
  auto* build_opt = pre->add_flag("--build-dict", pre_build, "build the dictionary from the warm-up recording");
  pre->add_option("--warmup", pre_warmup, "warm-up sequence (default: <in>/warmup.scanseq.csv)");
  dict_opt->excludes(build_opt);

  auto* dsc = app.add_subcommand("dataset", "build a window dataset for one variant and prediction interval");
  std::string ds_in, ds_out, ds_variant = "scr-216";
  std::size_t ds_tp = 1;
  dsc->add_option("-i,--in", ds_in, "sequence directory (SCR output for scr-216, raw for raw-460)")->required();
  dsc->add_option("-o,--out", ds_out, "output .winds.bin file")->required();
  dsc->add_option("--variant", ds_variant, "raw-460 or scr-216")->capture_default_str();
  dsc->add_option("--t-pred", ds_tp, "future interval T_P in instances (1..10)")->capture_default_str();

  auto* trn = app.add_subcommand("train", "train a model on a window dataset");
  std::string tr_windows, tr_out, tr_variant;
  trn->add_option("-w,--windows", tr_windows, "input .winds.bin file");
  trn->add_option("-o,--out", tr_out, "output prefix for .ckpt/.best.ckpt/.train.csv");
  trn->add_option("--variant", tr_variant, "raw-460 or scr-216 (must match the dataset)");

  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on the test split of a window dataset");
  std::string ev_ckpt, ev_windows, ev_out;
  evl->add_option("-m,--checkpoint", ev_ckpt, "checkpoint file")->required();
  evl->add_option("-w,--windows", ev_windows, "window dataset")->required();
  evl->add_option("-o,--out", ev_out, "write metrics JSON here");

  auto* rep = app.add_subcommand("report", "accuracy curve, latency table, plots and heatmaps for a run directory");
  std::string rep_run;
  rep->add_option("-r,--run", rep_run, "run directory produced by the pipeline layout")->required();

  auto* imp = app.add_subcommand("import", "convert an externally recorded LiDAR CSV into a .scanseq.csv file");
  std::string imp_in, imp_out;
  bp::CsvMapping mapping;
  imp->add_option("-i,--in", imp_in, "CSV with one row per LiDAR sample")->required()->check(CLI::ExistingFile);
  imp->add_option("-o,--out", imp_out, "output .scanseq.csv")->required();
  imp->add_option("--time-column", mapping.time_column, "capture id / timestamp column")->capture_default_str();
  imp->add_option("--angle-column", mapping.angle_column, "angle column")->capture_default_str();
  imp->add_option("--distance-column", mapping.distance_column, "distance column (m)")->capture_default_str();
  imp->add_option("--link-column", mapping.link_column, "link status column (0/1)")->capture_default_str();
  imp->add_flag("--degrees", mapping.degrees, "angles are in degrees");
  imp->add_option("--max-range", mapping.max_range, "clamp distances to this range (m)")->capture_default_str();
  imp->add_option("--sample-rate", mapping.sample_rate, "captures per second")->capture_default_str();

  auto* pip = app.add_subcommand("pipeline", "run every stage into one run directory");
  std::string pip_out;
  std::optional<long long> pip_n;
  std::optional<double> pip_duration;
  pip->add_option("-o,--out", pip_out, "run directory")->required();
  pip->add_option("-n,--sequences", pip_n, "override scene.sequences");
  pip->add_option("-d,--duration", pip_duration, "override scene.duration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  std::ostream* log = g.quiet ? nullptr : &std::cout;
  try {
    auto c = resolve(g);
    if (*sim) {
      const long long n = sim_n.value_or(static_cast<long long>(c.sequences));
      if (n < 1) throw bp::ConfigError("sequences must be ≥ 1");
      bp::stage_simulate(c, sim_out, static_cast<std::size_t>(n), sim_duration.value_or(c.duration), log);
    } else if (*pre) {
      if (!pre_build && pre_dict.empty()) throw bp::ConfigError("preprocess: pass --dict <path> or --build-dict");
      bp::stage_preprocess(c, pre_in, pre_out, pre_dict, pre_build, pre_warmup, log);
    } else if (*dsc) {
      bp::stage_dataset(c, ds_in, bp::parse_variant(ds_variant), ds_tp, ds_out, log);
    } else if (*trn) {
      if (!tr_variant.empty()) {
        bp::Model m(c.model(bp::parse_variant(tr_variant)));
        std::cout << bp::param_count_line(m) << '\n';
      }
      if (tr_windows.empty()) throw bp::DataError("train: missing upstream window dataset (--windows)");
      if (tr_out.empty()) throw bp::ConfigError("train: --out is required");
      if (!tr_variant.empty()) {
        const auto ds = bp::read_windows(tr_windows);
        if (ds.config.variant != bp::parse_variant(tr_variant))
          throw bp::ShapeError("train: --variant " + tr_variant + " but dataset is " + bp::to_string(ds.config.variant));
      }
      bp::stage_train(c, tr_windows, tr_out, &std::cout);
    } else if (*evl) {
      bp::stage_eval(ev_ckpt, ev_windows, ev_out, log);
    } else if (*rep) {
      bp::stage_report(c, rep_run, log);
    } else if (*imp) {
      const auto seq = bp::read_external_csv(imp_in, mapping);
      bp::write_sequence(seq, imp_out);
      bp::log_line(log, "import: " + std::to_string(seq.size()) + " captures of " +
                            std::to_string(seq.scans.empty() ? 0 : seq.scans.front().samples.size()) + " samples -> " +
                            imp_out);
    } else if (*pip) {
      if (pip_n) {
        if (*pip_n < 1) throw bp::ConfigError("sequences must be ≥ 1");
        c.sequences = static_cast<std::size_t>(*pip_n);
      }
      if (pip_duration) c.duration = *pip_duration;
      bp::validate(c);
      bp::stage_pipeline(c, pip_out, log);
    }
  } catch (const bp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

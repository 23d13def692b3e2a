#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "blockpred/pipeline.hpp"

using namespace blockpred;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

PipelineConfig tiny() {
  PipelineConfig c;
  c.sequences = 6;
  c.duration = 4.0;
  c.dictionary_scans = 40;
  c.epochs = 1;
  c.variants = {Variant::scr216};
  c.t_pred = {1, 2};
  c.latency_picks = {1};
  return c;
}

fs::path fresh(const std::string& name) {
  const auto d = fs::temp_directory_path() / "blockpred_unit" / name;
  fs::remove_all(d);
  return d;
}

} // namespace

TEST(ConfigParse, ValuesSectionsAndPiExpressions) {
  const auto c = config_from_document(parse_config_document(R"(
seed = 7   # comment
[scene]
sequences = 12
duration = 3.5
speed = [1.0, 2.0]
random_phase = false
[fov]
phi1 = -pi/6
phi2 = pi
[train]
epochs = 3
variants = ["raw-460"]
t_pred = [1, 5, 10]
[baselines]
other = [0.9, 0.8, 0.7]
)", "inline"));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.sequences, 12u);
  EXPECT_EQ(c.duration, 3.5);
  EXPECT_EQ(c.scene.blocker_speed_range.lo, 1.0);
  EXPECT_FALSE(c.scene.random_phase);
  EXPECT_DOUBLE_EQ(c.fov.phi1, -std::numbers::pi / 6);
  EXPECT_DOUBLE_EQ(c.fov.phi2, std::numbers::pi);
  EXPECT_EQ(c.epochs, 3u);
  EXPECT_EQ(c.variants, std::vector<Variant>{Variant::raw460});
  EXPECT_EQ(c.baselines.at("other").at(5), 0.8);
}

TEST(ConfigParse, Errors) {
  auto parse = [](const std::string& s) { return config_from_document(parse_config_document(s, "t")); };
  EXPECT_THROW(parse("[scene]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse("[nowhere]\n"), ConfigError);
  EXPECT_THROW(parse("[scene]\nsequences = 1\n[scene]\n"), ConfigError);
  EXPECT_THROW(parse("[scene]\nsequences = 1\nsequences = 2\n"), ConfigError);
  EXPECT_THROW(parse("[scene]\nsequences = -1\n"), ConfigError);
  EXPECT_THROW(parse("[scene]\nsequences = 1.5\n"), ConfigError);
  EXPECT_THROW(parse("[scene]\nsequences = 0\n"), ConfigError);
  EXPECT_THROW(parse("[train]\nt_pred = [11]\n"), ConfigError);
  EXPECT_THROW(parse("[train]\nvariants = [\"cnn\"]\n"), ConfigError);
  EXPECT_THROW(parse("[report]\nlatency_picks = [1, 5]\n[train]\nt_pred = [1]\n"), ConfigError);
  EXPECT_THROW(parse("[baselines]\nx = [0.5]\n"), ConfigError);
  EXPECT_THROW(parse("seed = \n"), ConfigError);
  EXPECT_THROW(parse("[scene\n"), ConfigError);
}

TEST(ConfigParse, ShippedTemplatesLoad) {
  for (const char* name : {"default.toml", "acceptance.toml", "smoke.toml"}) {
    const auto p = fs::path(BLOCKPRED_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(load_pipeline_config(p.string())) << name;
  }
}

TEST(Pipeline, InMemoryDatasetMatchesDiskStages) {
  const auto c = tiny();
  const auto dir = fresh("stages");
  stage_simulate(c, dir / "sequences", c.sequences, c.duration);
  stage_preprocess(c, dir / "sequences", dir / "scr", {}, true);
  const auto disk = stage_dataset(c, dir / "sequences", Variant::raw460, 2, dir / "raw.winds.bin");

  std::vector<ScanSequence> frames;
  for (std::size_t i = 0; i < c.sequences; ++i) frames.push_back(simulate_one(c, i, c.duration));
  const auto mem = make_dataset(c, frames, Variant::raw460, 2);
  EXPECT_EQ(mem, disk);
  EXPECT_EQ(read_windows((dir / "raw.winds.bin").string()), disk);
}

TEST(Pipeline, DictionaryLatticeMismatchIsDetected) {
  auto c = tiny();
  const auto dir = fresh("mismatch");
  stage_simulate(c, dir / "sequences", 1, 2.0);
  stage_preprocess(c, dir / "sequences", dir / "scr", {}, true);
  c.quant.angle_bins = 108;
  EXPECT_THROW(stage_preprocess(c, dir / "sequences", dir / "scr2", dir / "scr" / "dictionary.scrdict.csv", false),
               DigestMismatch);
}

TEST(Pipeline, EndToEndIsByteDeterministic) {
  const auto c = tiny();
  const auto a = fresh("run_a"), b = fresh("run_b");
  const auto ra = stage_pipeline(c, a);
  stage_pipeline(c, b);
  EXPECT_EQ(ra.curve.rows.size(), 2u);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 10u);
  EXPECT_TRUE(fs::exists(a / "report" / "latency.csv"));
  EXPECT_TRUE(fs::exists(a / "report" / "heatmap_seq_0000_scr.svg"));
}

TEST(Pipeline, SimulateRejectsZeroSequences) {
  EXPECT_THROW(stage_simulate(tiny(), fresh("zero"), 0, 1.0), ConfigError);
}

#include <gtest/gtest.h>

#include <set>

#include <filesystem>
#include <numbers>
#include <sstream>

#include "blockpred/ingest.hpp"

using namespace blockpred;

namespace {

ScanSequence small_sequence(double duration = 3.0) {
  auto c = default_scene_config();
  c.seed = 21;
  return simulate_sequence(c, duration);
}

std::string to_text(const ScanSequence& s) {
  std::ostringstream os;
  write_sequence(os, s);
  return os.str();
}

ScanSequence from_text(const std::string& t) {
  std::istringstream is(t);
  return read_sequence(is);
}

FormatErrc code_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const FormatError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return FormatErrc::io;
}

std::filesystem::path tmp(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / "blockpred_unit";
  std::filesystem::create_directories(d);
  return d / name;
}

} // namespace

TEST(Ingest, SequenceRoundTrip) {
  const auto s = small_sequence();
  const auto text = to_text(s);
  const auto back = from_text(text);
  EXPECT_EQ(back.scans.size(), s.scans.size());
  for (std::size_t t = 0; t < s.size(); ++t) ASSERT_EQ(back.scans[t].samples, s.scans[t].samples);
  EXPECT_EQ(back.link_status, s.link_status);
  EXPECT_EQ(back.config_digest, s.config_digest);
  EXPECT_EQ(to_text(back), text);
}

TEST(Ingest, RowCountArithmetic) {
  const auto text = to_text(small_sequence());
  const auto lines = std::count(text.begin(), text.end(), '\n');
  EXPECT_EQ(lines - 2, 30 * 460);
}

TEST(Ingest, EmptySequenceIsHeaderOnly) {
  ScanSequence empty;
  empty.sample_rate = 10;
  empty.max_range = 16;
  const auto text = to_text(empty);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_TRUE(from_text(text).scans.empty());
}

TEST(Ingest, MissingSampleNamesTimeIndex) {
  auto s = small_sequence(1.0);
  s.scans[0].samples.pop_back();
  auto text = to_text(s);
  // header still declares 460 samples per scan (taken from the first scan), so restore it
  text.replace(text.find("samples_per_scan=459"), 20, "samples_per_scan=460");
  try {
    from_text(text);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::row_count);
    EXPECT_NE(std::string(e.what()).find("time_index 0"), std::string::npos) << e.what();
  }
}

// Replaces column `col` of the first data row.
static std::string with_field(std::string text, int col, const std::string& value) {
  std::size_t pos = text.find('\n', text.find('\n') + 1) + 1;
  for (int k = 0; k < col; ++k) pos = text.find(',', pos) + 1;
  const auto end = text.find_first_of(",\n", pos);
  return text.replace(pos, end - pos, value);
}

TEST(Ingest, DistinctErrorCodes) {
  const auto good = to_text(small_sequence(0.2));
  EXPECT_EQ(code_of(with_field(good, 3, "-1")), FormatErrc::range);
  EXPECT_EQ(code_of(with_field(good, 3, "16.5")), FormatErrc::range);
  EXPECT_EQ(code_of(with_field(good, 2, "abc")), FormatErrc::non_numeric);
  EXPECT_EQ(code_of(with_field(good, 4, "2")), FormatErrc::range);

  auto bad_header = good;
  bad_header.replace(0, 5, "#oops");
  EXPECT_EQ(code_of(bad_header), FormatErrc::malformed_header);

  auto version = good;
  version.replace(version.find("version=1"), 9, "version=9");
  EXPECT_EQ(code_of(version), FormatErrc::unsupported_version);

  auto count = good;
  count.replace(count.find("scans=2"), 7, "scans=3");
  EXPECT_EQ(code_of(count), FormatErrc::row_count);
}

TEST(Ingest, ExternalCsvDegreesAndWrap) {
  std::istringstream is("time,angle,distance,link_status\n"
                        "0.0,181,3.5,0\n0.0,90,20,0\n0.1,181,3.5,1\n0.1,90,-2,1\n");
  CsvMapping m;
  m.degrees = true;
  const auto s = read_external_csv(is, m);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s.scans[0].samples[0].angle, -179.0 * std::numbers::pi / 180.0, 1e-12);
  EXPECT_NEAR(s.scans[0].samples[1].angle, std::numbers::pi / 2, 1e-12);
  EXPECT_EQ(s.scans[0].samples[1].distance, 16.0);
  EXPECT_EQ(s.scans[1].samples[1].distance, 0.0);
  EXPECT_EQ(s.link_status, (std::vector<std::uint8_t>{0, 1}));
}

TEST(Ingest, ExternalCsvErrors) {
  std::istringstream missing("time,angle,distance\n0,1,2\n");
  try {
    read_external_csv(missing, {});
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::missing_column);
    EXPECT_NE(std::string(e.what()).find("link_status"), std::string::npos);
  }
  std::istringstream word("time,angle,distance,link_status\n0,abc,2,0\n");
  try {
    read_external_csv(word, {});
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::non_numeric);
  }
}

TEST(Ingest, DictionaryRoundTrip) {
  const FovConfig f;
  const QuantConfig q;
  const StaticDictionary d({{5, 7}, {1, 499}, {5, 6}}, lattice_digest(f, q), 12);
  std::ostringstream os;
  write_dictionary(os, d, q);
  std::istringstream is(os.str());
  const auto back = read_dictionary(is);
  EXPECT_EQ(back, d);
  EXPECT_NE(os.str().find("angle_bin,distance_level\n1,499\n5,6\n5,7\n"), std::string::npos);
}

TEST(Ingest, DictionaryRejectsOutOfLattice) {
  const QuantConfig q;
  const StaticDictionary d({{300, 7}}, 1, 1);
  std::ostringstream os;
  write_dictionary(os, d, q);
  std::istringstream is(os.str());
  EXPECT_THROW(read_dictionary(is), FormatError);
}

TEST(Ingest, WindowContainerRoundTrip) {
  const auto s = small_sequence(6.0);
  WindowConfig w;
  w.variant = Variant::raw460;
  w.t_pred = 3;
  auto a = windows_from_sequence(s, w, 0);
  auto s2 = s;
  auto b = windows_from_sequence(s2, w, 1);
  a.insert(a.end(), b.begin(), b.end());
  ASSERT_FALSE(a.empty());
  const auto ds = split_dataset(a, w, 0.5, 3);
  const auto p = tmp("rt.winds.bin");
  write_windows(ds, p.string());
  const auto back = read_windows(p.string());
  EXPECT_EQ(back, ds);
  EXPECT_EQ(back.digest(), ds.digest());
  EXPECT_EQ(back.config.t_pred, 3u);
  // each distinct frame is stored once
  std::set<std::pair<std::int64_t, std::int64_t>> frames;
  for (const auto& win : ds.windows)
    for (std::int64_t k = 0; k < 16; ++k) frames.insert({win.sequence_id, win.t - k});
  const std::size_t frame_bytes = 8 + 2 * 460 * 4;
  EXPECT_LT(std::filesystem::file_size(p), frames.size() * frame_bytes + ds.windows.size() * 9 + 4096);
}

TEST(Ingest, WindowContainerDetectsCorruption) {
  const auto s = small_sequence(4.0);
  WindowConfig w;
  w.variant = Variant::raw460;
  auto a = windows_from_sequence(s, w, 0);
  auto b = windows_from_sequence(s, w, 1);
  a.insert(a.end(), b.begin(), b.end());
  const auto ds = split_dataset(a, w, 0.5, 3);
  const auto p = tmp("bad.winds.bin");
  write_windows(ds, p.string());
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-40, std::ios::end);
    f.put('\x7f');
  }
  EXPECT_THROW(read_windows(p.string()), FormatError);
}

#include <catch2/catch.hpp>

#include <cstring>

#include "eegml/ingest.hpp"
#include "test_util.hpp"

using namespace eegml;
using testutil::TempDir;
using testutil::write_file;

namespace {

bool has_code(const Error& e, errc code) { return e.code() == code; }

}  // namespace

TEST_CASE("standard montage matches the 19-channel layout") {
  const Montage m = Montage::standard_19();
  REQUIRE(m.size() == 19);
  REQUIRE(m.channels.front() == "Fp1");
  REQUIRE(m.channels.back() == "O2");
  REQUIRE(m.index_of("Cz") == 9);
  REQUIRE_NOTHROW(m.validate());
}

TEST_CASE("montage validation rejects duplicates and tiny montages") {
  Montage dup{{"A", "B", "A"}};
  REQUIRE_THROWS_AS(dup.validate(), Error);
  Montage tiny{{"A"}};
  REQUIRE_THROWS_AS(tiny.validate(), Error);
}

TEST_CASE("load_cohort parses a two-row manifest") {
  TempDir dir("manifest");
  write_file(dir.file("m.csv"), "subject_id,sex,path\ns1,F,p1.csv\ns2,M,p2.csv\n");
  const Cohort c = load_cohort(dir.file("m.csv"));
  REQUIRE(c.entries.size() == 2);
  REQUIRE(c.entries[0].subject_id == "s1");
  REQUIRE(c.entries[0].sex == Sex::female);
  REQUIRE(c.entries[1].sex == Sex::male);
  // relative paths are anchored at the manifest directory
  REQUIRE(c.entries[0].path == dir.file("p1.csv"));
}

TEST_CASE("load_cohort accepts CRLF line endings") {
  TempDir dir("crlf");
  write_file(dir.file("m.csv"), "subject_id,sex,path\r\ns1,F,p1.csv\r\n");
  REQUIRE(load_cohort(dir.file("m.csv")).entries.size() == 1);
}

TEST_CASE("load_cohort error paths") {
  TempDir dir("manifest_err");
  SECTION("missing file") {
    try {
      load_cohort(dir.file("nope.csv"));
      FAIL("expected MissingFile");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::missing_file));
    }
  }
  SECTION("duplicate subject") {
    write_file(dir.file("m.csv"), "subject_id,sex,path\ns1,F,a\ns1,M,b\n");
    try {
      load_cohort(dir.file("m.csv"));
      FAIL("expected DuplicateSubject");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::duplicate_subject));
    }
  }
  SECTION("bad sex label") {
    write_file(dir.file("m.csv"), "subject_id,sex,path\ns1,X,a\n");
    try {
      load_cohort(dir.file("m.csv"));
      FAIL("expected BadSexLabel");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::bad_sex_label));
    }
  }
  SECTION("empty manifest") {
    write_file(dir.file("m.csv"), "subject_id,sex,path\n");
    try {
      load_cohort(dir.file("m.csv"));
      FAIL("expected EmptyManifest");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::empty_manifest));
    }
  }
}

TEST_CASE("load_cohort reproduces the 150/91 cohort composition") {
  TempDir dir("counts");
  std::string manifest = "subject_id,sex,path\n";
  for (int i = 0; i < 150; ++i) manifest += "F" + std::to_string(i) + ",F,x.csv\n";
  for (int i = 0; i < 91; ++i) manifest += "M" + std::to_string(i) + ",M,x.csv\n";
  write_file(dir.file("m.csv"), manifest);
  const Cohort c = load_cohort(dir.file("m.csv"));
  REQUIRE(c.entries.size() == 241);
  REQUIRE(c.count(Sex::female) == 150);
  REQUIRE(c.count(Sex::male) == 91);
}

namespace {

std::string small_recording_csv(const std::vector<std::string>& channels,
                                const std::vector<std::vector<double>>& rows,
                                const std::string& rate_line = "#rate=250") {
  std::string s;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (i) s += ',';
    s += channels[i];
  }
  s += '\n';
  if (!rate_line.empty()) s += rate_line + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_double(row[i]);
    }
    s += '\n';
  }
  return s;
}

}  // namespace

TEST_CASE("load_recording keeps montage order and reads the rate row") {
  TempDir dir("rec");
  const Montage m{{"A", "B", "C"}};
  write_file(dir.file("r.csv"),
             small_recording_csv({"A", "B", "C"}, {{1, 2, 3}, {4, 5, 6}}, "#rate=125"));
  const Recording rec = load_recording(dir.file("r.csv"), m, 125.0);
  REQUIRE(rec.sample_rate == 125.0);
  REQUIRE(rec.n_channels == 3);
  REQUIRE(rec.n_samples == 2);
  REQUIRE(rec.at(0, 0) == 1.0);
  REQUIRE(rec.at(2, 1) == 6.0);
}

TEST_CASE("load_recording defaults to 250 Hz without a rate row") {
  TempDir dir("rec250");
  const Montage m{{"A", "B"}};
  write_file(dir.file("r.csv"), small_recording_csv({"A", "B"}, {{1, 2}}, ""));
  REQUIRE(load_recording(dir.file("r.csv"), m).sample_rate == 250.0);
}

TEST_CASE("shuffled columns are normalized to montage order") {
  TempDir dir("shuffle");
  const Montage m{{"A", "B", "C"}};
  write_file(dir.file("ordered.csv"),
             small_recording_csv({"A", "B", "C"}, {{1, 2, 3}, {4, 5, 6}}));
  write_file(dir.file("shuffled.csv"),
             small_recording_csv({"C", "A", "B"}, {{3, 1, 2}, {6, 4, 5}}));
  const Recording a = load_recording(dir.file("ordered.csv"), m);
  const Recording b = load_recording(dir.file("shuffled.csv"), m);
  REQUIRE(a.data == b.data);
}

TEST_CASE("load_recording error paths") {
  TempDir dir("rec_err");
  const Montage m{{"A", "B", "C"}};
  SECTION("missing channel") {
    write_file(dir.file("r.csv"), small_recording_csv({"A", "B", "D"}, {{1, 2, 3}}));
    try {
      load_recording(dir.file("r.csv"), m);
      FAIL("expected ChannelMismatch");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::channel_mismatch));
    }
  }
  SECTION("rate mismatch") {
    write_file(dir.file("r.csv"), small_recording_csv({"A", "B", "C"}, {{1, 2, 3}}, "#rate=128"));
    try {
      load_recording(dir.file("r.csv"), m, 250.0);
      FAIL("expected RateMismatch");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::rate_mismatch));
    }
  }
  SECTION("non-numeric sample") {
    write_file(dir.file("r.csv"), "A,B,C\n1,zap,3\n");
    try {
      load_recording(dir.file("r.csv"), m);
      FAIL("expected NonNumericSample");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::non_numeric_sample));
    }
  }
}

TEST_CASE("recording save/load round-trips bit-exactly") {
  TempDir dir("roundtrip");
  const Montage m{{"A", "B"}};
  Recording rec = testutil::noise_recording(m, 100, 7);
  // canonicalize through the 6-decimal fixed form used on disk
  for (auto& v : rec.data)
    v = parse_double(format_double_fixed(v, 6), errc::non_numeric_sample, "t");
  save_recording_csv(rec, m, dir.file("r.csv"));
  const Recording loaded = load_recording(dir.file("r.csv"), m);
  REQUIRE(loaded.data == rec.data);
  REQUIRE(loaded.sample_rate == rec.sample_rate);

  // identical bytes -> identical Recording
  const Recording again = load_recording(dir.file("r.csv"), m);
  REQUIRE(again.data == loaded.data);
}

TEST_CASE("epoching arithmetic matches the 2s/5s defaults") {
  const Montage m{{"A", "B"}};
  SECTION("65 s yields 30 epochs of 500 samples") {
    const Recording rec = testutil::noise_recording(m, 65 * 250, 1);
    const EpochSet e = segment_epochs(rec);
    REQUIRE(e.n_epochs == 30);
    REQUIRE(e.epoch_len == 500);
  }
  SECTION("6 s is too short") {
    const Recording rec = testutil::noise_recording(m, 6 * 250, 2);
    try {
      segment_epochs(rec);
      FAIL("expected TooShort");
    } catch (const Error& e) {
      REQUIRE(has_code(e, errc::too_short));
    }
  }
  SECTION("185 s yields the 90-epoch eval window") {
    const Recording rec = testutil::noise_recording(m, 185 * 250, 3);
    REQUIRE(segment_epochs(rec).n_epochs == 90);
  }
}

TEST_CASE("epochs are contiguous slices of the recording") {
  const Montage m{{"A", "B", "C"}};
  const Recording rec = testutil::noise_recording(m, 8137, 11);
  const EpochSet e = segment_epochs(rec);
  const std::size_t discard = 1250;
  REQUIRE(e.n_epochs == (rec.n_samples - discard) / 500);
  for (std::size_t ep = 0; ep < e.n_epochs; ++ep)
    for (std::size_t ch = 0; ch < 3; ++ch)
      REQUIRE(std::memcmp(e.epoch_channel(ep, ch), rec.channel(ch) + discard + ep * 500,
                          500 * sizeof(double)) == 0);
}

TEST_CASE("epoch count formula holds across durations") {
  const Montage m{{"A", "B"}};
  for (std::size_t n : {1751u, 2000u, 5003u, 12345u}) {
    const Recording rec = testutil::noise_recording(m, n, n);
    const EpochSet e = segment_epochs(rec);
    REQUIRE(e.n_epochs == (n - 1250) / 500);
  }
}

#include <catch2/catch.hpp>

#include <algorithm>

#include "eegml/features.hpp"
#include "eegml/synth.hpp"
#include "test_util.hpp"

using namespace eegml;
using testutil::TempDir;

namespace {

const Montage kTwoCh{{"A", "B"}};

// Small cohort on a 2-channel montage; duration in seconds (5 s discard on
// top of what the caller wants usable).
SynthCohort tiny_cohort(int n_female, int n_male, double usable_seconds, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_female = n_female;
  spec.n_male = n_male;
  spec.duration_s = usable_seconds + 5.0;
  spec.montage = kTwoCh;
  spec.plants = {};
  spec.seed = seed;
  return generate_cohort(spec, 2);
}

ExtractOptions small_options() {
  ExtractOptions opt;
  return opt;
}

}  // namespace

TEST_CASE("quota arithmetic: 10F + 10M long recordings give 130 rows") {
  // 8 male sections need 8*30 s usable
  const SynthCohort synth = tiny_cohort(10, 10, 245.0, 1);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options(), 2);
  const FeatureTable table =
      select_training_rows(features, FeatureKind::connectivity, Quotas{}, 42);
  REQUIRE(table.rows.size() == 10 * 5 + 10 * 8);
  // female rows labelled 1, male rows 0
  for (const auto& row : table.rows)
    REQUIRE(row.label == (row.subject_id[0] == 'F' ? 1 : 0));
}

TEST_CASE("short subject contributes what it has, with a shortfall note") {
  // 3 full sections = 45 epochs = 90 s usable (female quota is 5)
  const SynthCohort synth = tiny_cohort(1, 0, 92.0, 2);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  TableBuildReport report;
  const FeatureTable table =
      select_training_rows(features, FeatureKind::connectivity, Quotas{}, 7, SectionPolicy::random,
                           &report);
  REQUIRE(table.rows.size() == 3);
  REQUIRE(report.shortfalls.size() == 1);
  REQUIRE(report.shortfalls[0].find("wanted 5") != std::string::npos);
}

TEST_CASE("training table is deterministic and independent of cohort order") {
  const SynthCohort synth = tiny_cohort(3, 3, 245.0, 3);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options(), 2);

  Cohort shuffled = synth.cohort;
  std::reverse(shuffled.entries.begin(), shuffled.entries.end());
  const CohortFeatures features_rev = extract_cohort(shuffled, synth.provider(), small_options(), 2);

  const FeatureTable a = select_training_rows(features, FeatureKind::connectivity, Quotas{}, 11);
  const FeatureTable b =
      select_training_rows(features_rev, FeatureKind::connectivity, Quotas{}, 11);
  REQUIRE(a.schema == b.schema);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].subject_id == b.rows[i].subject_id);
    REQUIRE(a.rows[i].section_id == b.rows[i].section_id);
    REQUIRE(a.rows[i].values == b.rows[i].values);
  }

  // a different seed picks different sections for at least one subject
  const FeatureTable c = select_training_rows(features, FeatureKind::connectivity, Quotas{}, 12);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.rows.size() && !any_difference; ++i)
    any_difference = a.rows[i].section_id != c.rows[i].section_id;
  REQUIRE(any_difference);
}

TEST_CASE("head policy takes the leading sections") {
  const SynthCohort synth = tiny_cohort(1, 0, 245.0, 4);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  const FeatureTable table = select_training_rows(features, FeatureKind::connectivity, Quotas{}, 5,
                                                  SectionPolicy::head);
  REQUIRE(table.rows.size() == 5);
  for (std::size_t b = 0; b < 5; ++b) REQUIRE(table.rows[b].section_id == section_id_string(b));
}

TEST_CASE("section rows reproduce the spectrum ops on their epoch block") {
  const SynthCohort synth = tiny_cohort(1, 0, 95.0, 5);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  const FeatureTable table = section_table(features, FeatureKind::connectivity);
  REQUIRE(table.rows.size() == 3);

  const Recording& rec = synth.recordings[0];
  const EpochSet all = segment_epochs(rec);
  for (std::size_t block = 0; block < 3; ++block) {
    EpochSet slice;
    slice.subject_id = rec.subject_id;
    slice.n_epochs = 15;
    slice.n_channels = all.n_channels;
    slice.epoch_len = all.epoch_len;
    slice.sample_rate = all.sample_rate;
    slice.data.assign(all.data.begin() + block * 15 * all.n_channels * all.epoch_len,
                      all.data.begin() + (block + 1) * 15 * all.n_channels * all.epoch_len);
    const FeatureVector direct =
        band_average(coherence(epoch_spectra(slice)), BandScheme::standard_eeg(), kTwoCh);
    REQUIRE(table.rows[block].values == direct.values);  // bit-identical

    const FeatureVector bp = band_power(epoch_spectra(slice), BandScheme::standard_eeg(), kTwoCh);
    const FeatureTable bp_table = section_table(features, FeatureKind::band_power);
    REQUIRE(bp_table.rows[block].values == bp.values);
  }
}

TEST_CASE("eval rows use the first 90 epochs") {
  const SynthCohort synth = tiny_cohort(1, 0, 245.0, 6);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  const FeatureTable table = eval_table(features, FeatureKind::connectivity);
  REQUIRE(table.rows.size() == 1);
  REQUIRE(table.rows[0].section_id == "eval");

  const Recording& rec = synth.recordings[0];
  const EpochSet all = segment_epochs(rec);
  EpochSet first90 = all;
  first90.n_epochs = 90;
  first90.data.resize(90 * all.n_channels * all.epoch_len);
  const FeatureVector direct =
      band_average(coherence(epoch_spectra(first90)), BandScheme::standard_eeg(), kTwoCh);
  REQUIRE(table.rows[0].values == direct.values);
}

TEST_CASE("subject with 40 epochs gets a flagged eval row from all of them") {
  const SynthCohort synth = tiny_cohort(1, 0, 80.0, 7);  // 40 epochs
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  REQUIRE(features.subjects[0].eval_epochs_used == 40);
  REQUIRE(features.subjects[0].eval_short);
  TableBuildReport report;
  const FeatureTable table = eval_table(features, FeatureKind::connectivity, &report);
  REQUIRE(table.rows.size() == 1);
  REQUIRE(report.shortfalls.size() == 1);
}

TEST_CASE("subject below 15 epochs is excluded from eval with a warning") {
  const SynthCohort synth = tiny_cohort(2, 0, 25.0, 8);  // 12 epochs
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  REQUIRE(features.subjects[0].eval_epochs_used == 0);
  TableBuildReport report;
  const FeatureTable table = eval_table(features, FeatureKind::connectivity, &report);
  REQUIRE(table.rows.empty());
  REQUIRE(report.exclusions.size() == 2);
  REQUIRE_FALSE(features.warnings.empty());
}

TEST_CASE("one row per subject in eval tables") {
  const SynthCohort synth = tiny_cohort(12, 12, 185.0, 9);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options(), 2);
  const FeatureTable table = eval_table(features, FeatureKind::connectivity);
  REQUIRE(table.rows.size() == 24);
  std::set<std::string> ids;
  for (const auto& row : table.rows) ids.insert(row.subject_id);
  REQUIRE(ids.size() == 24);
}

TEST_CASE("project reorders and reduces columns") {
  FeatureTable table;
  table.schema = {"a", "b", "c"};
  table.rows.push_back({"s", "0000", 1, {1.0, 2.0, 3.0}});

  const FeatureTable identity = project(table, FeatureSubset{{"a", "b", "c"}});
  REQUIRE(identity.rows[0].values == table.rows[0].values);

  const FeatureTable swapped = project(table, FeatureSubset{{"c", "a"}});
  REQUIRE(swapped.schema == std::vector<std::string>{"c", "a"});
  REQUIRE(swapped.rows[0].values == std::vector<double>{3.0, 1.0});

  try {
    project(table, FeatureSubset{{"zz"}});
    FAIL("expected UnknownFeature");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::unknown_feature);
  }
}

TEST_CASE("feature table CSV round-trips bit-exactly") {
  TempDir dir("ftable");
  const SynthCohort synth = tiny_cohort(1, 1, 65.0, 10);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  const FeatureTable table = section_table(features, FeatureKind::connectivity);
  save_feature_table(table, dir.file("t.csv"), "#eegml test");
  const FeatureTable loaded = load_feature_table(dir.file("t.csv"));
  REQUIRE(loaded.schema == table.schema);
  REQUIRE(loaded.rows.size() == table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    REQUIRE(loaded.rows[i].subject_id == table.rows[i].subject_id);
    REQUIRE(loaded.rows[i].label == table.rows[i].label);
    REQUIRE(loaded.rows[i].values == table.rows[i].values);
  }
}

TEST_CASE("build_training_table composes extract and select") {
  const SynthCohort synth = tiny_cohort(2, 2, 95.0, 11);
  const FeatureTable direct = build_training_table(synth.cohort, synth.provider(), Quotas{},
                                                   BandScheme::standard_eeg(), 99);
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  const FeatureTable staged = select_training_rows(features, FeatureKind::connectivity, Quotas{}, 99);
  REQUIRE(direct.rows.size() == staged.rows.size());
  for (std::size_t i = 0; i < direct.rows.size(); ++i)
    REQUIRE(direct.rows[i].values == staged.rows[i].values);
}

TEST_CASE("empty training table raises NoSections") {
  const SynthCohort synth = tiny_cohort(1, 0, 20.0, 12);  // 10 epochs: no section
  const CohortFeatures features = extract_cohort(synth.cohort, synth.provider(), small_options());
  try {
    select_training_rows(features, FeatureKind::connectivity, Quotas{}, 1);
    FAIL("expected NoSections");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::no_sections);
  }
}

TEST_CASE("filter_subjects keeps only the requested ids") {
  FeatureTable table;
  table.schema = {"a"};
  table.rows.push_back({"s1", "0000", 1, {1.0}});
  table.rows.push_back({"s2", "0000", 0, {2.0}});
  table.rows.push_back({"s1", "0001", 1, {3.0}});
  const FeatureTable kept = filter_subjects(table, {"s1"});
  REQUIRE(kept.rows.size() == 2);
  for (const auto& row : kept.rows) REQUIRE(row.subject_id == "s1");
}

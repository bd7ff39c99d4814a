#include <catch2/catch.hpp>

#include <algorithm>
#include <numeric>

#include "eegml/eval.hpp"
#include "test_util.hpp"

using namespace eegml;

namespace {

// Brute-force Mann-Whitney concordance with ties counted 1/2.
double concordance(const std::vector<double>& probs, const std::vector<int>& labels) {
  double num = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (probs[i] > probs[j])
        num += 1.0;
      else if (probs[i] == probs[j])
        num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

CohortFeatures fake_features(int n_female, int n_male, int n_sections, std::size_t d,
                             std::uint64_t seed,
                             const std::function<double(Sex, std::size_t, Rng&)>& value,
                             int eval_every = 1) {
  CohortFeatures features;
  features.montage = Montage::standard_19();
  for (std::size_t f = 0; f < d; ++f) features.conn_names.push_back("f" + std::to_string(f));
  features.bp_names = features.conn_names;
  const int total = n_female + n_male;
  for (int i = 0; i < total; ++i) {
    SubjectFeatures s;
    const bool female = i < n_female;
    s.sex = female ? Sex::female : Sex::male;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%03d", female ? 'F' : 'M', female ? i + 1 : i - n_female + 1);
    s.subject_id = buf;
    s.n_epochs = static_cast<std::size_t>(n_sections) * 15;
    Rng rng(mix_keys(seed, fnv1a64(s.subject_id)));
    for (int b = 0; b < n_sections; ++b) {
      std::vector<double> row(d);
      for (std::size_t f = 0; f < d; ++f) row[f] = value(s.sex, f, rng);
      s.section_conn.push_back(row);
      s.section_bp.push_back(row);
    }
    if (i % eval_every == 0) {
      std::vector<double> eval_row(d);
      for (std::size_t f = 0; f < d; ++f) eval_row[f] = value(s.sex, f, rng);
      s.eval_conn = eval_row;
      s.eval_bp = eval_row;
      s.eval_epochs_used = 90;
    }
    features.subjects.push_back(std::move(s));
  }
  return features;
}

CohortFeatures planted_features(int n_female, int n_male, std::size_t d, std::size_t planted,
                                std::uint64_t seed, double effect = 2.0) {
  return fake_features(n_female, n_male, 8, d, seed,
                       [planted, effect](Sex sex, std::size_t f, Rng& rng) {
                         double v = rng.gaussian();
                         if (f == planted && sex == Sex::female) v += effect;
                         return v;
                       });
}

FeatureSubset full_subset(const CohortFeatures& features) {
  return FeatureSubset{features.conn_names};
}

}  // namespace

TEST_CASE("threshold sweep basics") {
  const std::vector<double> grid = ThresholdGrid{}.values();
  REQUIRE(grid.size() == 99);
  REQUIRE(grid.front() == Approx(0.01));
  REQUIRE(grid.back() == Approx(0.99));

  const auto acc = threshold_sweep({0.9, 0.1}, {1, 0}, {0.5});
  REQUIRE(acc == std::vector<double>{1.0});

  // theta below every probability: everything predicted 1, accuracy = prevalence
  const auto low = threshold_sweep({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 1}, {0.5});
  REQUIRE(low[0] == Approx(0.75));

  try {
    threshold_sweep({0.5}, {1, 0}, {0.5});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::length_mismatch);
  }
}

TEST_CASE("roc/auc endpoints and degenerate cases") {
  const RocCurve perfect = roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
  REQUIRE(perfect.auc == Approx(1.0));
  REQUIRE(perfect.fpr.front() == 0.0);
  REQUIRE(perfect.fpr.back() == 1.0);
  REQUIRE(perfect.tpr.back() == 1.0);

  const RocCurve coin = roc_auc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0});
  REQUIRE(coin.auc == Approx(0.5));

  try {
    roc_auc({0.1, 0.2}, {1, 1});
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::single_class);
  }
}

TEST_CASE("trapezoid auc equals brute-force concordance with ties") {
  Rng rng(404);
  for (int inst = 0; inst < 60; ++inst) {
    const std::size_t n = 5 + rng.below(60);
    std::vector<double> probs(n);
    std::vector<int> labels(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // quantized scores force plenty of ties
      probs[i] = static_cast<double>(rng.below(inst % 2 ? 8 : 1000)) / 1000.0;
      labels[i] = static_cast<int>(rng.below(2));
      (labels[i] ? pos : neg) = true;
    }
    if (!pos || !neg) {
      labels[0] = 1;
      labels[n - 1] = 0;
    }
    const RocCurve roc = roc_auc(probs, labels);
    REQUIRE(std::abs(roc.auc - concordance(probs, labels)) < 1e-12);
    for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
      REQUIRE(roc.fpr[i] >= roc.fpr[i - 1]);
      REQUIRE(roc.tpr[i] >= roc.tpr[i - 1]);
    }
  }
}

TEST_CASE("accuracy curve steps only at observed probabilities") {
  Rng rng(606);
  std::vector<double> probs(20);
  std::vector<int> labels(20);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = rng.uniform();
    labels[i] = static_cast<int>(rng.below(2));
  }
  std::vector<double> sorted = probs;
  std::sort(sorted.begin(), sorted.end());
  // between consecutive observed values the accuracy is constant
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i + 1] - sorted[i] < 1e-9) continue;
    const double lo = sorted[i] + 0.25 * (sorted[i + 1] - sorted[i]);
    const double hi = sorted[i] + 0.75 * (sorted[i + 1] - sorted[i]);
    const auto acc = threshold_sweep(probs, labels, {lo, hi});
    REQUIRE(acc[0] == acc[1]);
    REQUIRE(acc[0] >= 0.0);
    REQUIRE(acc[0] <= 1.0);
  }
}

TEST_CASE("roc interpolation and vertical averaging") {
  const RocCurve roc = roc_auc({0.9, 0.6, 0.4, 0.1}, {1, 1, 0, 0});
  REQUIRE(roc_tpr_at(roc, 0.0) == Approx(1.0));  // perfect: all tpr at fpr 0
  REQUIRE(roc_tpr_at(roc, 1.0) == Approx(1.0));

  const RocCurve avg = average_roc({roc, roc});
  REQUIRE(avg.fpr.size() == 101);
  REQUIRE(avg.auc == Approx(roc.auc));
  for (std::size_t i = 0; i < avg.fpr.size(); ++i)
    REQUIRE(avg.tpr[i] == Approx(roc_tpr_at(roc, avg.fpr[i])));
}

TEST_CASE("cross_validate separates a planted effect and stays clean") {
  const CohortFeatures features = planted_features(14, 12, 6, 2, 5);
  ModelSpec gbt;
  gbt.gbt.trees = 60;
  CvConfig config;
  config.n_trials = 6;
  config.seed = 99;
  config.jobs = 2;
  const CvReport report = cross_validate(features, full_subset(features), {gbt}, config);
  REQUIRE(report.per_spec.size() == 1);
  REQUIRE(report.hygiene_violations == 0);
  REQUIRE(report.per_spec[0].mean_auc > 0.8);
  REQUIRE(report.per_spec[0].best_accuracy > 0.7);
  REQUIRE(report.per_spec[0].trials.size() == 6);
  for (const auto& trial : report.per_spec[0].trials) {
    // no validation subject in the training subjects
    for (const auto& v : trial.val_subjects)
      REQUIRE(std::find(trial.train_subjects.begin(), trial.train_subjects.end(), v) ==
              trial.train_subjects.end());
  }
}

TEST_CASE("single-trial aggregates equal the trial") {
  const CohortFeatures features = planted_features(8, 8, 6, 1, 6);
  ModelSpec gbt;
  gbt.gbt.trees = 30;
  CvConfig config;
  config.n_trials = 1;
  config.seed = 3;
  const CvReport report = cross_validate(features, full_subset(features), {gbt}, config);
  const auto& mr = report.per_spec[0];
  REQUIRE(mr.mean_accuracy == mr.trials[0].accuracy);
  REQUIRE(mr.std_accuracy == std::vector<double>(mr.thresholds.size(), 0.0));
  REQUIRE(mr.mean_auc == mr.trials[0].roc.auc);
  REQUIRE(mr.std_auc == 0.0);
}

TEST_CASE("aggregates recompute exactly from the per-trial records") {
  const CohortFeatures features = planted_features(10, 10, 6, 0, 7);
  ModelSpec logistic;
  logistic.kind = ModelKind::logistic;
  CvConfig config;
  config.n_trials = 5;
  config.seed = 8;
  const CvReport report = cross_validate(features, full_subset(features), {logistic}, config);
  const auto& mr = report.per_spec[0];
  for (std::size_t g = 0; g < mr.thresholds.size(); ++g) {
    std::vector<double> column;
    for (const auto& t : mr.trials) column.push_back(t.accuracy[g]);
    const double mean =
        std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
    REQUIRE(mr.mean_accuracy[g] == mean);
  }
}

TEST_CASE("redraws trigger when a validation fold loses a class") {
  // only the first male has an eval row: folds holding out the other male
  // must redraw
  CohortFeatures features = fake_features(6, 2, 4, 3, 9,
                                          [](Sex sex, std::size_t, Rng& rng) {
                                            return rng.gaussian() + (sex == Sex::female ? 1.0 : 0.0);
                                          });
  features.subjects[7].eval_conn.clear();
  features.subjects[7].eval_bp.clear();
  features.subjects[7].eval_epochs_used = 0;
  ModelSpec logistic;
  logistic.kind = ModelKind::logistic;
  CvConfig config;
  config.n_trials = 8;
  config.seed = 15;
  const CvReport report = cross_validate(features, full_subset(features), {logistic}, config);
  REQUIRE(report.total_redraws > 0);
  REQUIRE(report.hygiene_violations == 0);
}

TEST_CASE("cross_validate fails cleanly when a class can never be validated") {
  // no male ever has an eval row
  CohortFeatures features = fake_features(6, 2, 4, 3, 10,
                                          [](Sex, std::size_t, Rng& rng) { return rng.gaussian(); });
  features.subjects[6].eval_conn.clear();
  features.subjects[6].eval_epochs_used = 0;
  features.subjects[7].eval_conn.clear();
  features.subjects[7].eval_epochs_used = 0;
  ModelSpec logistic;
  logistic.kind = ModelKind::logistic;
  CvConfig config;
  config.n_trials = 2;
  config.seed = 4;
  try {
    cross_validate(features, full_subset(features), {logistic}, config);
    FAIL("expected CohortTooSmall");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::cohort_too_small);
  }
}

TEST_CASE("holdout_test rejects overlap and evaluates a clean split") {
  const CohortFeatures train = planted_features(12, 10, 5, 1, 11);
  const CohortFeatures test = planted_features(5, 4, 5, 1, 1200);
  ModelSpec gbt;
  gbt.gbt.trees = 50;
  CvConfig config;
  config.seed = 21;

  try {
    holdout_test(train, train, full_subset(train), {gbt}, config);
    FAIL("expected SubjectOverlap");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::subject_overlap);
  }

  // disjoint ids: rename test cohort subjects
  CohortFeatures renamed = test;
  for (auto& s : renamed.subjects) s.subject_id = "T" + s.subject_id;
  const TestReport report = holdout_test(train, renamed, full_subset(train), {gbt}, config);
  REQUIRE(report.per_spec.size() == 1);
  REQUIRE(report.per_spec[0].trials.size() == 1);
  REQUIRE(report.per_spec[0].best_accuracy > 0.6);
  REQUIRE(report.per_spec[0].mean_auc > 0.7);
}

TEST_CASE("class stats five-number summaries") {
  FeatureTable table;
  table.schema = {"x:alpha", "y:beta"};
  for (int i = 0; i < 8; ++i) {
    FeatureRow row;
    row.subject_id = "s" + std::to_string(i);
    row.section_id = "0000";
    row.label = i < 4 ? 1 : 0;
    // feature 0 constant per class; feature 1 varies
    row.values = {row.label ? 2.0 : -1.0, static_cast<double>(i)};
    table.rows.push_back(row);
  }
  const auto rows = class_stats(table, FeatureSubset{{"x:alpha", "y:beta"}});
  REQUIRE(rows.size() == 4);
  // grouped by band: alpha rows first
  REQUIRE(rows[0].band == "alpha");
  REQUIRE(rows[0].sex == 'F');
  REQUIRE(rows[0].q1 == 2.0);
  REQUIRE(rows[0].median == 2.0);
  REQUIRE(rows[0].q3 == 2.0);
  REQUIRE(rows[1].sex == 'M');
  REQUIRE(rows[1].median == -1.0);
  REQUIRE(rows[2].band == "beta");
  REQUIRE(rows[2].median == Approx(1.5));  // F rows: 0,1,2,3

  FeatureTable single;
  single.schema = {"x:alpha"};
  single.rows.push_back({"s", "0000", 1, {1.0}});
  try {
    class_stats(single, FeatureSubset{{"x:alpha"}});
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::single_class);
  }
}

TEST_CASE("planted feature separates class medians") {
  const CohortFeatures features = planted_features(15, 15, 6, 0, 31, 2.5);
  const FeatureTable table = section_table(features, FeatureKind::connectivity);
  const auto rows = class_stats(table, FeatureSubset{{"f0"}});
  REQUIRE(rows.size() == 2);
  const double iqr_f = rows[0].q3 - rows[0].q1;
  const double iqr_m = rows[1].q3 - rows[1].q1;
  REQUIRE(rows[0].median - rows[1].median > 0.5 * 0.5 * (iqr_f + iqr_m));
}

TEST_CASE("k sweep peaks near the planted feature count") {
  // 3 informative features among 12
  const CohortFeatures features = fake_features(
      16, 14, 8, 12, 77, [](Sex sex, std::size_t f, Rng& rng) {
        double v = rng.gaussian();
        if (f < 3 && sex == Sex::female) v += 1.1;
        return v;
      });
  SelectionConfig sel;
  sel.n_trials = 6;
  sel.seed = 13;
  sel.gbt_spec.gbt.trees = 40;
  const SelectionResult result = run_selection(features, sel);

  ModelSpec gbt;
  gbt.gbt.trees = 40;
  CvConfig config;
  config.n_trials = 6;
  config.seed = 14;
  config.jobs = 2;
  const KSweepCurve curve =
      sweep_k(features, result.ranking, {1, 2, 3, 4, 6, 9, 12}, gbt, config);
  REQUIRE(curve.points.size() == 7);
  // accuracy at the plateau beats k=1
  REQUIRE(curve.points.back().mean_accuracy >= curve.points[0].mean_accuracy);
  REQUIRE(curve.argmax_k >= 2);
}

TEST_CASE("sweep with every feature equals plain cross-validation") {
  const CohortFeatures features = planted_features(8, 8, 5, 2, 51);
  SelectionConfig sel;
  sel.n_trials = 3;
  sel.seed = 1;
  sel.gbt_spec.gbt.trees = 20;
  const SelectionResult result = run_selection(features, sel);

  ModelSpec gbt;
  gbt.gbt.trees = 20;
  CvConfig config;
  config.n_trials = 3;
  config.seed = 2;
  const KSweepCurve curve = sweep_k(features, result.ranking, {features.conn_names.size()}, gbt, config);
  const CvReport direct =
      cross_validate(features, top_k(result.ranking, features.conn_names.size()), {gbt}, config);
  REQUIRE(curve.points[0].mean_accuracy == direct.per_spec[0].best_accuracy);
  REQUIRE(curve.points[0].mean_auc == direct.per_spec[0].mean_auc);
}

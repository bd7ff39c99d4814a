#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "eegml/error.hpp"
#include "eegml/features.hpp"
#include "eegml/models.hpp"
#include "eegml/parallel.hpp"
#include "eegml/rng.hpp"
#include "eegml/selection.hpp"

namespace eegml {

struct ThresholdGrid {
  double start = 0.01;
  double stop = 0.99;
  double step = 0.01;

  std::vector<double> values() const {
    require(step > 0 && start > 0 && stop < 1 && start <= stop, errc::config_invalid,
            "threshold grid must lie strictly inside (0,1) with positive step");
    std::vector<double> out;
    for (int i = 0;; ++i) {
      const double theta = start + step * i;
      if (theta > stop + 1e-12) break;
      out.push_back(theta);
    }
    return out;
  }
};

// accuracy(theta) = fraction of rows with (p > theta) == label.
inline std::vector<double> threshold_sweep(const std::vector<double>& probs,
                                           const std::vector<int>& labels,
                                           const std::vector<double>& grid) {
  require(probs.size() == labels.size(), errc::length_mismatch,
          "probs and labels differ in length");
  require(!probs.empty(), errc::length_mismatch, "threshold sweep needs at least one row");
  std::vector<double> acc;
  acc.reserve(grid.size());
  for (double theta : grid) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
      ok += (probs[i] > theta ? 1 : 0) == labels[i];
    acc.push_back(static_cast<double>(ok) / static_cast<double>(probs.size()));
  }
  return acc;
}

struct RocCurve {
  std::vector<double> fpr;  // sorted ascending, starts 0, ends 1
  std::vector<double> tpr;  // non-decreasing along the curve
  double auc = 0.0;
};

// ROC over the unique score thresholds, AUC by trapezoid; equals the
// Mann-Whitney statistic with ties counted 1/2.
inline RocCurve roc_auc(const std::vector<double>& probs, const std::vector<int>& labels) {
  require(probs.size() == labels.size(), errc::length_mismatch,
          "probs and labels differ in length");
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : labels) (y ? n_pos : n_neg) += 1;
  require(n_pos > 0 && n_neg > 0, errc::single_class, "roc needs both classes");

  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  RocCurve out;
  out.fpr.push_back(0.0);
  out.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double score = probs[idx[i]];
    while (i < idx.size() && probs[idx[i]] == score) {
      (labels[idx[i]] ? tp : fp) += 1;
      ++i;
    }
    out.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
    out.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
  }
  double auc = 0.0;
  for (std::size_t p = 1; p < out.fpr.size(); ++p)
    auc += (out.fpr[p] - out.fpr[p - 1]) * 0.5 * (out.tpr[p] + out.tpr[p - 1]);
  out.auc = auc;
  return out;
}

// TPR at a given FPR by linear interpolation along the curve's polyline;
// vertical segments resolve to their upper end.
inline double roc_tpr_at(const RocCurve& roc, double fpr) {
  if (fpr <= 0.0) {
    double best = 0.0;
    for (std::size_t i = 0; i < roc.fpr.size() && roc.fpr[i] == 0.0; ++i) best = roc.tpr[i];
    return best;
  }
  for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
    if (roc.fpr[i] < fpr) continue;
    if (roc.fpr[i] == fpr) {
      double best = roc.tpr[i];
      for (std::size_t j = i; j < roc.fpr.size() && roc.fpr[j] == fpr; ++j) best = roc.tpr[j];
      return best;
    }
    const double span = roc.fpr[i] - roc.fpr[i - 1];
    const double t = (fpr - roc.fpr[i - 1]) / span;
    return roc.tpr[i - 1] + t * (roc.tpr[i] - roc.tpr[i - 1]);
  }
  return 1.0;
}

// Vertical average of per-trial ROC curves over a fixed 101-point FPR grid.
inline RocCurve average_roc(const std::vector<RocCurve>& curves) {
  RocCurve out;
  double auc_sum = 0.0;
  for (int g = 0; g <= 100; ++g) {
    const double fpr = static_cast<double>(g) / 100.0;
    double tpr = 0.0;
    for (const auto& c : curves) tpr += roc_tpr_at(c, fpr);
    out.fpr.push_back(fpr);
    out.tpr.push_back(curves.empty() ? 0.0 : tpr / static_cast<double>(curves.size()));
  }
  for (const auto& c : curves) auc_sum += c.auc;
  out.auc = curves.empty() ? 0.0 : auc_sum / static_cast<double>(curves.size());
  return out;
}

struct TrialRecord {
  int trial_id = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> train_subjects;
  std::vector<std::string> val_subjects;
  std::vector<double> probs;
  std::vector<int> labels;
  std::vector<double> accuracy;  // per grid threshold
  RocCurve roc;
};

struct ModelEvalReport {
  std::string kind;
  std::vector<TrialRecord> trials;
  std::vector<double> thresholds;
  std::vector<double> mean_accuracy;
  std::vector<double> std_accuracy;
  double mean_auc = 0.0;
  double std_auc = 0.0;
  double best_theta = 0.0;
  double best_accuracy = 0.0;
  RocCurve mean_roc;
};

struct CvConfig {
  int n_trials = 50;
  double train_fraction = 0.9;
  Quotas quotas;
  SectionPolicy section_policy = SectionPolicy::random;
  FeatureKind kind = FeatureKind::connectivity;
  int max_redraws = 10;
  ThresholdGrid grid;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct CvReport {
  std::vector<ModelEvalReport> per_spec;
  std::size_t hygiene_violations = 0;  // val subjects found in a training table
  int total_redraws = 0;
};

namespace detail {

inline double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// Smallest theta achieving the maximum of the mean accuracy curve.
inline void best_operating_point(const std::vector<double>& thresholds,
                                 const std::vector<double>& mean_acc, double* best_theta,
                                 double* best_acc) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < mean_acc.size(); ++i)
    if (mean_acc[i] > mean_acc[best]) best = i;
  *best_theta = thresholds[best];
  *best_acc = mean_acc[best];
}

inline void finalize_report(ModelEvalReport& report) {
  const std::size_t n_grid = report.thresholds.size();
  report.mean_accuracy.assign(n_grid, 0.0);
  report.std_accuracy.assign(n_grid, 0.0);
  std::vector<double> column(report.trials.size());
  for (std::size_t g = 0; g < n_grid; ++g) {
    for (std::size_t t = 0; t < report.trials.size(); ++t) column[t] = report.trials[t].accuracy[g];
    const double mean =
        std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
    report.mean_accuracy[g] = mean;
    report.std_accuracy[g] = sample_std(column, mean);
  }
  std::vector<double> aucs;
  std::vector<RocCurve> curves;
  for (const auto& t : report.trials) {
    aucs.push_back(t.roc.auc);
    curves.push_back(t.roc);
  }
  report.mean_auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
  report.std_auc = sample_std(aucs, report.mean_auc);
  report.mean_roc = average_roc(curves);
  best_operating_point(report.thresholds, report.mean_accuracy, &report.best_theta,
                       &report.best_accuracy);
}

}  // namespace detail

// The validation protocol: per trial, stratified train/validation subject
// split, augmented-section training table on the training side, unsplit
// long-window rows on the validation side, threshold sweep + ROC per model.
// A trial whose validation rows lose a class (short recordings) is redrawn,
// at most max_redraws times.
inline CvReport cross_validate(const CohortFeatures& features, const FeatureSubset& subset,
                               const std::vector<ModelSpec>& specs, const CvConfig& config) {
  require(!specs.empty(), errc::config_invalid, "cross_validate needs at least one model spec");
  require(config.n_trials >= 1, errc::config_invalid, "n_trials must be >= 1");

  const std::vector<double> grid = config.grid.values();
  const FeatureTable all_eval = eval_table(features, config.kind);
  require(!all_eval.rows.empty(), errc::cohort_too_small, "no subject has an eval row");

  struct TrialOutput {
    std::vector<TrialRecord> per_spec;  // parallel to specs
    std::size_t violations = 0;
    int redraws = 0;
  };
  std::vector<TrialOutput> outputs(config.n_trials);

  parallel_for(static_cast<std::size_t>(config.n_trials), config.jobs, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, "cv", t);

    std::set<std::string> train_ids;
    FeatureTable train_table, val_rows;
    bool ok = false;
    int redraw = 0;
    for (; redraw <= config.max_redraws; ++redraw) {
      Rng rng(derive_seed(trial_seed, "split", redraw));
      train_ids = stratified_sample(features, config.train_fraction, rng);
      std::vector<std::string> val_ids;
      for (const auto& s : features.subjects)
        if (!train_ids.count(s.subject_id)) val_ids.push_back(s.subject_id);
      val_rows = filter_subjects(all_eval, val_ids);
      if (!val_rows.has_both_classes()) continue;
      train_table = select_training_rows(features, config.kind, config.quotas,
                                         derive_seed(trial_seed, "table", redraw),
                                         config.section_policy, nullptr, &train_ids);
      ok = true;
      break;
    }
    require(ok, errc::cohort_too_small,
            "validation fold kept losing a class after " + std::to_string(config.max_redraws) +
                " redraws");

    TrialOutput& out = outputs[t];
    out.redraws = redraw;

    // protocol hygiene: no validation subject may appear in the training table
    for (const auto& row : train_table.rows)
      if (!train_ids.count(row.subject_id)) ++out.violations;
    std::set<std::string> val_id_set;
    for (const auto& row : val_rows.rows) {
      val_id_set.insert(row.subject_id);
      if (train_ids.count(row.subject_id)) ++out.violations;
    }

    const FeatureTable train_proj = project(train_table, subset);
    const FeatureTable val_proj = project(val_rows, subset);
    std::vector<int> labels;
    for (const auto& row : val_proj.rows) labels.push_back(row.label);

    out.per_spec.resize(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
      ModelSpec spec = specs[s];
      spec.seed = derive_seed(spec.seed, "cv-trial", t);
      const Model model = train(spec, train_proj);
      TrialRecord rec;
      rec.trial_id = static_cast<int>(t);
      rec.seed = trial_seed;
      rec.train_subjects.assign(train_ids.begin(), train_ids.end());
      for (const auto& id : val_id_set) rec.val_subjects.push_back(id);
      rec.probs = predict_proba(model, val_proj);
      rec.labels = labels;
      rec.accuracy = threshold_sweep(rec.probs, rec.labels, grid);
      rec.roc = roc_auc(rec.probs, rec.labels);
      out.per_spec[s] = std::move(rec);
    }
  });

  CvReport report;
  report.per_spec.resize(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s) {
    ModelEvalReport& mr = report.per_spec[s];
    mr.kind = model_kind_name(specs[s].kind);
    mr.thresholds = grid;
    for (int t = 0; t < config.n_trials; ++t) mr.trials.push_back(outputs[t].per_spec[s]);
    detail::finalize_report(mr);
  }
  for (const auto& out : outputs) {
    report.hygiene_violations += out.violations;
    report.total_redraws += out.redraws;
  }
  return report;
}

struct TestReport {
  std::vector<ModelEvalReport> per_spec;  // one pseudo-trial each
  std::size_t hygiene_violations = 0;
};

// Train once on the full training cohort, evaluate once on the unsplit
// holdout rows.
inline TestReport holdout_test(const CohortFeatures& train_features,
                               const CohortFeatures& test_features, const FeatureSubset& subset,
                               const std::vector<ModelSpec>& specs, const CvConfig& config) {
  std::set<std::string> train_ids, overlap;
  for (const auto& s : train_features.subjects) train_ids.insert(s.subject_id);
  for (const auto& s : test_features.subjects)
    if (train_ids.count(s.subject_id)) overlap.insert(s.subject_id);
  require(overlap.empty(), errc::subject_overlap,
          "train and test cohorts share " + std::to_string(overlap.size()) + " subject(s)");

  const std::vector<double> grid = config.grid.values();
  const FeatureTable train_table =
      select_training_rows(train_features, config.kind, config.quotas,
                           derive_seed(config.seed, "holdout-table"), config.section_policy);
  const FeatureTable train_proj = project(train_table, subset);
  const FeatureTable test_rows = project(eval_table(test_features, config.kind), subset);
  require(!test_rows.rows.empty(), errc::cohort_too_small, "holdout cohort has no eval rows");

  TestReport report;
  std::vector<int> labels;
  for (const auto& row : test_rows.rows) labels.push_back(row.label);

  for (const auto& base_spec : specs) {
    ModelSpec spec = base_spec;
    spec.seed = derive_seed(spec.seed, "holdout");
    const Model model = train(spec, train_proj);
    TrialRecord rec;
    rec.trial_id = 0;
    rec.seed = config.seed;
    rec.probs = predict_proba(model, test_rows);
    rec.labels = labels;
    rec.accuracy = threshold_sweep(rec.probs, rec.labels, grid);
    rec.roc = roc_auc(rec.probs, rec.labels);

    ModelEvalReport mr;
    mr.kind = model_kind_name(base_spec.kind);
    mr.thresholds = grid;
    mr.trials.push_back(std::move(rec));
    detail::finalize_report(mr);
    report.per_spec.push_back(std::move(mr));
  }
  return report;
}

struct ClassStatsRow {
  std::string feature;
  std::string band;  // suffix of the feature name after ':'
  char sex = 'F';
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Linear-interpolation quantile on sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

// Five-number summaries per (feature, class), grouped by band then subset
// order for export.
inline std::vector<ClassStatsRow> class_stats(const FeatureTable& table,
                                              const FeatureSubset& subset) {
  const FeatureTable proj = project(table, subset);
  require(proj.has_both_classes(), errc::single_class, "class stats need both classes");

  std::vector<ClassStatsRow> rows;
  for (std::size_t f = 0; f < proj.schema.size(); ++f) {
    for (int cls : {1, 0}) {
      std::vector<double> values;
      for (const auto& row : proj.rows)
        if (row.label == cls) values.push_back(row.values[f]);
      std::sort(values.begin(), values.end());
      ClassStatsRow r;
      r.feature = proj.schema[f];
      const auto colon = r.feature.rfind(':');
      r.band = colon == std::string::npos ? "" : r.feature.substr(colon + 1);
      r.sex = cls ? 'F' : 'M';
      r.min = values.front();
      r.q1 = quantile_sorted(values, 0.25);
      r.median = quantile_sorted(values, 0.5);
      r.q3 = quantile_sorted(values, 0.75);
      r.max = values.back();
      rows.push_back(std::move(r));
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ClassStatsRow& a, const ClassStatsRow& b) { return a.band < b.band; });
  return rows;
}

struct KSweepPoint {
  std::size_t k = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_auc = 0.0;
};

struct KSweepCurve {
  std::vector<KSweepPoint> points;
  std::size_t argmax_k = 0;  // smallest k achieving the max mean accuracy
  std::size_t hygiene_violations = 0;
};

// Accuracy-vs-k sweep: cross-validate with the top-k features for each k.
inline KSweepCurve sweep_k(const CohortFeatures& features, const AggregateRanking& agg,
                           const std::vector<std::size_t>& ks, const ModelSpec& spec,
                           const CvConfig& config) {
  require(!ks.empty(), errc::empty_input, "sweep needs at least one k");
  KSweepCurve curve;
  for (std::size_t k : ks) {
    const FeatureSubset subset = top_k(agg, k);
    const CvReport report = cross_validate(features, subset, {spec}, config);
    curve.hygiene_violations += report.hygiene_violations;
    KSweepPoint point;
    point.k = k;
    point.mean_accuracy = report.per_spec[0].best_accuracy;
    const auto& mean_acc = report.per_spec[0].mean_accuracy;
    const std::size_t best =
        std::max_element(mean_acc.begin(), mean_acc.end()) - mean_acc.begin();
    point.std_accuracy = report.per_spec[0].std_accuracy[best];
    point.mean_auc = report.per_spec[0].mean_auc;
    curve.points.push_back(point);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    if (curve.points[i].mean_accuracy > curve.points[best].mean_accuracy) best = i;
  curve.argmax_k = curve.points[best].k;
  return curve;
}

}  // namespace eegml

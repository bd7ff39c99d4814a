#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegml/eval.hpp"
#include "eegml/features.hpp"
#include "eegml/ingest.hpp"
#include "eegml/models_json.hpp"
#include "eegml/selection.hpp"
#include "eegml/synth.hpp"
#include "eegml/version.hpp"

namespace eegml {

struct SelectionSettings {
  int n_trials = 50;
  double subject_fraction = 0.9;
  AggregatePolicy policy = AggregatePolicy::worst_rank;
  bool k_is_sweep = false;
  std::size_t k = 34;
  std::vector<std::size_t> ks;  // empty => derived default ladder
};

struct EvalSettings {
  int n_trials = 50;
  double train_fraction = 0.9;
  int max_redraws = 10;
  ThresholdGrid grid;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string manifest;
  std::string test_manifest;
  double sample_rate = 250.0;
  EpochOptions epoching;
  BandScheme scheme = BandScheme::standard_eeg();
  Montage montage = Montage::standard_19();
  Quotas quotas;
  SectionPolicy section_policy = SectionPolicy::random;
  FeatureKind feature_kind = FeatureKind::connectivity;
  int eval_epochs = 90;
  SelectionSettings selection;
  EvalSettings eval;
  std::vector<ModelSpec> models;
  SynthSpec synth;
  unsigned jobs = 1;

  ExtractOptions extract_options() const {
    ExtractOptions opt;
    opt.epoching = epoching;
    opt.scheme = scheme;
    opt.section_epochs = quotas.section_epochs;
    opt.eval_epochs = eval_epochs;
    return opt;
  }
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    require(known.count(it.key()) > 0, errc::config_invalid,
            "unknown key '" + it.key() + "' in " + where);
}

inline ModelSpec model_spec_from_json(const json& j, std::uint64_t default_seed) {
  reject_unknown_keys(j,
                      {"kind", "seed", "trees", "depth", "learning_rate", "min_samples_leaf", "l2",
                       "max_bins", "max_features", "max_depth", "tol", "max_iters", "hidden",
                       "epochs", "step"},
                      "model spec");
  ModelSpec spec;
  spec.kind = parse_model_kind(j.at("kind").get<std::string>());
  spec.seed = j.value("seed", default_seed);
  switch (spec.kind) {
    case ModelKind::gbt:
      spec.gbt.trees = j.value("trees", spec.gbt.trees);
      spec.gbt.depth = j.value("depth", spec.gbt.depth);
      spec.gbt.learning_rate = j.value("learning_rate", spec.gbt.learning_rate);
      spec.gbt.min_samples_leaf = j.value("min_samples_leaf", spec.gbt.min_samples_leaf);
      spec.gbt.l2 = j.value("l2", spec.gbt.l2);
      spec.gbt.max_bins = j.value("max_bins", spec.gbt.max_bins);
      break;
    case ModelKind::random_forest:
      spec.forest.trees = j.value("trees", spec.forest.trees);
      spec.forest.max_features = j.value("max_features", spec.forest.max_features);
      spec.forest.min_samples_leaf = j.value("min_samples_leaf", spec.forest.min_samples_leaf);
      spec.forest.max_depth = j.value("max_depth", spec.forest.max_depth);
      spec.forest.max_bins = j.value("max_bins", spec.forest.max_bins);
      break;
    case ModelKind::logistic:
      spec.logistic.l2 = j.value("l2", spec.logistic.l2);
      spec.logistic.tol = j.value("tol", spec.logistic.tol);
      spec.logistic.max_iters = j.value("max_iters", spec.logistic.max_iters);
      break;
    case ModelKind::mlp:
      spec.mlp.hidden = j.value("hidden", spec.mlp.hidden);
      spec.mlp.epochs = j.value("epochs", spec.mlp.epochs);
      spec.mlp.step = j.value("step", spec.mlp.step);
      break;
  }
  return spec;
}

inline BandScheme bands_from_json(const json& j) {
  BandScheme scheme;
  for (const auto& b : j) {
    Band band;
    band.name = b.at("name").get<std::string>();
    band.low_hz = b.at("low_hz").get<double>();
    band.high_hz = b.at("high_hz").get<double>();
    band.include_high = b.value("include_high", false);
    scheme.bands.push_back(std::move(band));
  }
  scheme.validate();
  return scheme;
}

}  // namespace detail

inline PipelineConfig parse_config(const json& j) {
  detail::reject_unknown_keys(
      j, {"seed", "out_dir", "manifest", "test_manifest", "sample_rate", "epoching", "bands",
          "montage", "quotas", "section_policy", "feature_kind", "eval_epochs", "selection",
          "eval", "models", "synth", "jobs"},
      "config");
  require(j.contains("seed"), errc::config_invalid,
          "config requires an explicit integer 'seed' (no wall-clock seeding)");

  PipelineConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.out_dir = j.value("out_dir", c.out_dir);
  c.manifest = j.value("manifest", c.manifest);
  c.test_manifest = j.value("test_manifest", c.test_manifest);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  if (j.contains("epoching")) {
    const json& e = j.at("epoching");
    detail::reject_unknown_keys(e, {"epoch_seconds", "discard_seconds"}, "epoching");
    c.epoching.epoch_seconds = e.value("epoch_seconds", c.epoching.epoch_seconds);
    c.epoching.discard_seconds = e.value("discard_seconds", c.epoching.discard_seconds);
  }
  if (j.contains("bands")) c.scheme = detail::bands_from_json(j.at("bands"));
  if (j.contains("montage")) {
    c.montage.channels = j.at("montage").get<std::vector<std::string>>();
    c.montage.validate();
  }
  if (j.contains("quotas")) {
    const json& q = j.at("quotas");
    detail::reject_unknown_keys(q, {"sections_per_female", "sections_per_male", "section_epochs"},
                                "quotas");
    c.quotas.sections_per_female = q.value("sections_per_female", c.quotas.sections_per_female);
    c.quotas.sections_per_male = q.value("sections_per_male", c.quotas.sections_per_male);
    c.quotas.section_epochs = q.value("section_epochs", c.quotas.section_epochs);
    c.quotas.validate();
  }
  if (j.contains("section_policy")) {
    const std::string p = j.at("section_policy").get<std::string>();
    require(p == "random" || p == "head", errc::config_invalid,
            "section_policy must be 'random' or 'head'");
    c.section_policy = p == "random" ? SectionPolicy::random : SectionPolicy::head;
  }
  if (j.contains("feature_kind")) {
    const std::string k = j.at("feature_kind").get<std::string>();
    require(k == "connectivity" || k == "bandpower", errc::config_invalid,
            "feature_kind must be 'connectivity' or 'bandpower'");
    c.feature_kind = k == "connectivity" ? FeatureKind::connectivity : FeatureKind::band_power;
  }
  c.eval_epochs = j.value("eval_epochs", c.eval_epochs);

  if (j.contains("selection")) {
    const json& s = j.at("selection");
    detail::reject_unknown_keys(s, {"n_trials", "subject_fraction", "aggregate_policy", "k", "ks"},
                                "selection");
    c.selection.n_trials = s.value("n_trials", c.selection.n_trials);
    c.selection.subject_fraction = s.value("subject_fraction", c.selection.subject_fraction);
    if (s.contains("aggregate_policy")) {
      const std::string p = s.at("aggregate_policy").get<std::string>();
      require(p == "worst_rank" || p == "mean_rank", errc::config_invalid,
              "aggregate_policy must be 'worst_rank' or 'mean_rank'");
      c.selection.policy = p == "worst_rank" ? AggregatePolicy::worst_rank : AggregatePolicy::mean_rank;
    }
    if (s.contains("k")) {
      if (s.at("k").is_string()) {
        require(s.at("k").get<std::string>() == "sweep", errc::config_invalid,
                "selection.k must be an integer or \"sweep\"");
        c.selection.k_is_sweep = true;
      } else {
        c.selection.k = s.at("k").get<std::size_t>();
      }
    }
    if (s.contains("ks")) c.selection.ks = s.at("ks").get<std::vector<std::size_t>>();
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    detail::reject_unknown_keys(
        e, {"n_trials", "train_fraction", "max_redraws", "threshold_start", "threshold_stop",
            "threshold_step"},
        "eval");
    c.eval.n_trials = e.value("n_trials", c.eval.n_trials);
    c.eval.train_fraction = e.value("train_fraction", c.eval.train_fraction);
    c.eval.max_redraws = e.value("max_redraws", c.eval.max_redraws);
    c.eval.grid.start = e.value("threshold_start", c.eval.grid.start);
    c.eval.grid.stop = e.value("threshold_stop", c.eval.grid.stop);
    c.eval.grid.step = e.value("threshold_step", c.eval.grid.step);
  }
  if (j.contains("models")) {
    std::size_t index = 0;
    for (const auto& m : j.at("models"))
      c.models.push_back(detail::model_spec_from_json(m, derive_seed(c.seed, "model", index++)));
  } else {
    std::size_t index = 0;
    for (ModelKind kind :
         {ModelKind::gbt, ModelKind::random_forest, ModelKind::logistic, ModelKind::mlp}) {
      ModelSpec spec;
      spec.kind = kind;
      spec.seed = derive_seed(c.seed, "model", index++);
      c.models.push_back(spec);
    }
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    detail::reject_unknown_keys(s,
                                {"n_female", "n_male", "duration_s", "noise_std", "plants",
                                 "seed", "id_prefix", "coupling_jitter_sd"},
                                "synth");
    c.synth.n_female = s.value("n_female", c.synth.n_female);
    c.synth.n_male = s.value("n_male", c.synth.n_male);
    c.synth.duration_s = s.value("duration_s", c.synth.duration_s);
    c.synth.noise_std = s.value("noise_std", c.synth.noise_std);
    c.synth.coupling_jitter_sd = s.value("coupling_jitter_sd", c.synth.coupling_jitter_sd);
    c.synth.id_prefix = s.value("id_prefix", c.synth.id_prefix);
    if (s.contains("plants")) {
      c.synth.plants.clear();
      for (const auto& p : s.at("plants")) {
        Plant plant;
        plant.channel_a = p.at(0).get<std::string>();
        plant.channel_b = p.at(1).get<std::string>();
        plant.band = p.at(2).get<std::string>();
        plant.coupling_female = p.at(3).get<double>();
        plant.coupling_male = p.at(4).get<double>();
        c.synth.plants.push_back(std::move(plant));
      }
    }
    c.synth.seed = s.value("seed", c.seed);
  } else {
    c.synth.seed = c.seed;
  }
  c.synth.sample_rate = c.sample_rate;
  c.synth.montage = c.montage;
  c.synth.scheme = c.scheme;

  c.jobs = j.value("jobs", c.jobs);
  require(c.jobs >= 1, errc::config_invalid, "jobs must be >= 1");
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::missing_file, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(errc::config_invalid, std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// artifact naming and metadata

inline std::string feature_kind_name(FeatureKind kind) {
  return kind == FeatureKind::connectivity ? "connectivity" : "bandpower";
}

// First line of every artifact: enough provenance to re-run the producing
// step (never wall-clock or jobs, which must not affect bytes).
inline std::string meta_line(const PipelineConfig& config, const std::string& command,
                             const std::string& extra = "") {
  std::string line = "#eegml=" + std::string(version_string) +
                     " format_version=" + std::to_string(format_version) + " cmd=" + command +
                     " seed=" + std::to_string(config.seed);
  if (!extra.empty()) line += ' ' + extra;
  return line;
}

struct ArtifactPaths {
  std::filesystem::path out;

  explicit ArtifactPaths(const PipelineConfig& config) : out(config.out_dir) {}

  std::string manifest() const { return (out / "manifest.csv").string(); }
  std::string synth_spec() const { return (out / "synth_spec.json").string(); }
  std::string sections_csv(FeatureKind k) const {
    return (out / ("features_" + feature_kind_name(k) + "_sections.csv")).string();
  }
  std::string eval_csv(FeatureKind k) const {
    return (out / ("features_" + feature_kind_name(k) + "_eval.csv")).string();
  }
  std::string extract_report() const { return (out / "extract_report.json").string(); }
  std::string ranking_csv(FeatureKind k) const {
    return (out / ("ranking_" + feature_kind_name(k) + ".csv")).string();
  }
  std::string subset_txt(FeatureKind k, std::size_t top) const {
    return (out / ("subset_top" + std::to_string(top) + "_" + feature_kind_name(k) + ".txt")).string();
  }
  // stable alias for the most recent `select` output, so downstream commands
  // need no k in hand
  std::string selected_subset_txt(FeatureKind k) const {
    return (out / ("subset_selected_" + feature_kind_name(k) + ".txt")).string();
  }
  std::string ksweep_csv(FeatureKind k) const {
    return (out / ("ksweep_" + feature_kind_name(k) + ".csv")).string();
  }
  std::string ksweep_json(FeatureKind k) const {
    return (out / ("ksweep_" + feature_kind_name(k) + ".json")).string();
  }
  std::string cv_report() const { return (out / "cv_report.json").string(); }
  std::string cv_accuracy_csv(const std::string& kind) const {
    return (out / ("cv_accuracy_" + kind + ".csv")).string();
  }
  std::string cv_roc_csv(const std::string& kind) const {
    return (out / ("cv_roc_" + kind + ".csv")).string();
  }
  std::string test_report() const { return (out / "test_report.json").string(); }
  std::string test_accuracy_csv(const std::string& kind) const {
    return (out / ("test_accuracy_" + kind + ".csv")).string();
  }
  std::string class_stats_csv() const { return (out / "class_stats.csv").string(); }

  void ensure_out_dir() const {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) fail(errc::io_failure, "cannot create output directory " + out.string());
  }
};

inline void write_json_file(const json& j, const std::string& path) {
  FileWriter out(path);
  out.stream() << j.dump(2) << '\n';
  out.close();
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::missing_file, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(errc::config_invalid, path + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// step implementations; each returns a one-line summary

inline std::string run_synth(const PipelineConfig& config) {
  ArtifactPaths paths(config);
  paths.ensure_out_dir();
  SynthSpec spec = config.synth;
  const SynthCohort cohort = generate_cohort(spec, config.jobs);
  write_cohort(cohort, config.out_dir, meta_line(config, "synth"));

  json j;
  j["format_version"] = format_version;
  j["eegml"] = version_string;
  j["n_female"] = spec.n_female;
  j["n_male"] = spec.n_male;
  j["duration_s"] = spec.duration_s;
  j["sample_rate"] = spec.sample_rate;
  j["noise_std"] = spec.noise_std;
  j["seed"] = spec.seed;
  json plants = json::array();
  for (const auto& p : spec.plants)
    plants.push_back({p.channel_a, p.channel_b, p.band, p.coupling_female, p.coupling_male});
  j["plants"] = plants;
  json predictions = json::array();
  for (const auto& p : predict_planted_band_mean(spec))
    predictions.push_back({{"feature", p.feature_name},
                           {"expected_female", p.expected_female},
                           {"expected_male", p.expected_male}});
  j["predicted_band_mean_coherence"] = predictions;
  write_json_file(j, paths.synth_spec());

  return "synth: wrote " + std::to_string(cohort.cohort.entries.size()) + " recordings (" +
         std::to_string(spec.n_female) + " F / " + std::to_string(spec.n_male) + " M) under " +
         config.out_dir;
}

inline CohortFeatures extract_features_from_disk(const PipelineConfig& config) {
  require(!config.manifest.empty(), errc::config_invalid, "config.manifest is required");
  const Cohort cohort = load_cohort(config.manifest, config.montage);
  return extract_cohort(cohort, disk_provider(config.montage, config.sample_rate),
                        config.extract_options(), config.jobs);
}

inline std::string run_extract(const PipelineConfig& config) {
  ArtifactPaths paths(config);
  paths.ensure_out_dir();
  const CohortFeatures features = extract_features_from_disk(config);

  TableBuildReport section_report, eval_report;
  for (FeatureKind kind : {FeatureKind::connectivity, FeatureKind::band_power}) {
    save_feature_table(section_table(features, kind), paths.sections_csv(kind),
                       meta_line(config, "extract", "table=sections kind=" + feature_kind_name(kind)));
    save_feature_table(eval_table(features, kind, kind == FeatureKind::connectivity ? &eval_report : nullptr),
                       paths.eval_csv(kind),
                       meta_line(config, "extract", "table=eval kind=" + feature_kind_name(kind)));
  }

  json j;
  j["format_version"] = format_version;
  j["command"] = "extract";
  j["manifest"] = config.manifest;
  j["warnings"] = features.warnings;
  j["eval_shortfalls"] = eval_report.shortfalls;
  j["eval_exclusions"] = eval_report.exclusions;
  json subjects = json::array();
  for (const auto& s : features.subjects)
    subjects.push_back({{"subject_id", s.subject_id},
                        {"sex", std::string(1, sex_char(s.sex))},
                        {"epochs", s.n_epochs},
                        {"sections", s.section_conn.size()},
                        {"eval_epochs_used", s.eval_epochs_used},
                        {"excluded", s.excluded}});
  j["subjects"] = subjects;
  write_json_file(j, paths.extract_report());

  std::size_t rows = 0;
  for (const auto& s : features.subjects) rows += s.section_conn.size();
  return "extract: " + std::to_string(features.subjects.size()) + " subjects, " +
         std::to_string(rows) + " sections, schema " +
         std::to_string(features.conn_names.size()) + "+" + std::to_string(features.bp_names.size()) +
         " features -> " + config.out_dir;
}

// Rebuilds the parts of CohortFeatures the downstream steps need from the
// extract artifacts.
inline CohortFeatures load_features_from_artifacts(const PipelineConfig& config) {
  ArtifactPaths paths(config);
  const FeatureKind kind = config.feature_kind;
  require(std::filesystem::exists(paths.sections_csv(kind)), errc::missing_file,
          paths.sections_csv(kind) + " not found; run `extract` first");
  const FeatureTable sections = load_feature_table(paths.sections_csv(kind));
  const FeatureTable evals = load_feature_table(paths.eval_csv(kind));

  CohortFeatures features;
  features.montage = config.montage;
  features.options = config.extract_options();
  if (kind == FeatureKind::connectivity)
    features.conn_names = sections.schema;
  else
    features.bp_names = sections.schema;

  std::map<std::string, SubjectFeatures> by_id;
  for (const auto& row : sections.rows) {
    SubjectFeatures& s = by_id[row.subject_id];
    s.subject_id = row.subject_id;
    s.sex = row.label ? Sex::female : Sex::male;
    (kind == FeatureKind::connectivity ? s.section_conn : s.section_bp).push_back(row.values);
  }
  for (const auto& row : evals.rows) {
    SubjectFeatures& s = by_id[row.subject_id];
    s.subject_id = row.subject_id;
    s.sex = row.label ? Sex::female : Sex::male;
    (kind == FeatureKind::connectivity ? s.eval_conn : s.eval_bp) = row.values;
    s.eval_epochs_used = static_cast<std::size_t>(config.eval_epochs);
  }
  for (auto& [id, s] : by_id) features.subjects.push_back(std::move(s));
  require(!features.subjects.empty(), errc::empty_table, "extract artifacts contain no subjects");
  return features;
}

inline ModelSpec gbt_spec_from_config(const PipelineConfig& config) {
  for (const auto& spec : config.models)
    if (spec.kind == ModelKind::gbt) return spec;
  ModelSpec spec;
  spec.kind = ModelKind::gbt;
  spec.seed = derive_seed(config.seed, "model", 0);
  return spec;
}

inline std::vector<std::size_t> default_ks(std::size_t d) {
  std::vector<std::size_t> ks;
  for (std::size_t k : {1u, 2u, 4u, 8u, 16u, 34u, 64u, 128u, 256u, 512u})
    if (k <= d) ks.push_back(k);
  if (ks.empty() || ks.back() != d) ks.push_back(d);
  return ks;
}

inline CvConfig cv_config_from(const PipelineConfig& config, const char* seed_tag) {
  CvConfig cv;
  cv.n_trials = config.eval.n_trials;
  cv.train_fraction = config.eval.train_fraction;
  cv.quotas = config.quotas;
  cv.section_policy = config.section_policy;
  cv.kind = config.feature_kind;
  cv.max_redraws = config.eval.max_redraws;
  cv.grid = config.eval.grid;
  cv.seed = derive_seed(config.seed, seed_tag);
  cv.jobs = config.jobs;
  return cv;
}

inline void save_ksweep(const KSweepCurve& curve, const PipelineConfig& config,
                        const ArtifactPaths& paths) {
  FileWriter out(paths.ksweep_csv(config.feature_kind));
  out.line(meta_line(config, "sweep-k"));
  out.line("k,mean_acc,std_acc,mean_auc");
  for (const auto& p : curve.points)
    out.line(std::to_string(p.k) + ',' + format_double(p.mean_accuracy) + ',' +
             format_double(p.std_accuracy) + ',' + format_double(p.mean_auc));
  out.close();

  json j;
  j["format_version"] = format_version;
  j["command"] = "sweep-k";
  j["seed"] = config.seed;
  j["argmax_k"] = curve.argmax_k;
  json points = json::array();
  for (const auto& p : curve.points)
    points.push_back({{"k", p.k},
                      {"mean_accuracy", p.mean_accuracy},
                      {"std_accuracy", p.std_accuracy},
                      {"mean_auc", p.mean_auc}});
  j["points"] = points;
  write_json_file(j, paths.ksweep_json(config.feature_kind));
}

inline std::string run_select(const PipelineConfig& config) {
  ArtifactPaths paths(config);
  paths.ensure_out_dir();
  const CohortFeatures features = load_features_from_artifacts(config);

  SelectionConfig sel;
  sel.n_trials = config.selection.n_trials;
  sel.subject_fraction = config.selection.subject_fraction;
  sel.quotas = config.quotas;
  sel.section_policy = config.section_policy;
  sel.kind = config.feature_kind;
  sel.policy = config.selection.policy;
  sel.gbt_spec = gbt_spec_from_config(config);
  sel.seed = derive_seed(config.seed, "selection");
  sel.jobs = config.jobs;

  const SelectionResult result = run_selection(features, sel);
  save_ranking_csv(result.ranking, paths.ranking_csv(config.feature_kind),
                   meta_line(config, "select", "trials=" + std::to_string(sel.n_trials)));

  std::size_t k = config.selection.k;
  std::string sweep_note;
  if (config.selection.k_is_sweep) {
    const std::vector<std::size_t> ks =
        config.selection.ks.empty() ? default_ks(result.ranking.order.size()) : config.selection.ks;
    const KSweepCurve curve =
        sweep_k(features, result.ranking, ks, gbt_spec_from_config(config),
                cv_config_from(config, "sweep"));
    save_ksweep(curve, config, paths);
    k = curve.argmax_k;
    sweep_note = " (k from sweep)";
  }
  require(k >= 1 && k <= result.ranking.order.size(), errc::bad_k,
          "selection.k out of range for schema of " +
              std::to_string(result.ranking.order.size()));
  const FeatureSubset subset = top_k(result.ranking, k);
  save_subset(subset, paths.subset_txt(config.feature_kind, k),
              meta_line(config, "select", "k=" + std::to_string(k)));
  save_subset(subset, paths.selected_subset_txt(config.feature_kind),
              meta_line(config, "select", "k=" + std::to_string(k)));
  return "select: " + std::to_string(sel.n_trials) + " trials over " +
         std::to_string(features.subjects.size()) + " subjects; top-" + std::to_string(k) +
         sweep_note + " subset -> " + paths.subset_txt(config.feature_kind, k);
}

inline AggregateRanking load_ranking_csv(const std::string& path) {
  const CsvContent csv = read_csv_file(path);
  require(!csv.lines.empty() && csv.lines[0] == "feature,worst_rank,mean_rank,final_position",
          errc::missing_file, path + " is not a ranking file; run `select` first");
  struct Entry {
    std::string feature;
    int worst;
    double mean;
    std::size_t position;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 1; i < csv.lines.size(); ++i) {
    if (csv.lines[i].empty()) continue;
    const auto fields = split_csv_line(csv.lines[i]);
    require(fields.size() == 4, errc::config_invalid, path + ": bad ranking row");
    entries.push_back({fields[0],
                       static_cast<int>(parse_long(fields[1], errc::config_invalid, path)),
                       parse_double(fields[2], errc::config_invalid, path),
                       static_cast<std::size_t>(parse_long(fields[3], errc::config_invalid, path))});
  }
  AggregateRanking agg;
  agg.schema.resize(entries.size());
  agg.order.resize(entries.size());
  agg.worst_rank.resize(entries.size());
  agg.mean_rank.resize(entries.size());
  // rows are ordered by final_position; schema index = row order for a
  // reloaded ranking (original schema order is not needed downstream)
  for (std::size_t i = 0; i < entries.size(); ++i) {
    agg.schema[i] = entries[i].feature;
    agg.worst_rank[i] = entries[i].worst;
    agg.mean_rank[i] = entries[i].mean;
    agg.order[entries[i].position - 1] = i;
  }
  return agg;
}

inline std::string run_sweep_k(const PipelineConfig& config) {
  ArtifactPaths paths(config);
  paths.ensure_out_dir();
  const CohortFeatures features = load_features_from_artifacts(config);
  const AggregateRanking ranking = load_ranking_csv(paths.ranking_csv(config.feature_kind));
  const std::vector<std::size_t> ks =
      config.selection.ks.empty() ? default_ks(ranking.order.size()) : config.selection.ks;
  const KSweepCurve curve = sweep_k(features, ranking, ks, gbt_spec_from_config(config),
                                    cv_config_from(config, "sweep"));
  save_ksweep(curve, config, paths);
  return "sweep-k: " + std::to_string(ks.size()) + " k values, argmax k=" +
         std::to_string(curve.argmax_k) + " -> " + paths.ksweep_csv(config.feature_kind);
}

inline json model_report_json(const ModelEvalReport& mr, bool with_trials) {
  json j;
  j["kind"] = mr.kind;
  j["mean_auc"] = mr.mean_auc;
  j["std_auc"] = mr.std_auc;
  j["best_theta"] = mr.best_theta;
  j["best_accuracy"] = mr.best_accuracy;
  j["thresholds"] = mr.thresholds;
  j["mean_accuracy"] = mr.mean_accuracy;
  j["std_accuracy"] = mr.std_accuracy;
  j["mean_roc"] = {{"fpr", mr.mean_roc.fpr}, {"tpr", mr.mean_roc.tpr}, {"auc", mr.mean_roc.auc}};
  if (with_trials) {
    json trials = json::array();
    for (const auto& t : mr.trials)
      trials.push_back({{"trial", t.trial_id},
                        {"seed", t.seed},
                        {"val_subjects", t.val_subjects},
                        {"probs", t.probs},
                        {"labels", t.labels},
                        {"accuracy", t.accuracy},
                        {"auc", t.roc.auc},
                        {"roc_fpr", t.roc.fpr},
                        {"roc_tpr", t.roc.tpr}});
    j["trials"] = trials;
  }
  return j;
}

inline void save_accuracy_csv(const ModelEvalReport& mr, const std::string& path,
                              const std::string& meta) {
  FileWriter out(path);
  out.line(meta);
  out.line("threshold,mean_acc,std_acc");
  for (std::size_t g = 0; g < mr.thresholds.size(); ++g)
    out.line(format_double(mr.thresholds[g]) + ',' + format_double(mr.mean_accuracy[g]) + ',' +
             format_double(mr.std_accuracy[g]));
  out.close();
}

inline void save_roc_csv(const RocCurve& roc, const std::string& path, const std::string& meta) {
  FileWriter out(path);
  out.line(meta);
  out.line("fpr,tpr");
  for (std::size_t i = 0; i < roc.fpr.size(); ++i)
    out.line(format_double(roc.fpr[i]) + ',' + format_double(roc.tpr[i]));
  out.close();
}

inline FeatureSubset resolve_subset(const PipelineConfig& config, const std::string& features_file) {
  if (!features_file.empty()) return load_subset(features_file);
  ArtifactPaths paths(config);
  const std::string alias = paths.selected_subset_txt(config.feature_kind);
  if (std::filesystem::exists(alias)) return load_subset(alias);
  const std::string fallback = paths.subset_txt(config.feature_kind, config.selection.k);
  require(std::filesystem::exists(fallback), errc::bad_args,
          "no --features file given and " + fallback + " not found; run `select` first");
  return load_subset(fallback);
}

inline std::string run_cv(const PipelineConfig& config, const std::string& features_file) {
  ArtifactPaths paths(config);
  paths.ensure_out_dir();
  const CohortFeatures features = load_features_from_artifacts(config);
  const FeatureSubset subset = resolve_subset(config, features_file);
  const CvConfig cv = cv_config_from(config, "cv");
  const CvReport report = cross_validate(features, subset, config.models, cv);

  json j;
  j["format_version"] = format_version;
  j["command"] = "cv";
  j["seed"] = config.seed;
  j["n_trials"] = cv.n_trials;
  j["feature_kind"] = feature_kind_name(config.feature_kind);
  j["subset"] = subset.names;
  j["hygiene_violations"] = report.hygiene_violations;
  j["total_redraws"] = report.total_redraws;
  json per_spec = json::array();
  for (const auto& mr : report.per_spec) per_spec.push_back(model_report_json(mr, true));
  j["models"] = per_spec;
  write_json_file(j, paths.cv_report());

  std::string summary = "cv:";
  for (const auto& mr : report.per_spec) {
    save_accuracy_csv(mr, paths.cv_accuracy_csv(mr.kind), meta_line(config, "cv", "model=" + mr.kind));
    save_roc_csv(mr.mean_roc, paths.cv_roc_csv(mr.kind), meta_line(config, "cv", "model=" + mr.kind));
    summary += ' ' + mr.kind + " auc=" + format_double_fixed(mr.mean_auc, 3) + " best_acc=" +
               format_double_fixed(mr.best_accuracy, 3) + "@" +
               format_double_fixed(mr.best_theta, 2) + ";";
  }
  require(report.hygiene_violations == 0, errc::config_invalid,
          "protocol hygiene violation: validation subject found in a training table");
  return summary + " report -> " + paths.cv_report();
}

inline std::string run_test(const PipelineConfig& config, const std::string& features_file) {
  ArtifactPaths paths(config);
  paths.ensure_out_dir();
  require(!config.test_manifest.empty(), errc::config_invalid,
          "config.test_manifest is required for `test`");
  const CohortFeatures train_features = extract_features_from_disk(config);
  const Cohort test_cohort = load_cohort(config.test_manifest, config.montage);
  const CohortFeatures test_features =
      extract_cohort(test_cohort, disk_provider(config.montage, config.sample_rate),
                     config.extract_options(), config.jobs);
  const FeatureSubset subset = resolve_subset(config, features_file);
  const TestReport report = holdout_test(train_features, test_features, subset, config.models,
                                         cv_config_from(config, "test"));

  json j;
  j["format_version"] = format_version;
  j["command"] = "test";
  j["seed"] = config.seed;
  j["train_manifest"] = config.manifest;
  j["test_manifest"] = config.test_manifest;
  j["subset"] = subset.names;
  json per_spec = json::array();
  for (const auto& mr : report.per_spec) per_spec.push_back(model_report_json(mr, true));
  j["models"] = per_spec;
  write_json_file(j, paths.test_report());

  std::string summary = "test:";
  for (const auto& mr : report.per_spec) {
    save_accuracy_csv(mr, paths.test_accuracy_csv(mr.kind),
                      meta_line(config, "test", "model=" + mr.kind));
    summary += ' ' + mr.kind + " best_acc=" + format_double_fixed(mr.best_accuracy, 3) + "@" +
               format_double_fixed(mr.best_theta, 2) + ";";
  }
  return summary + " report -> " + paths.test_report();
}

inline std::string run_stats(const PipelineConfig& config, const std::string& features_file) {
  ArtifactPaths paths(config);
  paths.ensure_out_dir();
  const CohortFeatures features = load_features_from_artifacts(config);
  const FeatureSubset subset = resolve_subset(config, features_file);
  const FeatureTable sections = section_table(features, config.feature_kind);
  const auto rows = class_stats(sections, subset);

  FileWriter out(paths.class_stats_csv());
  out.line(meta_line(config, "stats"));
  out.line("band,feature,class,min,q1,median,q3,max");
  for (const auto& r : rows)
    out.line(r.band + ',' + r.feature + ',' + std::string(1, r.sex) + ',' + format_double(r.min) +
             ',' + format_double(r.q1) + ',' + format_double(r.median) + ',' + format_double(r.q3) +
             ',' + format_double(r.max));
  out.close();
  return "stats: " + std::to_string(rows.size()) + " rows (" + std::to_string(subset.names.size()) +
         " features x 2 classes) -> " + paths.class_stats_csv();
}

}  // namespace eegml

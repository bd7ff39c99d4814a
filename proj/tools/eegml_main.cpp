#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eegml/pipeline.hpp"
#include "eegml/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string manifest;
  std::string test_manifest;
  std::string features_file;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<int> trials;
  std::optional<std::size_t> k;
  std::string feature_kind;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config JSON")->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config.out_dir)");
  cmd->add_option("--seed", args.seed, "seed override");
  cmd->add_option("--jobs", args.jobs, "worker threads (output-invariant)");
  cmd->add_option("--manifest", args.manifest, "cohort manifest override");
  cmd->add_option("--feature-kind", args.feature_kind, "connectivity|bandpower");
}

eegml::PipelineConfig resolve_config(const CommonArgs& args, const char* trials_target) {
  eegml::PipelineConfig config = eegml::load_config(args.config_path);
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (!args.manifest.empty()) config.manifest = args.manifest;
  if (!args.test_manifest.empty()) config.test_manifest = args.test_manifest;
  if (args.seed) {
    config.seed = *args.seed;
    config.synth.seed = *args.seed;
  }
  if (args.jobs) config.jobs = *args.jobs;
  if (args.trials) {
    if (std::string(trials_target) == "selection")
      config.selection.n_trials = *args.trials;
    else if (std::string(trials_target) == "eval")
      config.eval.n_trials = *args.trials;
  }
  if (args.k) {
    config.selection.k = *args.k;
    config.selection.k_is_sweep = false;
  }
  if (!args.feature_kind.empty()) {
    eegml::require(args.feature_kind == "connectivity" || args.feature_kind == "bandpower",
                   eegml::errc::bad_args, "--feature-kind must be connectivity or bandpower");
    config.feature_kind = args.feature_kind == "connectivity"
                              ? eegml::FeatureKind::connectivity
                              : eegml::FeatureKind::band_power;
  }
  return config;
}

void print_error_json(const char* code, const std::string& message) {
  nlohmann::json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG connectivity sex-classification pipeline"};
  app.set_version_flag("--version", std::string("eegml ") + eegml::version_string +
                                        " (format " + std::to_string(eegml::format_version) + ")");
  app.require_subcommand(1);

  CommonArgs args;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  add_common(synth, args);

  CLI::App* extract = app.add_subcommand("extract", "compute section + eval feature tables");
  add_common(extract, args);

  CLI::App* select = app.add_subcommand("select", "rank features over trials and pick the top-k");
  add_common(select, args);
  select->add_option("--trials", args.trials, "selection trials (overrides config)");
  select->add_option("--k", args.k, "subset size (overrides config)");

  CLI::App* sweepk = app.add_subcommand("sweep-k", "cross-validate over increasing k");
  add_common(sweepk, args);
  sweepk->add_option("--trials", args.trials, "eval trials per k (overrides config)");

  CLI::App* cv = app.add_subcommand("cv", "cross-validate the configured models");
  add_common(cv, args);
  cv->add_option("--trials", args.trials, "eval trials (overrides config)");
  cv->add_option("--features", args.features_file, "feature subset file");

  CLI::App* test = app.add_subcommand("test", "train on the cohort, test on a holdout cohort");
  add_common(test, args);
  test->add_option("--test-manifest", args.test_manifest, "holdout manifest override");
  test->add_option("--features", args.features_file, "feature subset file");

  CLI::App* stats = app.add_subcommand("stats", "per-feature per-class five-number summaries");
  add_common(stats, args);
  stats->add_option("--features", args.features_file, "feature subset file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error_json("BadArgs", e.what());
    return 1;
  }

  try {
    std::string summary;
    if (synth->parsed()) {
      summary = eegml::run_synth(resolve_config(args, ""));
    } else if (extract->parsed()) {
      summary = eegml::run_extract(resolve_config(args, ""));
    } else if (select->parsed()) {
      summary = eegml::run_select(resolve_config(args, "selection"));
    } else if (sweepk->parsed()) {
      summary = eegml::run_sweep_k(resolve_config(args, "eval"));
    } else if (cv->parsed()) {
      summary = eegml::run_cv(resolve_config(args, "eval"), args.features_file);
    } else if (test->parsed()) {
      summary = eegml::run_test(resolve_config(args, "eval"), args.features_file);
    } else if (stats->parsed()) {
      summary = eegml::run_stats(resolve_config(args, ""), args.features_file);
    }
    std::cout << summary << "\n";
    return 0;
  } catch (const eegml::Error& e) {
    print_error_json(e.code_name(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error_json("Internal", e.what());
    return 2;
  }
}

#pragma once

#include <algorithm>
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

namespace eegml {

struct RankVector {
  int trial_id = 0;
  std::vector<int> ranks;  // ranks[f] in 1..d, 1 = most important

  void validate() const {
    std::vector<bool> seen(ranks.size(), false);
    for (int r : ranks) {
      require(r >= 1 && static_cast<std::size_t>(r) <= ranks.size(), errc::schema_mismatch,
              "rank out of range");
      require(!seen[r - 1], errc::schema_mismatch, "rank repeated: not a permutation");
      seen[r - 1] = true;
    }
  }
};

enum class AggregatePolicy { worst_rank, mean_rank };

struct AggregateRanking {
  std::vector<std::string> schema;
  std::vector<std::size_t> order;  // feature indices, most -> least important
  std::vector<int> worst_rank;
  std::vector<double> mean_rank;
};

// Descending importance, ties broken by ascending feature index; rank 1 is
// the most important feature.
inline RankVector ranks_from_importance(const std::vector<double>& importance, int trial_id) {
  const std::size_t d = importance.size();
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return importance[a] > importance[b];
  });
  RankVector out;
  out.trial_id = trial_id;
  out.ranks.resize(d);
  for (std::size_t pos = 0; pos < d; ++pos) out.ranks[idx[pos]] = static_cast<int>(pos + 1);
  return out;
}

// Stratified subject sample: per sex, floor(fraction*n) but at least 1,
// drawn from a shuffle of that sex's subject list.
inline std::set<std::string> stratified_sample(const CohortFeatures& features, double fraction,
                                               Rng& rng) {
  std::set<std::string> chosen;
  for (Sex sex : {Sex::female, Sex::male}) {
    std::vector<const SubjectFeatures*> group;
    for (const auto& s : features.subjects)
      if (s.sex == sex) group.push_back(&s);
    if (group.empty()) continue;
    const std::size_t take =
        std::max<std::size_t>(1, static_cast<std::size_t>(fraction * group.size()));
    const auto perm = rng.permutation(group.size());
    for (std::size_t i = 0; i < std::min(take, group.size()); ++i)
      chosen.insert(group[perm[i]]->subject_id);
  }
  return chosen;
}

struct SelectionConfig {
  int n_trials = 50;
  double subject_fraction = 0.9;
  Quotas quotas;
  SectionPolicy section_policy = SectionPolicy::random;
  FeatureKind kind = FeatureKind::connectivity;
  AggregatePolicy policy = AggregatePolicy::worst_rank;
  ModelSpec gbt_spec;  // kind forced to gbt
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

// One importance-ranking trial: stratified 90% of subjects, augmented
// training table, gbt fit, features ranked by importance.
inline RankVector rank_one_trial(const CohortFeatures& features, FeatureKind kind,
                                 std::uint64_t trial_seed, int trial_id, const Quotas& quotas,
                                 ModelSpec gbt_spec, double subject_fraction = 0.9,
                                 SectionPolicy section_policy = SectionPolicy::random) {
  gbt_spec.kind = ModelKind::gbt;
  Rng rng(derive_seed(trial_seed, "subject-sample"));
  const std::set<std::string> chosen = stratified_sample(features, subject_fraction, rng);
  const FeatureTable table =
      select_training_rows(features, kind, quotas, derive_seed(trial_seed, "table"),
                           section_policy, nullptr, &chosen);
  const Model model = train(gbt_spec, table);
  return ranks_from_importance(*model.feature_importance, trial_id);
}

// The rank-aggregation rule: a feature has appeared by position r in every
// trial exactly when its worst (max) rank is <= r, so ordering ascending by
// worst rank realizes "the earlier a feature appears in all trials, the more
// important". Ties: ascending mean rank, then ascending feature index. The
// mean_rank policy swaps the first two keys.
inline AggregateRanking aggregate(const std::vector<RankVector>& trials,
                                  const std::vector<std::string>& schema,
                                  AggregatePolicy policy = AggregatePolicy::worst_rank) {
  require(!trials.empty(), errc::empty_input, "aggregate needs at least one trial");
  const std::size_t d = schema.size();
  for (const auto& t : trials) {
    require(t.ranks.size() == d, errc::schema_mismatch,
            "rank vector length does not match the schema");
    t.validate();
  }

  AggregateRanking out;
  out.schema = schema;
  out.worst_rank.assign(d, 0);
  out.mean_rank.assign(d, 0.0);
  for (const auto& t : trials)
    for (std::size_t f = 0; f < d; ++f) {
      out.worst_rank[f] = std::max(out.worst_rank[f], t.ranks[f]);
      out.mean_rank[f] += t.ranks[f];
    }
  for (auto& m : out.mean_rank) m /= static_cast<double>(trials.size());

  out.order.resize(d);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    if (policy == AggregatePolicy::worst_rank) {
      if (out.worst_rank[a] != out.worst_rank[b]) return out.worst_rank[a] < out.worst_rank[b];
      if (out.mean_rank[a] != out.mean_rank[b]) return out.mean_rank[a] < out.mean_rank[b];
    } else {
      if (out.mean_rank[a] != out.mean_rank[b]) return out.mean_rank[a] < out.mean_rank[b];
      if (out.worst_rank[a] != out.worst_rank[b]) return out.worst_rank[a] < out.worst_rank[b];
    }
    return a < b;
  });
  return out;
}

inline FeatureSubset top_k(const AggregateRanking& agg, std::size_t k) {
  require(k >= 1 && k <= agg.order.size(), errc::bad_k,
          "k must be in [1, " + std::to_string(agg.order.size()) + "], got " + std::to_string(k));
  FeatureSubset out;
  out.names.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.names.push_back(agg.schema[agg.order[i]]);
  return out;
}

struct SelectionResult {
  AggregateRanking ranking;
  std::vector<RankVector> trials;
};

// The 50-trial procedure; trials draw from disjoint derived seed streams and
// run in parallel (results land in per-trial slots).
inline SelectionResult run_selection(const CohortFeatures& features, const SelectionConfig& config) {
  require(config.n_trials >= 1, errc::config_invalid, "selection needs at least one trial");
  SelectionResult result;
  result.trials.resize(config.n_trials);
  parallel_for(static_cast<std::size_t>(config.n_trials), config.jobs, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, "select", t);
    result.trials[t] = rank_one_trial(features, config.kind, trial_seed, static_cast<int>(t),
                                      config.quotas, config.gbt_spec, config.subject_fraction,
                                      config.section_policy);
  });
  result.ranking = aggregate(result.trials, features.schema(config.kind), config.policy);
  return result;
}

inline void save_ranking_csv(const AggregateRanking& agg, const std::string& path,
                             const std::string& meta_line = "") {
  FileWriter out(path);
  if (!meta_line.empty()) out.line(meta_line);
  out.line("feature,worst_rank,mean_rank,final_position");
  for (std::size_t pos = 0; pos < agg.order.size(); ++pos) {
    const std::size_t f = agg.order[pos];
    out.line(agg.schema[f] + ',' + std::to_string(agg.worst_rank[f]) + ',' +
             format_double(agg.mean_rank[f]) + ',' + std::to_string(pos + 1));
  }
  out.close();
}

inline void save_subset(const FeatureSubset& subset, const std::string& path,
                        const std::string& meta_line = "") {
  FileWriter out(path);
  if (!meta_line.empty()) out.line(meta_line);
  for (const auto& name : subset.names) out.line(name);
  out.close();
}

inline FeatureSubset load_subset(const std::string& path) {
  CsvContent csv = read_csv_file(path);
  FeatureSubset out;
  for (const auto& line : csv.lines)
    if (!line.empty()) out.names.push_back(line);
  require(!out.names.empty(), errc::empty_input, path + " lists no features");
  return out;
}

}  // namespace eegml

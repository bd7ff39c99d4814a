#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "eegml/binning.hpp"
#include "eegml/gbt.hpp"  // TreeNode/Tree
#include "eegml/rng.hpp"

namespace eegml {

struct ForestParams {
  int trees = 300;
  int max_features = 0;  // 0 => ceil(sqrt(d))
  int min_samples_leaf = 2;
  int max_depth = 64;
  int max_bins = 64;
};

struct ForestModel {
  ForestParams params;
  std::vector<Tree> trees;                // leaf value = P(label 1) in that leaf
  std::vector<double> importance;         // mean weighted Gini decrease per tree

  double predict(const double* x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
  }
};

namespace detail {

struct ForestBuilder {
  const BinnedTable& data;
  const std::vector<int>& labels;
  const ForestParams& params;
  Rng* rng = nullptr;
  Tree* tree = nullptr;
  std::vector<double>* importance = nullptr;
  double inv_n_bootstrap = 0.0;
  std::size_t n_sub_features = 0;
  std::vector<std::size_t>& feature_pool;  // identity permutation, shared + restored

  static double gini(double n0, double n1) {
    const double n = n0 + n1;
    if (n <= 0.0) return 0.0;
    return 1.0 - (n0 * n0 + n1 * n1) / (n * n);
  }

  int build(std::vector<std::size_t>& rows, int depth) {
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += static_cast<std::size_t>(labels[r]);
    const std::size_t neg = rows.size() - pos;

    const int node_index = static_cast<int>(tree->nodes.size());
    tree->nodes.emplace_back();

    const bool can_split = depth < params.max_depth && pos > 0 && neg > 0 &&
                           rows.size() >= 2 * static_cast<std::size_t>(params.min_samples_leaf);
    Split best;
    if (can_split) best = find_split(rows, static_cast<double>(neg), static_cast<double>(pos));

    if (best.feature < 0) {
      tree->nodes[node_index].value = static_cast<double>(pos) / static_cast<double>(rows.size());
      return node_index;
    }

    (*importance)[best.feature] += best.decrease * inv_n_bootstrap;

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    for (std::size_t r : rows)
      (data.bin(r, best.feature) < best.bin ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    TreeNode& node = tree->nodes[node_index];
    node.feature = best.feature;
    node.threshold = data.threshold_value(best.feature, best.bin);
    node.left = left;
    node.right = right;
    return node_index;
  }

  struct Split {
    double decrease = 0.0;  // weighted impurity decrease, in sample counts
    int feature = -1;
    std::size_t bin = 0;
  };

  Split find_split(const std::vector<std::size_t>& rows, double neg, double pos) {
    // Per-node feature subsample: partial Fisher-Yates over the shared pool,
    // swaps undone afterwards so the pool stays the identity permutation.
    const std::size_t d = data.n_features;
    std::vector<std::pair<std::size_t, std::size_t>> swaps;
    chosen.clear();
    for (std::size_t i = 0; i < n_sub_features; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng->below(d - i));
      std::swap(feature_pool[i], feature_pool[j]);
      swaps.emplace_back(i, j);
      chosen.push_back(feature_pool[i]);
    }
    for (auto it = swaps.rbegin(); it != swaps.rend(); ++it)
      std::swap(feature_pool[it->first], feature_pool[it->second]);
    std::sort(chosen.begin(), chosen.end());

    const std::size_t bins = data.max_bins;
    hist0.assign(chosen.size() * bins, 0.0);
    hist1.assign(chosen.size() * bins, 0.0);
    for (std::size_t r : rows) {
      const std::uint8_t* rb = data.bins.data() + r * d;
      const double y = static_cast<double>(labels[r]);
      for (std::size_t c = 0; c < chosen.size(); ++c) {
        const std::size_t slot = c * bins + rb[chosen[c]];
        hist0[slot] += 1.0 - y;
        hist1[slot] += y;
      }
    }

    const double n = neg + pos;
    const double parent_score = n * gini(neg, pos);
    const double min_leaf = static_cast<double>(params.min_samples_leaf);

    Split best;
    for (std::size_t c = 0; c < chosen.size(); ++c) {
      const std::size_t f = chosen[c];
      const std::size_t n_cuts = data.cuts[f].size();
      double l0 = 0.0, l1 = 0.0;
      for (std::size_t b = 0; b + 1 <= n_cuts; ++b) {
        l0 += hist0[c * bins + b];
        l1 += hist1[c * bins + b];
        const double nl = l0 + l1;
        const double nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double r0 = neg - l0, r1 = pos - l1;
        const double decrease = parent_score - nl * gini(l0, l1) - nr * gini(r0, r1);
        if (decrease > best.decrease + 1e-12) {
          best.decrease = decrease;
          best.feature = static_cast<int>(f);
          best.bin = b + 1;
        }
      }
    }
    return best;
  }

  std::vector<std::size_t> chosen;
  std::vector<double> hist0, hist1;
};

}  // namespace detail

// Bagged Gini trees with per-node feature subsampling. Deterministic: tree t
// draws everything from a stream keyed by (seed, t), nodes are visited
// depth-first left-first.
inline ForestModel train_random_forest(const FeatureTable& table, const ForestParams& params,
                                       std::uint64_t seed) {
  const std::size_t n = table.rows.size();
  const std::size_t d = table.schema.size();

  ForestModel model;
  model.params = params;
  model.importance.assign(d, 0.0);

  const BinnedTable binned = bin_table(table, static_cast<std::size_t>(params.max_bins));
  std::vector<int> labels(n);
  for (std::size_t r = 0; r < n; ++r) labels[r] = table.rows[r].label;

  const std::size_t n_sub =
      params.max_features > 0
          ? std::min<std::size_t>(d, static_cast<std::size_t>(params.max_features))
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

  std::vector<std::size_t> pool(d);
  for (std::size_t f = 0; f < d; ++f) pool[f] = f;

  for (int t = 0; t < params.trees; ++t) {
    Rng rng(derive_seed(seed, "forest", static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    for (std::size_t r = 0; r < n; ++r) rows[r] = static_cast<std::size_t>(rng.below(n));

    Tree tree;
    detail::ForestBuilder builder{binned,           labels, params, &rng, &tree,
                                  &model.importance, 1.0 / static_cast<double>(n),
                                  n_sub,            pool};
    builder.build(rows, 0);
    model.trees.push_back(std::move(tree));
  }
  for (auto& v : model.importance) v /= static_cast<double>(params.trees);
  return model;
}

}  // namespace eegml

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "eegml/binning.hpp"
#include "eegml/error.hpp"

namespace eegml {

struct GbtParams {
  int trees = 200;
  int depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 5;
  double l2 = 1.0;
  int max_bins = 64;
};

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf payload
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const double* x) const {
    int idx = 0;
    while (nodes[idx].feature >= 0)
      idx = x[nodes[idx].feature] < nodes[idx].threshold ? nodes[idx].left : nodes[idx].right;
    return nodes[idx].value;
  }
};

struct GbtModel {
  GbtParams params;
  double base_score = 0.0;  // raw logit
  std::vector<Tree> trees;
  std::vector<double> importance;  // total split gain per feature
  double total_gain = 0.0;         // sum over every accepted split

  double raw_score(const double* x) const {
    double s = base_score;
    for (const auto& t : trees) s += t.predict(x);
    return s;
  }
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GbtBuilder {
  const BinnedTable& data;
  const GbtParams& params;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  Tree* tree = nullptr;
  GbtModel* model = nullptr;
  std::vector<int>* leaf_of_row = nullptr;

  struct Split {
    double gain = 0.0;
    int feature = -1;
    std::size_t bin = 0;  // left: bin < split.bin
  };

  // Returns node index within tree->nodes.
  int build(std::vector<std::size_t>& rows, int depth) {
    double g_sum = 0.0, h_sum = 0.0;
    for (std::size_t r : rows) {
      g_sum += grad[r];
      h_sum += hess[r];
    }

    const int node_index = static_cast<int>(tree->nodes.size());
    tree->nodes.emplace_back();

    Split best;
    if (depth < params.depth &&
        rows.size() >= 2 * static_cast<std::size_t>(params.min_samples_leaf))
      best = find_split(rows, g_sum, h_sum);

    if (best.feature < 0) {
      tree->nodes[node_index].value = params.learning_rate * (-g_sum / (h_sum + params.l2));
      for (std::size_t r : rows) (*leaf_of_row)[r] = node_index;
      return node_index;
    }

    model->importance[best.feature] += best.gain;
    model->total_gain += best.gain;

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

  Split find_split(const std::vector<std::size_t>& rows, double g_sum, double h_sum) {
    const std::size_t d = data.n_features;
    const std::size_t bins = data.max_bins;
    hist_g.assign(d * bins, 0.0);
    hist_h.assign(d * bins, 0.0);
    hist_n.assign(d * bins, 0);
    for (std::size_t r : rows) {
      const std::uint8_t* rb = data.bins.data() + r * d;
      const double g = grad[r], h = hess[r];
      for (std::size_t f = 0; f < d; ++f) {
        const std::size_t slot = f * bins + rb[f];
        hist_g[slot] += g;
        hist_h[slot] += h;
        hist_n[slot] += 1;
      }
    }

    const double lambda = params.l2;
    const double parent = g_sum * g_sum / (h_sum + lambda);
    const std::size_t min_leaf = static_cast<std::size_t>(params.min_samples_leaf);

    Split best;
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t n_cuts = data.cuts[f].size();
      double gl = 0.0, hl = 0.0;
      std::size_t nl = 0;
      for (std::size_t b = 0; b + 1 <= n_cuts; ++b) {
        gl += hist_g[f * bins + b];
        hl += hist_h[f * bins + b];
        nl += hist_n[f * bins + b];
        if (nl < min_leaf) continue;
        const std::size_t nr = rows.size() - nl;
        if (nr < min_leaf) break;
        const double gr = g_sum - gl, hr = h_sum - hl;
        const double gain =
            0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.bin = b + 1;
        }
      }
    }
    return best;
  }

  std::vector<double> hist_g, hist_h;
  std::vector<std::uint32_t> hist_n;
};

}  // namespace detail

// Gradient-boosted depth-limited trees on logistic loss, second-order split
// gain, importance = accumulated gain. Fully deterministic (greedy, no
// subsampling).
inline GbtModel train_gbt(const FeatureTable& table, const GbtParams& params) {
  const std::size_t n = table.rows.size();
  const std::size_t d = table.schema.size();
  GbtModel model;
  model.params = params;
  model.importance.assign(d, 0.0);

  const BinnedTable binned = bin_table(table, static_cast<std::size_t>(params.max_bins));

  std::vector<double> score(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  std::vector<int> leaf_of_row(n);

  for (int t = 0; t < params.trees; ++t) {
    for (std::size_t r = 0; r < n; ++r) {
      const double p = detail::sigmoid(score[r]);
      grad[r] = p - static_cast<double>(table.rows[r].label);
      hess[r] = std::max(p * (1.0 - p), 1e-16);
    }
    Tree tree;
    detail::GbtBuilder builder{binned, params, grad, hess, &tree, &model, &leaf_of_row};
    std::vector<std::size_t> rows(n);
    for (std::size_t r = 0; r < n; ++r) rows[r] = r;
    builder.build(rows, 0);
    for (std::size_t r = 0; r < n; ++r) score[r] += tree.nodes[leaf_of_row[r]].value;
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline double predict_gbt(const GbtModel& model, const double* x) {
  return detail::sigmoid(model.raw_score(x));
}

}  // namespace eegml

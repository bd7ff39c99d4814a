#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "eegml/features.hpp"

namespace eegml {

// Quantile-binned view of a feature table for histogram tree learners.
// Bin b of a feature covers [cuts[b-1], cuts[b}); cuts are midpoints between
// distinct sorted values so raw-value thresholds reproduce the binned split.
struct BinnedTable {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::size_t max_bins = 0;
  std::vector<std::uint8_t> bins;        // row-major [row][feature]
  std::vector<std::vector<double>> cuts;  // per feature, ascending

  std::uint8_t bin(std::size_t row, std::size_t feature) const {
    return bins[row * n_features + feature];
  }

  double threshold_value(std::size_t feature, std::size_t split_bin) const {
    return cuts[feature][split_bin - 1];
  }
};

inline BinnedTable bin_table(const FeatureTable& table, std::size_t max_bins = 64) {
  BinnedTable out;
  out.n_rows = table.rows.size();
  out.n_features = table.schema.size();
  out.max_bins = std::min<std::size_t>(max_bins, 256);
  out.cuts.resize(out.n_features);
  out.bins.assign(out.n_rows * out.n_features, 0);

  std::vector<double> column(out.n_rows);
  for (std::size_t f = 0; f < out.n_features; ++f) {
    for (std::size_t r = 0; r < out.n_rows; ++r) column[r] = table.rows[r].values[f];
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    auto& cuts = out.cuts[f];
    if (sorted.size() <= out.max_bins) {
      for (std::size_t i = 1; i < sorted.size(); ++i)
        cuts.push_back(0.5 * (sorted[i - 1] + sorted[i]));
    } else {
      for (std::size_t b = 1; b < out.max_bins; ++b) {
        const std::size_t idx = b * sorted.size() / out.max_bins;
        const double cut = 0.5 * (sorted[idx - 1] + sorted[idx]);
        if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
      }
    }
    for (std::size_t r = 0; r < out.n_rows; ++r) {
      const auto it = std::upper_bound(cuts.begin(), cuts.end(), column[r]);
      out.bins[r * out.n_features + f] = static_cast<std::uint8_t>(it - cuts.begin());
    }
  }
  return out;
}

}  // namespace eegml

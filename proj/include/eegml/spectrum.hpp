#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "eegml/error.hpp"
#include "eegml/fft.hpp"
#include "eegml/ingest.hpp"

namespace eegml {

struct Band {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
  bool include_high = false;  // half-open [low, high) unless set
};

struct BandScheme {
  std::vector<Band> bands;

  // The five canonical EEG wavebands; gamma's upper edge is inclusive so
  // 45 Hz belongs to exactly one band.
  static BandScheme standard_eeg() {
    return BandScheme{{{"delta", 0.0, 4.0, false},
                       {"theta", 4.0, 8.0, false},
                       {"alpha", 8.0, 13.0, false},
                       {"beta", 13.0, 30.0, false},
                       {"gamma", 30.0, 45.0, true}}};
  }

  std::size_t size() const { return bands.size(); }

  int index_of(std::string_view name) const {
    for (std::size_t i = 0; i < bands.size(); ++i)
      if (bands[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    require(!bands.empty(), errc::empty_band, "band scheme has no bands");
    for (std::size_t i = 0; i < bands.size(); ++i) {
      require(bands[i].high_hz > bands[i].low_hz, errc::empty_band,
              "band " + bands[i].name + " has non-positive width");
      if (i > 0)
        require(bands[i].low_hz >= bands[i - 1].high_hz, errc::empty_band,
                "bands must be non-overlapping and increasing");
    }
  }
};

// True when bin frequency f belongs to the band. The DC bin is excluded
// everywhere (per-epoch mean removal leaves it meaningless anyway).
inline bool band_contains(const Band& band, double f) {
  if (f <= 0.0) return false;
  if (f < band.low_hz) return false;
  return f < band.high_hz || (band.include_high && f == band.high_hz);
}

// Bin indices of one band at resolution bin_hz, ascending.
inline std::vector<std::size_t> band_bins(const Band& band, double bin_hz, std::size_t n_bins) {
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k < n_bins; ++k)
    if (band_contains(band, bin_hz * static_cast<double>(k))) bins.push_back(k);
  return bins;
}

inline std::vector<double> hann_window(std::size_t len) {
  std::vector<double> w(len);
  const double step = 6.283185307179586476925286766559 / static_cast<double>(len - 1);
  for (std::size_t i = 0; i < len; ++i) w[i] = 0.5 * (1.0 - std::cos(step * static_cast<double>(i)));
  return w;
}

// Per-epoch one-sided spectra; coefficients deliberately unscaled (all
// scaling cancels in coherence, and band power is only compared to itself).
struct SpectraSet {
  std::string subject_id;
  std::size_t n_epochs = 0;
  std::size_t n_channels = 0;
  std::size_t n_bins = 0;
  double bin_hz = 0.0;
  double sample_rate = 0.0;
  std::vector<std::complex<double>> coeffs;  // [epoch][channel][bin]

  const std::complex<double>* epoch_channel(std::size_t e, std::size_t ch) const {
    return coeffs.data() + (e * n_channels + ch) * n_bins;
  }
  std::complex<double>* epoch_channel(std::size_t e, std::size_t ch) {
    return coeffs.data() + (e * n_channels + ch) * n_bins;
  }
};

// Workspace for the per-epoch transform: mean removal, Hann taper, one
// transform per channel.
class EpochSpectraEngine {
 public:
  EpochSpectraEngine(std::size_t epoch_len, std::size_t n_channels)
      : len_(epoch_len),
        n_channels_(n_channels),
        n_bins_(epoch_len / 2 + 1),
        window_(hann_window(epoch_len)),
        plan_(epoch_len),
        buf_(epoch_len) {
    require(epoch_len % 2 == 0, errc::odd_epoch_length,
            "epoch length must be even, got " + std::to_string(epoch_len));
  }

  std::size_t n_bins() const { return n_bins_; }

  // channels: pointer per channel to epoch_len samples. out: n_channels*n_bins.
  void transform(const std::vector<const double*>& channels, std::complex<double>* out) {
    for (std::size_t ch = 0; ch < n_channels_; ++ch) {
      prepare(channels[ch]);
      real_spectrum(plan_, buf_.data(), out + ch * n_bins_, scratch_);
    }
  }

 private:
  void prepare(const double* x) {
    double mean = 0.0;
    for (std::size_t i = 0; i < len_; ++i) mean += x[i];
    mean /= static_cast<double>(len_);
    for (std::size_t i = 0; i < len_; ++i) buf_[i] = (x[i] - mean) * window_[i];
  }

  std::size_t len_;
  std::size_t n_channels_;
  std::size_t n_bins_;
  std::vector<double> window_;
  FftPlan plan_;
  std::vector<double> buf_;
  std::vector<std::complex<double>> scratch_;
};

inline SpectraSet epoch_spectra(const EpochSet& epochs) {
  require(epochs.n_epochs >= 1, errc::empty_input, "no epochs");
  EpochSpectraEngine engine(epochs.epoch_len, epochs.n_channels);

  SpectraSet out;
  out.subject_id = epochs.subject_id;
  out.n_epochs = epochs.n_epochs;
  out.n_channels = epochs.n_channels;
  out.n_bins = engine.n_bins();
  out.sample_rate = epochs.sample_rate;
  out.bin_hz = epochs.sample_rate / static_cast<double>(epochs.epoch_len);
  out.coeffs.resize(out.n_epochs * out.n_channels * out.n_bins);

  std::vector<const double*> chans(epochs.n_channels);
  for (std::size_t e = 0; e < epochs.n_epochs; ++e) {
    for (std::size_t ch = 0; ch < epochs.n_channels; ++ch)
      chans[ch] = epochs.epoch_channel(e, ch);
    engine.transform(chans, out.epoch_channel(e, 0));
  }
  return out;
}

// All unordered channel pairs (i, j), i < j, lexicographic by channel index.
inline std::vector<std::pair<int, int>> channel_pairs(std::size_t n_channels) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(n_channels * (n_channels - 1) / 2);
  for (std::size_t i = 0; i < n_channels; ++i)
    for (std::size_t j = i + 1; j < n_channels; ++j)
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return pairs;
}

struct CoherenceTensor {
  std::vector<std::pair<int, int>> pairs;
  std::size_t n_bins = 0;
  double bin_hz = 0.0;
  std::vector<double> values;  // [pair][bin], each in [0, 1]
  std::size_t zero_power_bins = 0;

  double at(std::size_t pair, std::size_t bin) const { return values[pair * n_bins + bin]; }
};

// Running cross-spectral sums over an epoch range. Epochs must be fed in
// index order; coherence is then a pure function of the sums, which keeps
// the streaming path bit-identical to coherence(epoch_spectra(...)).
struct CrossSpectraAccumulator {
  std::size_t n_channels = 0;
  std::size_t n_bins = 0;
  std::size_t n_epochs = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::complex<double>> cross;  // [pair][bin]
  std::vector<double> power;                // [channel][bin]

  CrossSpectraAccumulator() = default;
  CrossSpectraAccumulator(std::size_t channels, std::size_t bins)
      : n_channels(channels),
        n_bins(bins),
        pairs(channel_pairs(channels)),
        cross(pairs.size() * bins, 0.0),
        power(channels * bins, 0.0) {}

  void reset() {
    n_epochs = 0;
    std::fill(cross.begin(), cross.end(), std::complex<double>(0.0, 0.0));
    std::fill(power.begin(), power.end(), 0.0);
  }

  // spectra: one epoch's coefficients, [channel][bin].
  void add_epoch(const std::complex<double>* spectra) {
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const auto [i, j] = pairs[q];
      const std::complex<double>* xi = spectra + static_cast<std::size_t>(i) * n_bins;
      const std::complex<double>* xj = spectra + static_cast<std::size_t>(j) * n_bins;
      std::complex<double>* acc = cross.data() + q * n_bins;
      for (std::size_t b = 0; b < n_bins; ++b) acc[b] += xi[b] * std::conj(xj[b]);
    }
    for (std::size_t ch = 0; ch < n_channels; ++ch) {
      const std::complex<double>* x = spectra + ch * n_bins;
      double* acc = power.data() + ch * n_bins;
      for (std::size_t b = 0; b < n_bins; ++b) acc[b] += std::norm(x[b]);
    }
    ++n_epochs;
  }

  CoherenceTensor finalize(double bin_hz) const {
    require(n_epochs >= 2, errc::single_epoch,
            "coherence needs at least 2 epochs, got " + std::to_string(n_epochs));
    CoherenceTensor out;
    out.pairs = pairs;
    out.n_bins = n_bins;
    out.bin_hz = bin_hz;
    out.values.resize(pairs.size() * n_bins);
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const auto [i, j] = pairs[q];
      const double* pi = power.data() + static_cast<std::size_t>(i) * n_bins;
      const double* pj = power.data() + static_cast<std::size_t>(j) * n_bins;
      const std::complex<double>* cx = cross.data() + q * n_bins;
      double* v = out.values.data() + q * n_bins;
      for (std::size_t b = 0; b < n_bins; ++b) {
        const double denom = pi[b] * pj[b];
        if (denom <= 0.0) {
          v[b] = 0.0;
          ++out.zero_power_bins;
          continue;
        }
        double c = std::abs(cx[b]) / std::sqrt(denom);
        require(c <= 1.0 + 1e-9, errc::non_finite_feature,
                "coherence exceeded 1+1e-9: " + format_double(c));
        v[b] = std::min(c, 1.0);
      }
    }
    return out;
  }
};

// Magnitude coherence |E[Sxy]| / sqrt(E[Sxx] E[Syy]), with per-epoch spectra
// as the cross-spectral density estimates and E[] the average over epochs.
// The common 1/E factors cancel exactly, so plain sums are used.
inline CoherenceTensor coherence(const SpectraSet& spectra) {
  require(spectra.n_epochs >= 2, errc::single_epoch,
          "coherence needs at least 2 epochs, got " + std::to_string(spectra.n_epochs));
  CrossSpectraAccumulator acc(spectra.n_channels, spectra.n_bins);
  for (std::size_t e = 0; e < spectra.n_epochs; ++e) acc.add_epoch(spectra.epoch_channel(e, 0));
  return acc.finalize(spectra.bin_hz);
}

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

inline std::vector<std::string> connectivity_feature_names(const Montage& montage,
                                                           const BandScheme& scheme) {
  const auto pairs = channel_pairs(montage.size());
  std::vector<std::string> names;
  names.reserve(scheme.size() * pairs.size());
  for (const auto& band : scheme.bands)
    for (const auto& [i, j] : pairs)
      names.push_back(montage.channels[i] + "-" + montage.channels[j] + ":" + band.name);
  return names;
}

inline std::vector<std::string> band_power_feature_names(const Montage& montage,
                                                         const BandScheme& scheme) {
  std::vector<std::string> names;
  names.reserve(scheme.size() * montage.size());
  for (const auto& band : scheme.bands)
    for (const auto& ch : montage.channels) names.push_back(ch + ":" + band.name);
  return names;
}

// Band-mean connectivity features, band-major then pair-lexicographic.
inline FeatureVector band_average(const CoherenceTensor& coh, const BandScheme& scheme,
                                  const Montage& montage) {
  scheme.validate();
  FeatureVector out;
  out.names = connectivity_feature_names(montage, scheme);
  out.values.reserve(out.names.size());
  for (const auto& band : scheme.bands) {
    const auto bins = band_bins(band, coh.bin_hz, coh.n_bins);
    require(!bins.empty(), errc::empty_band,
            "band " + band.name + " contains no bins at " + format_double(coh.bin_hz) + " Hz");
    for (std::size_t q = 0; q < coh.pairs.size(); ++q) {
      double sum = 0.0;
      for (std::size_t b : bins) sum += coh.at(q, b);
      out.values.push_back(sum / static_cast<double>(bins.size()));
    }
  }
  return out;
}

// Per-epoch band power: mean |X|^2 over the band's bins; one value per
// (band, channel) pair, band-major. Shared by both the SpectraSet op and
// the streaming extractor so their sums agree bit for bit.
inline void epoch_band_power(const std::complex<double>* spectra, std::size_t n_channels,
                             std::size_t n_bins,
                             const std::vector<std::vector<std::size_t>>& bins_per_band,
                             double* out) {
  std::size_t idx = 0;
  for (const auto& bins : bins_per_band) {
    for (std::size_t ch = 0; ch < n_channels; ++ch) {
      const std::complex<double>* x = spectra + ch * n_bins;
      double sum = 0.0;
      for (std::size_t b : bins) sum += std::norm(x[b]);
      out[idx++] = sum / static_cast<double>(bins.size());
    }
  }
}

inline std::vector<std::vector<std::size_t>> scheme_bins(const BandScheme& scheme, double bin_hz,
                                                         std::size_t n_bins) {
  scheme.validate();
  std::vector<std::vector<std::size_t>> bins_per_band;
  for (const auto& band : scheme.bands) {
    auto bins = band_bins(band, bin_hz, n_bins);
    require(!bins.empty(), errc::empty_band,
            "band " + band.name + " contains no bins at " + format_double(bin_hz) + " Hz");
    bins_per_band.push_back(std::move(bins));
  }
  return bins_per_band;
}

// log(1 + mean-over-epochs of per-epoch band power), band-major then channel.
inline FeatureVector band_power(const SpectraSet& spectra, const BandScheme& scheme,
                                const Montage& montage) {
  const auto bins_per_band = scheme_bins(scheme, spectra.bin_hz, spectra.n_bins);
  FeatureVector out;
  out.names = band_power_feature_names(montage, scheme);
  std::vector<double> sums(out.names.size(), 0.0);
  std::vector<double> per_epoch(out.names.size());
  for (std::size_t e = 0; e < spectra.n_epochs; ++e) {
    epoch_band_power(spectra.epoch_channel(e, 0), spectra.n_channels, spectra.n_bins,
                     bins_per_band, per_epoch.data());
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += per_epoch[i];
  }
  out.values.resize(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i)
    out.values[i] = std::log1p(sums[i] / static_cast<double>(spectra.n_epochs));
  return out;
}

}  // namespace eegml

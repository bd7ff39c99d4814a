#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "eegml/error.hpp"
#include "eegml/features.hpp"
#include "eegml/fft.hpp"
#include "eegml/ingest.hpp"
#include "eegml/parallel.hpp"
#include "eegml/rng.hpp"
#include "eegml/spectrum.hpp"

namespace eegml {

struct Plant {
  std::string channel_a;
  std::string channel_b;
  std::string band;
  double coupling_female = 0.0;
  double coupling_male = 0.0;
};

struct SynthSpec {
  int n_female = 150;
  int n_male = 91;
  double duration_s = 305.0;
  double sample_rate = 250.0;
  Montage montage = Montage::standard_19();
  BandScheme scheme = BandScheme::standard_eeg();
  std::vector<Plant> plants = default_plants();
  double noise_std = 1.0;
  // Inter-subject heterogeneity: each (subject, plant) coupling is scaled by
  // max(0, 1 + coupling_jitter_sd * g), g ~ N(0,1) from the subject's stream.
  // 0 (the default) keeps couplings exactly deterministic per sex.
  double coupling_jitter_sd = 0.0;
  std::uint64_t seed = 1;
  std::string id_prefix;  // keeps holdout cohorts' subject ids disjoint

  // Frontal/central pairs with known sex-dependent connectivity, plus their bands.
  static std::vector<Plant> default_plants() {
    return {{"Fp1", "Fz", "gamma", 1.0, 0.0}, {"Fz", "C4", "beta", 1.0, 0.0},
            {"Fz", "C4", "delta", 1.0, 0.0},  {"F7", "F8", "beta", 1.0, 0.0},
            {"Fz", "C4", "gamma", 1.0, 0.0}};
  }

  void validate() const {
    require(n_female >= 0 && n_male >= 0 && n_female + n_male > 0, errc::config_invalid,
            "cohort must contain at least one subject");
    require(duration_s > 0 && sample_rate > 0, errc::config_invalid,
            "duration and sample rate must be positive");
    require(noise_std > 0, errc::config_invalid, "noise_std must be positive");
    require(coupling_jitter_sd >= 0, errc::config_invalid, "coupling_jitter_sd must be >= 0");
    montage.validate();
    scheme.validate();
    for (const auto& p : plants) {
      require(montage.index_of(p.channel_a) >= 0 && montage.index_of(p.channel_b) >= 0,
              errc::invalid_plant, "plant channels must be in the montage");
      require(p.channel_a != p.channel_b, errc::invalid_plant,
              "plant must couple two distinct channels");
      require(scheme.index_of(p.band) >= 0, errc::invalid_plant,
              "plant band '" + p.band + "' not in the band scheme");
      require(p.coupling_female >= 0 && p.coupling_male >= 0, errc::invalid_plant,
              "couplings must be non-negative");
    }
  }
};

// Closed form of the coherence between two channels sharing one band-limited
// source: C = a*b*S / sqrt((N + a^2 S)(N + b^2 S)) with equal gains a = b.
inline double predicted_coherence(double coupling, double noise_in_band_power,
                                  double source_in_band_power) {
  require(coupling >= 0.0 && noise_in_band_power >= 0.0 && source_in_band_power >= 0.0,
          errc::negative_input, "predicted_coherence takes non-negative inputs");
  if (coupling == 0.0) return 0.0;
  const double s = coupling * coupling * source_in_band_power;
  const double denom = noise_in_band_power + s;
  if (denom <= 0.0) return 0.0;
  return s / denom;
}

namespace detail {

// Number of positive-frequency DFT bins of a length-n signal at `rate` that
// fall inside the band (same membership rule as band averaging).
inline std::size_t masked_bin_count(const Band& band, double rate, std::size_t n) {
  const double bin_hz = rate / static_cast<double>(n);
  std::size_t count = 0;
  for (std::size_t k = 1; k <= n / 2; ++k)
    if (band_contains(band, bin_hz * static_cast<double>(k))) ++count;
  return count;
}

// Canonical sample value: what the CSV decimal form parses back to. The
// in-memory and on-disk pipelines agree bit for bit because every generated
// sample passes through here.
inline double canonical_sample(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
  double out = 0.0;
  std::from_chars(buf, res.ptr, out);
  return out;
}

// Unit-variance band-limited noise, synthesized directly in the frequency
// domain (hard spectral mask), so its in-band power is exactly 1.
inline std::vector<double> band_limited_source(const Band& band, double rate, std::size_t n,
                                               const FftPlan& plan, Rng& rng) {
  const double bin_hz = rate / static_cast<double>(n);
  std::vector<std::complex<double>> spec(n, 0.0);
  std::size_t n_masked = 0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    if (!band_contains(band, bin_hz * static_cast<double>(k))) continue;
    ++n_masked;
    // Nyquist bin (k == n/2 for even n) must stay real to keep x real.
    if (2 * k == n) {
      spec[k] = std::complex<double>(rng.gaussian() * 2.0, 0.0);
    } else {
      spec[k] = std::complex<double>(rng.gaussian(), rng.gaussian());
      spec[n - k] = std::conj(spec[k]);
    }
  }
  require(n_masked > 0, errc::invalid_plant,
          "band " + band.name + " is empty at the recording's resolution");
  // Each masked positive bin and its Hermitian mirror contribute 2*alpha^2
  // apiece: E|x[t]|^2 = (1/n^2) * 4 m alpha^2, so unit variance needs
  // alpha = n / (2 sqrt(m)).
  const double alpha = static_cast<double>(n) / (2.0 * std::sqrt(static_cast<double>(n_masked)));
  for (auto& c : spec) c *= alpha;
  plan.inverse(spec.data());
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = spec[t].real();
  return out;
}

}  // namespace detail

// One subject's recording; deterministic per (spec.seed, subject_index) and
// independent of generation order.
inline Recording generate_recording(const SynthSpec& spec, std::size_t subject_index,
                                    const std::string& subject_id, Sex sex) {
  const std::size_t n = static_cast<std::size_t>(spec.duration_s * spec.sample_rate + 0.5);
  const std::size_t p = spec.montage.size();

  Recording rec;
  rec.subject_id = subject_id;
  rec.sex = sex;
  rec.sample_rate = spec.sample_rate;
  rec.n_channels = p;
  rec.n_samples = n;
  rec.data.resize(p * n);

  const std::uint64_t subject_key = derive_seed(spec.seed, "subject", subject_index);
  for (std::size_t ch = 0; ch < p; ++ch) {
    Rng rng(mix_keys(subject_key, fnv1a64("noise:" + spec.montage.channels[ch])));
    double* x = rec.data.data() + ch * n;
    for (std::size_t t = 0; t < n; ++t) x[t] = spec.noise_std * rng.gaussian();
  }

  const FftPlan plan(n);
  for (std::size_t k = 0; k < spec.plants.size(); ++k) {
    const Plant& plant = spec.plants[k];
    double gain = sex == Sex::female ? plant.coupling_female : plant.coupling_male;
    if (gain == 0.0) continue;
    if (spec.coupling_jitter_sd > 0.0) {
      Rng jitter(mix_keys(subject_key, fnv1a64("jitter:" + std::to_string(k))));
      gain *= std::max(0.0, 1.0 + spec.coupling_jitter_sd * jitter.gaussian());
      if (gain == 0.0) continue;
    }
    const Band& band = spec.scheme.bands[static_cast<std::size_t>(spec.scheme.index_of(plant.band))];
    Rng rng(mix_keys(subject_key, fnv1a64("plant:" + std::to_string(k))));
    const std::vector<double> source =
        detail::band_limited_source(band, spec.sample_rate, n, plan, rng);
    double* xa = rec.data.data() + static_cast<std::size_t>(spec.montage.index_of(plant.channel_a)) * n;
    double* xb = rec.data.data() + static_cast<std::size_t>(spec.montage.index_of(plant.channel_b)) * n;
    for (std::size_t t = 0; t < n; ++t) {
      xa[t] += gain * source[t];
      xb[t] += gain * source[t];
    }
  }

  for (auto& v : rec.data) v = detail::canonical_sample(v);
  return rec;
}

struct SynthCohort {
  Cohort cohort;                     // entry paths empty when not written to disk
  std::vector<Recording> recordings;  // parallel to cohort.entries

  RecordingProvider provider() const {
    return [this](const CohortEntry& entry) {
      for (std::size_t i = 0; i < cohort.entries.size(); ++i)
        if (cohort.entries[i].subject_id == entry.subject_id) return recordings[i];
      fail(errc::missing_file, "unknown synthetic subject " + entry.subject_id);
    };
  }
};

inline std::string synth_subject_id(const SynthSpec& spec, std::size_t index) {
  const bool female = index < static_cast<std::size_t>(spec.n_female);
  const std::size_t ordinal = female ? index + 1 : index - spec.n_female + 1;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%03zu", female ? 'F' : 'M', ordinal);
  return spec.id_prefix + buf;
}

// Generates the whole cohort in memory (females first).
inline SynthCohort generate_cohort(const SynthSpec& spec, unsigned jobs = 1) {
  spec.validate();
  const std::size_t total = static_cast<std::size_t>(spec.n_female + spec.n_male);
  SynthCohort out;
  out.cohort.montage = spec.montage;
  out.cohort.entries.resize(total);
  out.recordings.resize(total);
  parallel_for(total, jobs, [&](std::size_t i) {
    const Sex sex = i < static_cast<std::size_t>(spec.n_female) ? Sex::female : Sex::male;
    const std::string id = synth_subject_id(spec, i);
    out.recordings[i] = generate_recording(spec, i, id, sex);
    out.cohort.entries[i] = CohortEntry{id, sex, ""};
  });
  return out;
}

// Generates and writes manifest + one recording CSV per subject; returns the
// manifest path. Layout: <dir>/manifest.csv, <dir>/recordings/<id>.csv.
inline std::string write_cohort(const SynthCohort& synth, const std::string& dir,
                                const std::string& meta_line = "") {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "recordings", ec);
  if (ec) fail(errc::io_failure, "cannot create " + dir);

  for (std::size_t i = 0; i < synth.cohort.entries.size(); ++i) {
    const auto& entry = synth.cohort.entries[i];
    const std::string rel = "recordings/" + entry.subject_id + ".csv";
    save_recording_csv(synth.recordings[i], synth.cohort.montage,
                       (fs::path(dir) / rel).string(), meta_line);
  }
  const std::string manifest_path = (fs::path(dir) / "manifest.csv").string();
  FileWriter out(manifest_path);
  if (!meta_line.empty()) out.line(meta_line);
  out.line("subject_id,sex,path");
  for (const auto& entry : synth.cohort.entries)
    out.line(entry.subject_id + "," + std::string(1, sex_char(entry.sex)) + ",recordings/" +
             entry.subject_id + ".csv");
  out.close();
  return manifest_path;
}

// Expected band-mean coherence of every planted pair, accounting for all
// sources a channel carries within the band (overlapping plants raise a
// channel's in-band power and dilute each other's coherence).
struct PlantPrediction {
  std::size_t plant_index = 0;
  std::string feature_name;  // "<chA>-<chB>:<band>"
  double expected_female = 0.0;
  double expected_male = 0.0;
};

namespace detail {

// sum_{u<L} e^{i phi u} in closed form.
inline std::complex<double> geometric_kernel(double phi, std::size_t len) {
  const double half = 0.5 * phi;
  const double s = std::sin(half);
  if (std::abs(s) < 1e-12) return {static_cast<double>(len), 0.0};
  const double mag = std::sin(static_cast<double>(len) * half) / s;
  const double arg = half * static_cast<double>(len - 1);
  return {mag * std::cos(arg), mag * std::sin(arg)};
}

// sum_{u<L} hann[u] e^{i phi u}; the Hann taper splits into three Dirichlet
// kernels.
inline std::complex<double> hann_kernel(double phi, std::size_t len) {
  const double a = 6.283185307179586476925286766559 / static_cast<double>(len - 1);
  return 0.5 * geometric_kernel(phi, len) - 0.25 * geometric_kernel(phi + a, len) -
         0.25 * geometric_kernel(phi - a, len);
}

// Expected windowed epoch-bin powers of a unit-variance source masked to
// `band` on the length-n grid, including Hann smearing and per-epoch mean
// removal. Scaled like the engine's unscaled DFT, i.e. white noise of unit
// variance reads sum(w^2) - |W_f|^2/L at bin f.
inline std::vector<double> expected_source_bin_power(const Band& band, double rate, std::size_t n,
                                                     std::size_t epoch_len) {
  const std::size_t n_bins = epoch_len / 2 + 1;
  const double two_pi = 6.283185307179586476925286766559;
  const double bin_hz_n = rate / static_cast<double>(n);

  std::vector<std::size_t> mask;
  for (std::size_t k = 1; k <= n / 2; ++k)
    if (band_contains(band, bin_hz_n * static_cast<double>(k))) mask.push_back(k);

  std::vector<double> power(n_bins, 0.0);
  if (mask.empty()) return power;
  const double scale = 1.0 / (2.0 * static_cast<double>(mask.size()));

  for (std::size_t f = 0; f < n_bins; ++f) {
    const double theta_f = two_pi * static_cast<double>(f) / static_cast<double>(epoch_len);
    const std::complex<double> w_f = hann_kernel(-theta_f, epoch_len);
    double sum = 0.0;
    for (std::size_t nu : mask) {
      const double phi = two_pi * static_cast<double>(nu) / static_cast<double>(n);
      const std::complex<double> d_nu =
          geometric_kernel(phi, epoch_len) / static_cast<double>(epoch_len);
      const std::complex<double> k_pos = hann_kernel(phi - theta_f, epoch_len) - d_nu * w_f;
      const std::complex<double> k_neg =
          hann_kernel(-phi - theta_f, epoch_len) - std::conj(d_nu) * w_f;
      sum += std::norm(k_pos) + std::norm(k_neg);
    }
    power[f] = scale * sum;
  }
  return power;
}

// Expected windowed epoch-bin power of unit-variance white noise after mean
// removal: sum(w^2) - |W_f|^2 / L.
inline std::vector<double> expected_noise_bin_power(double /*rate*/, std::size_t epoch_len) {
  const std::size_t n_bins = epoch_len / 2 + 1;
  const double two_pi = 6.283185307179586476925286766559;
  const auto w = hann_window(epoch_len);
  double energy = 0.0;
  for (double v : w) energy += v * v;
  std::vector<double> power(n_bins);
  for (std::size_t f = 0; f < n_bins; ++f) {
    const double theta_f = two_pi * static_cast<double>(f) / static_cast<double>(epoch_len);
    power[f] = energy - std::norm(hann_kernel(-theta_f, epoch_len)) / static_cast<double>(epoch_len);
  }
  return power;
}

}  // namespace detail

// Refined oracle: expected *band-mean* coherence of every planted pair at
// epoch resolution, with Hann smearing, per-epoch mean removal, and
// overlapping plants all accounted for. This is what generated data is
// checked against; the flat-density predicted_coherence() closed form is the
// quick first-order version of the same quantity.
inline std::vector<PlantPrediction> predict_planted_band_mean(const SynthSpec& spec,
                                                              std::size_t epoch_len = 500) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(spec.duration_s * spec.sample_rate + 0.5);
  const std::size_t n_bins = epoch_len / 2 + 1;
  const double bin_hz = spec.sample_rate / static_cast<double>(epoch_len);

  const std::vector<double> noise_unit = detail::expected_noise_bin_power(spec.sample_rate, epoch_len);
  std::vector<std::vector<double>> source_power(spec.plants.size());
  for (std::size_t k = 0; k < spec.plants.size(); ++k) {
    const Band& band =
        spec.scheme.bands[static_cast<std::size_t>(spec.scheme.index_of(spec.plants[k].band))];
    source_power[k] = detail::expected_source_bin_power(band, spec.sample_rate, n, epoch_len);
  }

  const double noise_var = spec.noise_std * spec.noise_std;
  std::vector<PlantPrediction> out;
  for (std::size_t k = 0; k < spec.plants.size(); ++k) {
    const Plant& plant = spec.plants[k];
    const Band& band =
        spec.scheme.bands[static_cast<std::size_t>(spec.scheme.index_of(plant.band))];
    const int ia = spec.montage.index_of(plant.channel_a);
    const int ib = spec.montage.index_of(plant.channel_b);

    auto expected_for = [&](bool female) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t f = 0; f < n_bins; ++f) {
        if (!band_contains(band, bin_hz * static_cast<double>(f))) continue;
        double power_a = noise_var * noise_unit[f];
        double power_b = power_a;
        double cross = 0.0;
        for (std::size_t j = 0; j < spec.plants.size(); ++j) {
          const Plant& other = spec.plants[j];
          const double g = female ? other.coupling_female : other.coupling_male;
          if (g == 0.0) continue;
          const int oa = spec.montage.index_of(other.channel_a);
          const int ob = spec.montage.index_of(other.channel_b);
          const double s = g * g * source_power[j][f];
          if (oa == ia || ob == ia) power_a += s;
          if (oa == ib || ob == ib) power_b += s;
          if ((oa == ia || ob == ia) && (oa == ib || ob == ib)) cross += s;
        }
        sum += cross / std::sqrt(power_a * power_b);
        ++count;
      }
      return count ? sum / static_cast<double>(count) : 0.0;
    };

    PlantPrediction p;
    p.plant_index = k;
    p.feature_name = plant.channel_a + "-" + plant.channel_b + ":" + plant.band;
    p.expected_female = expected_for(true);
    p.expected_male = expected_for(false);
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PlantPrediction> predict_planted_coherence(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(spec.duration_s * spec.sample_rate + 0.5);
  std::vector<PlantPrediction> out;

  for (std::size_t k = 0; k < spec.plants.size(); ++k) {
    const Plant& plant = spec.plants[k];
    const Band& band = spec.scheme.bands[static_cast<std::size_t>(spec.scheme.index_of(plant.band))];
    const std::size_t m_bins = detail::masked_bin_count(band, spec.sample_rate, n);
    // One-sided in-band densities, per Hz: noise 2*sigma^2/rate, source 1/W.
    const double band_width = static_cast<double>(m_bins) * spec.sample_rate / static_cast<double>(n);
    const double noise_density = 2.0 * spec.noise_std * spec.noise_std / spec.sample_rate;
    const double source_density = 1.0 / band_width;

    auto expected_for = [&](bool female) {
      // In-band PSD of each channel: noise + every source it carries in this
      // band; cross-spectrum carries only sources shared by both channels.
      const int ia = spec.montage.index_of(plant.channel_a);
      const int ib = spec.montage.index_of(plant.channel_b);
      double power_a = noise_density, power_b = noise_density, cross = 0.0;
      for (const auto& other : spec.plants) {
        if (other.band != plant.band) continue;
        const double g = female ? other.coupling_female : other.coupling_male;
        if (g == 0.0) continue;
        const int oa = spec.montage.index_of(other.channel_a);
        const int ob = spec.montage.index_of(other.channel_b);
        const bool on_a = oa == ia || ob == ia;
        const bool on_b = oa == ib || ob == ib;
        if (on_a) power_a += g * g * source_density;
        if (on_b) power_b += g * g * source_density;
        if (on_a && on_b) cross += g * g * source_density;
      }
      return cross / std::sqrt(power_a * power_b);
    };

    PlantPrediction p;
    p.plant_index = k;
    p.feature_name = plant.channel_a + "-" + plant.channel_b + ":" + plant.band;
    p.expected_female = expected_for(true);
    p.expected_male = expected_for(false);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace eegml

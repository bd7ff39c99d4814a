#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "eegml/csv.hpp"
#include "eegml/error.hpp"
#include "eegml/ingest.hpp"
#include "eegml/parallel.hpp"
#include "eegml/rng.hpp"
#include "eegml/spectrum.hpp"

namespace eegml {

struct Quotas {
  int sections_per_female = 5;
  int sections_per_male = 8;
  int section_epochs = 15;

  void validate() const {
    require(sections_per_female > 0 && sections_per_male > 0 && section_epochs > 0,
            errc::config_invalid, "quotas must be positive");
  }

  int quota_for(Sex s) const { return s == Sex::female ? sections_per_female : sections_per_male; }
};

enum class SectionPolicy { random, head };

enum class FeatureKind { connectivity, band_power };

struct FeatureRow {
  std::string subject_id;
  std::string section_id;
  int label = 0;  // 1 = female
  std::vector<double> values;
};

struct FeatureTable {
  std::vector<std::string> schema;
  std::vector<FeatureRow> rows;

  std::size_t n_rows() const { return rows.size(); }

  bool has_both_classes() const {
    bool pos = false, neg = false;
    for (const auto& r : rows) (r.label ? pos : neg) = true;
    return pos && neg;
  }
};

struct FeatureSubset {
  std::vector<std::string> names;
};

// Everything derived from one subject's recording in a single spectral pass:
// connectivity + band-power vectors for every full section block, plus the
// long-window eval vectors.
struct SubjectFeatures {
  std::string subject_id;
  Sex sex = Sex::female;
  std::size_t n_epochs = 0;
  std::vector<std::vector<double>> section_conn;
  std::vector<std::vector<double>> section_bp;
  std::vector<double> eval_conn;  // empty when the subject has no eval row
  std::vector<double> eval_bp;
  std::size_t eval_epochs_used = 0;
  bool eval_short = false;  // fewer epochs than requested eval window
  bool excluded = false;    // recording unusable (too short for one epoch)
  std::string note;
};

struct ExtractOptions {
  EpochOptions epoching;
  BandScheme scheme = BandScheme::standard_eeg();
  int section_epochs = 15;
  int eval_epochs = 90;
  int min_eval_epochs = 15;
};

struct CohortFeatures {
  Montage montage;
  ExtractOptions options;
  std::vector<std::string> conn_names;
  std::vector<std::string> bp_names;
  std::vector<SubjectFeatures> subjects;
  std::vector<std::string> warnings;

  const std::vector<std::string>& schema(FeatureKind kind) const {
    return kind == FeatureKind::connectivity ? conn_names : bp_names;
  }
};

using RecordingProvider = std::function<Recording(const CohortEntry&)>;

inline RecordingProvider disk_provider(const Montage& montage, double expected_rate = 250.0) {
  return [montage, expected_rate](const CohortEntry& entry) {
    Recording rec = load_recording(entry.path, montage, expected_rate);
    rec.subject_id = entry.subject_id;
    rec.sex = entry.sex;
    return rec;
  };
}

inline SubjectFeatures extract_subject(const Recording& rec, const Montage& montage,
                                       const ExtractOptions& opt) {
  SubjectFeatures out;
  out.subject_id = rec.subject_id;
  out.sex = rec.sex.value_or(Sex::female);

  EpochSet epochs;
  try {
    epochs = segment_epochs(rec, opt.epoching);
  } catch (const Error& e) {
    if (e.code() != errc::too_short) throw;
    out.excluded = true;
    out.note = e.what();
    return out;
  }

  const std::size_t n_epochs = epochs.n_epochs;
  const std::size_t p = epochs.n_channels;
  out.n_epochs = n_epochs;

  EpochSpectraEngine engine(epochs.epoch_len, p);
  const std::size_t n_bins = engine.n_bins();
  const double bin_hz = epochs.sample_rate / static_cast<double>(epochs.epoch_len);
  const auto bins_per_band = scheme_bins(opt.scheme, bin_hz, n_bins);

  const std::size_t section_epochs = static_cast<std::size_t>(opt.section_epochs);
  const std::size_t n_blocks = n_epochs / section_epochs;
  const std::size_t eval_used =
      n_epochs >= static_cast<std::size_t>(opt.min_eval_epochs)
          ? std::min<std::size_t>(n_epochs, static_cast<std::size_t>(opt.eval_epochs))
          : 0;
  out.eval_epochs_used = eval_used;
  out.eval_short = eval_used > 0 && eval_used < static_cast<std::size_t>(opt.eval_epochs);

  CrossSpectraAccumulator section_acc(p, n_bins);
  CrossSpectraAccumulator eval_acc(p, n_bins);
  const std::size_t n_bp = opt.scheme.size() * p;
  std::vector<double> section_bp_sum(n_bp, 0.0), eval_bp_sum(n_bp, 0.0), epoch_bp(n_bp);
  std::vector<std::complex<double>> spectra(p * n_bins);
  std::vector<const double*> chans(p);

  auto finish_bp = [&](const std::vector<double>& sums, std::size_t count) {
    std::vector<double> v(n_bp);
    for (std::size_t i = 0; i < n_bp; ++i)
      v[i] = std::log1p(sums[i] / static_cast<double>(count));
    return v;
  };

  const std::size_t active = std::max<std::size_t>(n_blocks * section_epochs, eval_used);
  for (std::size_t e = 0; e < active; ++e) {
    for (std::size_t ch = 0; ch < p; ++ch) chans[ch] = epochs.epoch_channel(e, ch);
    engine.transform(chans, spectra.data());
    epoch_band_power(spectra.data(), p, n_bins, bins_per_band, epoch_bp.data());

    if (e < eval_used) {
      eval_acc.add_epoch(spectra.data());
      for (std::size_t i = 0; i < n_bp; ++i) eval_bp_sum[i] += epoch_bp[i];
    }
    if (e / section_epochs < n_blocks) {
      section_acc.add_epoch(spectra.data());
      for (std::size_t i = 0; i < n_bp; ++i) section_bp_sum[i] += epoch_bp[i];
      if ((e + 1) % section_epochs == 0) {
        const CoherenceTensor coh = section_acc.finalize(bin_hz);
        out.section_conn.push_back(band_average(coh, opt.scheme, montage).values);
        out.section_bp.push_back(finish_bp(section_bp_sum, section_epochs));
        section_acc.reset();
        std::fill(section_bp_sum.begin(), section_bp_sum.end(), 0.0);
      }
    }
  }

  if (eval_used >= 2) {
    const CoherenceTensor coh = eval_acc.finalize(bin_hz);
    out.eval_conn = band_average(coh, opt.scheme, montage).values;
    out.eval_bp = finish_bp(eval_bp_sum, eval_used);
  }
  return out;
}

inline CohortFeatures extract_cohort(const Cohort& cohort, const RecordingProvider& provider,
                                     const ExtractOptions& opt, unsigned jobs = 1) {
  CohortFeatures out;
  out.montage = cohort.montage;
  out.options = opt;
  out.conn_names = connectivity_feature_names(cohort.montage, opt.scheme);
  out.bp_names = band_power_feature_names(cohort.montage, opt.scheme);
  out.subjects.resize(cohort.entries.size());

  parallel_for(cohort.entries.size(), jobs, [&](std::size_t i) {
    Recording rec = provider(cohort.entries[i]);
    rec.subject_id = cohort.entries[i].subject_id;
    rec.sex = cohort.entries[i].sex;
    out.subjects[i] = extract_subject(rec, cohort.montage, opt);
  });

  for (const auto& s : out.subjects) {
    if (s.excluded)
      out.warnings.push_back(s.subject_id + ": excluded (" + s.note + ")");
    else if (s.eval_epochs_used == 0)
      out.warnings.push_back(s.subject_id + ": no eval row (fewer than " +
                             std::to_string(opt.min_eval_epochs) + " epochs)");
    else if (s.eval_short)
      out.warnings.push_back(s.subject_id + ": eval window short (" +
                             std::to_string(s.eval_epochs_used) + " epochs)");
  }
  return out;
}

inline std::string section_id_string(std::size_t block) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%04zu", block);
  return std::string(buf);
}

// One row per full section block of every usable subject, sorted by
// (subject_id, section_id).
inline FeatureTable section_table(const CohortFeatures& features, FeatureKind kind) {
  FeatureTable table;
  table.schema = features.schema(kind);
  for (const auto& s : features.subjects) {
    if (s.excluded) continue;
    const auto& sections = kind == FeatureKind::connectivity ? s.section_conn : s.section_bp;
    for (std::size_t b = 0; b < sections.size(); ++b) {
      FeatureRow row;
      row.subject_id = s.subject_id;
      row.section_id = section_id_string(b);
      row.label = s.sex == Sex::female ? 1 : 0;
      row.values = sections[b];
      table.rows.push_back(std::move(row));
    }
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
    return std::tie(a.subject_id, a.section_id) < std::tie(b.subject_id, b.section_id);
  });
  return table;
}

struct TableBuildReport {
  std::vector<std::string> shortfalls;
  std::vector<std::string> exclusions;
};

// The class-rebalancing augmentation: per subject, draw min(quota, available)
// section blocks without replacement from a stream keyed by (seed, subject_id),
// so the result does not depend on subject iteration order.
inline FeatureTable select_training_rows(const CohortFeatures& features, FeatureKind kind,
                                         const Quotas& quotas, std::uint64_t seed,
                                         SectionPolicy policy = SectionPolicy::random,
                                         TableBuildReport* report = nullptr,
                                         const std::set<std::string>* include_subjects = nullptr) {
  quotas.validate();
  FeatureTable table;
  table.schema = features.schema(kind);
  for (const auto& s : features.subjects) {
    if (include_subjects && !include_subjects->count(s.subject_id)) continue;
    const auto& sections = kind == FeatureKind::connectivity ? s.section_conn : s.section_bp;
    if (s.excluded || sections.empty()) {
      if (report)
        report->exclusions.push_back(s.subject_id + ": no full sections");
      continue;
    }
    const int quota = quotas.quota_for(s.sex);
    const std::size_t take = std::min<std::size_t>(sections.size(), static_cast<std::size_t>(quota));
    std::vector<std::size_t> chosen;
    if (policy == SectionPolicy::head) {
      for (std::size_t b = 0; b < take; ++b) chosen.push_back(b);
    } else {
      Rng rng(mix_keys(seed, fnv1a64(s.subject_id)));
      chosen = rng.sample_without_replacement(sections.size(), take);
      std::sort(chosen.begin(), chosen.end());
    }
    if (take < static_cast<std::size_t>(quota) && report)
      report->shortfalls.push_back(s.subject_id + ": wanted " + std::to_string(quota) +
                                   " sections, had " + std::to_string(sections.size()));
    for (std::size_t b : chosen) {
      FeatureRow row;
      row.subject_id = s.subject_id;
      row.section_id = section_id_string(b);
      row.label = s.sex == Sex::female ? 1 : 0;
      row.values = sections[b];
      table.rows.push_back(std::move(row));
    }
  }
  require(!table.rows.empty(), errc::no_sections, "no subject contributed any training section");
  std::sort(table.rows.begin(), table.rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
    return std::tie(a.subject_id, a.section_id) < std::tie(b.subject_id, b.section_id);
  });
  return table;
}

// One row per subject from its first min(eval_epochs, available) epochs;
// subjects with fewer than min_eval_epochs are excluded with a warning.
inline FeatureTable eval_table(const CohortFeatures& features, FeatureKind kind,
                               TableBuildReport* report = nullptr) {
  FeatureTable table;
  table.schema = features.schema(kind);
  for (const auto& s : features.subjects) {
    const auto& values = kind == FeatureKind::connectivity ? s.eval_conn : s.eval_bp;
    if (s.excluded || values.empty()) {
      if (report) report->exclusions.push_back(s.subject_id + ": too few epochs for eval row");
      continue;
    }
    if (s.eval_short && report)
      report->shortfalls.push_back(s.subject_id + ": eval row from only " +
                                   std::to_string(s.eval_epochs_used) + " epochs");
    FeatureRow row;
    row.subject_id = s.subject_id;
    row.section_id = "eval";
    row.label = s.sex == Sex::female ? 1 : 0;
    row.values = values;
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const FeatureRow& a, const FeatureRow& b) { return a.subject_id < b.subject_id; });
  return table;
}

// Spec-level convenience: extract + select in one call.
inline FeatureTable build_training_table(const Cohort& cohort, const RecordingProvider& provider,
                                         const Quotas& quotas, const BandScheme& scheme,
                                         std::uint64_t seed,
                                         SectionPolicy policy = SectionPolicy::random,
                                         TableBuildReport* report = nullptr, unsigned jobs = 1) {
  ExtractOptions opt;
  opt.scheme = scheme;
  opt.section_epochs = quotas.section_epochs;
  CohortFeatures features = extract_cohort(cohort, provider, opt, jobs);
  return select_training_rows(features, FeatureKind::connectivity, quotas, seed, policy, report);
}

inline FeatureTable build_eval_table(const Cohort& cohort, const RecordingProvider& provider,
                                     int eval_epochs, const BandScheme& scheme,
                                     TableBuildReport* report = nullptr, unsigned jobs = 1) {
  ExtractOptions opt;
  opt.scheme = scheme;
  opt.eval_epochs = eval_epochs;
  CohortFeatures features = extract_cohort(cohort, provider, opt, jobs);
  return eval_table(features, FeatureKind::connectivity, report);
}

// Columns reordered/reduced to the subset, rows untouched.
inline FeatureTable project(const FeatureTable& table, const FeatureSubset& subset) {
  std::vector<std::size_t> indices;
  indices.reserve(subset.names.size());
  for (const auto& name : subset.names) {
    auto it = std::find(table.schema.begin(), table.schema.end(), name);
    require(it != table.schema.end(), errc::unknown_feature, "feature '" + name + "' not in schema");
    indices.push_back(static_cast<std::size_t>(it - table.schema.begin()));
  }
  FeatureTable out;
  out.schema = subset.names;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    FeatureRow r;
    r.subject_id = row.subject_id;
    r.section_id = row.section_id;
    r.label = row.label;
    r.values.reserve(indices.size());
    for (std::size_t i : indices) r.values.push_back(row.values[i]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

inline FeatureTable filter_subjects(const FeatureTable& table,
                                    const std::vector<std::string>& subject_ids) {
  std::set<std::string> keep(subject_ids.begin(), subject_ids.end());
  FeatureTable out;
  out.schema = table.schema;
  for (const auto& row : table.rows)
    if (keep.count(row.subject_id)) out.rows.push_back(row);
  return out;
}

inline void save_feature_table(const FeatureTable& table, const std::string& path,
                               const std::string& meta_line = "") {
  FileWriter out(path);
  if (!meta_line.empty()) out.line(meta_line);
  std::string header = "subject_id,section_id,label";
  for (const auto& name : table.schema) {
    header += ',';
    header += name;
  }
  out.line(header);
  std::string row;
  for (const auto& r : table.rows) {
    row = r.subject_id + ',' + r.section_id + ',' + std::to_string(r.label);
    for (double v : r.values) {
      row += ',';
      row += format_double(v);
    }
    out.line(row);
  }
  out.close();
}

inline FeatureTable load_feature_table(const std::string& path) {
  CsvContent csv = read_csv_file(path);
  require(!csv.lines.empty(), errc::empty_table, path + " has no header");
  const auto header = split_csv_line(csv.lines[0]);
  require(header.size() >= 4 && header[0] == "subject_id" && header[1] == "section_id" &&
              header[2] == "label",
          errc::empty_table, path + ": expected header subject_id,section_id,label,...");
  FeatureTable table;
  table.schema.assign(header.begin() + 3, header.end());
  for (std::size_t i = 1; i < csv.lines.size(); ++i) {
    if (csv.lines[i].empty()) continue;
    const auto fields = split_csv_line(csv.lines[i]);
    require(fields.size() == header.size(), errc::empty_table,
            path + " row " + std::to_string(i) + ": wrong field count");
    FeatureRow row;
    row.subject_id = fields[0];
    row.section_id = fields[1];
    row.label = static_cast<int>(parse_long(fields[2], errc::empty_table, path));
    row.values.reserve(table.schema.size());
    for (std::size_t c = 3; c < fields.size(); ++c)
      row.values.push_back(parse_double(fields[c], errc::non_numeric_sample, path));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace eegml

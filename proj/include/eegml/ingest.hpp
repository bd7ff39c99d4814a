#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "eegml/csv.hpp"
#include "eegml/error.hpp"

namespace eegml {

enum class Sex { female, male };

inline char sex_char(Sex s) { return s == Sex::female ? 'F' : 'M'; }

inline Sex parse_sex(std::string_view s) {
  if (s == "F" || s == "f") return Sex::female;
  if (s == "M" || s == "m") return Sex::male;
  fail(errc::bad_sex_label, "sex must be F or M, got '" + std::string(s) + "'");
}

struct Montage {
  std::vector<std::string> channels;

  static Montage standard_19() {
    return Montage{{"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz",
                    "C4", "T8", "P7", "P3", "Pz", "P4", "P8", "O1", "O2"}};
  }

  std::size_t size() const { return channels.size(); }

  int index_of(std::string_view name) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i] == name) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    require(channels.size() >= 2, errc::channel_mismatch, "montage needs at least 2 channels");
    std::set<std::string> seen(channels.begin(), channels.end());
    require(seen.size() == channels.size(), errc::channel_mismatch,
            "montage channel names must be unique");
  }
};

// One subject's multichannel signal, channels in montage order.
struct Recording {
  std::string subject_id;
  std::optional<Sex> sex;
  double sample_rate = 250.0;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::vector<double> data;  // channel-major: data[ch * n_samples + t]

  double& at(std::size_t ch, std::size_t t) { return data[ch * n_samples + t]; }
  double at(std::size_t ch, std::size_t t) const { return data[ch * n_samples + t]; }
  const double* channel(std::size_t ch) const { return data.data() + ch * n_samples; }
};

struct CohortEntry {
  std::string subject_id;
  Sex sex = Sex::female;
  std::string path;
};

struct Cohort {
  std::vector<CohortEntry> entries;
  Montage montage = Montage::standard_19();

  std::size_t count(Sex s) const {
    std::size_t n = 0;
    for (const auto& e : entries)
      if (e.sex == s) ++n;
    return n;
  }
};

struct EpochSet {
  std::string subject_id;
  std::size_t n_epochs = 0;
  std::size_t n_channels = 0;
  std::size_t epoch_len = 0;
  double sample_rate = 250.0;
  std::vector<double> data;  // [epoch][channel][sample]

  const double* epoch_channel(std::size_t e, std::size_t ch) const {
    return data.data() + (e * n_channels + ch) * epoch_len;
  }
  double* epoch_channel(std::size_t e, std::size_t ch) {
    return data.data() + (e * n_channels + ch) * epoch_len;
  }
};

// Manifest: CSV with header `subject_id,sex,path`. Relative recording paths
// are resolved against the manifest's directory.
inline Cohort load_cohort(const std::string& manifest_path, Montage montage = Montage::standard_19()) {
  montage.validate();
  CsvContent csv = read_csv_file(manifest_path);
  require(!csv.lines.empty(), errc::empty_manifest, manifest_path + " has no header row");
  const auto header = split_csv_line(csv.lines[0]);
  require(header.size() == 3 && header[0] == "subject_id" && header[1] == "sex" && header[2] == "path",
          errc::empty_manifest, manifest_path + ": expected header subject_id,sex,path");
  require(csv.lines.size() > 1, errc::empty_manifest, manifest_path + " lists no subjects");

  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  Cohort cohort;
  cohort.montage = std::move(montage);
  std::set<std::string> seen;
  for (std::size_t i = 1; i < csv.lines.size(); ++i) {
    if (csv.lines[i].empty()) continue;
    const auto fields = split_csv_line(csv.lines[i]);
    require(fields.size() == 3, errc::empty_manifest,
            manifest_path + " row " + std::to_string(i) + ": expected 3 fields");
    CohortEntry entry;
    entry.subject_id = fields[0];
    entry.sex = parse_sex(fields[1]);
    std::filesystem::path p(fields[2]);
    entry.path = p.is_absolute() ? p.string() : (base / p).string();
    require(seen.insert(entry.subject_id).second, errc::duplicate_subject,
            "duplicate subject_id '" + entry.subject_id + "'");
    cohort.entries.push_back(std::move(entry));
  }
  require(!cohort.entries.empty(), errc::empty_manifest, manifest_path + " lists no subjects");
  return cohort;
}

// Recording file: header row of channel names, optional `#rate=<Hz>` row,
// then one row of decimal floats per sample. Columns may appear in any
// order; data is normalized to montage order here.
inline Recording load_recording(const std::string& path, const Montage& montage,
                                double expected_rate = 250.0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::missing_file, "cannot open " + path);

  std::string line;
  std::vector<std::string> file_channels;
  // The first non-#eegml line is the channel header.
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (!line.empty() && line.rfind("#eegml", 0) == 0) continue;
    file_channels = split_csv_line(line);
    break;
  }
  require(!file_channels.empty(), errc::channel_mismatch, path + ": missing channel header");

  const std::size_t p = montage.size();
  require(file_channels.size() == p, errc::channel_mismatch,
          path + ": has " + std::to_string(file_channels.size()) + " channels, montage has " +
              std::to_string(p));
  // column_for[m] = file column holding montage channel m
  std::vector<std::size_t> column_for(p);
  for (std::size_t m = 0; m < p; ++m) {
    bool found = false;
    for (std::size_t c = 0; c < file_channels.size(); ++c) {
      if (file_channels[c] == montage.channels[m]) {
        column_for[m] = c;
        found = true;
        break;
      }
    }
    require(found, errc::channel_mismatch, path + ": missing channel " + montage.channels[m]);
  }

  Recording rec;
  rec.sample_rate = 250.0;
  rec.n_channels = p;

  std::vector<double> row(p);
  std::vector<std::vector<double>> columns(p);
  bool first_data_line = true;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    if (first_data_line && line.rfind("#rate=", 0) == 0) {
      rec.sample_rate = parse_double(line.substr(6), errc::rate_mismatch, path + " rate row");
      first_data_line = false;
      continue;
    }
    first_data_line = false;
    const auto fields = split_csv_line(line);
    require(fields.size() == p, errc::non_numeric_sample,
            path + ": sample row has " + std::to_string(fields.size()) + " fields");
    for (std::size_t c = 0; c < p; ++c)
      row[c] = parse_double(fields[c], errc::non_numeric_sample, path);
    for (std::size_t m = 0; m < p; ++m) columns[m].push_back(row[column_for[m]]);
  }

  require(rec.sample_rate > 0, errc::rate_mismatch, path + ": sample rate must be positive");
  if (expected_rate > 0) {
    require(rec.sample_rate == expected_rate, errc::rate_mismatch,
            path + ": rate " + format_double(rec.sample_rate) + " != expected " +
                format_double(expected_rate));
  }

  rec.n_samples = columns[0].size();
  rec.data.resize(p * rec.n_samples);
  for (std::size_t m = 0; m < p; ++m)
    std::copy(columns[m].begin(), columns[m].end(), rec.data.begin() + m * rec.n_samples);
  return rec;
}

inline void save_recording_csv(const Recording& rec, const Montage& montage,
                               const std::string& path, const std::string& meta_line = "") {
  FileWriter out(path);
  if (!meta_line.empty()) out.line(meta_line);
  std::string header;
  for (std::size_t m = 0; m < montage.size(); ++m) {
    if (m) header += ',';
    header += montage.channels[m];
  }
  out.line(header);
  out.line("#rate=" + format_double(rec.sample_rate));
  std::string row;
  for (std::size_t t = 0; t < rec.n_samples; ++t) {
    row.clear();
    for (std::size_t ch = 0; ch < rec.n_channels; ++ch) {
      if (ch) row += ',';
      row += format_double_fixed(rec.at(ch, t), 6);
    }
    out.line(row);
  }
  out.close();
}

struct EpochOptions {
  double epoch_seconds = 2.0;
  double discard_seconds = 5.0;
};

// Drops the initial discard window, then cuts consecutive non-overlapping
// epochs; a trailing partial epoch is dropped.
inline EpochSet segment_epochs(const Recording& rec, const EpochOptions& opt = {}) {
  const double rate = rec.sample_rate;
  const std::size_t discard = static_cast<std::size_t>(opt.discard_seconds * rate + 0.5);
  const std::size_t epoch_len = static_cast<std::size_t>(opt.epoch_seconds * rate + 0.5);
  require(epoch_len >= 2, errc::too_short, "epoch length must be at least 2 samples");
  require(rec.n_samples > discard + epoch_len, errc::too_short,
          rec.subject_id + ": " + std::to_string(rec.n_samples) + " samples is too short for " +
              format_double(opt.discard_seconds) + "s discard + one " +
              format_double(opt.epoch_seconds) + "s epoch");

  EpochSet out;
  out.subject_id = rec.subject_id;
  out.sample_rate = rate;
  out.n_channels = rec.n_channels;
  out.epoch_len = epoch_len;
  out.n_epochs = (rec.n_samples - discard) / epoch_len;
  out.data.resize(out.n_epochs * out.n_channels * epoch_len);
  for (std::size_t e = 0; e < out.n_epochs; ++e)
    for (std::size_t ch = 0; ch < out.n_channels; ++ch) {
      const double* src = rec.channel(ch) + discard + e * epoch_len;
      std::copy(src, src + epoch_len, out.epoch_channel(e, ch));
    }
  return out;
}

}  // namespace eegml

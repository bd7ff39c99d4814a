#pragma once

#include <stdexcept>
#include <string>

namespace eegml {

enum class errc {
  missing_file,
  io_failure,
  duplicate_subject,
  bad_sex_label,
  empty_manifest,
  channel_mismatch,
  rate_mismatch,
  non_numeric_sample,
  too_short,
  odd_epoch_length,
  single_epoch,
  empty_band,
  no_sections,
  too_few_epochs,
  unknown_feature,
  single_class,
  empty_table,
  non_finite_feature,
  schema_mismatch,
  wrong_kind,
  bad_k,
  empty_input,
  length_mismatch,
  cohort_too_small,
  subject_overlap,
  invalid_plant,
  negative_input,
  bad_args,
  config_invalid,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::missing_file: return "MissingFile";
    case errc::io_failure: return "IoFailure";
    case errc::duplicate_subject: return "DuplicateSubject";
    case errc::bad_sex_label: return "BadSexLabel";
    case errc::empty_manifest: return "EmptyManifest";
    case errc::channel_mismatch: return "ChannelMismatch";
    case errc::rate_mismatch: return "RateMismatch";
    case errc::non_numeric_sample: return "NonNumericSample";
    case errc::too_short: return "TooShort";
    case errc::odd_epoch_length: return "OddEpochLength";
    case errc::single_epoch: return "SingleEpoch";
    case errc::empty_band: return "EmptyBand";
    case errc::no_sections: return "NoSections";
    case errc::too_few_epochs: return "TooFewEpochs";
    case errc::unknown_feature: return "UnknownFeature";
    case errc::single_class: return "SingleClass";
    case errc::empty_table: return "EmptyTable";
    case errc::non_finite_feature: return "NonFiniteFeature";
    case errc::schema_mismatch: return "SchemaMismatch";
    case errc::wrong_kind: return "WrongKind";
    case errc::bad_k: return "BadK";
    case errc::empty_input: return "EmptyInput";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::cohort_too_small: return "CohortTooSmall";
    case errc::subject_overlap: return "SubjectOverlap";
    case errc::invalid_plant: return "InvalidPlant";
    case errc::negative_input: return "NegativeInput";
    case errc::bad_args: return "BadArgs";
    case errc::config_invalid: return "ConfigInvalid";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  errc code() const { return code_; }
  const char* code_name() const { return errc_name(code_); }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, errc code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace eegml

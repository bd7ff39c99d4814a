#pragma once

namespace eegml {

inline constexpr const char* version_string = "0.1.0";

// Bumped whenever any on-disk artifact layout changes.
inline constexpr int format_version = 1;

}  // namespace eegml

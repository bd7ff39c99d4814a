#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "eegml/error.hpp"

namespace eegml {

// Shortest decimal form that parses back to the same double. Used for every
// numeric artifact so that write -> read round-trips are bit-exact.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_double_fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

inline bool try_parse_double(std::string_view s, double& out) {
  // Tolerate surrounding spaces, reject trailing garbage.
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  if (b == e) return false;
  auto res = std::from_chars(s.data() + b, s.data() + e, out);
  return res.ec == std::errc() && res.ptr == s.data() + e;
}

inline double parse_double(std::string_view s, errc code, const std::string& context) {
  double v = 0.0;
  if (!try_parse_double(s, v)) fail(code, "not a number: '" + std::string(s) + "' (" + context + ")");
  return v;
}

inline long parse_long(std::string_view s, errc code, const std::string& context) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  long v = 0;
  auto res = std::from_chars(s.data() + b, s.data() + e, v);
  if (res.ec != std::errc() || res.ptr != s.data() + e || b == e)
    fail(code, "not an integer: '" + std::string(s) + "' (" + context + ")");
  return v;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

// Reads all lines, accepting LF or CRLF. Lines beginning with '#' carry
// artifact metadata and are returned separately.
struct CsvContent {
  std::vector<std::string> meta;
  std::vector<std::string> lines;
};

inline CsvContent read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::missing_file, "cannot open " + path);
  CsvContent content;
  std::string line;
  bool in_preamble = true;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (in_preamble && !line.empty() && line[0] == '#') {
      content.meta.push_back(line);
      continue;
    }
    in_preamble = false;
    content.lines.push_back(line);
  }
  // Drop trailing blank lines (a final newline is not a row).
  while (!content.lines.empty() && content.lines.back().empty()) content.lines.pop_back();
  return content;
}

class FileWriter {
 public:
  explicit FileWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) fail(errc::io_failure, "cannot write " + path);
  }

  void line(const std::string& s) {
    out_ << s << '\n';
    if (!out_) fail(errc::io_failure, "write failed for " + path_);
  }

  std::ostream& stream() { return out_; }

  void close() {
    out_.close();
    if (out_.fail()) fail(errc::io_failure, "close failed for " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace eegml

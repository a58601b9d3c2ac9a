#pragma once

// Tab-separated record IO. All on-disk text artifacts (query logs, pools,
// profiles, metrics) are TSV with '\n' line ends and '#' comment lines, so the
// same seed yields byte-identical files.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chaff::tsv {

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (true) {
    std::size_t tab = line.find('\t', i);
    if (tab == std::string_view::npos) {
      out.emplace_back(line.substr(i));
      break;
    }
    out.emplace_back(line.substr(i, tab - i));
    i = tab + 1;
  }
  return out;
}

inline std::string join_fields(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back('\t');
    out += fields[i];
  }
  return out;
}

// Full-precision round-trippable double; integral values render without exponent.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == x) {
    // Prefer the shortest representation that still round-trips.
    for (int prec = 1; prec <= 16; ++prec) {
      char s[64];
      std::snprintf(s, sizeof s, "%.*g", prec, x);
      double b2 = 0.0;
      std::sscanf(s, "%lf", &b2);
      if (b2 == x) return s;
    }
  }
  return buf;
}

inline double parse_double(std::string_view s) {
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end == tmp.c_str() || *end != '\0') throw std::invalid_argument("parse_double: bad number: " + tmp);
  return v;
}

inline long long parse_int(std::string_view s) {
  std::string tmp(s);
  char* end = nullptr;
  long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (end == tmp.c_str() || *end != '\0') throw std::invalid_argument("parse_int: bad integer: " + tmp);
  return v;
}

struct Document {
  std::vector<std::string> comments;  // leading '#' lines, kept verbatim
  std::vector<std::vector<std::string>> rows;
};

inline Document read_document(std::istream& in) {
  Document doc;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && !line.empty() && line[0] == '#') {
      doc.comments.push_back(line);
      continue;
    }
    header = false;
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    doc.rows.push_back(split_fields(line));
  }
  return doc;
}

inline Document read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_document(in);
}

inline void write_document(std::ostream& out, const Document& doc) {
  for (auto& c : doc.comments) out << c << '\n';
  for (auto& row : doc.rows) out << join_fields(row) << '\n';
}

inline void write_file(const std::string& path, const Document& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_document(out, doc);
}

}  // namespace chaff::tsv

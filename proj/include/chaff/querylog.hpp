#pragma once

// The query-log line format every tool exchanges: one search per line,
// ISO-8601 timestamp, session key, query text, clicked ranks. Ground truth
// lives in a separate sidecar file with an extra origin column; readers meant
// for adversary input refuse sidecar files outright.

#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/query.hpp"
#include "chaff/timeutil.hpp"
#include "chaff/tsv.hpp"

namespace chaff::querylog {

inline constexpr std::string_view kLogHeader = "# chaff query log v1";
inline constexpr std::string_view kTruthHeader = "# chaff ground truth v1";

struct LogRecord {
  double timestamp = 0.0;
  std::string session_key;
  std::string text;
  std::vector<int> clicked_ranks;
  QueryOrigin origin = QueryOrigin::user;  // meaningful only in truth files
};

inline std::string ranks_csv(const std::vector<int>& ranks) {
  std::string out;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ranks[i]);
  }
  return out;
}

inline std::vector<int> parse_ranks_csv(const std::string& csv) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < csv.size()) {
    std::size_t comma = csv.find(',', i);
    if (comma == std::string::npos) comma = csv.size();
    out.push_back(static_cast<int>(tsv::parse_int(csv.substr(i, comma - i))));
    i = comma + 1;
  }
  return out;
}

inline void write_query_log(const std::string& path, const std::vector<LogRecord>& records) {
  tsv::Document doc;
  doc.comments = {std::string(kLogHeader)};
  for (auto& r : records)
    doc.rows.push_back(
        {timeutil::format_iso8601(r.timestamp), r.session_key, r.text, ranks_csv(r.clicked_ranks)});
  tsv::write_file(path, doc);
}

inline void write_truth_log(const std::string& path, const std::vector<LogRecord>& records) {
  tsv::Document doc;
  doc.comments = {std::string(kTruthHeader)};
  for (auto& r : records)
    doc.rows.push_back({timeutil::format_iso8601(r.timestamp), r.session_key, r.text,
                        ranks_csv(r.clicked_ranks), origin_name(r.origin)});
  tsv::write_file(path, doc);
}

// allow_truth gates the 5-column sidecar: adversary-facing callers keep the
// default and get an error instead of ground truth.
inline std::vector<LogRecord> read_query_log(const std::string& path, bool allow_truth = false) {
  tsv::Document doc = tsv::read_file(path);
  bool truth = !doc.comments.empty() && doc.comments.front() == kTruthHeader;
  if (truth && !allow_truth)
    throw std::runtime_error(path + " is a ground-truth sidecar; this command takes the visible query log");
  std::vector<LogRecord> out;
  for (auto& row : doc.rows) {
    std::size_t want = truth ? 5u : 4u;
    if (row.size() != want)
      throw std::runtime_error("query log " + path + ": expected " + std::to_string(want) + " fields");
    LogRecord r;
    r.timestamp = timeutil::parse_iso8601(row[0]);
    r.session_key = row[1];
    r.text = row[2];
    r.clicked_ranks = parse_ranks_csv(row[3]);
    if (truth) {
      if (row[4] == "user")
        r.origin = QueryOrigin::user;
      else if (row[4] == "decoy")
        r.origin = QueryOrigin::decoy;
      else
        throw std::runtime_error("query log " + path + ": unknown origin " + row[4]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace chaff::querylog

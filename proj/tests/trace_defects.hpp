#pragma once

// Single-channel trace mutations for auditor soundness tests. Each planter
// breaks exactly one side channel on exactly one search and returns the audit
// key of that search; everything else about the run stays believable.

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/audit.hpp"
#include "chaff/mockengine.hpp"
#include "chaff/sidechannel.hpp"

namespace chaff::defects {

inline std::string key_of(const sidechannel::SearchTrace& tr) {
  return audit::search_key(mockengine::session_key_of(tr.headers), tr.query.timestamp, tr.query.text);
}

inline std::size_t index_in_session(const std::vector<sidechannel::SearchTrace>& traces, std::size_t i) {
  std::size_t n = 0;
  std::string key = mockengine::session_key_of(traces[i].headers);
  for (std::size_t j = 0; j < traces.size(); ++j)
    if (mockengine::session_key_of(traces[j].headers) == key &&
        traces[j].query.timestamp < traces[i].query.timestamp)
      ++n;
  return n;
}

// Not first of its session, so mutating it cannot move a session baseline.
inline std::size_t pick_mid_session(const std::vector<sidechannel::SearchTrace>& traces) {
  for (std::size_t i = 0; i < traces.size(); ++i)
    if (index_in_session(traces, i) >= 2) return i;
  throw std::logic_error("fixture has no session with three searches");
}

// The globally last search drifts two hours into dead air. Its predecessor
// keeps a close earlier neighbor, so only the moved search becomes isolated.
inline std::string plant_timing(std::vector<sidechannel::SearchTrace>& traces) {
  std::size_t last = 0;
  for (std::size_t i = 1; i < traces.size(); ++i)
    if (traces[i].query.timestamp > traces[last].query.timestamp) last = i;
  traces[last].query.timestamp += 7200.0;
  return key_of(traces[last]);
}

inline std::string plant_headers(std::vector<sidechannel::SearchTrace>& traces) {
  std::size_t i = pick_mid_session(traces);
  traces[i].headers["accept-language"] = "de-DE,de;q=0.8";
  return key_of(traces[i]);
}

inline std::string plant_referrer(std::vector<sidechannel::SearchTrace>& traces) {
  std::size_t i = pick_mid_session(traces);
  traces[i].headers["referer"] = "http://elsewhere.example/landing";
  return key_of(traces[i]);
}

inline std::string plant_subresources(std::vector<sidechannel::SearchTrace>& traces) {
  std::size_t i = pick_mid_session(traces);
  if (traces[i].subresources.empty()) throw std::logic_error("fixture trace has no subresources");
  traces[i].subresources.pop_back();
  return key_of(traces[i]);
}

// Needs a trace whose cache is still warm, i.e. anything past the first
// search of its session under a long TTL.
inline std::string plant_favicon(std::vector<sidechannel::SearchTrace>& traces) {
  std::size_t i = pick_mid_session(traces);
  if (traces[i].favicon_fetched) throw std::logic_error("fixture trace already fetches the favicon");
  traces[i].favicon_fetched = true;
  return key_of(traces[i]);
}

inline std::string plant_suggestions(std::vector<sidechannel::SearchTrace>& traces) {
  std::size_t i = pick_mid_session(traces);
  if (traces[i].suggestion_prefixes.empty()) throw std::logic_error("fixture trace has no prefixes");
  traces[i].suggestion_prefixes.pop_back();
  return key_of(traces[i]);
}

inline std::string plant_clicks(std::vector<sidechannel::SearchTrace>& traces) {
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].clicks.empty() || index_in_session(traces, i) < 2) continue;
    traces[i].clicks[0].content_fetched = true;
    return key_of(traces[i]);
  }
  throw std::logic_error("fixture has no clicked mid-session trace");
}

}  // namespace chaff::defects

#pragma once

// Expands a scheduled query into its full HTTP footprint. User and decoy
// traces run through the same construction; the only differences a trace can
// carry are its origin label and the click sampling seed. Referrer chains are
// kept per origin: a decoy's referrer only ever points at a page a decoy
// action produced, never at the user's navigation.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/engine_template.hpp"
#include "chaff/query.hpp"
#include "chaff/rng.hpp"
#include "chaff/text.hpp"

namespace chaff::sidechannel {

struct Click {
  int rank = 0;
  std::string url;
  bool content_fetched = false;
  bool sponsored = false;

  friend bool operator==(const Click&, const Click&) = default;
};

struct SearchTrace {
  Query query;
  std::string request_url;
  std::map<std::string, std::string> headers;  // lowercase names; no "referer" key on cold start
  std::vector<std::string> subresources;
  bool favicon_fetched = false;
  std::vector<std::string> suggestion_prefixes;
  std::vector<std::string> interaction_events;
  std::vector<Click> clicks;
};

struct FaviconCache {
  std::map<std::string, double> stored_at;  // host -> last fetch time

  // True when the icon must be downloaded; a hit inside the validity window
  // is served from cache. Fetching refreshes the entry.
  bool fetch(const std::string& host, double now, long long ttl_seconds) {
    auto it = stored_at.find(host);
    if (it != stored_at.end() && now - it->second < static_cast<double>(ttl_seconds)) return false;
    stored_at[host] = now;
    return true;
  }
};

struct SessionState {
  std::string session_key;
  std::string host;
  std::map<std::string, std::string> headers;  // browser identity incl. cookie
  FaviconCache favicon;
  std::string last_url[2];  // per-origin referrer chain, indexed by QueryOrigin

  std::string& chain(QueryOrigin o) { return last_url[o == QueryOrigin::user ? 0 : 1]; }
  const std::string& chain(QueryOrigin o) const { return last_url[o == QueryOrigin::user ? 0 : 1]; }
};

inline SessionState make_session(std::string key, std::string host) {
  SessionState s;
  s.headers = {
      {"user-agent", "Mozilla/5.0 (X11; Linux x86_64) Gecko/20100101 Firefox/115.0"},
      {"accept-language", "en-US,en;q=0.9"},
      {"cookie", "sid=" + key},
  };
  s.session_key = std::move(key);
  s.host = std::move(host);
  return s;
}

// Last page this origin's actions landed on: a result page after a plain
// search, the clicked target after a click-through. Empty before the first
// action.
inline std::string compute_referrer(const SessionState& session, const Query& current) {
  return session.chain(current.origin);
}

inline SearchTrace synthesize_trace(const Query& query, const engine::EngineTemplate& tmpl,
                                    const SessionState& session) {
  tmpl.validate();
  SearchTrace trace;
  trace.query = query;
  trace.request_url = engine::search_url(tmpl, session.host, query.text);
  trace.headers = session.headers;
  std::string ref = compute_referrer(session, query);
  if (!ref.empty()) trace.headers["referer"] = ref;
  for (auto& path : tmpl.resources)
    trace.subresources.push_back(engine::resource_url(tmpl, session.host, path));
  if (!tmpl.suggest_path.empty()) {
    std::size_t len = codepoint_count(query.text);
    for (std::size_t n = static_cast<std::size_t>(tmpl.suggest_min_chars); n <= len; ++n)
      trace.suggestion_prefixes.push_back(codepoint_prefix(query.text, n));
  }
  trace.interaction_events = tmpl.monitored_events;
  return trace;
}

struct ClickModel {
  double rate = 0.05;
  double zipf_s = 1.5;
  int top_n = 10;
};

// Maybe appends one organic click. Sponsored slots are never clicked and the
// clicked page is never downloaded, for either origin.
inline void simulate_clicks(SearchTrace& trace, const engine::EngineTemplate& tmpl,
                            const std::string& host, const ClickModel& model, std::uint64_t seed) {
  if (model.rate < 0.0 || model.rate > 1.0) throw std::invalid_argument("simulate_clicks: rate out of [0,1]");
  if (model.rate == 0.0) return;
  Rng rng(seed);
  if (rng.next_double() >= model.rate) return;
  int n = std::min(model.top_n, tmpl.result_count);
  if (n <= 0) return;
  int rank = static_cast<int>(zipf_rank(rng, static_cast<std::size_t>(n), model.zipf_s));
  trace.clicks.push_back({rank, engine::result_url(tmpl, host, trace.query.text, rank), false, false});
}

// Advance the origin's referrer chain once the trace is final.
inline void observe_trace(SessionState& session, const SearchTrace& trace) {
  session.chain(trace.query.origin) =
      trace.clicks.empty() ? trace.request_url : trace.clicks.back().url;
}

// The full per-query pipeline in the required order: synthesis, favicon
// consult, click sampling, chain advance.
inline SearchTrace build_trace(const Query& query, const engine::EngineTemplate& tmpl,
                               SessionState& session, const ClickModel& model, std::uint64_t seed) {
  SearchTrace trace = synthesize_trace(query, tmpl, session);
  trace.favicon_fetched = session.favicon.fetch(session.host, query.timestamp, tmpl.favicon_ttl_seconds);
  simulate_clicks(trace, tmpl, session.host, model, seed);
  observe_trace(session, trace);
  return trace;
}

}  // namespace chaff::sidechannel

#pragma once

// Side-channel auditor. Replays judge the engine request log the way a
// traffic analyst would: without origin labels, only with the engine template
// and what actually crossed the wire. Every check below flags behavior a
// scripted client exhibits and a real browser does not.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/engine_template.hpp"
#include "chaff/mockengine.hpp"
#include "chaff/sidechannel.hpp"
#include "chaff/text.hpp"
#include "chaff/tsv.hpp"

namespace chaff::audit {

inline constexpr std::array<std::string_view, 7> kChannels = {
    "timing", "headers", "referrer", "subresources", "favicon", "suggestions", "clicks"};

// Gaps this long on both sides make a search look machine-injected rather
// than part of anything a person was doing at the keyboard.
inline constexpr double kIsolationSeconds = 1800.0;
inline constexpr double kSuggestLookback = 45.0;
inline constexpr double kFootprintWindow = 60.0;

struct Finding {
  std::string key;  // search_key of the offending search
  std::string detail;
};

struct ChannelReport {
  std::vector<Finding> findings;
  bool clean() const { return findings.empty(); }
  std::vector<std::string> flagged_keys() const {
    std::vector<std::string> out;
    for (auto& f : findings) out.push_back(f.key);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

struct AuditReport {
  std::map<std::string, ChannelReport> channels;
  std::size_t total_flags() const {
    std::size_t n = 0;
    for (auto& [name, ch] : channels) n += ch.findings.size();
    return n;
  }
  bool clean() const { return total_flags() == 0; }
};

inline std::string search_key(const std::string& session, double t, const std::string& text) {
  return session + "\t" + tsv::format_double(t) + "\t" + text;
}

namespace detail {

struct SearchEntry {
  std::size_t log_index = 0;
  double t = 0.0;
  std::string session;
  std::string text;
  std::string key;
};

}  // namespace detail

// log: everything the engine served, in arrival order. traces: the client's
// own record of the same run; used only to confirm both sides describe the
// same set of searches. Flags never consult trace origin labels.
inline AuditReport audit(const std::vector<mockengine::RequestLogEntry>& log,
                         const std::vector<sidechannel::SearchTrace>& traces,
                         const engine::EngineTemplate& tmpl, const std::string& host) {
  tmpl.validate();
  const std::string search_param = engine::search_param(tmpl);
  const std::string origin_prefix = "http://" + host;

  std::vector<detail::SearchEntry> searches;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].endpoint != mockengine::Endpoint::search) continue;
    detail::SearchEntry s;
    s.log_index = i;
    s.t = log[i].timestamp;
    s.session = log[i].session_key;
    s.text = mockengine::Engine::param_of(log[i], search_param);
    s.key = search_key(s.session, s.t, s.text);
    searches.push_back(std::move(s));
  }

  {
    std::vector<std::string> from_log, from_traces;
    for (auto& s : searches) from_log.push_back(s.key);
    for (auto& tr : traces)
      from_traces.push_back(
          search_key(mockengine::session_key_of(tr.headers), tr.query.timestamp, tr.query.text));
    std::sort(from_log.begin(), from_log.end());
    std::sort(from_traces.begin(), from_traces.end());
    if (from_log != from_traces)
      throw std::runtime_error("audit: request log and traces describe different searches (" +
                               std::to_string(from_log.size()) + " logged vs " +
                               std::to_string(from_traces.size()) + " traced)");
  }

  AuditReport report;
  for (auto name : kChannels) report.channels[std::string(name)] = {};

  std::map<std::string, std::vector<std::size_t>> by_session;  // indices into searches
  for (std::size_t i = 0; i < searches.size(); ++i) by_session[searches[i].session].push_back(i);
  for (auto& [key, idx] : by_session)
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return searches[a].t < searches[b].t; });

  constexpr double kInf = std::numeric_limits<double>::infinity();

  // timing: a search nobody led up to and nobody followed up on.
  {
    auto& ch = report.channels["timing"];
    for (auto& [key, idx] : by_session) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double prev = i == 0 ? kInf : searches[idx[i]].t - searches[idx[i - 1]].t;
        double next = i + 1 == idx.size() ? kInf : searches[idx[i + 1]].t - searches[idx[i]].t;
        if (prev >= kIsolationSeconds && next >= kIsolationSeconds)
          ch.findings.push_back({searches[idx[i]].key,
                                 "isolated search, nearest neighbors " + tsv::format_double(prev) +
                                     "s before and " + tsv::format_double(next) + "s after"});
      }
    }
  }

  // headers: one browser, one header set. The first search of a session fixes
  // the baseline; later searches must repeat it exactly.
  {
    auto& ch = report.channels["headers"];
    auto value_of = [](const std::map<std::string, std::string>& headers, const std::string& name) {
      auto it = headers.find(name);
      return it == headers.end() ? std::string() : it->second;
    };
    for (auto& [key, idx] : by_session) {
      if (idx.empty()) continue;
      const auto& base = log[searches[idx[0]].log_index].headers;
      for (std::size_t i = 1; i < idx.size(); ++i) {
        const auto& here = log[searches[idx[i]].log_index].headers;
        for (auto& name : tmpl.audited_headers) {
          std::string want = value_of(base, name), got = value_of(here, name);
          if (want != got)
            ch.findings.push_back({searches[idx[i]].key,
                                   name + " changed mid-session: \"" + want + "\" -> \"" + got + "\""});
        }
      }
    }
  }

  // referrer: a Referer names a page this session was actually served
  // earlier. Serves accrue in arrival order: result pages and click targets.
  {
    auto& ch = report.channels["referrer"];
    std::map<std::string, std::set<std::string>> served;
    for (auto& e : log) {
      auto ref = e.headers.find("referer");
      if (ref != e.headers.end() && !ref->second.empty() && !served[e.session_key].count(ref->second)) {
        std::string what = e.endpoint == mockengine::Endpoint::search
                               ? mockengine::Engine::param_of(e, search_param)
                               : e.url;
        ch.findings.push_back({search_key(e.session_key, e.timestamp, what),
                               "referrer " + ref->second + " was never served to this session"});
      }
      if (e.endpoint == mockengine::Endpoint::search) {
        served[e.session_key].insert(e.url);
      } else if (e.endpoint == mockengine::Endpoint::click_redirect) {
        std::string to = mockengine::Engine::param_of(e, "to");
        if (!to.empty()) served[e.session_key].insert(to);
      }
    }
  }

  // The footprint checks share one window: everything a result page triggers
  // lands after the search and before the session's next search (or 60s).
  auto window_end = [&](const std::vector<std::size_t>& idx, std::size_t i) {
    double end = searches[idx[i]].t + kFootprintWindow;
    if (i + 1 < idx.size()) end = std::min(end, searches[idx[i + 1]].t);
    return end;
  };

  // subresources: the page names its resources; a real client fetches all of
  // them every time.
  {
    auto& ch = report.channels["subresources"];
    std::map<std::string, std::vector<std::pair<double, const std::string*>>> fetched;
    for (auto& e : log)
      if (e.endpoint == mockengine::Endpoint::resource)
        fetched[e.session_key].emplace_back(e.timestamp, &e.url);
    for (auto& [key, idx] : by_session) {
      auto& got = fetched[key];
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double t = searches[idx[i]].t, end = window_end(idx, i);
        for (auto& res : tmpl.resources) {
          std::string want = engine::resource_url(tmpl, host, res);
          bool seen = std::any_of(got.begin(), got.end(), [&](auto& p) {
            return p.first > t && p.first < end && *p.second == want;
          });
          if (!seen)
            ch.findings.push_back({searches[idx[i]].key, "result page resource " + res + " never fetched"});
        }
      }
    }
  }

  // favicon: fetch exactly when a cold or expired cache says to. The mirror
  // cache keys refreshes to the search time, same as a client loading the page.
  {
    auto& ch = report.channels["favicon"];
    std::map<std::string, std::vector<double>> fetches;
    for (auto& e : log)
      if (e.endpoint == mockengine::Endpoint::favicon) fetches[e.session_key].push_back(e.timestamp);
    for (auto& [key, idx] : by_session) {
      auto& got = fetches[key];
      double last_fetch = -kInf;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double t = searches[idx[i]].t, end = window_end(idx, i);
        bool expected = !(t - last_fetch < static_cast<double>(tmpl.favicon_ttl_seconds));
        bool observed =
            std::any_of(got.begin(), got.end(), [&](double ft) { return ft > t && ft < end; });
        if (expected != observed)
          ch.findings.push_back({searches[idx[i]].key,
                                 expected ? "favicon cache expired but no fetch followed"
                                          : "favicon fetched while the cached copy was still valid"});
        if (expected) last_fetch = t;
      }
    }
  }

  // suggestions: typing emits prefix lookups. Every prefix of the final text
  // from the minimum length up must appear shortly before the search.
  {
    auto& ch = report.channels["suggestions"];
    if (!tmpl.suggest_path.empty()) {
      std::map<std::string, std::vector<std::pair<double, std::string>>> asked;
      for (auto& e : log)
        if (e.endpoint == mockengine::Endpoint::suggest)
          asked[e.session_key].emplace_back(e.timestamp, mockengine::Engine::param_of(e, "q"));
      for (auto& [key, idx] : by_session) {
        auto& got = asked[key];
        for (std::size_t i : idx) {
          double t = searches[i].t;
          std::size_t len = codepoint_count(searches[i].text);
          for (std::size_t k = static_cast<std::size_t>(tmpl.suggest_min_chars); k <= len; ++k) {
            std::string prefix = codepoint_prefix(searches[i].text, k);
            bool seen = std::any_of(got.begin(), got.end(), [&](auto& p) {
              return p.first >= t - kSuggestLookback && p.first < t && p.second == prefix;
            });
            if (!seen)
              ch.findings.push_back({searches[i].key, "no suggestion lookup for prefix \"" + prefix + "\""});
          }
        }
      }
    }
  }

  // clicks: every click names a rank the page really showed, lands on that
  // rank's target, never on an ad, and result pages themselves are the only
  // content this host serves to a searcher.
  {
    auto& ch = report.channels["clicks"];
    std::map<std::string, std::vector<const mockengine::RequestLogEntry*>> follows;
    for (auto& e : log)
      if (e.endpoint == mockengine::Endpoint::click_redirect ||
          (e.endpoint == mockengine::Endpoint::other && e.status == 200 &&
           e.url.rfind(origin_prefix + tmpl.content_path_prefix, 0) == 0))
        follows[e.session_key].push_back(&e);
    for (auto& [key, idx] : by_session) {
      auto& got = follows[key];
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double t = searches[idx[i]].t, end = window_end(idx, i);
        const std::string& q = searches[idx[i]].text;
        for (auto* e : got) {
          if (!(e->timestamp > t && e->timestamp < end)) continue;
          if (e->endpoint != mockengine::Endpoint::click_redirect) {
            ch.findings.push_back({searches[idx[i]].key,
                                   "content page " + e->url + " fetched from the results host"});
            continue;
          }
          std::string rank_s = mockengine::Engine::param_of(*e, "rank");
          std::string to = mockengine::Engine::param_of(*e, "to");
          long long rank = -1;
          try {
            rank = tsv::parse_int(rank_s);
          } catch (const std::invalid_argument&) {
          }
          if (rank < 0 || rank >= static_cast<long long>(tmpl.result_count)) {
            ch.findings.push_back({searches[idx[i]].key, "click names rank " + rank_s +
                                                             " but the page shows " +
                                                             std::to_string(tmpl.result_count)});
            continue;
          }
          if (to.rfind(origin_prefix + tmpl.sponsored_path_prefix, 0) == 0) {
            ch.findings.push_back({searches[idx[i]].key, "sponsored result clicked: " + to});
            continue;
          }
          std::string want = engine::result_url(tmpl, host, q, static_cast<int>(rank));
          if (to != want)
            ch.findings.push_back(
                {searches[idx[i]].key, "click target " + to + " is not the rank-" + rank_s + " result"});
        }
      }
    }
  }

  return report;
}

}  // namespace chaff::audit

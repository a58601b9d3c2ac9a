#pragma once

// Turns finished traces into a time-ordered HTTP request sequence and feeds it
// to an engine. Sub-requests are squeezed into a fraction of the gap to the
// neighboring search of the same session, so every footprint lands inside the
// window the auditor associates with its search.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/mockengine.hpp"
#include "chaff/sidechannel.hpp"
#include "chaff/tsv.hpp"

namespace chaff::replay {

struct TimedRequest {
  double t = 0.0;
  std::string target;  // path or path?query
  std::map<std::string, std::string> headers;
};

inline std::string target_of(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) return url;
  std::size_t slash = url.find('/', scheme + 3);
  return slash == std::string::npos ? "/" : url.substr(slash);
}

// Expected pre/post spans around each search. The suggestion window behind a
// search is 45s and subresource association runs 60s ahead, so spans stay
// well inside both and inside the neighbor gaps.
inline std::vector<TimedRequest> build_request_sequence(
    const std::vector<sidechannel::SearchTrace>& traces, const engine::EngineTemplate& tmpl,
    const std::string& host) {
  struct Item {
    const sidechannel::SearchTrace* trace;
    double prev_gap, next_gap;
  };
  std::map<std::string, std::vector<const sidechannel::SearchTrace*>> by_session;
  for (auto& tr : traces) by_session[mockengine::session_key_of(tr.headers)].push_back(&tr);

  std::vector<Item> items;
  for (auto& [key, list] : by_session) {
    std::vector<const sidechannel::SearchTrace*> sorted(list);
    std::sort(sorted.begin(), sorted.end(),
              [](auto* a, auto* b) { return a->query.timestamp < b->query.timestamp; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      double prev = i == 0 ? std::numeric_limits<double>::infinity()
                           : sorted[i]->query.timestamp - sorted[i - 1]->query.timestamp;
      double next = i + 1 == sorted.size() ? std::numeric_limits<double>::infinity()
                                           : sorted[i + 1]->query.timestamp - sorted[i]->query.timestamp;
      items.push_back({sorted[i], prev, next});
    }
  }

  std::vector<TimedRequest> out;
  for (auto& item : items) {
    const sidechannel::SearchTrace& tr = *item.trace;
    double t = tr.query.timestamp;
    double pre = std::min(8.0, 0.45 * item.prev_gap);
    double post = std::min(45.0, 0.45 * item.next_gap);

    std::map<std::string, std::string> base = tr.headers;
    base.erase("referer");

    std::size_t k = tr.suggestion_prefixes.size();
    for (std::size_t i = 0; i < k; ++i)
      out.push_back({t - pre + pre * static_cast<double>(i + 1) / static_cast<double>(k + 1),
                     target_of(engine::suggest_url(tmpl, host, tr.suggestion_prefixes[i])), base});

    out.push_back({t, target_of(tr.request_url), tr.headers});

    // Sub-requests carry the result page as their referrer, like a browser.
    std::map<std::string, std::string> sub = base;
    sub["referer"] = tr.request_url;
    double steps = static_cast<double>(tr.subresources.size()) + 3.0;
    double i = 1.0;
    for (auto& res : tr.subresources)
      out.push_back({t + post * (i++ / steps), target_of(res), sub});
    if (tr.favicon_fetched)
      out.push_back({t + post * (i / steps), target_of("http://" + host + tmpl.favicon_path), sub});
    i += 1.0;
    double click_t = t + post * (i / steps);
    for (auto& c : tr.clicks) {
      out.push_back({click_t, target_of(engine::click_url(tmpl, host, c.rank, c.url)), sub});
      if (c.content_fetched) {
        std::map<std::string, std::string> content = base;
        content["referer"] = tr.request_url;
        out.push_back({click_t + post * 0.5 / steps, target_of(c.url), content});
      }
      click_t += post * 0.9 / steps;
    }
  }
  std::sort(out.begin(), out.end(), [](const TimedRequest& a, const TimedRequest& b) { return a.t < b.t; });
  return out;
}

inline void replay_direct(const std::vector<TimedRequest>& requests, mockengine::Engine& engine) {
  for (auto& r : requests) engine.handle(r.target, r.headers, r.t);
}

}  // namespace chaff::replay

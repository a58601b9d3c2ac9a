#pragma once

// Loopback search engine: serves templated pages deterministically and logs
// every request it sees. The session key is computed from cookies or the
// client address only; the engine never learns query origins.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/corpus.hpp"
#include "chaff/engine_template.hpp"
#include "chaff/querylog.hpp"
#include "chaff/text.hpp"
#include "chaff/timeutil.hpp"
#include "chaff/tsv.hpp"

namespace chaff::mockengine {

enum class Endpoint { search, suggest, resource, favicon, click_redirect, other };

inline const char* endpoint_name(Endpoint e) {
  switch (e) {
    case Endpoint::search: return "search";
    case Endpoint::suggest: return "suggest";
    case Endpoint::resource: return "resource";
    case Endpoint::favicon: return "favicon";
    case Endpoint::click_redirect: return "click_redirect";
    default: return "other";
  }
}

struct RequestLogEntry {
  double timestamp = 0.0;
  Endpoint endpoint = Endpoint::other;
  std::string url;  // absolute
  std::map<std::string, std::string> headers;
  std::string session_key;
  int status = 200;
};

struct Response {
  int status = 200;
  std::string content_type = "text/html";
  std::string body;
  std::map<std::string, std::string> headers;
};

inline std::string session_key_of(const std::map<std::string, std::string>& headers) {
  auto ck = headers.find("cookie");
  if (ck != headers.end()) {
    std::string_view v = ck->second;
    std::size_t pos = v.find("sid=");
    if (pos != std::string_view::npos) {
      std::size_t end = v.find(';', pos);
      return std::string(v.substr(pos + 4, end == std::string_view::npos ? end : end - pos - 4));
    }
  }
  auto ip = headers.find("x-client-ip");
  if (ip != headers.end()) return ip->second;
  return "anon";
}

class Engine {
 public:
  Engine(engine::EngineTemplate tmpl, std::string host, corpus::PoolSet pools = {})
      : tmpl_(std::move(tmpl)), host_(std::move(host)), pools_(std::move(pools)) {
    tmpl_.validate();
    search_path_ = engine::search_path(tmpl_);
    search_param_ = engine::search_param(tmpl_);
    for (auto& [topic, pool] : pools_)
      for (auto& [term, w] : pool.entries) completions_.emplace_back(fold_case(term), term, w);
    std::sort(completions_.begin(), completions_.end());
  }

  const engine::EngineTemplate& tmpl() const { return tmpl_; }
  const std::string& host() const { return host_; }
  const std::vector<RequestLogEntry>& log() const { return log_; }
  void clear_log() { log_.clear(); }

  // target is "path" or "path?query". Simulated time comes from the
  // x-sim-time header when present, else from fallback_now.
  Response handle(const std::string& target, const std::map<std::string, std::string>& headers,
                  double fallback_now) {
    double now = fallback_now;
    if (auto it = headers.find("x-sim-time"); it != headers.end()) {
      try {
        now = tsv::parse_double(it->second);
      } catch (const std::invalid_argument&) {
        now = fallback_now;
      }
    }
    std::string path = target.substr(0, target.find('?'));
    std::string qs = target.find('?') == std::string::npos ? "" : target.substr(target.find('?') + 1);
    auto params = parse_query_string(qs);
    auto param = [&](std::string_view name) -> std::string {
      for (auto& [k, v] : params)
        if (k == name) return v;
      return "";
    };

    RequestLogEntry entry;
    entry.timestamp = now;
    entry.url = "http://" + host_ + target;
    entry.headers = headers;
    entry.session_key = session_key_of(headers);

    Response resp;
    if (path == search_path_) {
      entry.endpoint = Endpoint::search;
      resp.body = engine::result_page_html(tmpl_, host_, param(search_param_));
    } else if (!tmpl_.suggest_path.empty() && path == tmpl_.suggest_path) {
      entry.endpoint = Endpoint::suggest;
      resp.content_type = "application/json";
      resp.body = suggest_json(param("q"));
    } else if (std::find(tmpl_.resources.begin(), tmpl_.resources.end(), path) != tmpl_.resources.end() ||
               path.rfind("/resource/", 0) == 0) {
      entry.endpoint = Endpoint::resource;
      resp.content_type = "application/octet-stream";
      resp.body = "res:" + engine::hex16(hash64(path));
    } else if (path == tmpl_.favicon_path) {
      entry.endpoint = Endpoint::favicon;
      resp.content_type = "image/x-icon";
      resp.headers["cache-control"] = "max-age=" + std::to_string(tmpl_.favicon_ttl_seconds);
      resp.body = "icon:" + tmpl_.name;
    } else if (path == "/click") {
      entry.endpoint = Endpoint::click_redirect;
      resp.status = 302;
      resp.headers["location"] = param("to");
    } else if (path.rfind(tmpl_.content_path_prefix, 0) == 0) {
      entry.endpoint = Endpoint::other;
      resp.body = "<html><body>site " + path + "</body></html>";
    } else {
      entry.endpoint = Endpoint::other;
      resp.status = 404;
      resp.body = "not found";
    }
    entry.status = resp.status;
    log_.push_back(std::move(entry));
    return resp;
  }

  // Search lines with any clicks the same session made before its next
  // search; this is the log an adversary actually sees.
  std::vector<querylog::LogRecord> export_query_log() const {
    std::vector<querylog::LogRecord> out;
    std::map<std::string, std::size_t> last_search;  // session -> index into out
    for (auto& e : log_) {
      if (e.endpoint == Endpoint::search) {
        querylog::LogRecord r;
        r.timestamp = e.timestamp;
        r.session_key = e.session_key;
        r.text = query_of(e);
        last_search[e.session_key] = out.size();
        out.push_back(std::move(r));
      } else if (e.endpoint == Endpoint::click_redirect) {
        auto it = last_search.find(e.session_key);
        if (it == last_search.end()) continue;
        std::string rank = param_of(e, "rank");
        if (!rank.empty()) out[it->second].clicked_ranks.push_back(static_cast<int>(tsv::parse_int(rank)));
      }
    }
    return out;
  }

  tsv::Document export_requests() const {
    tsv::Document doc;
    doc.comments = {"# chaff request log v1"};
    for (auto& e : log_)
      doc.rows.push_back({timeutil::format_iso8601(e.timestamp), e.session_key,
                          endpoint_name(e.endpoint), std::to_string(e.status), e.url});
    return doc;
  }

  // Query text of a logged search entry (url decoding applied).
  std::string query_of(const RequestLogEntry& e) const { return param_of(e, search_param_); }

  static std::string param_of(const RequestLogEntry& e, std::string_view name) {
    std::size_t qm = e.url.find('?');
    if (qm == std::string::npos) return "";
    for (auto& [k, v] : parse_query_string(std::string_view(e.url).substr(qm + 1)))
      if (k == name) return v;
    return "";
  }

 private:
  std::string suggest_json(const std::string& prefix) {
    std::string folded = fold_case(prefix);
    std::vector<std::pair<double, const std::string*>> hits;
    if (!folded.empty()) {
      auto it = std::lower_bound(completions_.begin(), completions_.end(), folded,
                                 [](const auto& c, const std::string& p) { return std::get<0>(c) < p; });
      for (; it != completions_.end() && std::get<0>(*it).rfind(folded, 0) == 0; ++it)
        hits.emplace_back(std::get<2>(*it), &std::get<1>(*it));
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (hits.size() > 8) hits.resize(8);
    std::string body = "[";
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (i) body += ",";
      body += "\"";
      for (char c : *hits[i].second) {
        if (c == '"' || c == '\\') body += '\\';
        body += c;
      }
      body += "\"";
    }
    body += "]";
    return body;
  }

  engine::EngineTemplate tmpl_;
  std::string host_;
  corpus::PoolSet pools_;
  std::string search_path_;
  std::string search_param_;
  std::vector<std::tuple<std::string, std::string, double>> completions_;  // (folded, term, weight)
  std::vector<RequestLogEntry> log_;
};

}  // namespace chaff::mockengine

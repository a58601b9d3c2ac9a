#pragma once

// Declarative description of one search engine: URL shapes, result-page
// makeup, suggestion endpoint, favicon policy and the header set its operators
// are assumed to inspect. Result pages are a pure function of (template,
// query), which is what lets the traffic auditor recompute them.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaff/rng.hpp"
#include "chaff/text.hpp"

namespace chaff::engine {

struct EngineTemplate {
  std::string name = "default";
  std::string search_url_pattern = "http://{host}/search?q={q}";
  std::string suggest_path = "/suggest";  // empty: engine has no suggestions
  int suggest_min_chars = 2;
  std::vector<std::string> resources;  // result-page subresource paths
  std::vector<std::string> monitored_events;
  std::string favicon_path = "/favicon.ico";
  long long favicon_ttl_seconds = 604800;
  int result_count = 10;
  int sponsored_count = 2;
  std::string sponsored_path_prefix = "/ad/";
  std::string content_path_prefix = "/site/";
  std::vector<std::string> audited_headers = {"user-agent", "accept-language"};

  void validate() const {
    if (search_url_pattern.find("{q}") == std::string::npos)
      throw std::invalid_argument("engine template " + name + ": search_url_pattern lacks {q}");
    if (result_count <= 0) throw std::invalid_argument("engine template " + name + ": result_count");
    if (suggest_min_chars < 1) throw std::invalid_argument("engine template " + name + ": suggest_min_chars");
    if (favicon_ttl_seconds <= 0) throw std::invalid_argument("engine template " + name + ": favicon ttl");
  }
};

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
}

inline std::string search_url(const EngineTemplate& t, const std::string& host, const std::string& query) {
  std::string url = t.search_url_pattern;
  replace_all(url, "{host}", host);
  replace_all(url, "{q}", url_encode(query));
  return url;
}

inline std::string suggest_url(const EngineTemplate& t, const std::string& host, const std::string& prefix) {
  return "http://" + host + t.suggest_path + "?q=" + url_encode(prefix);
}

// Path component of the search pattern, e.g. "/search".
inline std::string search_path(const EngineTemplate& t) {
  std::string p = t.search_url_pattern;
  std::size_t scheme = p.find("://");
  if (scheme != std::string::npos) {
    std::size_t slash = p.find('/', scheme + 3);
    p = slash == std::string::npos ? "/" : p.substr(slash);
  }
  std::size_t q = p.find('?');
  return q == std::string::npos ? p : p.substr(0, q);
}

// Name of the query parameter carrying the search term, e.g. "q".
inline std::string search_param(const EngineTemplate& t) {
  const std::string& p = t.search_url_pattern;
  std::size_t cap = p.find("={q}");
  if (cap == std::string::npos || cap == 0)
    throw std::invalid_argument("engine template " + t.name + ": pattern lacks a ...=<q> parameter");
  std::size_t start = p.find_last_of("?&", cap - 1);
  if (start == std::string::npos)
    throw std::invalid_argument("engine template " + t.name + ": {q} is not in the query string");
  return p.substr(start + 1, cap - start - 1);
}

inline std::string resource_url(const EngineTemplate&, const std::string& host, const std::string& path) {
  return "http://" + host + path;
}

inline std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

// Organic result target for (query, rank); stable across requests.
inline std::string result_url(const EngineTemplate& t, const std::string& host, const std::string& query,
                              int rank) {
  std::uint64_t h = hash64("result:" + query + ":" + std::to_string(rank));
  return "http://" + host + t.content_path_prefix + hex16(h);
}

inline std::string sponsored_url(const EngineTemplate& t, const std::string& host, const std::string& query,
                                 int slot) {
  std::uint64_t h = hash64("sponsored:" + query + ":" + std::to_string(slot));
  return "http://" + host + t.sponsored_path_prefix + hex16(h);
}

inline std::string click_url(const EngineTemplate&, const std::string& host, int rank,
                             const std::string& target) {
  return "http://" + host + "/click?rank=" + std::to_string(rank) + "&to=" + url_encode(target);
}

// Deterministic result page: query-seeded titles, organic links, sponsored
// slots and the template's declared subresources.
inline std::string result_page_html(const EngineTemplate& t, const std::string& host,
                                    const std::string& query) {
  Rng rng(hash64("page:" + query));
  std::ostringstream out;
  out << "<html><head><title>" << query << " - " << t.name << "</title>";
  for (auto& r : t.resources) out << "<link href=\"" << r << "\">";
  out << "</head><body>";
  for (int s = 0; s < t.sponsored_count; ++s)
    out << "<div class=\"ad\"><a href=\"" << sponsored_url(t, host, query, s) << "\">ad " << s
        << "</a></div>";
  for (int r = 0; r < t.result_count; ++r) {
    std::string target = result_url(t, host, query, r);
    out << "<div class=\"result\"><a href=\"" << click_url(t, host, r, target) << "\">" << query
        << " result " << r << "</a><cite>" << target << "</cite><span>" << hex16(rng.next_u64())
        << "</span></div>";
  }
  out << "</body></html>";
  return out.str();
}

inline void to_json(nlohmann::json& j, const EngineTemplate& t) {
  j = nlohmann::json{{"name", t.name},
                     {"search_url_pattern", t.search_url_pattern},
                     {"suggest_path", t.suggest_path},
                     {"suggest_min_chars", t.suggest_min_chars},
                     {"resources", t.resources},
                     {"monitored_events", t.monitored_events},
                     {"favicon_path", t.favicon_path},
                     {"favicon_ttl_seconds", t.favicon_ttl_seconds},
                     {"result_count", t.result_count},
                     {"sponsored_count", t.sponsored_count},
                     {"sponsored_path_prefix", t.sponsored_path_prefix},
                     {"content_path_prefix", t.content_path_prefix},
                     {"audited_headers", t.audited_headers}};
}

inline void from_json(const nlohmann::json& j, EngineTemplate& t) {
  EngineTemplate defaults;
  t.name = j.value("name", defaults.name);
  t.search_url_pattern = j.value("search_url_pattern", defaults.search_url_pattern);
  t.suggest_path = j.value("suggest_path", defaults.suggest_path);
  t.suggest_min_chars = j.value("suggest_min_chars", defaults.suggest_min_chars);
  t.resources = j.value("resources", defaults.resources);
  t.monitored_events = j.value("monitored_events", defaults.monitored_events);
  t.favicon_path = j.value("favicon_path", defaults.favicon_path);
  t.favicon_ttl_seconds = j.value("favicon_ttl_seconds", defaults.favicon_ttl_seconds);
  t.result_count = j.value("result_count", defaults.result_count);
  t.sponsored_count = j.value("sponsored_count", defaults.sponsored_count);
  t.sponsored_path_prefix = j.value("sponsored_path_prefix", defaults.sponsored_path_prefix);
  t.content_path_prefix = j.value("content_path_prefix", defaults.content_path_prefix);
  t.audited_headers = j.value("audited_headers", defaults.audited_headers);
}

inline EngineTemplate default_template() {
  EngineTemplate t;
  t.resources = {"/resource/logo.png",    "/resource/style.css",  "/resource/app.js",
                 "/resource/sprite.png",  "/resource/fonts.css",  "/resource/telemetry.js",
                 "/resource/footer.png"};
  t.monitored_events = {"focus", "keydown", "keyup", "submit", "results-rendered"};
  t.validate();
  return t;
}

inline EngineTemplate load_engine_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open engine template " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  EngineTemplate t = j.get<EngineTemplate>();
  t.validate();
  return t;
}

inline void save_engine_template(const std::string& path, const EngineTemplate& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write engine template " + path);
  nlohmann::json j = t;
  out << j.dump(2) << "\n";
}

}  // namespace chaff::engine

#pragma once

// HTTP transport for a replay: drives a request sequence against a live
// engine instead of an in-process one, and the matching server shim that
// exposes a mock engine over a socket. The simulated clock travels in the
// x-sim-time header, so wall time never leaks into replayed runs.

#include <stdexcept>
#include <string>
#include <vector>

#include <httplib.h>

#include "chaff/mockengine.hpp"
#include "chaff/replay.hpp"
#include "chaff/tsv.hpp"

namespace chaff::replay {

// base_url like "http://127.0.0.1:8080". Throws on the first request the
// engine does not answer; a dead engine fails the run rather than producing a
// silently empty log.
inline void replay_http(const std::vector<TimedRequest>& requests, const std::string& base_url) {
  httplib::Client client(base_url);
  client.set_connection_timeout(5, 0);
  client.set_keep_alive(true);
  client.set_tcp_nodelay(true);
  for (auto& r : requests) {
    httplib::Headers headers;
    for (auto& [k, v] : r.headers) headers.emplace(k, v);
    headers.emplace("x-sim-time", tsv::format_double(r.t));
    auto res = client.Get(r.target, headers);
    if (!res)
      throw std::runtime_error("engine unreachable at " + base_url + " (" +
                               httplib::to_string(res.error()) + ")");
  }
}

// Routes every GET the server receives into the engine. The engine's own
// request log keeps working, so a served run can still be audited.
inline void attach_engine(httplib::Server& server, mockengine::Engine& engine) {
  server.set_tcp_nodelay(true);
  server.Get(".*", [&engine](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> headers;
    for (auto& [k, v] : req.headers) {
      std::string name = k;
      for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      headers[name] = v;
    }
    std::string target = req.target.empty() ? req.path : req.target;
    mockengine::Response out = engine.handle(target, headers, 0.0);
    res.status = out.status;
    for (auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, out.content_type);
  });
}

}  // namespace chaff::replay

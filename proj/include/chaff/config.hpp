#pragma once

// Run configuration: one JSON file drives every subcommand. Paths inside it
// are checked at load time so a typo fails up front with the offending path,
// not halfway through a run. rate_per_hour may be zero, which disables decoy
// generation and produces a user-only log.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaff/engine_template.hpp"
#include "chaff/obfuscator.hpp"
#include "chaff/simulate.hpp"
#include "chaff/topics.hpp"

namespace chaff::config {

struct FeedSource {
  std::string path;
  std::string topic;  // pool key the feed's keywords land under
};

struct AdversarySettings {
  std::string attack = "attack2";  // attack1 | attack2 | attack3
  double threshold = 0.5;
  long long x_est = 0;  // 0: adversary has no count estimates
  long long y_est = 0;
  double session_gap = 1800.0;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int days = 7;
  int users = 1;
  std::string universe_file;  // empty: built-in universe
  std::vector<FeedSource> feeds;

  std::string plan_mode = "topic_exposed";  // topic_exposed | topic_obfuscated
  std::size_t plan_extra_topics = 0;
  double rate_per_hour = 3.0;  // decoys per hour per engine; 0 disables
  double epsilon = 0.5;
  double p_ob = 1.0;
  long long plan_y_est = 1;  // conservative adversary the plan defends against

  double queries_per_week = 500.0;
  double repeat_rate = 0.12;
  double click_rate = 0.25;

  AdversarySettings adversary;

  std::string engine_template_file;  // empty: built-in template
  std::string engine_host = "engine.test";
  std::string out_dir = "runs/out";
};

inline void validate(const RunConfig& cfg) {
  if (cfg.rate_per_hour < 0.0) throw std::invalid_argument("config: rate_per_hour must be >= 0");
  if (cfg.epsilon < 0.0 || cfg.epsilon >= 1.0)
    throw std::invalid_argument("config: epsilon out of [0,1)");
  if (cfg.p_ob < 0.0 || cfg.p_ob > 1.0) throw std::invalid_argument("config: p_ob out of [0,1]");
  if (cfg.days < 1) throw std::invalid_argument("config: days must be >= 1");
  if (cfg.users < 1) throw std::invalid_argument("config: users must be >= 1");
  if (cfg.queries_per_week <= 0.0)
    throw std::invalid_argument("config: queries_per_week must be positive");
  if (cfg.repeat_rate < 0.0 || cfg.repeat_rate >= 1.0)
    throw std::invalid_argument("config: repeat_rate out of [0,1)");
  if (cfg.click_rate < 0.0 || cfg.click_rate > 1.0)
    throw std::invalid_argument("config: click_rate out of [0,1]");
  if (cfg.plan_mode != "topic_exposed" && cfg.plan_mode != "topic_obfuscated")
    throw std::invalid_argument("config: unknown plan_mode \"" + cfg.plan_mode + "\"");
  if (cfg.adversary.attack != "attack1" && cfg.adversary.attack != "attack2" &&
      cfg.adversary.attack != "attack3")
    throw std::invalid_argument("config: unknown attack \"" + cfg.adversary.attack + "\"");
  if (cfg.adversary.session_gap <= 0.0)
    throw std::invalid_argument("config: adversary session_gap must be positive");

  auto need_file = [](const std::string& path, const char* what) {
    if (!path.empty() && !std::filesystem::exists(path))
      throw std::invalid_argument(std::string("config: missing ") + what + ": " + path);
  };
  need_file(cfg.universe_file, "universe file");
  need_file(cfg.engine_template_file, "engine template");
  for (auto& feed : cfg.feeds) {
    if (feed.topic.empty()) throw std::invalid_argument("config: feed with empty topic");
    if (feed.path.empty() || !std::filesystem::exists(feed.path))
      throw std::invalid_argument("config: missing feed file: " + feed.path);
  }
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.days = j.value("days", cfg.days);
  cfg.users = j.value("users", cfg.users);
  cfg.universe_file = j.value("universe_file", cfg.universe_file);
  if (j.contains("feeds"))
    for (auto& f : j.at("feeds"))
      cfg.feeds.push_back({f.value("path", ""), f.value("topic", "")});
  if (j.contains("plan")) {
    const auto& p = j.at("plan");
    cfg.plan_mode = p.value("mode", cfg.plan_mode);
    cfg.plan_extra_topics = p.value("extra_topics", cfg.plan_extra_topics);
    cfg.rate_per_hour = p.value("rate_per_hour", cfg.rate_per_hour);
    cfg.epsilon = p.value("epsilon", cfg.epsilon);
    cfg.p_ob = p.value("p_ob", cfg.p_ob);
    cfg.plan_y_est = p.value("adversary_y_est", cfg.plan_y_est);
  }
  if (j.contains("user")) {
    const auto& u = j.at("user");
    cfg.queries_per_week = u.value("queries_per_week", cfg.queries_per_week);
    cfg.repeat_rate = u.value("repeat_rate", cfg.repeat_rate);
    cfg.click_rate = u.value("click_rate", cfg.click_rate);
  }
  if (j.contains("adversary")) {
    const auto& a = j.at("adversary");
    cfg.adversary.attack = a.value("attack", cfg.adversary.attack);
    cfg.adversary.threshold = a.value("threshold", cfg.adversary.threshold);
    cfg.adversary.x_est = a.value("x_est", cfg.adversary.x_est);
    cfg.adversary.y_est = a.value("y_est", cfg.adversary.y_est);
    cfg.adversary.session_gap = a.value("session_gap", cfg.adversary.session_gap);
  }
  if (j.contains("engine")) {
    const auto& e = j.at("engine");
    cfg.engine_template_file = e.value("template_file", cfg.engine_template_file);
    cfg.engine_host = e.value("host", cfg.engine_host);
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json feeds = nlohmann::json::array();
  for (auto& f : cfg.feeds) feeds.push_back({{"path", f.path}, {"topic", f.topic}});
  return nlohmann::json{
      {"seed", cfg.seed},
      {"days", cfg.days},
      {"users", cfg.users},
      {"universe_file", cfg.universe_file},
      {"feeds", feeds},
      {"plan",
       {{"mode", cfg.plan_mode},
        {"extra_topics", cfg.plan_extra_topics},
        {"rate_per_hour", cfg.rate_per_hour},
        {"epsilon", cfg.epsilon},
        {"p_ob", cfg.p_ob},
        {"adversary_y_est", cfg.plan_y_est}}},
      {"user",
       {{"queries_per_week", cfg.queries_per_week},
        {"repeat_rate", cfg.repeat_rate},
        {"click_rate", cfg.click_rate}}},
      {"adversary",
       {{"attack", cfg.adversary.attack},
        {"threshold", cfg.adversary.threshold},
        {"x_est", cfg.adversary.x_est},
        {"y_est", cfg.adversary.y_est},
        {"session_gap", cfg.adversary.session_gap}}},
      {"engine", {{"template_file", cfg.engine_template_file}, {"host", cfg.engine_host}}},
      {"out_dir", cfg.out_dir}};
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  RunConfig cfg = parse_run_config(j);
  validate(cfg);
  return cfg;
}

inline void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << to_json(cfg).dump(2) << "\n";
}

inline topics::TopicUniverse universe_for(const RunConfig& cfg) {
  return cfg.universe_file.empty() ? topics::default_universe()
                                   : topics::load_universe(cfg.universe_file);
}

inline engine::EngineTemplate engine_template_for(const RunConfig& cfg) {
  return cfg.engine_template_file.empty() ? engine::default_template()
                                          : engine::load_engine_template(cfg.engine_template_file);
}

inline simulate::SimOptions sim_options_for(const RunConfig& cfg, corpus::PoolSet base_pools) {
  simulate::SimOptions opts;
  opts.days = cfg.days;
  opts.base_pools = std::move(base_pools);
  opts.decoy_rate_per_hour = cfg.rate_per_hour;
  opts.epsilon = cfg.epsilon;
  opts.p_ob = cfg.p_ob;
  opts.adversary_y_est = cfg.plan_y_est;
  opts.mode = cfg.plan_mode == "topic_obfuscated" ? obfuscator::Mode::topic_obfuscated
                                                  : obfuscator::Mode::topic_exposed;
  opts.plan_topic_count = cfg.plan_extra_topics;
  opts.user.queries_per_week = cfg.queries_per_week;
  opts.user.repeat_rate = cfg.repeat_rate;
  opts.clicks.rate = cfg.click_rate;
  opts.host = cfg.engine_host;
  return opts;
}

// Independent per-user seeds from the run seed; user 0 reproduces the
// single-user stream for the same config.
inline std::uint64_t user_seed(const RunConfig& cfg, int user_index) {
  return splitmix64(cfg.seed ^ splitmix64(0x757365720000ull + static_cast<std::uint64_t>(user_index)));
}

}  // namespace chaff::config

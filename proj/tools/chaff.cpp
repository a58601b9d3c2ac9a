// chaff command line: build keyword pools from feeds, simulate an obfuscated
// week of searching, run log-filtering attacks against the visible log, and
// score the outcome. Exit codes: 0 success, 1 bad input or config, 2 failure
// at run time (unreachable engine, unwritable output).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chaff/adversary.hpp"
#include "chaff/audit.hpp"
#include "chaff/config.hpp"
#include "chaff/corpus.hpp"
#include "chaff/evaluation.hpp"
#include "chaff/mockengine.hpp"
#include "chaff/obfuscator.hpp"
#include "chaff/querylog.hpp"
#include "chaff/replay.hpp"
#include "chaff/replay_http.hpp"
#include "chaff/simulate.hpp"
#include "chaff/timeutil.hpp"
#include "chaff/timing.hpp"
#include "chaff/topics.hpp"
#include "chaff/tsv.hpp"

namespace {

using namespace chaff;
namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Feeds grouped by topic; two feeds may share one pool.
corpus::PoolSet pools_from_feeds(const config::RunConfig& cfg, bool warn_empty) {
  std::map<std::string, std::vector<corpus::FeedItem>> by_topic;
  for (auto& feed : cfg.feeds) {
    auto items = corpus::parse_feed(slurp(feed.path), feed.topic);
    if (items.empty() && warn_empty)
      std::cerr << "warning: feed " << feed.path << " produced no items; pool \"" << feed.topic
                << "\" may be empty\n";
    auto& bucket = by_topic[feed.topic];
    bucket.insert(bucket.end(), items.begin(), items.end());
  }
  corpus::PoolSet pools;
  for (auto& [topic, items] : by_topic) pools[topic] = corpus::build_pool(items, topic, 3);
  return pools;
}

int cmd_corpus_build(const config::RunConfig& cfg, const std::string& out_override) {
  if (cfg.feeds.empty()) throw std::invalid_argument("corpus-build: config lists no feeds");
  fs::path dir = out_override.empty() ? fs::path(cfg.out_dir) / "pools" : fs::path(out_override);
  fs::create_directories(dir);

  corpus::PoolSet pools = pools_from_feeds(cfg, true);
  for (auto& [topic, pool] : pools) {
    corpus::PoolSet single{{topic, pool}};
    corpus::write_pools((dir / (topic + ".tsv")).string(), single);
  }
  std::cout << "wrote " << pools.size() << " pool file(s) to " << dir.string() << "\n";
  return 0;
}

nlohmann::json trace_json(const sidechannel::SearchTrace& tr) {
  nlohmann::json clicks = nlohmann::json::array();
  for (auto& c : tr.clicks)
    clicks.push_back({{"rank", c.rank},
                      {"url", c.url},
                      {"content_fetched", c.content_fetched},
                      {"sponsored", c.sponsored}});
  return nlohmann::json{{"t", tr.query.timestamp},
                        {"session", mockengine::session_key_of(tr.headers)},
                        {"query", tr.query.text},
                        {"url", tr.request_url},
                        {"headers", tr.headers},
                        {"subresources", tr.subresources},
                        {"favicon_fetched", tr.favicon_fetched},
                        {"suggestion_prefixes", tr.suggestion_prefixes},
                        {"interaction_events", tr.interaction_events},
                        {"clicks", clicks}};
}

void write_requests_tsv(const std::string& path, const std::vector<mockengine::RequestLogEntry>& log) {
  tsv::Document doc;
  doc.comments = {"# chaff requests v1"};
  for (auto& e : log) {
    nlohmann::json headers(e.headers);
    doc.rows.push_back({tsv::format_double(e.timestamp), e.session_key, std::to_string(e.status),
                        e.url, headers.dump()});
  }
  tsv::write_file(path, doc);
}

void write_requests_tsv_from_sequence(const std::string& path,
                                      const std::vector<replay::TimedRequest>& requests,
                                      const std::string& host) {
  tsv::Document doc;
  doc.comments = {"# chaff requests v1", "# status 0: sent to an external engine, not observed"};
  for (auto& r : requests) {
    nlohmann::json headers(r.headers);
    doc.rows.push_back({tsv::format_double(r.t), mockengine::session_key_of(r.headers), "0",
                        "http://" + host + r.target, headers.dump()});
  }
  tsv::write_file(path, doc);
}

nlohmann::json plan_json(const simulate::SimulationResult& sim, const config::RunConfig& cfg) {
  long long y = static_cast<long long>(sim.user_queries.size());
  long long min_x = cfg.rate_per_hour > 0.0 && cfg.p_ob > 0.0
                        ? obfuscator::min_decoys(cfg.plan_y_est, cfg.p_ob, cfg.epsilon, y)
                        : 0;
  obfuscator::GuaranteeParams params;
  params.user_count = y;
  params.decoy_count = static_cast<long long>(sim.decoys.size());
  params.user_est = cfg.plan_y_est;
  params.decoy_est = params.decoy_count;
  params.p_ob = cfg.p_ob;
  params.epsilon = cfg.epsilon;
  return nlohmann::json{
      {"mode", sim.plan.mode == obfuscator::Mode::topic_obfuscated ? "topic_obfuscated"
                                                                   : "topic_exposed"},
      {"rate_per_hour", sim.plan.rate_per_hour},
      {"target_topics", sim.plan.target_topics},
      {"topic_weights", sim.plan.topic_weights.weights},
      {"user_queries", y},
      {"decoys", params.decoy_count},
      {"min_decoys_needed", min_x},
      {"reasonable_doubt",
       params.decoy_count > 0 ? obfuscator::reasonable_doubt(params) : 0.0}};
}

int cmd_simulate(const config::RunConfig& cfg, const std::string& out_override,
                 const std::string& engine_addr) {
  fs::path out = out_override.empty() ? fs::path(cfg.out_dir) : fs::path(out_override);
  fs::create_directories(out);

  topics::TopicUniverse universe = config::universe_for(cfg);
  engine::EngineTemplate tmpl = config::engine_template_for(cfg);
  simulate::SimOptions opts = config::sim_options_for(cfg, pools_from_feeds(cfg, false));

  std::vector<sidechannel::SearchTrace> traces;
  std::map<std::string, QueryOrigin> origin_of;  // session \t time \t text
  std::size_t user_total = 0, decoy_total = 0;
  for (int u = 0; u < cfg.users; ++u) {
    opts.session_key = "u" + std::to_string(u + 1);
    std::uint64_t seed = config::user_seed(cfg, u);
    simulate::SimulationResult sim = simulate::run_simulation(universe, opts, seed);
    user_total += sim.user_queries.size();
    decoy_total += sim.decoys.size();

    for (auto& q : sim.combined)
      origin_of[opts.session_key + "\t" + tsv::format_double(q.timestamp) + "\t" + q.text] =
          q.origin;
    auto user_traces = simulate::build_traces(sim, tmpl, opts, splitmix64(seed ^ 0x74726163ull));
    traces.insert(traces.end(), user_traces.begin(), user_traces.end());

    fs::path udir = out / opts.session_key;
    fs::create_directories(udir);
    if (!sim.pools.empty()) corpus::write_pools((udir / "pools.tsv").string(), sim.pools);
    timing::save_timing((udir / "timing.tsv").string(), sim.timing);
    std::ofstream plan_out(udir / "plan.json");
    plan_out << plan_json(sim, cfg).dump(2) << "\n";
  }

  auto requests = replay::build_request_sequence(traces, tmpl, cfg.engine_host);
  std::vector<querylog::LogRecord> records;
  if (engine_addr.empty()) {
    mockengine::Engine engine(tmpl, cfg.engine_host);
    replay::replay_direct(requests, engine);
    records = engine.export_query_log();
    write_requests_tsv((out / "requests.tsv").string(), engine.log());
  } else {
    replay::replay_http(requests, engine_addr);
    // An external engine keeps its own log; the visible log is reconstructed
    // from the traces that were just replayed.
    for (auto& tr : traces) {
      querylog::LogRecord r;
      r.timestamp = tr.query.timestamp;
      r.session_key = mockengine::session_key_of(tr.headers);
      r.text = tr.query.text;
      for (auto& c : tr.clicks) r.clicked_ranks.push_back(c.rank);
      records.push_back(std::move(r));
    }
    std::sort(records.begin(), records.end(),
              [](auto& a, auto& b) { return a.timestamp < b.timestamp; });
    write_requests_tsv_from_sequence((out / "requests.tsv").string(), requests, cfg.engine_host);
  }

  std::vector<querylog::LogRecord> truth = records;
  for (auto& r : truth) {
    auto it = origin_of.find(r.session_key + "\t" + tsv::format_double(r.timestamp) + "\t" + r.text);
    if (it == origin_of.end())
      throw std::runtime_error("simulate: logged search has no ground truth: " + r.text);
    r.origin = it->second;
  }
  querylog::write_query_log((out / "queries.tsv").string(), records);
  querylog::write_truth_log((out / "queries_truth.tsv").string(), truth);

  std::ofstream jsonl(out / "traces.jsonl");
  for (auto& tr : traces) jsonl << trace_json(tr).dump() << "\n";

  double hours = static_cast<double>(cfg.days) * 24.0;
  std::cout << "simulated " << cfg.users << " user(s) over " << cfg.days << " day(s): "
            << user_total << " real + " << decoy_total << " decoy searches ("
            << tsv::format_double(static_cast<double>(decoy_total) /
                                  (hours * static_cast<double>(cfg.users)))
            << " decoys/hour/user)\n"
            << "log: " << (out / "queries.tsv").string() << "\n"
            << "truth sidecar: " << (out / "queries_truth.tsv").string() << "\n";
  return 0;
}

std::vector<adversary::LogQuery> load_visible_log(const std::string& path) {
  std::vector<querylog::LogRecord> records;
  try {
    records = querylog::read_query_log(path);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(e.what());  // truth refusal and malformed input both
  }
  std::vector<adversary::LogQuery> log;
  log.reserve(records.size());
  for (auto& r : records) log.push_back(adversary::LogQuery::from_record(r));
  return log;
}

int cmd_attack(const config::RunConfig& cfg, const std::string& log_path,
               const std::string& out_override) {
  auto log = load_visible_log(log_path);
  if (log.empty()) throw std::invalid_argument("attack: empty query log");

  topics::TopicUniverse universe = config::universe_for(cfg);
  corpus::PoolSet pools = pools_from_feeds(cfg, false);
  // 0/0 means the adversary has no count estimates; fall back to a neutral
  // prior instead of the degenerate pair the estimator rejects.
  double xe = static_cast<double>(cfg.adversary.x_est);
  double ye = static_cast<double>(cfg.adversary.y_est);
  if (cfg.adversary.x_est == 0 && cfg.adversary.y_est == 0) xe = ye = 1.0;
  adversary::AdversaryModel m = adversary::fit_model(log, universe, pools, xe, ye);

  adversary::FilterVerdict verdict;
  const std::string& attack = cfg.adversary.attack;
  if (attack == "attack1") {
    verdict.threshold = cfg.adversary.threshold;
    for (auto& q : log) verdict.scores.push_back(adversary::attack1_single_query(m, q));
    for (std::size_t i = 0; i < verdict.scores.size(); ++i)
      if (verdict.scores[i] >= verdict.threshold) verdict.flagged.insert(i);
  } else if (attack == "attack2") {
    verdict = adversary::attack2_filter_set(m, log, cfg.adversary.threshold);
  } else {
    verdict = adversary::attack3_profile_filter(m, log, m.profile, cfg.adversary.threshold);
  }

  fs::path out = out_override.empty() ? fs::path(log_path).parent_path() / ("verdict_" + attack + ".tsv")
                                      : fs::path(out_override);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  adversary::write_verdict(out.string(), verdict);
  std::cout << attack << " flagged " << verdict.flagged.size() << " of " << log.size()
            << " searches at threshold " << tsv::format_double(verdict.threshold) << "\n"
            << "verdict: " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const config::RunConfig& cfg, const std::string& verdict_path,
                 const std::string& truth_path, const std::string& out_override) {
  adversary::FilterVerdict verdict;
  std::vector<querylog::LogRecord> truth;
  try {
    verdict = adversary::read_verdict(verdict_path);
    tsv::Document probe = tsv::read_file(truth_path);
    if (probe.comments.empty() || probe.comments.front() != querylog::kTruthHeader)
      throw std::invalid_argument("evaluate: " + truth_path +
                                  " is not a ground-truth sidecar (# chaff ground truth v1)");
    truth = querylog::read_query_log(truth_path, true);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(e.what());
  }
  if (verdict.scores.size() != truth.size())
    throw std::invalid_argument("evaluate: verdict/truth length mismatch: " +
                                std::to_string(verdict.scores.size()) + " vs " +
                                std::to_string(truth.size()));

  std::vector<QueryOrigin> origins;
  origins.reserve(truth.size());
  for (auto& r : truth) origins.push_back(r.origin);

  evaluation::ConfusionCounts cells = evaluation::confusion(verdict, origins);
  double tnr = evaluation::tnr(cells);

  // Threshold sweep over the observed scores to find the cheapest flag set
  // that is still precise about decoys.
  std::set<double> levels(verdict.scores.begin(), verdict.scores.end());
  levels.insert(0.0);
  std::vector<adversary::FilterVerdict> sweep;
  for (double th : levels) {
    adversary::FilterVerdict v;
    v.scores = verdict.scores;
    v.threshold = th;
    for (std::size_t i = 0; i < v.scores.size(); ++i)
      if (v.scores[i] >= th) v.flagged.insert(i);
    sweep.push_back(std::move(v));
  }
  const double beta = 0.9;
  evaluation::ResiliencyResult res = evaluation::resiliency(sweep, origins, beta);

  obfuscator::GuaranteeParams params;
  params.user_count = cells.tn + cells.fn;
  params.decoy_count = cells.tp + cells.fp;
  params.user_est = cfg.adversary.y_est;
  params.decoy_est = cfg.adversary.x_est;
  params.p_ob = cfg.p_ob;
  params.epsilon = cfg.epsilon;
  evaluation::DoubtReport doubt = evaluation::doubt_attained(verdict, origins, params, cfg.epsilon);

  std::ostringstream report;
  report << "searches: " << truth.size() << " (" << params.user_count << " user, "
         << params.decoy_count << " decoy)\n"
         << "confusion: tp " << cells.tp << " fp " << cells.fp << " tn " << cells.tn << " fn "
         << cells.fn << "\n"
         << "tnr " << tsv::format_double(tnr) << "\n";
  if (res.alpha)
    report << "alpha " << tsv::format_double(*res.alpha) << " (beta " << tsv::format_double(beta)
           << ")\n";
  else
    report << "alpha unattained (no flag set reaches beta " << tsv::format_double(beta) << ")\n";
  report << "doubt " << (doubt.overall ? "attained" : "violated") << " (epsilon "
         << tsv::format_double(cfg.epsilon) << ", p_ob " << tsv::format_double(cfg.p_ob) << ")\n";

  fs::path out = out_override.empty()
                     ? fs::path(verdict_path).parent_path() / "evaluation.txt"
                     : fs::path(out_override);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out) << report.str();

  std::vector<evaluation::MetricRow> rows = {
      {"tnr", "run", tnr},
      {"alpha", "run", res.alpha ? *res.alpha : -1.0},
      {"doubt", "run", doubt.overall ? 1.0 : 0.0},
      {"tp", "run", static_cast<double>(cells.tp)},
      {"fp", "run", static_cast<double>(cells.fp)},
      {"tn", "run", static_cast<double>(cells.tn)},
      {"fn", "run", static_cast<double>(cells.fn)},
  };
  fs::path metrics = out.parent_path() / "metrics.tsv";
  evaluation::write_metrics(metrics.string(), rows);

  std::cout << report.str() << "report: " << out.string() << "\nmetrics: " << metrics.string()
            << "\n";
  return 0;
}

int cmd_report(const config::RunConfig& cfg, const std::string& run_dir,
               const std::string& out_override) {
  fs::path dir(run_dir);
  fs::path log_path = dir / "queries.tsv";
  if (!fs::exists(log_path))
    throw std::invalid_argument("report: " + log_path.string() + " not found");

  auto records = querylog::read_query_log(log_path.string());
  std::ostringstream report;
  report << "run directory: " << dir.string() << "\n";
  report << "visible searches: " << records.size() << "\n";
  if (!records.empty()) {
    double span = records.back().timestamp - records.front().timestamp;
    report << "log span: " << tsv::format_double(span / 86400.0) << " day(s)\n";
  }

  fs::path truth_path = dir / "queries_truth.tsv";
  if (fs::exists(truth_path)) {
    auto truth = querylog::read_query_log(truth_path.string(), true);
    std::size_t decoys = 0;
    for (auto& r : truth) decoys += r.origin == QueryOrigin::decoy ? 1u : 0u;
    double hours = truth.empty() ? 0.0
                                 : (truth.back().timestamp - truth.front().timestamp) / 3600.0;
    report << "ground truth: " << truth.size() - decoys << " user, " << decoys << " decoy\n";
    if (hours > 0.0 && cfg.users > 0)
      report << "decoy rate: "
             << tsv::format_double(static_cast<double>(decoys) / hours /
                                   static_cast<double>(cfg.users))
             << " per hour per user\n";
  }

  for (int u = 1; u <= cfg.users; ++u) {
    fs::path plan_path = dir / ("u" + std::to_string(u)) / "plan.json";
    if (!fs::exists(plan_path)) continue;
    nlohmann::json plan = nlohmann::json::parse(slurp(plan_path.string()));
    report << "u" << u << " plan: " << plan.value("mode", std::string("?")) << ", "
           << plan.value("target_topics", std::vector<std::string>{}).size() << " topics, rate "
           << tsv::format_double(plan.value("rate_per_hour", 0.0)) << "/h, min decoys "
           << plan.value("min_decoys_needed", 0ll) << ", doubt level "
           << tsv::format_double(plan.value("reasonable_doubt", 0.0)) << "\n";
  }

  fs::path metrics_path = dir / "metrics.tsv";
  if (fs::exists(metrics_path)) {
    for (auto& row : evaluation::read_metrics(metrics_path.string()))
      report << "metric " << row.metric << " = " << tsv::format_double(row.value) << "\n";
  }

  fs::path out = out_override.empty() ? dir / "report.txt" : fs::path(out_override);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out) << report.str();
  std::cout << report.str() << "report: " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"search-log obfuscation workbench"};
  app.require_subcommand(1);

  std::string config_path, out_path, engine_addr, log_path, verdict_path, truth_path, run_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* corpus_cmd = app.add_subcommand("corpus-build", "build keyword pools from the config's feeds");
  corpus_cmd->add_option("--config", config_path, "run config (json)")->required();
  corpus_cmd->add_option("--out", out_path, "pool output directory");

  auto* sim_cmd = app.add_subcommand("simulate", "simulate users plus decoys and write the logs");
  sim_cmd->add_option("--config", config_path, "run config (json)")->required();
  sim_cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  sim_cmd->add_option("--out", out_path, "run output directory");
  sim_cmd->add_option("--engine-addr", engine_addr,
                      "replay against a live engine (http://host:port) instead of in-process");

  auto* attack_cmd = app.add_subcommand("attack", "filter a visible query log");
  attack_cmd->add_option("log", log_path, "visible query log (queries.tsv)")->required();
  attack_cmd->add_option("--config", config_path, "run config (json)")->required();
  attack_cmd->add_option("--out", out_path, "verdict output path");

  auto* eval_cmd = app.add_subcommand("evaluate", "score a verdict against ground truth");
  eval_cmd->add_option("verdict", verdict_path, "verdict file from attack")->required();
  eval_cmd->add_option("truth", truth_path, "ground-truth sidecar (queries_truth.tsv)")->required();
  eval_cmd->add_option("--config", config_path, "run config (json)")->required();
  eval_cmd->add_option("--out", out_path, "report output path");

  auto* report_cmd = app.add_subcommand("report", "summarize a finished run directory");
  report_cmd->add_option("run_dir", run_dir, "directory written by simulate/evaluate")->required();
  report_cmd->add_option("--config", config_path, "run config (json)")->required();
  report_cmd->add_option("--out", out_path, "report output path");

  CLI11_PARSE(app, argc, argv);

  try {
    config::RunConfig cfg = config::load_run_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (corpus_cmd->parsed()) return cmd_corpus_build(cfg, out_path);
    if (sim_cmd->parsed()) return cmd_simulate(cfg, out_path, engine_addr);
    if (attack_cmd->parsed()) return cmd_attack(cfg, log_path, out_path);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, verdict_path, truth_path, out_path);
    if (report_cmd->parsed()) return cmd_report(cfg, run_dir, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

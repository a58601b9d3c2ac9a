// Release gate. Seven checks, each ending in one "[ACCEPT] criterion N:
// PASS/FAIL" line; the suite fails if any line says FAIL. Everything runs on
// the shipped sample data and the library defaults, so a green run here means
// the tool as configured out of the box holds its promises.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chaff/adversary.hpp"
#include "chaff/audit.hpp"
#include "chaff/config.hpp"
#include "chaff/corpus.hpp"
#include "chaff/engine_template.hpp"
#include "chaff/evaluation.hpp"
#include "chaff/mockengine.hpp"
#include "chaff/obfuscator.hpp"
#include "chaff/replay.hpp"
#include "chaff/simulate.hpp"
#include "chaff/stats.hpp"
#include "trace_defects.hpp"

namespace {

using namespace chaff;
using Clock = std::chrono::steady_clock;

void accept(int n, bool pass) {
  std::printf("[ACCEPT] criterion %d: %s\n", n, pass ? "PASS" : "FAIL");
  EXPECT_TRUE(pass);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// The default run: sample config, one user, one simulated week.
struct DefaultRun {
  config::RunConfig cfg;
  topics::TopicUniverse universe;
  corpus::PoolSet base_pools;
  engine::EngineTemplate tmpl;
  simulate::SimOptions opts;
  simulate::SimulationResult sim;
  std::vector<sidechannel::SearchTrace> traces;
  double build_seconds = 0.0;
};

const DefaultRun& default_run() {
  static DefaultRun run = [] {
    auto t0 = Clock::now();
    DefaultRun r;
    r.cfg = config::load_run_config(std::string(CHAFF_DATA_DIR) + "/config_default.json");
    r.universe = config::universe_for(r.cfg);
    for (auto& f : r.cfg.feeds) {
      std::ifstream in(f.path);
      std::ostringstream buf;
      buf << in.rdbuf();
      r.base_pools[f.topic] = corpus::build_pool(corpus::parse_feed(buf.str(), f.topic), f.topic, 3);
    }
    r.tmpl = engine::load_engine_template(r.cfg.engine_template_file);
    r.opts = config::sim_options_for(r.cfg, r.base_pools);
    r.sim = simulate::run_simulation(r.universe, r.opts, config::user_seed(r.cfg, 0));
    r.traces = simulate::build_traces(r.sim, r.tmpl, r.opts, 42);
    r.build_seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

std::vector<adversary::LogQuery> visible_log(const std::vector<sidechannel::SearchTrace>& traces,
                                             bool user_only) {
  std::vector<adversary::LogQuery> out;
  for (auto& tr : traces) {
    if (user_only && tr.query.origin != QueryOrigin::user) continue;
    std::vector<int> ranks;
    for (auto& c : tr.clicks) ranks.push_back(c.rank);
    out.push_back({tr.query.timestamp, mockengine::session_key_of(tr.headers), tr.query.text,
                   std::move(ranks)});
  }
  return out;
}

// 1. The closed form agrees with a first-principles scan of the deniability
// inequality over the whole estimate/count grid.
TEST(Acceptance, Criterion1GuaranteeMath) {
  auto t0 = Clock::now();
  auto brute = [](long long y_est, double p_ob, double eps, long long y) {
    for (long long x = 0;; ++x)
      if (static_cast<double>(x + y - y_est) * p_ob >= eps * static_cast<double>(x + y)) return x;
  };
  const std::pair<double, double> settings[9] = {{1.0, 0.5},  {1.0, 0.25}, {1.0, 0.9},
                                                 {0.9, 0.5},  {0.8, 0.4},  {0.75, 0.25},
                                                 {0.6, 0.3},  {0.5, 0.25}, {0.3, 0.1}};
  long long mismatches = 0;
  for (auto [p_ob, eps] : settings)
    for (long long y_est = 0; y_est <= 200; ++y_est)
      for (long long y = 0; y <= 200; ++y)
        if (obfuscator::min_decoys(y_est, p_ob, eps, y) != brute(y_est, p_ob, eps, y))
          ++mismatches;
  EXPECT_EQ(mismatches, 0);

  // The cautious adversary assumes a single real query; two genuine searches
  // already clear the bound with no decoys at all.
  for (long long y : {2, 10, 200}) EXPECT_EQ(obfuscator::min_decoys(1, 1.0, 0.5, y), 0);
  EXPECT_GT(obfuscator::min_decoys(1, 1.0, 0.5, 1), 0);

  double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 10.0) << elapsed << "s";
  accept(1, !::testing::Test::HasFailure());
}

// 2. Aggregating the eight published per-test profile results lands on the
// published run averages at two decimals.
TEST(Acceptance, Criterion2MetricArithmetic) {
  std::vector<double> impacts = {0.47, 0.09, 0.50, 0.50, 0.57, 0.35, 0.43, 0.57};
  std::vector<double> precisions = {0.41, 0.03, 0.11, 0.10, 0.12, 0.31, 0.08, 0.44};
  EXPECT_DOUBLE_EQ(stats::round2(stats::mean(impacts)), 0.44);
  EXPECT_DOUBLE_EQ(stats::round2(stats::mean(precisions)), 0.20);
  accept(2, !::testing::Test::HasFailure());
}

// 3. One simulated week: decoys match the user on topic frequencies,
// inter-arrival shape, and every adversary-computable feature.
TEST(Acceptance, Criterion3Indistinguishability) {
  auto t0 = Clock::now();
  const DefaultRun& run = default_run();
  ASSERT_GT(run.sim.user_queries.size(), 400u);
  ASSERT_LT(run.sim.user_queries.size(), 600u);
  ASSERT_GT(run.sim.decoys.size(), 400u);
  ASSERT_LT(run.sim.decoys.size(), 600u);

  std::map<std::string, std::int64_t> user_topics, decoy_topics;
  for (auto& q : run.sim.user_queries) user_topics[q.topic_id]++;
  for (auto& q : run.sim.decoys) decoy_topics[q.topic_id]++;
  auto chi2 = stats::chi2_two_sample(user_topics, decoy_topics);
  EXPECT_LT(chi2.statistic, stats::chi2_critical(chi2.df, 0.01))
      << "topic chi2 " << chi2.statistic << " df " << chi2.df;

  auto gaps = [](const std::vector<Query>& qs) {
    std::vector<double> out;
    for (std::size_t i = 1; i < qs.size(); ++i) out.push_back(qs[i].timestamp - qs[i - 1].timestamp);
    return out;
  };
  auto ug = gaps(run.sim.user_queries);
  auto dg = gaps(run.sim.decoys);
  double d = stats::ks_statistic(ug, dg);
  EXPECT_LT(d, stats::ks_critical(ug.size(), dg.size(), 0.01)) << "inter-arrival KS " << d;

  // Features under the best-informed extractor: the generator's own pools.
  auto mixed = visible_log(run.traces, false);
  auto user_only = visible_log(run.traces, true);
  auto m = adversary::fit_model(mixed, run.universe, run.sim.pools, 1.0, 1.0);
  auto fm = adversary::bot_features(m, mixed);
  auto fu = adversary::bot_features(m, user_only);
  auto in_band = [](const char* name, double mixed_v, double user_v) {
    if (user_v == 0.0) {
      EXPECT_EQ(mixed_v, 0.0) << name;
      return;
    }
    EXPECT_LE(std::abs(mixed_v - user_v) / std::abs(user_v), 0.10)
        << name << " mixed " << mixed_v << " user " << user_v;
  };
  in_band("query_word_entropy", fm.query_word_entropy, fu.query_word_entropy);
  in_band("keyword_length_entropy", fm.keyword_length_entropy, fu.keyword_length_entropy);
  in_band("mean_terms_per_query", fm.mean_terms_per_query, fu.mean_terms_per_query);
  in_band("duplicate_query_rate", fm.duplicate_query_rate, fu.duplicate_query_rate);
  in_band("periodicity_score", fm.periodicity_score, fu.periodicity_score);
  in_band("click_through_rate", fm.click_through_rate, fu.click_through_rate);
  in_band("topic_entropy", fm.topic_entropy, fu.topic_entropy);

  double elapsed = run.build_seconds + seconds_since(t0);
  EXPECT_LT(elapsed, 60.0) << elapsed << "s";
  accept(3, !::testing::Test::HasFailure());
}

// 4. A clean week draws zero audit flags on every channel, and each planted
// single-channel defect is caught on exactly its channel.
TEST(Acceptance, Criterion4SideChannelAudit) {
  const DefaultRun& run = default_run();
  ASSERT_GT(run.traces.size(), 950u);
  ASSERT_LT(run.traces.size(), 1100u);

  auto replay_and_audit = [&](const std::vector<sidechannel::SearchTrace>& traces) {
    mockengine::Engine engine(run.tmpl, run.opts.host);
    replay::replay_direct(replay::build_request_sequence(traces, run.tmpl, run.opts.host), engine);
    return audit::audit(engine.log(), traces, run.tmpl, run.opts.host);
  };

  audit::AuditReport clean = replay_and_audit(run.traces);
  EXPECT_EQ(clean.channels.size(), 7u);
  for (auto& [name, ch] : clean.channels) {
    EXPECT_TRUE(ch.clean()) << name << ": " << (ch.findings.empty() ? "" : ch.findings[0].detail);
  }

  using Planter = std::string (*)(std::vector<sidechannel::SearchTrace>&);
  const std::pair<const char*, Planter> planted[7] = {
      {"timing", defects::plant_timing},           {"headers", defects::plant_headers},
      {"referrer", defects::plant_referrer},       {"subresources", defects::plant_subresources},
      {"favicon", defects::plant_favicon},         {"suggestions", defects::plant_suggestions},
      {"clicks", defects::plant_clicks}};
  for (auto& [channel, plant] : planted) {
    std::vector<sidechannel::SearchTrace> mutated = run.traces;
    std::string key = plant(mutated);
    audit::AuditReport report = replay_and_audit(mutated);
    for (auto& [name, ch] : report.channels) {
      if (name == channel) {
        auto keys = ch.flagged_keys();
        EXPECT_TRUE(std::find(keys.begin(), keys.end(), key) != keys.end())
            << channel << " missed the planted search";
      } else {
        EXPECT_TRUE(ch.clean()) << "defect on " << channel << " leaked into " << name << ": "
                                << (ch.findings.empty() ? "" : ch.findings[0].detail);
      }
    }
  }
  accept(4, !::testing::Test::HasFailure());
}

// 5. Threshold sweep of the trained filter: no operating point removes decoys
// precisely without also discarding a large share of the user's real queries.
TEST(Acceptance, Criterion5FilterResiliency) {
  const DefaultRun& run = default_run();
  auto mixed = visible_log(run.traces, false);
  std::vector<bool> is_decoy;
  for (auto& tr : run.traces) is_decoy.push_back(tr.query.origin == QueryOrigin::decoy);

  auto m = adversary::fit_model(mixed, run.universe, run.base_pools, 1.0, 1.0);
  auto verdict = adversary::attack2_filter_set(m, mixed, 0.0);
  std::set<double> thresholds(verdict.scores.begin(), verdict.scores.end());

  double users_total = 0.0;
  for (bool d : is_decoy) users_total += d ? 0.0 : 1.0;
  ASSERT_GT(users_total, 0.0);

  std::size_t points = 0;
  for (double t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < verdict.scores.size(); ++i) {
      if (verdict.scores[i] < t) continue;
      (is_decoy[i] ? tp : fp) += 1.0;
    }
    if (tp + fp == 0.0) continue;
    ++points;
    double precision = tp / (tp + fp);
    double alpha = fp / users_total;
    if (precision >= 0.9) {
      EXPECT_GE(alpha, 0.3) << "threshold " << t << " filters decoys at precision " << precision
                            << " while flagging only " << alpha << " of user queries";
    }
  }
  EXPECT_GT(points, 0u);
  accept(5, !::testing::Test::HasFailure());
}

// 6. Ten users on the same config with their own seeds produce visible logs
// that barely overlap, so no cross-user signature emerges.
TEST(Acceptance, Criterion6CrossUserSimilarity) {
  const DefaultRun& run = default_run();
  std::vector<std::vector<adversary::LogQuery>> users;
  for (int u = 0; u < 10; ++u) {
    auto sim = simulate::run_simulation(run.universe, run.opts, config::user_seed(run.cfg, u));
    std::vector<adversary::LogQuery> log;
    for (auto& q : sim.combined) log.push_back({q.timestamp, "u", q.text, {}});
    users.push_back(std::move(log));
  }
  auto sims = adversary::cross_user_similarity(users);
  for (std::size_t a = 0; a < sims.size(); ++a)
    for (std::size_t b = a + 1; b < sims.size(); ++b)
      EXPECT_LT(sims[a][b], 0.05) << "users " << a << " and " << b;
  accept(6, !::testing::Test::HasFailure());
}

// 7. The default plan actually spends its configured decoy budget.
TEST(Acceptance, Criterion7RateConformance) {
  const DefaultRun& run = default_run();
  double hours = static_cast<double>(run.opts.days) * 24.0;
  double rate = static_cast<double>(run.sim.decoys.size()) / hours;
  EXPECT_GE(rate, 3.0 * 0.8) << rate;
  EXPECT_LE(rate, 3.0 * 1.2) << rate;
  accept(7, !::testing::Test::HasFailure());
}

}  // namespace

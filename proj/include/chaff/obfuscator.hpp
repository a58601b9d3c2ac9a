#pragma once

// Decoy stream generation and the privacy-guarantee arithmetic. The bound
// logic: a user query q is deniable when the adversary's joint belief that q
// is machine-generated and that obfuscation is running stays >= epsilon, which
// pins the minimum decoy volume given the adversary's population estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/corpus.hpp"
#include "chaff/query.hpp"
#include "chaff/rng.hpp"
#include "chaff/timing.hpp"
#include "chaff/topics.hpp"

namespace chaff::obfuscator {

enum class Mode { topic_exposed, topic_obfuscated };

struct ObfuscationPlan {
  Mode mode = Mode::topic_exposed;
  std::vector<std::string> target_topics;
  topics::TopicProfile topic_weights;  // over target_topics
  double rate_per_hour = 3.0;          // per engine, long-run over the horizon
  topics::KeywordFrequencyProfile keyword_profile;
  std::size_t user_topic_count = 0;

  void validate() const {
    if (!(rate_per_hour > 0.0)) throw std::invalid_argument("plan: rate must be positive");
    if (target_topics.empty()) throw std::invalid_argument("plan: no target topics");
    if (mode == Mode::topic_obfuscated && target_topics.size() <= user_topic_count)
      throw std::invalid_argument("plan: topic_obfuscated requires more targets than user topics");
    for (auto& t : target_topics)
      if (!(topic_weights.weight(t) > 0.0))
        throw std::invalid_argument("plan: target topic without weight: " + t);
  }
};

struct GuaranteeParams {
  long long user_count = 0;   // Y, ground truth
  long long decoy_count = 0;  // X, ground truth
  long long user_est = 0;     // adversary's estimate of Y
  long long decoy_est = 0;    // adversary's estimate of X
  double p_ob = 1.0;          // adversary's belief that obfuscation is running
  double epsilon = 0.5;       // deniability target
};

inline bool doubt_inequality_holds(long long x, long long y, long long y_est, double p_ob, double eps) {
  // (X + Y - Y_est) * p_ob >= eps * (X + Y), with X_est = X + Y - Y_est.
  return static_cast<double>(x + y - y_est) * p_ob >= eps * static_cast<double>(x + y);
}

// Least X such that the deniability inequality holds given the adversary
// underestimates the user count as y_est. Closed form, then nudged so the
// result agrees exactly with a brute-force scan at float boundaries.
inline long long min_decoys(long long y_est, double p_ob, double epsilon, long long y) {
  if (y_est < 0 || y < 0) throw std::invalid_argument("min_decoys: negative counts");
  if (!(p_ob > 0.0 && p_ob <= 1.0)) throw std::invalid_argument("min_decoys: p_ob out of (0,1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("min_decoys: epsilon must be positive");
  if (epsilon >= p_ob)
    throw std::invalid_argument("min_decoys: epsilon >= p_ob makes the bound infinite");
  double v = static_cast<double>(y_est) * p_ob / (p_ob - epsilon) - static_cast<double>(y);
  long long x = v <= 0.0 ? 0 : static_cast<long long>(std::ceil(v - 1e-9));
  if (x < 0) x = 0;
  while (x > 0 && doubt_inequality_holds(x - 1, y, y_est, p_ob, epsilon)) --x;
  while (!doubt_inequality_holds(x, y, y_est, p_ob, epsilon)) ++x;
  return x;
}

// Joint probability that a query is flagged as generated and obfuscation is
// suspected, under generated-query indistinguishability: p_ob * X~/(X~+Y~).
inline double reasonable_doubt(const GuaranteeParams& p) {
  if (p.decoy_est < 0 || p.user_est < 0) throw std::invalid_argument("reasonable_doubt: negative estimates");
  if (p.decoy_est + p.user_est <= 0)
    throw std::invalid_argument("reasonable_doubt: estimates sum to zero");
  if (!(p.p_ob >= 0.0 && p.p_ob <= 1.0)) throw std::invalid_argument("reasonable_doubt: p_ob out of [0,1]");
  return p.p_ob * static_cast<double>(p.decoy_est) /
         static_cast<double>(p.decoy_est + p.user_est);
}

namespace detail {

// Per-topic sampling tables. Base draws use pool weight times the n-gram
// length popularity the user exhibits; the repetition table additionally
// blends in the user's observed in-topic keyword frequencies so emulated
// repeats land on plausible hot keywords.
struct TopicTable {
  std::vector<const std::string*> terms;
  std::vector<double> weights;
  std::vector<double> rep_weights;
};

inline std::map<std::string, TopicTable> build_tables(const ObfuscationPlan& plan,
                                                      const corpus::PoolSet& pools) {
  std::map<std::string, TopicTable> tables;
  for (const std::string& topic : plan.target_topics) {
    if (!(plan.topic_weights.weight(topic) > 0.0)) continue;
    auto pit = pools.find(topic);
    if (pit == pools.end() || pit->second.empty())
      throw std::invalid_argument("generate_decoys: empty pool for topic " + topic);
    const corpus::KeywordPool& pool = pit->second;
    const std::map<std::string, double>* user_freq = nullptr;
    if (auto uit = plan.keyword_profile.per_topic.find(topic);
        uit != plan.keyword_profile.per_topic.end())
      user_freq = &uit->second;
    TopicTable table;
    table.terms.reserve(pool.entries.size());
    table.weights.reserve(pool.entries.size());
    for (auto& [term, weight] : pool.entries) {
      double w = weight;
      if (!plan.keyword_profile.ngram_popularity.empty()) {
        int words = 1;
        for (char c : term)
          if (c == ' ') ++words;
        auto bit = plan.keyword_profile.ngram_popularity.find(words);
        w *= bit == plan.keyword_profile.ngram_popularity.end() ? 0.0 : bit->second;
      }
      if (w > 0.0) {
        double uf = 0.0;
        if (user_freq) {
          auto fit = user_freq->find(term);
          uf = fit == user_freq->end() ? 0.0 : fit->second;
        }
        table.terms.push_back(&term);
        table.weights.push_back(w);
        table.rep_weights.push_back(0.5 * w + 0.5 * uf);
      }
    }
    if (table.terms.empty())
      throw std::invalid_argument("generate_decoys: empty pool for topic " + topic +
                                  " after keyword-profile reweighting");
    tables.emplace(topic, std::move(table));
  }
  return tables;
}

}  // namespace detail

// One decoy per scheduled timestamp. Topic by plan weight, text by the topic's
// reweighted pool; a post-pass replays the user's keyword-repetition pattern
// onto randomly chosen decoy slots so repeat statistics match.
inline std::vector<Query> generate_decoys(const ObfuscationPlan& plan, std::span<const double> schedule,
                                          const corpus::PoolSet& pools, std::uint64_t seed) {
  plan.validate();
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] < schedule[i - 1]) throw std::invalid_argument("generate_decoys: unsorted schedule");
  auto tables = detail::build_tables(plan, pools);

  std::vector<std::string> topic_ids;
  std::vector<double> topic_weights;
  for (auto& [topic, table] : tables) {
    topic_ids.push_back(topic);
    topic_weights.push_back(plan.topic_weights.weight(topic));
  }

  Rng rng(seed);
  std::vector<Query> out;
  out.reserve(schedule.size());
  std::map<std::string, std::vector<std::size_t>> slots_by_topic;
  for (double t : schedule) {
    const std::string& topic = topic_ids[rng.discrete(topic_weights)];
    const detail::TopicTable& table = tables.at(topic);
    const std::string& term = *table.terms[rng.discrete(table.weights)];
    slots_by_topic[topic].push_back(out.size());
    out.push_back(Query::make(term, topic, t, QueryOrigin::decoy));
  }

  // Repetition emulation: for each user-observed repeat count c, pick one
  // decoy keyword and force c occurrences of it within its topic.
  Rng rep_rng = rng.fork(0x9e3779b9);
  for (int count : plan.keyword_profile.repetition_counts) {
    if (count < 2 || out.empty()) continue;
    const std::string& topic = topic_ids[rep_rng.discrete(topic_weights)];
    auto& slots = slots_by_topic[topic];
    if (slots.size() < 2) continue;
    const detail::TopicTable& table = tables.at(topic);
    const std::string& term = *table.terms[rep_rng.discrete(table.rep_weights)];
    std::size_t reps = std::min<std::size_t>(static_cast<std::size_t>(count), slots.size());
    std::vector<std::size_t> chosen(slots);
    rep_rng.shuffle(chosen);
    for (std::size_t i = 0; i < reps; ++i) {
      Query& q = out[chosen[i]];
      q.text = term;
      q.terms = tokenize(term);
    }
  }

  // A bare one-word query whose word shows up nowhere else in the stream is
  // the cheapest thing a frequency filter can cut with no collateral damage,
  // so such slots are re-texted onto a word the stream already uses.
  Rng one_rng = rng.fork(0x0be50107);
  std::map<std::string, int> word_counts;
  for (Query& q : out)
    for (auto& w : q.terms) word_counts[w]++;
  for (Query& q : out) {
    if (q.terms.size() != 1 || word_counts[q.terms[0]] >= 2) continue;
    std::vector<const std::string*> donors;
    for (Query& other : out)
      if (&other != &q && other.topic_id == q.topic_id && other.terms.size() == 1 &&
          other.text != q.text)
        donors.push_back(&other.text);
    const std::string* text = nullptr;
    if (!donors.empty()) {
      text = donors[one_rng.below(donors.size())];
    } else {
      const detail::TopicTable& table = tables.at(q.topic_id);
      double best = 0.0;
      for (std::size_t i = 0; i < table.terms.size(); ++i) {
        const std::string& term = *table.terms[i];
        if (term == q.text || term.find(' ') != std::string::npos) continue;
        if (word_counts[term] >= 1 && table.weights[i] > best) {
          best = table.weights[i];
          text = table.terms[i];
        }
      }
      if (!text) continue;  // nothing in the stream to lean on
    }
    word_counts[q.terms[0]]--;
    word_counts[*text]++;
    q.text = *text;
    q.terms = tokenize(*text);
  }
  return out;
}

struct PlanOptions {
  Mode mode = Mode::topic_exposed;
  std::size_t target_topic_count = 0;  // 0: user topics only (topic_exposed)
  double base_rate_per_hour = 3.0;
  double session_gap = timing::kDefaultSessionGap;
  std::uint64_t seed = 1;
};

// Build a plan from observed history: learn the topic/keyword profiles, size
// the decoy budget from the guarantee bound plus a seeded random surplus in
// [0, X_min] (so the adversary cannot recover X), and convert to a rate.
inline ObfuscationPlan plan_overhead(std::span<const Query> user_history, double epsilon, double p_ob,
                                     long long adversary_y_est, const topics::TopicUniverse& universe,
                                     const PlanOptions& opts) {
  if (user_history.empty()) throw std::invalid_argument("plan_overhead: empty history");
  long long y = static_cast<long long>(user_history.size());
  long long x_min = min_decoys(adversary_y_est, p_ob, epsilon, y);
  Rng rng(opts.seed);
  long long surplus = x_min > 0 ? static_cast<long long>(rng.below(static_cast<std::uint64_t>(x_min) + 1)) : 0;
  long long budget = x_min + surplus;

  double t0 = user_history.front().timestamp, t1 = t0;
  for (const Query& q : user_history) {
    t0 = std::min(t0, q.timestamp);
    t1 = std::max(t1, q.timestamp);
  }
  double horizon_hours = std::max((t1 - t0) / 3600.0, 1.0);

  ObfuscationPlan plan;
  plan.mode = opts.mode;
  plan.rate_per_hour = std::max(opts.base_rate_per_hour, static_cast<double>(budget) / horizon_hours);
  plan.keyword_profile = topics::learn_keyword_profile(user_history);
  topics::TopicProfile user_profile = topics::learn_profile(user_history, universe, t1 - t0 + 1.0);
  if (user_profile.empty())
    throw std::invalid_argument("plan_overhead: history has no queries with universe topics");
  plan.user_topic_count = user_profile.weights.size();

  if (opts.mode == Mode::topic_exposed) {
    plan.topic_weights = user_profile;
    for (auto& [t, w] : user_profile.weights) plan.target_topics.push_back(t);
  } else {
    std::size_t n = std::max<std::size_t>(opts.target_topic_count, plan.user_topic_count + 1);
    plan.target_topics = topics::select_obfuscation_topics(user_profile, universe, n, opts.seed);
    plan.topic_weights = topics::plan_topic_weights(user_profile, universe, n, opts.seed);
  }
  plan.validate();
  return plan;
}

}  // namespace chaff::obfuscator

#pragma once

// Synthetic searcher plus the obfuscation pipeline wrapped around it: builds a
// persona, emits a week of real queries, learns the plan from that history,
// schedules and generates decoys, then patches the merged stream so no search
// sits isolated on both sides. Every stage forks its randomness from one seed,
// so equal seeds give byte-identical streams.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/corpus.hpp"
#include "chaff/obfuscator.hpp"
#include "chaff/query.hpp"
#include "chaff/rng.hpp"
#include "chaff/sidechannel.hpp"
#include "chaff/timeutil.hpp"
#include "chaff/timing.hpp"
#include "chaff/topics.hpp"

namespace chaff::simulate {

// -------------------------------------------------------------------------
// Vocabulary. Query texts are composed from two word banks per topic: a
// shared bank every simulated user sees (feed-derived when pools are
// available) and a persona bank seeded per user. Each composed query carries
// at least one persona word, which keeps two users' visible query sets
// essentially disjoint no matter how much config they share.

inline std::string synth_word(Rng& rng) {
  static constexpr std::array<const char*, 18> onset = {"b",  "d",  "f",  "g",  "k",  "l",
                                                        "m",  "n",  "p",  "r",  "s",  "t",
                                                        "v",  "z",  "br", "st", "tr", "kl"};
  static constexpr std::array<const char*, 6> nucleus = {"a", "e", "i", "o", "u", "ia"};
  static constexpr std::array<const char*, 8> coda = {"", "", "n", "r", "s", "l", "k", "m"};
  int syllables = 2 + static_cast<int>(rng.below(2));
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    w += onset[rng.below(onset.size())];
    w += nucleus[rng.below(nucleus.size())];
    if (s + 1 == syllables) w += coda[rng.below(coda.size())];
  }
  return w;
}

inline std::vector<std::string> word_bank(std::uint64_t salt, std::size_t count,
                                          const std::set<std::string>* banned = nullptr) {
  Rng rng(salt);
  std::vector<std::string> out;
  std::map<std::string, bool> seen;
  while (out.size() < count) {
    std::string w = synth_word(rng);
    if (!seen[w] && (!banned || !banned->count(w))) {
      seen[w] = true;
      out.push_back(w);
    }
  }
  return out;
}

// Every distinct lowercased word across the base pools. Private banks draw
// away from this set: a synthetic word that lands on public feed vocabulary
// hands a word-frequency model real probability mass on a query nothing else
// ties to the feeds.
inline std::set<std::string> pool_vocabulary(const corpus::PoolSet& base_pools) {
  std::set<std::string> vocab;
  for (auto& [topic, pool] : base_pools)
    for (auto& [term, w] : pool.entries)
      for (auto& tok : tokenize(term)) vocab.insert(fold_case(tok));
  return vocab;
}

inline std::uint64_t topic_salt(const std::string& topic_id) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : topic_id) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  return h;
}

// Shared bank for a topic: the distinct lowercased words of its base pool when
// one is present, a deterministic synthetic bank otherwise. Identical across
// users by construction.
inline std::vector<std::string> shared_topic_words(const corpus::PoolSet& base_pools,
                                                   const std::string& topic_id,
                                                   std::size_t fallback_count) {
  auto it = base_pools.find(topic_id);
  if (it != base_pools.end() && !it->second.empty()) {
    std::vector<std::string> words;
    std::map<std::string, bool> seen;
    for (auto& [term, w] : it->second.entries)
      for (auto& tok : tokenize(term)) {
        std::string folded = fold_case(tok);
        if (!seen[folded]) {
          seen[folded] = true;
          words.push_back(folded);
        }
      }
    std::sort(words.begin(), words.end());
    if (!words.empty()) return words;
  }
  std::set<std::string> banned = pool_vocabulary(base_pools);
  return word_bank(topic_salt(topic_id) ^ 0x5eedba5eull, fallback_count, &banned);
}

struct TopicVocab {
  std::vector<std::string> persona_words;  // per user, never shared across seeds
  std::vector<std::string> shared_words;
};

// One query text: n words, one slot forced to a persona word, remaining slots
// an even mix of both banks. The forced slot is what keeps users disjoint.
inline std::string compose_query_text(Rng& rng, const TopicVocab& vocab, int n_words) {
  if (n_words < 1) throw std::invalid_argument("compose_query_text: need at least one word");
  if (vocab.persona_words.empty()) throw std::invalid_argument("compose_query_text: empty persona bank");
  std::size_t forced = rng.below(static_cast<std::size_t>(n_words));
  std::string out;
  for (int i = 0; i < n_words; ++i) {
    if (i) out += ' ';
    bool persona = static_cast<std::size_t>(i) == forced || vocab.shared_words.empty() ||
                   rng.below(2) == 0;
    const auto& bank = persona ? vocab.persona_words : vocab.shared_words;
    out += bank[rng.below(bank.size())];
  }
  return out;
}

// -------------------------------------------------------------------------
// Persona and the real-query stream.

struct UserModel {
  int topic_min = 2;
  int topic_max = 3;
  std::size_t persona_words_per_topic = 150;
  std::size_t shared_words_per_topic = 60;
  double queries_per_week = 500.0;
  double repeat_rate = 0.12;                                // re-issue an earlier search
  std::array<double, 3> length_weights = {0.05, 0.55, 0.40};  // 1/2/3-word queries
  // Two sitting blocks per day; lengths in hours, starts jittered.
  double block_start_hours[2] = {9.0, 20.0};
  double block_length_hours[2] = {2.0, 2.5};
};

struct Persona {
  std::vector<std::string> topics;  // root topic ids
  std::vector<double> weights;      // same order, sums to 1
  std::map<std::string, TopicVocab> vocab;
};

inline Persona make_persona(const topics::TopicUniverse& universe, const UserModel& model,
                            const corpus::PoolSet& base_pools, std::uint64_t seed) {
  if (model.topic_min < 1 || model.topic_max < model.topic_min)
    throw std::invalid_argument("make_persona: bad topic count range");
  std::vector<std::string> roots;
  for (const topics::Topic* t : universe.roots()) roots.push_back(t->id);
  if (roots.size() < static_cast<std::size_t>(model.topic_max))
    throw std::invalid_argument("make_persona: universe has too few root topics");

  Rng rng(seed);
  rng.shuffle(roots);
  int count = model.topic_min + static_cast<int>(rng.below(
                                    static_cast<std::size_t>(model.topic_max - model.topic_min + 1)));
  Persona p;
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    double w = rng.uniform(0.2, 1.0);
    w *= w;  // squared draw: one or two interests dominate, like real profiles
    p.topics.push_back(roots[static_cast<std::size_t>(i)]);
    p.weights.push_back(w);
    total += w;
  }
  for (double& w : p.weights) w /= total;
  std::set<std::string> banned = pool_vocabulary(base_pools);
  for (auto& topic : p.topics) {
    TopicVocab v;
    v.persona_words = word_bank(rng.next_u64(), model.persona_words_per_topic, &banned);
    v.shared_words = shared_topic_words(base_pools, topic, model.shared_words_per_topic);
    p.vocab[topic] = v;
  }
  return p;
}

// Vocabulary for a topic the persona was not built with (obfuscated-mode noise
// topics). Persona words still derive from the user seed so the disjointness
// guarantee holds for decoys too.
inline TopicVocab noise_topic_vocab(const UserModel& model, const corpus::PoolSet& base_pools,
                                    const std::string& topic_id, std::uint64_t user_seed) {
  TopicVocab v;
  std::set<std::string> banned = pool_vocabulary(base_pools);
  v.persona_words = word_bank(splitmix64(user_seed ^ topic_salt(topic_id)),
                              model.persona_words_per_topic, &banned);
  v.shared_words = shared_topic_words(base_pools, topic_id, model.shared_words_per_topic);
  return v;
}

// The week of real searches: per day two sitting blocks, inside a block
// queries arrive at uniform gaps centered on the pace that meets
// queries_per_week. Every block emits at least two searches so no real
// session reads as a lone isolated hit.
inline std::vector<Query> user_stream(const Persona& persona, const UserModel& model, double start,
                                      int days, std::uint64_t seed) {
  if (days < 1) throw std::invalid_argument("user_stream: need at least one day");
  if (model.queries_per_week <= 0.0)
    throw std::invalid_argument("user_stream: queries_per_week must be positive");
  Rng rng(seed);

  struct Block {
    double begin, length;
  };
  std::vector<Block> blocks;
  double active_total = 0.0;
  for (int d = 0; d < days; ++d)
    for (int b = 0; b < 2; ++b) {
      double begin = start + d * 86400.0 +
                     (model.block_start_hours[b] + rng.uniform(-0.75, 0.75)) * 3600.0;
      double length = model.block_length_hours[b] * 3600.0 * rng.uniform(0.8, 1.25);
      blocks.push_back({begin, length});
      active_total += length;
    }
  double target = model.queries_per_week * (static_cast<double>(days) / 7.0);
  double mean_gap = active_total / target;

  std::vector<Query> out;
  std::vector<double> lengths(model.length_weights.begin(), model.length_weights.end());
  for (auto& block : blocks) {
    double t = block.begin;
    double end = block.begin + block.length;
    int emitted = 0;
    while (t < end || emitted < 2) {
      std::string topic = persona.topics[rng.discrete(persona.weights)];
      std::string text;
      if (!out.empty() && rng.uniform(0.0, 1.0) < model.repeat_rate) {
        const Query& old = out[rng.below(out.size())];
        text = old.text;
        topic = old.topic_id;
      } else {
        int n = 1 + static_cast<int>(rng.discrete(lengths));
        text = compose_query_text(rng, persona.vocab.at(topic), n);
      }
      out.push_back(Query::make(text, topic, t, QueryOrigin::user));
      ++emitted;
      t += rng.uniform(0.15 * mean_gap, 1.85 * mean_gap);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Query& a, const Query& b) { return a.timestamp < b.timestamp; });
  return out;
}

// -------------------------------------------------------------------------
// Decoy pools. A user's decoys draw from the same two banks as their real
// searches, composed into a large flat pool: big enough that accidental
// repeats stay rare, flat so the plan's learned length mix does the shaping.
// Entries are never a single word: a bare query's one word carries the whole
// likelihood, and on an off night it can float above every real search.

inline corpus::KeywordPool decoy_pool(const TopicVocab& vocab, const std::string& topic_id,
                                      std::size_t size, std::uint64_t seed) {
  if (size == 0) throw std::invalid_argument("decoy_pool: size must be positive");
  Rng rng(seed);
  std::map<std::string, double> counts;
  for (std::size_t i = 0; i < size; ++i) {
    int n = 2 + static_cast<int>(rng.below(2));
    counts[compose_query_text(rng, vocab, n)] += 1.0;
  }
  corpus::KeywordPool pool;
  pool.topic_id = topic_id;
  pool.source = corpus::PoolSource::tfidf_generated;
  double total = static_cast<double>(size);
  for (auto& [term, c] : counts) pool.entries.emplace_back(term, c / total);
  return pool;  // map iteration already sorted by term
}

// -------------------------------------------------------------------------
// Whole-run orchestration.

struct SimOptions {
  double start = timeutil::kDefaultOrigin;
  int days = 7;
  UserModel user;
  corpus::PoolSet base_pools;  // feed-built shared vocab; empty means synthetic banks

  double decoy_rate_per_hour = 3.0;  // 0 disables obfuscation entirely
  double epsilon = 0.5;
  double p_ob = 1.0;
  long long adversary_y_est = 1;
  obfuscator::Mode mode = obfuscator::Mode::topic_exposed;
  std::size_t plan_topic_count = 0;  // forwarded to the planner; 0 keeps user topics
  std::size_t decoy_pool_size = 20000;
  timing::BurstPolicy bursts{{{0, 0.92}, {1, 0.05}, {2, 0.02}, {3, 0.01}}, 600.0};

  sidechannel::ClickModel clicks{0.25, 1.5, 10};
  std::string session_key = "u1";
  std::string host = "engine.test";
};

struct SimulationResult {
  Persona persona;
  std::vector<Query> user_queries;
  std::vector<Query> decoys;    // scheduled + burst + companion, time-sorted
  std::vector<Query> combined;  // both origins merged, strictly increasing timestamps
  obfuscator::ObfuscationPlan plan;
  corpus::PoolSet pools;  // per-user decoy pools, keyed by topic
  timing::TimingProfile timing;
};

inline double expected_burst_size(const timing::BurstPolicy& policy) {
  double mass = 0.0, mean = 0.0;
  for (auto& [k, w] : policy.burst_size) {
    mass += w;
    mean += k * w;
  }
  return mass > 0.0 ? mean / mass : 0.0;
}

namespace detail {

inline void sort_queries(std::vector<Query>& qs) {
  std::sort(qs.begin(), qs.end(), [](const Query& a, const Query& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.text < b.text;
  });
}

// Shift decoys so no two searches of the one session share a timestamp; the
// engine log keys searches by (session, time, text) and an exact tie would
// glue two footprints together.
inline void separate_timestamps(std::vector<Query>& combined) {
  for (std::size_t i = 1; i < combined.size(); ++i)
    if (combined[i].timestamp - combined[i - 1].timestamp < 1.0)
      combined[i].timestamp = combined[i - 1].timestamp + 1.0;
}

// A search with no neighbor within the session gap on either side reads as
// automation. Companion decoys close those holes; a companion lands 90s out,
// so it can never become isolated itself. Each companion re-issues the search
// it shields: fresh text here would be the only vocabulary in its session,
// exactly the shape a frequency filter prices cheapest.
inline std::vector<Query> companion_decoys(const std::vector<Query>& combined,
                                           double session_gap) {
  std::vector<Query> extra;
  for (std::size_t i = 0; i < combined.size(); ++i) {
    double prev = i == 0 ? session_gap : combined[i].timestamp - combined[i - 1].timestamp;
    double next = i + 1 == combined.size() ? session_gap
                                           : combined[i + 1].timestamp - combined[i].timestamp;
    if (prev >= session_gap && next >= session_gap) {
      Query c = combined[i];
      c.timestamp += 90.0;
      c.origin = QueryOrigin::decoy;
      extra.push_back(std::move(c));
    }
  }
  return extra;
}

}  // namespace detail

inline SimulationResult run_simulation(const topics::TopicUniverse& universe, const SimOptions& opts,
                                       std::uint64_t seed) {
  if (opts.decoy_rate_per_hour < 0.0)
    throw std::invalid_argument("run_simulation: negative decoy rate");
  Rng rng(seed);
  std::uint64_t persona_seed = rng.fork(1).next_u64();
  std::uint64_t stream_seed = rng.fork(2).next_u64();

  SimulationResult res;
  res.persona = make_persona(universe, opts.user, opts.base_pools, persona_seed);
  res.user_queries = user_stream(res.persona, opts.user, opts.start, opts.days, stream_seed);
  res.timing = timing::learn_timing(res.user_queries, timing::kDefaultSessionGap);
  res.combined = res.user_queries;

  if (opts.decoy_rate_per_hour > 0.0) {
    obfuscator::PlanOptions plan_opts;
    plan_opts.mode = opts.mode;
    plan_opts.target_topic_count = opts.plan_topic_count;
    plan_opts.base_rate_per_hour = opts.decoy_rate_per_hour;
    plan_opts.seed = rng.fork(3).next_u64();
    res.plan = obfuscator::plan_overhead(res.user_queries, opts.epsilon, opts.p_ob,
                                         opts.adversary_y_est, universe, plan_opts);

    for (auto& topic : res.plan.target_topics) {
      auto it = res.persona.vocab.find(topic);
      TopicVocab vocab = it != res.persona.vocab.end()
                             ? it->second
                             : noise_topic_vocab(opts.user, opts.base_pools, topic, persona_seed);
      res.pools[topic] =
          decoy_pool(vocab, topic, opts.decoy_pool_size, rng.fork(4).next_u64() ^ topic_salt(topic));
    }

    double horizon = static_cast<double>(opts.days) * 86400.0;
    double burst_load =
        expected_burst_size(opts.bursts) * static_cast<double>(res.user_queries.size());
    double sched_rate = std::max(res.plan.rate_per_hour - burst_load / (horizon / 3600.0),
                                 0.25 * res.plan.rate_per_hour);
    std::vector<double> schedule = timing::sample_schedule(res.timing, opts.start, horizon,
                                                           sched_rate, 0.15, rng.fork(5).next_u64());
    Rng burst_rng = rng.fork(6);
    for (auto& q : res.user_queries)
      for (double t : timing::trigger_burst(opts.bursts, q.timestamp, burst_rng.next_u64()))
        schedule.push_back(t);
    std::sort(schedule.begin(), schedule.end());

    res.decoys = obfuscator::generate_decoys(res.plan, schedule, res.pools, rng.fork(7).next_u64());
    res.combined.insert(res.combined.end(), res.decoys.begin(), res.decoys.end());
    detail::sort_queries(res.combined);
    detail::separate_timestamps(res.combined);

    std::vector<double> fixups =
        detail::isolation_fixups(res.combined, timing::kDefaultSessionGap);
    if (!fixups.empty()) {
      std::vector<Query> extra =
          obfuscator::generate_decoys(res.plan, fixups, res.pools, rng.fork(8).next_u64());
      res.decoys.insert(res.decoys.end(), extra.begin(), extra.end());
      res.combined.insert(res.combined.end(), extra.begin(), extra.end());
      detail::sort_queries(res.combined);
      detail::separate_timestamps(res.combined);
    }
    detail::sort_queries(res.decoys);
  }
  return res;
}

// Browser-level traces for the merged stream, one session state end to end so
// cookies, favicon reuse and referrer chains evolve the way one browser's
// would. Call with the result of run_simulation; order follows combined.
inline std::vector<sidechannel::SearchTrace> build_traces(const SimulationResult& sim,
                                                          const engine::EngineTemplate& tmpl,
                                                          const SimOptions& opts,
                                                          std::uint64_t seed) {
  sidechannel::SessionState session = sidechannel::make_session(opts.session_key, opts.host);
  Rng rng(seed);
  std::vector<sidechannel::SearchTrace> traces;
  traces.reserve(sim.combined.size());
  for (auto& q : sim.combined)
    traces.push_back(sidechannel::build_trace(q, tmpl, session, opts.clicks, rng.next_u64()));
  return traces;
}

}  // namespace chaff::simulate

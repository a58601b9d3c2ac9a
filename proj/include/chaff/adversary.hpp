#pragma once

// The filtering adversary. Everything here operates on LogQuery, a view that
// structurally cannot carry origin labels; scoring quality is judged
// elsewhere, against ground truth the adversary never sees.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/corpus.hpp"
#include "chaff/querylog.hpp"
#include "chaff/stats.hpp"
#include "chaff/text.hpp"
#include "chaff/topics.hpp"
#include "chaff/tsv.hpp"

namespace chaff::adversary {

struct LogQuery {
  double timestamp = 0.0;
  std::string session_key;
  std::string text;
  std::vector<int> clicked_ranks;

  static LogQuery from_record(const querylog::LogRecord& r) {
    return {r.timestamp, r.session_key, r.text, r.clicked_ranks};
  }
};

inline std::vector<LogQuery> strip_origins(const std::vector<querylog::LogRecord>& records) {
  std::vector<LogQuery> out;
  out.reserve(records.size());
  for (auto& r : records) out.push_back(LogQuery::from_record(r));
  return out;
}

// What the adversary believes: the published pools the generator draws from,
// a profile and word counts fitted from prior history, and count estimates
// for generated vs real traffic.
struct AdversaryModel {
  topics::TopicUniverse universe;
  corpus::PoolSet pools;
  topics::TopicProfile profile;
  std::map<std::string, double> word_counts;  // fold-cased word -> count
  double word_total = 0.0;
  std::map<std::string, double> gen_word_probs;  // word model implied by the pools
  double x_est = 1.0;  // decoys the adversary assumes are present
  double y_est = 1.0;  // real queries the adversary assumes are present

  bool informed() const {
    return !pools.empty() || !word_counts.empty() || !profile.weights.empty();
  }
};

namespace detail {

// Pool entries are n-grams but queries are scored word by word, so each
// entry's weight is split across its words; averaging over pools keeps the
// result a distribution.
inline std::map<std::string, double> pool_word_model(const corpus::PoolSet& pools) {
  std::map<std::string, double> probs;
  if (pools.empty()) return probs;
  for (auto& [topic, pool] : pools) {
    for (auto& [term, weight] : pool.entries) {
      auto words = tokenize(fold_case(term));
      if (words.empty()) continue;
      double share = weight / static_cast<double>(words.size());
      for (auto& w : words) probs[w] += share / static_cast<double>(pools.size());
    }
  }
  return probs;
}

}  // namespace detail

inline AdversaryModel fit_model(const std::vector<LogQuery>& prior_log,
                                const topics::TopicUniverse& universe, const corpus::PoolSet& pools,
                                double x_est = 1.0, double y_est = 1.0) {
  AdversaryModel m;
  m.universe = universe;
  m.pools = pools;
  m.x_est = x_est;
  m.y_est = y_est;
  m.gen_word_probs = detail::pool_word_model(pools);
  std::optional<topics::TopicClassifier> cls;
  if (!pools.empty()) cls.emplace(universe, pools);
  std::vector<Query> classified;
  classified.reserve(prior_log.size());
  for (auto& q : prior_log) {
    for (auto& w : tokenize(fold_case(q.text))) {
      m.word_counts[w] += 1.0;
      m.word_total += 1.0;
    }
    std::string topic(topics::kUnclassified);
    if (cls) topic = cls->classify(q.text).first;
    classified.push_back(Query::make(q.text, topic, q.timestamp, QueryOrigin::user));
  }
  m.profile = topics::learn_profile(classified, universe, std::numeric_limits<double>::infinity());
  return m;
}

namespace detail {

// Estimator constants. The generated-word escape is deliberately an order of
// magnitude above the user model's ceiling (1/kUserVocab): a word neither
// model explains leans generated, because the adversary trusts its picture of
// the user more than its picture of the generator.
inline constexpr double kPoolMix = 0.8;
inline constexpr double kGenVocab = 1e5;
inline constexpr double kUserAlpha = 1e-4;
inline constexpr double kUserVocab = 1e6;
inline constexpr double kTopicFloor = 0.01;
inline constexpr double kSlope = 0.35;  // logit step per bit of evidence
inline constexpr double kGrid = 0.005;

inline double quantize_score(double s) {
  double q = std::round(s / kGrid) * kGrid;
  return std::clamp(q, kGrid, 1.0 - kGrid);
}

inline double attack1_scored(const AdversaryModel& m, const topics::TopicClassifier* cls,
                             const LogQuery& q) {
  if (m.x_est < 0.0 || m.y_est < 0.0 || m.x_est + m.y_est <= 0.0)
    throw std::invalid_argument("attack1: count estimates must be nonnegative and not both zero");
  double prior = m.x_est / (m.x_est + m.y_est);
  // An uninformed adversary has nothing to condition on; its flag probability
  // is exactly its prior, untouched by the evidence machinery.
  if (!m.informed()) return prior;
  if (m.x_est == 0.0 || m.y_est == 0.0) return prior;

  double bits = 0.0;
  for (auto& w : tokenize(fold_case(q.text))) {
    double gp = (1.0 - kPoolMix) / kGenVocab;
    if (auto it = m.gen_word_probs.find(w); it != m.gen_word_probs.end())
      gp += kPoolMix * it->second;
    double c = 0.0;
    if (auto it = m.word_counts.find(w); it != m.word_counts.end()) c = it->second;
    double up = (c + kUserAlpha) / (m.word_total + kUserAlpha * kUserVocab);
    bits += std::log2(gp / up);
  }
  if (cls && !m.profile.weights.empty()) {
    auto [topic, mass] = cls->classify(q.text);
    if (topic != topics::kUnclassified) {
      double g = 1.0 / static_cast<double>(m.pools.size());
      double u = std::max(m.profile.weight(topic), kTopicFloor);
      bits += std::log2(g / u);
    }
  }
  double z = std::log(m.x_est / m.y_est) + kSlope * bits;
  return quantize_score(1.0 / (1.0 + std::exp(-z)));
}

}  // namespace detail

inline double attack1_single_query(const AdversaryModel& m, const LogQuery& q) {
  std::optional<topics::TopicClassifier> cls;
  if (!m.pools.empty()) cls.emplace(m.universe, m.pools);
  return detail::attack1_scored(m, cls ? &*cls : nullptr, q);
}

struct FilterVerdict {
  std::vector<double> scores;  // aligned with the scored log
  double threshold = 0.0;
  std::set<std::size_t> flagged;  // exactly {i : scores[i] >= threshold}
};

inline FilterVerdict make_verdict(std::vector<double> scores, double threshold) {
  FilterVerdict v;
  v.threshold = threshold;
  v.flagged.clear();
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= threshold) v.flagged.insert(i);
  v.scores = std::move(scores);
  return v;
}

inline constexpr double kSessionGapSeconds = 1800.0;
inline constexpr double kSessionBlend = 0.7;  // rest of the weight goes to the session mean

// Per-query scores smoothed within detected sessions: one generated-looking
// query drags its whole session toward suspicion and vice versa.
inline FilterVerdict attack2_filter_set(const AdversaryModel& m, const std::vector<LogQuery>& log,
                                        double threshold) {
  std::optional<topics::TopicClassifier> cls;
  if (!m.pools.empty()) cls.emplace(m.universe, m.pools);
  std::vector<double> base(log.size());
  for (std::size_t i = 0; i < log.size(); ++i)
    base[i] = detail::attack1_scored(m, cls ? &*cls : nullptr, log[i]);

  std::map<std::string, std::vector<std::size_t>> by_key;
  for (std::size_t i = 0; i < log.size(); ++i) by_key[log[i].session_key].push_back(i);
  std::vector<double> blended(base);
  for (auto& [key, idx] : by_key) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return log[a].timestamp < log[b].timestamp; });
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
      double sum = 0.0;
      for (std::size_t k = start; k < end; ++k) sum += base[idx[k]];
      double mean = sum / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k)
        blended[idx[k]] = detail::quantize_score(kSessionBlend * base[idx[k]] +
                                                 (1.0 - kSessionBlend) * mean);
      start = end;
    };
    for (std::size_t k = 1; k < idx.size(); ++k)
      if (log[idx[k]].timestamp - log[idx[k - 1]].timestamp > kSessionGapSeconds) flush(k);
    flush(idx.size());
  }
  return make_verdict(std::move(blended), threshold);
}

inline constexpr double kProfileThreshold = 0.6;

// Flags queries whose topic the prior profile makes unlikely. Scores are
// relative to the profile's strongest topic, so an even profile flags nothing
// and a never-seen topic always scores 1.
inline FilterVerdict attack3_profile_filter(const AdversaryModel& m,
                                            const std::vector<LogQuery>& new_queries,
                                            const topics::TopicProfile& prior_profile,
                                            double threshold = kProfileThreshold) {
  if (prior_profile.weights.empty())
    throw std::invalid_argument("attack3: prior profile is empty");
  std::optional<topics::TopicClassifier> cls;
  if (!m.pools.empty()) cls.emplace(m.universe, m.pools);
  double max_w = prior_profile.max_weight();
  std::vector<double> scores(new_queries.size(), 1.0);
  for (std::size_t i = 0; i < new_queries.size(); ++i) {
    if (!cls) continue;
    auto [topic, mass] = cls->classify(new_queries[i].text);
    if (topic == topics::kUnclassified) continue;
    scores[i] = 1.0 - prior_profile.weight(topic) / max_w;
  }
  return make_verdict(std::move(scores), threshold);
}

struct BotFeatureVector {
  double query_word_entropy = 0.0;
  double keyword_length_entropy = 0.0;
  double mean_terms_per_query = 0.0;
  double duplicate_query_rate = 0.0;
  double periodicity_score = 0.0;
  double click_through_rate = 0.0;
  double topic_entropy = 0.0;
};

// Reference word frequencies, one `word TAB frequency` per line; values are
// normalized into probabilities on load.
inline std::map<std::string, double> load_word_frequencies(const std::string& path) {
  tsv::Document doc = tsv::read_file(path);
  std::map<std::string, double> freq;
  double total = 0.0;
  for (auto& row : doc.rows) {
    if (row.size() != 2) throw std::runtime_error("word table " + path + ": expected 2 fields");
    double f = tsv::parse_double(row[1]);
    if (!(f > 0.0)) throw std::runtime_error("word table " + path + ": frequency must be positive");
    freq[fold_case(row[0])] += f;
    total += f;
  }
  for (auto& [w, f] : freq) f /= total;
  return freq;
}

inline constexpr double kUnlistedWordProb = 1e-9;

inline BotFeatureVector bot_features(const AdversaryModel& m, const std::vector<LogQuery>& log,
                                     const std::map<std::string, double>* word_freq = nullptr) {
  if (log.empty()) throw std::invalid_argument("bot_features: log is empty");
  std::optional<topics::TopicClassifier> cls;
  if (!m.pools.empty()) cls.emplace(m.universe, m.pools);

  BotFeatureVector f;
  std::map<std::string, double> words;
  std::map<std::size_t, double> lengths;
  std::map<std::string, double> texts;
  std::map<std::string, double> topic_counts;
  double word_total = 0.0, term_total = 0.0, clicked = 0.0;
  double cross_entropy = 0.0;
  for (auto& q : log) {
    auto toks = tokenize(fold_case(q.text));
    term_total += static_cast<double>(toks.size());
    lengths[toks.size()] += 1.0;
    texts[q.text] += 1.0;
    if (!q.clicked_ranks.empty()) clicked += 1.0;
    for (auto& w : toks) {
      words[w] += 1.0;
      word_total += 1.0;
      if (word_freq) {
        auto it = word_freq->find(w);
        cross_entropy -= std::log2(it == word_freq->end() ? kUnlistedWordProb : it->second);
      }
    }
    topic_counts[cls ? cls->classify(q.text).first : std::string(topics::kUnclassified)] += 1.0;
  }
  double n = static_cast<double>(log.size());

  auto entropy_of = [](const auto& counts, double total) {
    std::vector<double> probs;
    for (auto& [k, c] : counts) probs.push_back(c / total);
    return stats::shannon_entropy(probs);
  };
  f.query_word_entropy = word_total == 0.0 ? 0.0
                         : word_freq       ? cross_entropy / word_total
                                           : entropy_of(words, word_total);
  f.keyword_length_entropy = entropy_of(lengths, n);
  f.mean_terms_per_query = term_total / n;
  double dup = 0.0;
  for (auto& [text, c] : texts)
    if (c >= 2.0) dup += c;
  f.duplicate_query_rate = dup / n;
  f.click_through_rate = clicked / n;
  f.topic_entropy = entropy_of(topic_counts, n);

  double t0 = log[0].timestamp, t1 = log[0].timestamp;
  for (auto& q : log) {
    t0 = std::min(t0, q.timestamp);
    t1 = std::max(t1, q.timestamp);
  }
  std::vector<double> hourly(static_cast<std::size_t>((t1 - t0) / 3600.0) + 1, 0.0);
  for (auto& q : log) hourly[static_cast<std::size_t>((q.timestamp - t0) / 3600.0)] += 1.0;
  f.periodicity_score = stats::max_autocorrelation(hourly, 24);
  return f;
}

// Pairwise multiset Jaccard over (query text, clicked rank) events; a query
// with no clicks contributes (text, -1). Identical histories score 1, and a
// pair of users sharing a generator seed would stand out exactly that way.
inline std::vector<std::vector<double>> cross_user_similarity(
    const std::vector<std::vector<LogQuery>>& users) {
  if (users.size() < 2) throw std::invalid_argument("cross_user_similarity: need at least 2 users");
  using Multiset = std::map<std::pair<std::string, int>, double>;
  std::vector<Multiset> sets(users.size());
  for (std::size_t u = 0; u < users.size(); ++u)
    for (auto& q : users[u]) {
      if (q.clicked_ranks.empty()) sets[u][{q.text, -1}] += 1.0;
      for (int r : q.clicked_ranks) sets[u][{q.text, r}] += 1.0;
    }
  auto jaccard = [](const Multiset& a, const Multiset& b) {
    double inter = 0.0, uni = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
      if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
        uni += ia->second;
        ++ia;
      } else if (ia == a.end() || ib->first < ia->first) {
        uni += ib->second;
        ++ib;
      } else {
        inter += std::min(ia->second, ib->second);
        uni += std::max(ia->second, ib->second);
        ++ia;
        ++ib;
      }
    }
    return uni == 0.0 ? 1.0 : inter / uni;
  };
  std::vector<std::vector<double>> sim(users.size(), std::vector<double>(users.size(), 1.0));
  for (std::size_t i = 0; i < users.size(); ++i)
    for (std::size_t j = i + 1; j < users.size(); ++j)
      sim[i][j] = sim[j][i] = jaccard(sets[i], sets[j]);
  return sim;
}

// --- verdict files ---
// One row per scored log line, in log order. The flag column is redundant
// with threshold + score and is re-checked on read, so a hand-edited file
// cannot smuggle in a flag set the scores do not support.

inline constexpr std::string_view kVerdictHeader = "# chaff verdict v1";

inline void write_verdict(const std::string& path, const FilterVerdict& v) {
  tsv::Document doc;
  doc.comments = {std::string(kVerdictHeader), "# threshold " + tsv::format_double(v.threshold)};
  for (std::size_t i = 0; i < v.scores.size(); ++i)
    doc.rows.push_back({std::to_string(i), tsv::format_double(v.scores[i]),
                        v.flagged.count(i) ? "1" : "0"});
  tsv::write_file(path, doc);
}

inline FilterVerdict read_verdict(const std::string& path) {
  tsv::Document doc = tsv::read_file(path);
  if (doc.comments.empty() || doc.comments.front() != kVerdictHeader)
    throw std::runtime_error(path + " is not a verdict file");
  FilterVerdict v;
  bool have_threshold = false;
  for (auto& c : doc.comments)
    if (c.rfind("# threshold ", 0) == 0) {
      v.threshold = tsv::parse_double(c.substr(12));
      have_threshold = true;
    }
  if (!have_threshold) throw std::runtime_error("verdict " + path + ": missing threshold line");
  for (auto& row : doc.rows) {
    if (row.size() != 3)
      throw std::runtime_error("verdict " + path + ": expected 3 fields per row");
    std::size_t i = static_cast<std::size_t>(tsv::parse_int(row[0]));
    if (i != v.scores.size())
      throw std::runtime_error("verdict " + path + ": rows out of order");
    v.scores.push_back(tsv::parse_double(row[1]));
    bool flagged_col = row[2] == "1";
    bool flagged = v.scores.back() >= v.threshold;
    if (flagged_col != flagged)
      throw std::runtime_error("verdict " + path + ": flag column disagrees with scores");
    if (flagged) v.flagged.insert(i);
  }
  return v;
}

}  // namespace chaff::adversary

#pragma once

// Topic universe, query classification and topic profiles. The classifier is a
// weighted term-overlap stand-in (the original feed pre-classification method
// is not public); everything downstream treats it as ground truth machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaff/corpus.hpp"
#include "chaff/query.hpp"
#include "chaff/rng.hpp"
#include "chaff/text.hpp"
#include "chaff/tsv.hpp"

namespace chaff::topics {

inline constexpr std::string_view kUnclassified = "__unclassified__";

struct Topic {
  std::string id;
  std::string name;
  std::string parent_id;  // empty for roots
};

struct TopicUniverse {
  std::vector<Topic> topics;
  std::string version;

  const Topic* find(std::string_view id) const {
    for (auto& t : topics)
      if (t.id == id) return &t;
    return nullptr;
  }
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  std::vector<const Topic*> roots() const {
    std::vector<const Topic*> out;
    for (auto& t : topics)
      if (t.parent_id.empty()) out.push_back(&t);
    return out;
  }
  std::vector<const Topic*> children_of(std::string_view id) const {
    std::vector<const Topic*> out;
    for (auto& t : topics)
      if (t.parent_id == id) out.push_back(&t);
    return out;
  }

  void validate() const {
    std::set<std::string_view> ids;
    for (auto& t : topics) {
      if (t.id.empty()) throw std::invalid_argument("universe: empty topic_id");
      if (t.id == kUnclassified) throw std::invalid_argument("universe: reserved topic_id used");
      if (t.name.empty()) throw std::invalid_argument("universe: topic " + t.id + " has empty name");
      if (!ids.insert(t.id).second) throw std::invalid_argument("universe: duplicate topic_id " + t.id);
    }
    for (auto& t : topics) {
      if (t.parent_id.empty()) continue;
      if (!ids.count(t.parent_id))
        throw std::invalid_argument("universe: topic " + t.id + " has unknown parent " + t.parent_id);
      // Walk up; a cycle would loop forever, so bound by topic count.
      std::string_view cur = t.parent_id;
      for (std::size_t hops = 0; !cur.empty(); ++hops) {
        if (hops > topics.size()) throw std::invalid_argument("universe: parent cycle at " + t.id);
        const Topic* p = find(cur);
        if (!p) break;
        cur = p->parent_id;
      }
    }
  }
};

// The built-in universe: 14 root categories; 7 of them carry a "Miscellaneous"
// subcategory, for 21 topics total.
inline TopicUniverse default_universe() {
  TopicUniverse u;
  u.version = "builtin-21@1";
  auto add = [&](const char* id, const char* name, const char* parent) {
    u.topics.push_back({id, name, parent});
  };
  add("arts", "Arts and Humanities", "");
  add("business", "Business and Economy", "");
  add("computers", "Computers and Internet", "");
  add("education", "Education", "");
  add("entertainment", "Entertainment", "");
  add("government", "Government and Military", "");
  add("health", "Health", "");
  add("news", "News and Media", "");
  add("politics", "Politics", "");
  add("recreation", "Recreation and Sports", "");
  add("romance", "Romance and Relationships", "");
  add("science", "Science", "");
  add("smallbiz", "Small Business and B2B", "");
  add("travel", "Travel and Transportation", "");
  add("arts.misc", "Arts Miscellaneous", "arts");
  add("business.misc", "Business Miscellaneous", "business");
  add("computers.misc", "Computers Miscellaneous", "computers");
  add("entertainment.misc", "Entertainment Miscellaneous", "entertainment");
  add("health.misc", "Health Miscellaneous", "health");
  add("science.misc", "Science Miscellaneous", "science");
  add("travel.misc", "Travel Miscellaneous", "travel");
  u.validate();
  return u;
}

inline void save_universe(const std::string& path, const TopicUniverse& u) {
  tsv::Document doc;
  doc.comments = {"# chaff topic universe " + u.version};
  for (auto& t : u.topics) {
    std::vector<std::string> row = {t.id, t.name};
    if (!t.parent_id.empty()) row.push_back(t.parent_id);
    doc.rows.push_back(std::move(row));
  }
  tsv::write_file(path, doc);
}

inline TopicUniverse load_universe(const std::string& path) {
  tsv::Document doc = tsv::read_file(path);
  TopicUniverse u;
  u.version = doc.comments.empty() ? "file" : doc.comments.front();
  for (auto& row : doc.rows) {
    if (row.size() < 2 || row.size() > 3)
      throw std::runtime_error("universe file " + path + ": expected 2-3 fields per record");
    u.topics.push_back({row[0], row[1], row.size() == 3 ? row[2] : std::string()});
  }
  u.validate();
  return u;
}

struct TopicProfile {
  std::map<std::string, double> weights;           // topic_id -> weight, sums to 1 when nonempty
  std::optional<std::pair<double, double>> window;  // (start, end) of the learning window

  bool empty() const { return weights.empty(); }
  double weight(std::string_view topic_id) const {
    auto it = weights.find(std::string(topic_id));
    return it == weights.end() ? 0.0 : it->second;
  }
  double max_weight() const {
    double m = 0.0;
    for (auto& [t, w] : weights) m = std::max(m, w);
    return m;
  }
};

inline void save_profile(const std::string& path, const TopicProfile& p) {
  tsv::Document doc;
  doc.comments = {"# chaff topic profile v1"};
  for (auto& [t, w] : p.weights) doc.rows.push_back({t, tsv::format_double(w)});
  tsv::write_file(path, doc);
}

inline TopicProfile load_profile(const std::string& path) {
  tsv::Document doc = tsv::read_file(path);
  TopicProfile p;
  double total = 0.0;
  for (auto& row : doc.rows) {
    if (row.size() != 2) throw std::runtime_error("profile file " + path + ": expected 2 fields");
    double w = tsv::parse_double(row[1]);
    if (w < 0.0) throw std::runtime_error("profile file " + path + ": negative weight");
    p.weights[row[0]] = w;
    total += w;
  }
  if (total > 0.0)
    for (auto& [t, w] : p.weights) w /= total;
  return p;
}

// How often the user repeats keywords, how long their query n-grams run, and
// what they query inside each topic. Mirrored onto the decoy stream.
struct KeywordFrequencyProfile {
  std::map<std::string, std::map<std::string, double>> per_topic;  // topic -> text -> freq (each sums to 1)
  std::map<int, double> ngram_popularity;                          // n-gram length -> freq (sums to 1)
  std::vector<int> repetition_counts;                              // observed repeat counts (each >= 2), descending
};

inline KeywordFrequencyProfile learn_keyword_profile(std::span<const Query> queries) {
  KeywordFrequencyProfile kp;
  std::map<std::string, std::map<std::string, double>> per_topic_counts;
  std::map<int, double> len_counts;
  std::map<std::string, int> text_counts;
  for (const Query& q : queries) {
    if (q.terms.empty()) continue;
    per_topic_counts[q.topic_id][q.text] += 1.0;
    len_counts[static_cast<int>(q.terms.size())] += 1.0;
    text_counts[q.text] += 1;
  }
  for (auto& [topic, counts] : per_topic_counts) {
    double total = 0.0;
    for (auto& [t, c] : counts) total += c;
    for (auto& [t, c] : counts) kp.per_topic[topic][t] = c / total;
  }
  double len_total = 0.0;
  for (auto& [l, c] : len_counts) len_total += c;
  for (auto& [l, c] : len_counts) kp.ngram_popularity[l] = c / len_total;
  // Every repeat group is kept; truncating here would shrink the duplicate
  // rate of anything generated from the profile below the history's own.
  for (auto& [t, c] : text_counts)
    if (c >= 2) kp.repetition_counts.push_back(c);
  std::sort(kp.repetition_counts.rbegin(), kp.repetition_counts.rend());
  return kp;
}

// Prebuilt fold-cased index over a PoolSet for repeated classification.
class TopicClassifier {
 public:
  TopicClassifier(const TopicUniverse& universe, const corpus::PoolSet& pools) {
    for (auto& [topic, pool] : pools) {
      if (!universe.contains(topic))
        throw std::invalid_argument("classifier: pool topic not in universe: " + topic);
      Index& ix = index_[topic];
      for (auto& [term, weight] : pool.entries) {
        ix.terms[fold_case(term)] += weight;
        int words = 1;
        for (char c : term)
          if (c == ' ') ++words;
        ix.max_n = std::max(ix.max_n, words);
      }
    }
    if (index_.empty()) throw std::invalid_argument("classifier: no pools");
  }

  // Best topic by matched pool weight mass; ties break to the lowest topic_id;
  // no overlap yields the reserved unclassified topic.
  std::pair<std::string, double> classify(std::string_view query_text) const {
    std::vector<std::string> toks = tokenize(fold_case(query_text));
    std::string best_topic(kUnclassified);
    double best = 0.0;
    for (auto& [topic, ix] : index_) {
      double mass = 0.0;
      std::set<std::string_view> counted;
      std::string gram;
      for (std::size_t i = 0; i < toks.size(); ++i) {
        gram.clear();
        for (int n = 0; n < ix.max_n && i + static_cast<std::size_t>(n) < toks.size(); ++n) {
          if (n) gram += ' ';
          gram += toks[i + static_cast<std::size_t>(n)];
          auto it = ix.terms.find(gram);
          if (it != ix.terms.end() && !counted.count(it->first)) {
            counted.insert(it->first);
            mass += it->second;
          }
        }
      }
      if (mass > best) {  // map order is ascending topic_id, so first max wins ties
        best = mass;
        best_topic = topic;
      }
    }
    return {best_topic, std::min(best, 1.0)};
  }

 private:
  struct Index {
    std::map<std::string, double> terms;  // fold-cased term -> weight mass
    int max_n = 1;
  };
  std::map<std::string, Index> index_;
};

inline std::pair<std::string, double> classify(std::string_view query_text, const TopicUniverse& universe,
                                               const corpus::PoolSet& pools) {
  return TopicClassifier(universe, pools).classify(query_text);
}

// Topic weights over the trailing window, by each query's assigned topic_id.
// Queries outside the universe (unclassified included) carry no weight.
inline TopicProfile learn_profile(std::span<const Query> queries, const TopicUniverse& universe,
                                  double window_seconds) {
  TopicProfile profile;
  if (queries.empty()) return profile;
  double end = queries.front().timestamp;
  for (const Query& q : queries) end = std::max(end, q.timestamp);
  double start = end - window_seconds;
  std::map<std::string, double> counts;
  for (const Query& q : queries) {
    if (q.timestamp < start) continue;
    if (!universe.contains(q.topic_id)) continue;
    counts[q.topic_id] += 1.0;
  }
  double total = 0.0;
  for (auto& [t, c] : counts) total += c;
  if (total > 0.0)
    for (auto& [t, c] : counts) profile.weights[t] = c / total;
  profile.window = std::make_pair(start, end);
  return profile;
}

// Weight w maps to band floor(-log2 w): 0 covers (0.5,1], 1 covers (0.25,0.5], ...
inline int frequency_band(double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("frequency_band: weight must be positive");
  int band = static_cast<int>(std::floor(-std::log2(weight)));
  return std::clamp(band, 0, 32);
}

namespace detail {

struct BandPlan {
  std::vector<std::string> selection;            // user topics first, then decoys in assignment order
  std::map<std::string, double> decoy_weights;   // decoy topic -> band-mean user weight
  std::size_t user_count = 0;
};

inline BandPlan select_with_bands(const TopicProfile& user_profile, const TopicUniverse& universe,
                                  std::size_t n, std::uint64_t seed) {
  std::vector<std::pair<std::string, double>> user_topics;
  for (auto& [t, w] : user_profile.weights)
    if (w > 0.0) user_topics.emplace_back(t, w);
  std::size_t m = user_topics.size();
  if (n < m) throw std::invalid_argument("select_obfuscation_topics: n below user topic count");
  if (n > universe.topics.size())
    throw std::invalid_argument("select_obfuscation_topics: n exceeds universe size");
  for (auto& [t, w] : user_topics)
    if (!universe.contains(t))
      throw std::invalid_argument("select_obfuscation_topics: user topic not in universe: " + t);

  BandPlan plan;
  plan.user_count = m;
  for (auto& [t, w] : user_topics) plan.selection.push_back(t);

  // Band -> mean user weight in that band, ordered by band.
  std::map<int, std::pair<double, int>> bands;
  for (auto& [t, w] : user_topics) {
    auto& [sum, cnt] = bands[frequency_band(w)];
    sum += w;
    cnt += 1;
  }

  std::vector<std::string> candidates;
  for (auto& t : universe.topics)
    if (!user_profile.weights.count(t.id)) candidates.push_back(t.id);
  std::sort(candidates.begin(), candidates.end());
  Rng rng(seed);
  rng.shuffle(candidates);

  // Round-robin decoys across the user's frequency bands so every band gets
  // at least one similarly-weighted decoy (when decoy count allows).
  std::vector<int> band_order;
  for (auto& [b, sc] : bands) band_order.push_back(b);
  std::size_t need = n - m;
  for (std::size_t k = 0; k < need; ++k) {
    const std::string& topic = candidates.at(k);
    int band = band_order.empty() ? 0 : band_order[k % band_order.size()];
    double w = 1.0;
    if (auto it = bands.find(band); it != bands.end()) w = it->second.first / it->second.second;
    plan.selection.push_back(topic);
    plan.decoy_weights[topic] = w;
  }
  return plan;
}

}  // namespace detail

// n target topics: every user topic plus seeded decoys matched band-by-band.
inline std::vector<std::string> select_obfuscation_topics(const TopicProfile& user_profile,
                                                          const TopicUniverse& universe, std::size_t n,
                                                          std::uint64_t seed) {
  if (user_profile.empty()) throw std::invalid_argument("select_obfuscation_topics: empty profile");
  return detail::select_with_bands(user_profile, universe, n, seed).selection;
}

// Target weights for the decoy stream: user topics keep their learned weight,
// decoy topics take their band's mean user weight; renormalized.
inline TopicProfile plan_topic_weights(const TopicProfile& user_profile, const TopicUniverse& universe,
                                       std::size_t n, std::uint64_t seed) {
  if (user_profile.empty()) throw std::invalid_argument("plan_topic_weights: empty profile");
  detail::BandPlan plan = detail::select_with_bands(user_profile, universe, n, seed);
  TopicProfile out;
  double total = 0.0;
  for (auto& [t, w] : user_profile.weights)
    if (w > 0.0) {
      out.weights[t] = w;
      total += w;
    }
  for (auto& [t, w] : plan.decoy_weights) {
    out.weights[t] = w;
    total += w;
  }
  for (auto& [t, w] : out.weights) w /= total;
  return out;
}

}  // namespace chaff::topics

#pragma once

// Engine-side interest profiler stand-in: transparent keyword overlap
// against the same pools the decoy generator draws from. Real profilers are
// opaque; this one exists so profile-skew metrics have a readable oracle.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chaff/corpus.hpp"
#include "chaff/text.hpp"
#include "chaff/topics.hpp"

namespace chaff::mockengine {

class KeywordProfiler {
 public:
  // A subcategory becomes an inferred interest once its pool terms have been
  // sighted this many times across the observed stream.
  static constexpr int kMinHits = 2;

  KeywordProfiler(const topics::TopicUniverse& universe, const corpus::PoolSet& pools) {
    for (auto& [topic, pool] : pools) {
      const topics::Topic* t = universe.find(topic);
      if (t == nullptr)
        throw std::invalid_argument("profiler: pool topic not in universe: " + topic);
      Entry& e = entries_[topic];
      e.category = t->parent_id.empty() ? t->id : t->parent_id;
      for (auto& [term, weight] : pool.entries) e.terms.push_back(tokenize(fold_case(term)));
    }
  }

  // Counts each pool term at most once per query; a term matches when its
  // words appear as a contiguous run of the query's words.
  void observe(std::string_view query_text) {
    std::vector<std::string> words = tokenize(fold_case(query_text));
    for (auto& [topic, e] : entries_)
      for (auto& term : e.terms)
        if (contains_run(words, term)) e.hits += 1;
  }

  std::set<std::pair<std::string, std::string>> inferred() const {
    std::set<std::pair<std::string, std::string>> out;
    for (auto& [topic, e] : entries_)
      if (e.hits >= kMinHits) out.insert({e.category, topic});
    return out;
  }

 private:
  struct Entry {
    std::string category;
    std::vector<std::vector<std::string>> terms;
    int hits = 0;
  };

  static bool contains_run(const std::vector<std::string>& words,
                           const std::vector<std::string>& run) {
    if (run.empty() || run.size() > words.size()) return false;
    for (std::size_t i = 0; i + run.size() <= words.size(); ++i) {
      bool match = true;
      for (std::size_t j = 0; j < run.size(); ++j)
        if (words[i + j] != run[j]) {
          match = false;
          break;
        }
      if (match) return true;
    }
    return false;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace chaff::mockengine

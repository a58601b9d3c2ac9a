#pragma once

// Scores filter verdicts against ground truth. This is the only place the
// origin labels come back into play; everything the adversary computed
// upstream was origin-blind.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chaff/adversary.hpp"
#include "chaff/corpus.hpp"
#include "chaff/engine_template.hpp"
#include "chaff/mockengine.hpp"
#include "chaff/obfuscator.hpp"
#include "chaff/profiler.hpp"
#include "chaff/query.hpp"
#include "chaff/rng.hpp"
#include "chaff/stats.hpp"
#include "chaff/text.hpp"
#include "chaff/timeutil.hpp"
#include "chaff/topics.hpp"
#include "chaff/tsv.hpp"

namespace chaff::evaluation {

// Positive class is "flagged as generated". The n cells follow the user's
// queries with t/f marking whether the filter treated them correctly:
// tn = user queries left alone, fn = user queries flagged. Symmetrically
// tp = decoys flagged, fp = decoys that slipped through.
struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;
};

inline ConfusionCounts confusion(const adversary::FilterVerdict& verdict,
                                 std::span<const QueryOrigin> origins) {
  if (verdict.scores.size() != origins.size())
    throw std::invalid_argument("confusion: verdict and ground truth sizes differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < origins.size(); ++i) {
    bool flagged = verdict.flagged.count(i) > 0;
    if (origins[i] == QueryOrigin::decoy)
      (flagged ? c.tp : c.fp) += 1;
    else
      (flagged ? c.fn : c.tn) += 1;
  }
  return c;
}

inline double tnr(const ConfusionCounts& c) {
  if (c.tn + c.fn <= 0) throw std::invalid_argument("tnr: no user queries counted");
  return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fn);
}

struct ResiliencyPoint {
  double alpha = 0.0;            // fraction of user queries the threshold flags
  double decoy_precision = 0.0;  // decoy share of the flagged set
};

struct ResiliencyCurve {
  std::vector<ResiliencyPoint> points;  // sorted so alpha is nondecreasing
};

struct ResiliencyResult {
  std::optional<double> alpha;  // empty when no threshold qualifies at this beta
  ResiliencyCurve curve;
};

// A threshold qualifies when its flagged set is nonempty and at least beta
// decoy-pure; alpha is the cheapest user cost among qualifying thresholds.
// Thresholds that flag nothing say nothing about filtering and contribute no
// curve point.
inline ResiliencyResult resiliency(std::span<const adversary::FilterVerdict> sweep,
                                   std::span<const QueryOrigin> origins, double beta) {
  if (sweep.empty()) throw std::invalid_argument("resiliency: empty threshold sweep");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("resiliency: beta must be in (0,1)");
  double users_total = 0.0;
  for (QueryOrigin o : origins)
    if (o == QueryOrigin::user) users_total += 1.0;
  if (users_total == 0.0) throw std::invalid_argument("resiliency: no user queries in ground truth");

  ResiliencyResult out;
  for (auto& verdict : sweep) {
    ConfusionCounts c = confusion(verdict, origins);
    double flagged = static_cast<double>(c.tp + c.fn);
    if (flagged == 0.0) continue;
    ResiliencyPoint p;
    p.alpha = static_cast<double>(c.fn) / users_total;
    p.decoy_precision = static_cast<double>(c.tp) / flagged;
    out.curve.points.push_back(p);
    if (p.decoy_precision >= beta && (!out.alpha || p.alpha < *out.alpha)) out.alpha = p.alpha;
  }
  std::sort(out.curve.points.begin(), out.curve.points.end(), [](const auto& a, const auto& b) {
    return a.alpha != b.alpha ? a.alpha < b.alpha : a.decoy_precision < b.decoy_precision;
  });
  return out;
}

struct DoubtReport {
  std::vector<bool> attained;  // log-aligned; decoy entries hold vacuously
  bool overall = true;
};

// Deniability check: every real query's flag probability, discounted by the
// adversary's belief that obfuscation is on at all, must clear epsilon.
inline DoubtReport doubt_attained(const adversary::FilterVerdict& verdict,
                                  std::span<const QueryOrigin> origins,
                                  const obfuscator::GuaranteeParams& params, double epsilon) {
  if (verdict.scores.size() != origins.size())
    throw std::invalid_argument("doubt_attained: verdict and ground truth sizes differ");
  DoubtReport r;
  r.attained.resize(origins.size(), true);
  for (std::size_t i = 0; i < origins.size(); ++i) {
    if (origins[i] != QueryOrigin::user) continue;
    bool ok = verdict.scores[i] * params.p_ob >= epsilon;
    r.attained[i] = ok;
    if (!ok) r.overall = false;
  }
  return r;
}

struct ProfileComparison {
  std::set<std::pair<std::string, std::string>> inferred_interests;  // (category, subcategory)
  std::set<std::string> targeted_topics;
};

inline std::set<std::pair<std::string, std::string>> targeted_subtree(
    const ProfileComparison& c, const topics::TopicUniverse& universe) {
  std::set<std::pair<std::string, std::string>> subtree;
  for (auto& topic : c.targeted_topics) {
    if (!universe.contains(topic))
      throw std::invalid_argument("profile metrics: targeted topic not in universe: " + topic);
    for (const topics::Topic* child : universe.children_of(topic))
      subtree.insert({topic, child->id});
  }
  return subtree;
}

inline double impact(const ProfileComparison& c, const topics::TopicUniverse& universe) {
  auto subtree = targeted_subtree(c, universe);
  if (subtree.empty())
    throw std::invalid_argument("impact: targeted topics have no subcategories");
  double hit = 0.0;
  for (auto& pair : c.inferred_interests)
    if (subtree.count(pair)) hit += 1.0;
  return hit / static_cast<double>(subtree.size());
}

inline double precision(const ProfileComparison& c) {
  if (c.inferred_interests.empty())
    throw std::invalid_argument("precision: no inferred interests");
  double hit = 0.0;
  for (auto& [category, subcategory] : c.inferred_interests)
    if (c.targeted_topics.count(category)) hit += 1.0;
  return hit / static_cast<double>(c.inferred_interests.size());
}

struct ExperimentOptions {
  int tests = 8;
  int topics_per_test = 2;
  int query_count = 180;
  double queries_per_minute = 3.0;
  std::uint64_t seed = 0;
};

// Profile-skew protocol: each test aims a fresh decoy-only stream at two
// randomly chosen topic subtrees, pushes it through the mock engine, and asks
// the keyword profiler what interests it saw. Pools are keyed by subcategory
// here; a root is eligible when at least one of its subcategories has terms.
inline std::vector<ProfileComparison> mock_profile_experiment(
    const topics::TopicUniverse& universe, const corpus::PoolSet& pools,
    const ExperimentOptions& opt = {}) {
  if (opt.tests < 1 || opt.topics_per_test < 1 || opt.query_count < 1)
    throw std::invalid_argument("mock_profile_experiment: counts must be positive");
  if (!(opt.queries_per_minute > 0.0))
    throw std::invalid_argument("mock_profile_experiment: rate must be positive");

  std::map<std::string, std::vector<std::string>> pooled_children;
  for (const topics::Topic* root : universe.roots()) {
    std::vector<std::string> subs;
    for (const topics::Topic* child : universe.children_of(root->id)) {
      auto it = pools.find(child->id);
      if (it != pools.end() && !it->second.empty()) subs.push_back(child->id);
    }
    if (!subs.empty()) pooled_children[root->id] = std::move(subs);
  }
  if (pooled_children.size() < static_cast<std::size_t>(opt.topics_per_test))
    throw std::invalid_argument("mock_profile_experiment: not enough pooled topic subtrees");
  std::vector<std::string> eligible;
  for (auto& [root, subs] : pooled_children) eligible.push_back(root);

  Rng rng(opt.seed);
  std::vector<ProfileComparison> out;
  for (int test = 0; test < opt.tests; ++test) {
    Rng trng = rng.fork(static_cast<std::uint64_t>(test));
    std::vector<std::string> picks = eligible;
    trng.shuffle(picks);
    picks.resize(static_cast<std::size_t>(opt.topics_per_test));

    mockengine::Engine engine(engine::default_template(), "profiler.test");
    double spacing = 60.0 / opt.queries_per_minute;
    for (int i = 0; i < opt.query_count; ++i) {
      const std::string& root = picks[trng.below(picks.size())];
      const auto& subs = pooled_children.at(root);
      const corpus::KeywordPool& pool = pools.at(subs[trng.below(subs.size())]);
      std::vector<double> weights;
      weights.reserve(pool.entries.size());
      for (auto& [term, weight] : pool.entries) weights.push_back(weight);
      const std::string& term = pool.entries[trng.discrete(weights)].first;
      double t = timeutil::kDefaultOrigin + spacing * static_cast<double>(i);
      std::map<std::string, std::string> headers = {{"cookie", "sid=profile"},
                                                    {"x-sim-time", tsv::format_double(t)}};
      engine.handle("/search?q=" + url_encode(term), headers, t);
    }

    mockengine::KeywordProfiler profiler(universe, pools);
    for (auto& record : engine.export_query_log()) profiler.observe(record.text);
    ProfileComparison c;
    c.inferred_interests = profiler.inferred();
    c.targeted_topics.insert(picks.begin(), picks.end());
    out.push_back(std::move(c));
  }
  return out;
}

struct MetricRow {
  std::string metric;
  std::string test_id;
  double value = 0.0;
};

inline constexpr std::string_view kMetricsHeader = "# chaff metrics v1";

inline void write_metrics(const std::string& path, const std::vector<MetricRow>& rows) {
  tsv::Document doc;
  doc.comments = {std::string(kMetricsHeader)};
  for (auto& r : rows) doc.rows.push_back({r.metric, r.test_id, tsv::format_double(r.value)});
  tsv::write_file(path, doc);
}

inline std::vector<MetricRow> read_metrics(const std::string& path) {
  tsv::Document doc = tsv::read_file(path);
  std::vector<MetricRow> rows;
  for (auto& row : doc.rows) {
    if (row.size() != 3) throw std::runtime_error("metrics " + path + ": expected 3 fields");
    rows.push_back({row[0], row[1], tsv::parse_double(row[2])});
  }
  return rows;
}

}  // namespace chaff::evaluation

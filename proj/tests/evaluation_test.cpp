#include "chaff/evaluation.hpp"

#include <gtest/gtest.h>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chaff/adversary.hpp"
#include "chaff/profiler.hpp"
#include "chaff/stats.hpp"

namespace {

using namespace chaff;
using adversary::FilterVerdict;
using adversary::make_verdict;
using evaluation::ConfusionCounts;
using evaluation::ProfileComparison;

constexpr QueryOrigin U = QueryOrigin::user;
constexpr QueryOrigin D = QueryOrigin::decoy;

TEST(Confusion, CountsAllFourCells) {
  std::vector<QueryOrigin> origins = {D, D, D, U, U, U, U};
  FilterVerdict v = make_verdict({0.9, 0.8, 0.1, 0.7, 0.2, 0.3, 0.1}, 0.6);
  ConfusionCounts c = evaluation::confusion(v, origins);
  EXPECT_EQ(c.tp, 2);  // two decoys caught
  EXPECT_EQ(c.fp, 1);  // one slipped through
  EXPECT_EQ(c.fn, 1);  // one user query flagged
  EXPECT_EQ(c.tn, 3);
  EXPECT_EQ(c.tp + c.fp + c.tn + c.fn, static_cast<long long>(origins.size()));

  std::vector<QueryOrigin> short_truth = {D, U};
  EXPECT_THROW(evaluation::confusion(v, short_truth), std::invalid_argument);
}

TEST(Tnr, RatioOverUserQueriesOnly) {
  EXPECT_DOUBLE_EQ(evaluation::tnr({0, 0, 8, 2}), 0.8);
  EXPECT_DOUBLE_EQ(evaluation::tnr({0, 0, 0, 5}), 0.0);
  EXPECT_DOUBLE_EQ(evaluation::tnr({0, 0, 5, 0}), 1.0);
  // Decoy cells never enter the ratio.
  EXPECT_DOUBLE_EQ(evaluation::tnr({99, 7, 8, 2}), 0.8);
  EXPECT_THROW(evaluation::tnr({3, 4, 0, 0}), std::invalid_argument);
}

TEST(Resiliency, SeparableScoresCostNoUserQueries) {
  std::vector<QueryOrigin> origins(10, U);
  std::vector<double> scores(10, 0.1);
  for (int i = 5; i < 10; ++i) {
    origins[i] = D;
    scores[i] = 0.9;
  }
  std::vector<FilterVerdict> sweep = {make_verdict(scores, 0.5)};
  auto r = evaluation::resiliency(sweep, origins, 0.9);
  ASSERT_TRUE(r.alpha.has_value());
  EXPECT_DOUBLE_EQ(*r.alpha, 0.0);
  ASSERT_EQ(r.curve.points.size(), 1u);
  EXPECT_DOUBLE_EQ(r.curve.points[0].decoy_precision, 1.0);
}

// Five score buckets of four queries each; the full sweep is small enough to
// enumerate by hand.
//   0.1: u u d d    0.3: u u u d    0.5: u d d d    0.7: u d d d    0.9: u u u d
struct HandSweep {
  std::vector<QueryOrigin> origins;
  std::vector<FilterVerdict> sweep;
};

HandSweep hand_sweep() {
  HandSweep h;
  std::vector<double> scores;
  auto bucket = [&](double s, std::initializer_list<QueryOrigin> os) {
    for (QueryOrigin o : os) {
      scores.push_back(s);
      h.origins.push_back(o);
    }
  };
  bucket(0.1, {U, U, D, D});
  bucket(0.3, {U, U, U, D});
  bucket(0.5, {U, D, D, D});
  bucket(0.7, {U, D, D, D});
  bucket(0.9, {U, U, U, D});
  for (double th : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) h.sweep.push_back(make_verdict(scores, th));
  return h;
}

TEST(Resiliency, MatchesHandEnumeration) {
  HandSweep h = hand_sweep();
  // Flagged-user fractions and decoy precisions per biting threshold:
  //   th 0.8 -> (3/10, 1/4), th 0.6 -> (4/10, 4/8), th 0.4 -> (5/10, 7/12),
  //   th 0.2 -> (8/10, 8/16), th 0.0 -> (10/10, 10/20); th 1.0 flags nothing.
  auto r = evaluation::resiliency(h.sweep, h.origins, 0.5);
  ASSERT_EQ(r.curve.points.size(), 5u);
  EXPECT_NEAR(r.curve.points[0].alpha, 0.3, 1e-12);
  EXPECT_NEAR(r.curve.points[0].decoy_precision, 0.25, 1e-12);
  EXPECT_NEAR(r.curve.points[2].alpha, 0.5, 1e-12);
  EXPECT_NEAR(r.curve.points[2].decoy_precision, 7.0 / 12.0, 1e-12);
  for (std::size_t i = 1; i < r.curve.points.size(); ++i)
    EXPECT_GE(r.curve.points[i].alpha, r.curve.points[i - 1].alpha);

  // Cheapest threshold that is half decoy-pure flags 4 of 10 user queries.
  ASSERT_TRUE(r.alpha.has_value());
  EXPECT_NEAR(*r.alpha, 0.4, 1e-12);
  // Demanding 55% leaves only the th=0.4 point.
  auto r55 = evaluation::resiliency(h.sweep, h.origins, 0.55);
  ASSERT_TRUE(r55.alpha.has_value());
  EXPECT_NEAR(*r55.alpha, 0.5, 1e-12);
  // No threshold reaches 60% decoy purity.
  auto r60 = evaluation::resiliency(h.sweep, h.origins, 0.6);
  EXPECT_FALSE(r60.alpha.has_value());
  EXPECT_EQ(r60.curve.points.size(), 5u);
}

TEST(Resiliency, AlphaNeverRisesAsBetaFalls) {
  HandSweep h = hand_sweep();
  double prev = std::numeric_limits<double>::infinity();
  for (double beta : {0.59, 0.55, 0.5, 0.3, 0.1}) {
    auto r = evaluation::resiliency(h.sweep, h.origins, beta);
    double alpha = r.alpha.value_or(std::numeric_limits<double>::infinity());
    EXPECT_LE(alpha, prev) << "beta " << beta;
    prev = alpha;
  }
}

TEST(Resiliency, RejectsBadInputs) {
  HandSweep h = hand_sweep();
  EXPECT_THROW(evaluation::resiliency({}, h.origins, 0.5), std::invalid_argument);
  EXPECT_THROW(evaluation::resiliency(h.sweep, h.origins, 0.0), std::invalid_argument);
  EXPECT_THROW(evaluation::resiliency(h.sweep, h.origins, 1.0), std::invalid_argument);
  std::vector<QueryOrigin> all_decoys(h.origins.size(), D);
  EXPECT_THROW(evaluation::resiliency(h.sweep, all_decoys, 0.5), std::invalid_argument);
}

TEST(Doubt, UniformScoresProtectUpToOneHalf) {
  FilterVerdict v = make_verdict({0.5, 0.5, 0.5}, 0.6);
  std::vector<QueryOrigin> origins = {U, D, U};
  obfuscator::GuaranteeParams params;
  params.p_ob = 1.0;
  auto yes = evaluation::doubt_attained(v, origins, params, 0.5);
  EXPECT_TRUE(yes.overall);
  auto no = evaluation::doubt_attained(v, origins, params, 0.51);
  EXPECT_FALSE(no.overall);
  EXPECT_FALSE(no.attained[0]);
  EXPECT_TRUE(no.attained[1]);  // decoys are outside the guarantee
  EXPECT_FALSE(no.attained[2]);
}

TEST(Doubt, NoObfuscationBeliefMeansNoDoubt) {
  FilterVerdict v = make_verdict({1.0, 1.0}, 0.5);
  std::vector<QueryOrigin> origins = {U, U};
  obfuscator::GuaranteeParams params;
  params.p_ob = 0.0;
  EXPECT_FALSE(evaluation::doubt_attained(v, origins, params, 0.1).overall);
  EXPECT_TRUE(evaluation::doubt_attained(v, origins, params, 0.0).overall);
}

TEST(Doubt, ConservativeAdversaryBound) {
  // 7 decoys + 3 user queries; the adversary concedes one real query and
  // scores everything at 9/10.
  adversary::AdversaryModel m;
  m.x_est = 9.0;
  m.y_est = 1.0;
  std::vector<adversary::LogQuery> log(10);
  std::vector<QueryOrigin> origins;
  std::vector<double> scores;
  for (int i = 0; i < 10; ++i) {
    log[i] = {1000.0 + i, "u1", "query " + std::to_string(i), {}};
    origins.push_back(i < 7 ? D : U);
    scores.push_back(adversary::attack1_single_query(m, log[i]));
  }
  FilterVerdict v = make_verdict(scores, 0.5);
  obfuscator::GuaranteeParams params{3, 7, 1, 9, 1.0, 0.5};
  EXPECT_TRUE(evaluation::doubt_attained(v, origins, params, 9.0 / 10.0).overall);
  EXPECT_FALSE(evaluation::doubt_attained(v, origins, params, 0.91).overall);
}

TEST(Doubt, MonotoneInBeliefAndScores) {
  std::vector<QueryOrigin> origins = {U, U, U};
  obfuscator::GuaranteeParams params;
  std::vector<bool> prev;
  for (double p_ob : {0.2, 0.5, 0.8, 1.0}) {
    params.p_ob = p_ob;
    auto r = evaluation::doubt_attained(make_verdict({0.3, 0.6, 0.9}, 0.5), origins, params, 0.5);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (prev[i]) {
        EXPECT_TRUE(r.attained[i]) << "p_ob " << p_ob;
      }
    }
    prev = r.attained;
  }
  // Raising a score cannot lose attainment either.
  params.p_ob = 0.8;
  auto low = evaluation::doubt_attained(make_verdict({0.6, 0.6, 0.6}, 0.5), origins, params, 0.5);
  auto high = evaluation::doubt_attained(make_verdict({0.7, 0.9, 1.0}, 0.5), origins, params, 0.5);
  for (std::size_t i = 0; i < 3; ++i) {
    if (low.attained[i]) {
      EXPECT_TRUE(high.attained[i]);
    }
  }
}

topics::TopicUniverse rich_universe() {
  topics::TopicUniverse u;
  u.version = "test-rich@1";
  auto root = [&](const char* id) { u.topics.push_back({id, id, ""}); };
  auto child = [&](const char* id, const char* parent) { u.topics.push_back({id, id, parent}); };
  root("travel");
  child("travel.air", "travel");
  child("travel.rail", "travel");
  child("travel.sea", "travel");
  child("travel.lodging", "travel");
  child("travel.docs", "travel");
  root("arts");
  child("arts.paint", "arts");
  child("arts.opera", "arts");
  child("arts.film", "arts");
  child("arts.books", "arts");
  child("arts.dance", "arts");
  root("science");
  child("science.physics", "science");
  child("science.bio", "science");
  child("science.astro", "science");
  root("health");
  child("health.diet", "health");
  child("health.fitness", "health");
  root("news");  // no subcategories
  u.validate();
  return u;
}

TEST(ProfileMetrics, ImpactCountsCoveredSubcategories) {
  topics::TopicUniverse u = rich_universe();
  ProfileComparison c;
  c.targeted_topics = {"travel", "arts"};
  c.inferred_interests = {{"travel", "travel.air"},
                          {"travel", "travel.rail"},
                          {"arts", "arts.paint"},
                          {"arts", "arts.opera"}};
  EXPECT_DOUBLE_EQ(evaluation::impact(c, u), 0.4);  // 4 of 10

  for (const topics::Topic* t : u.children_of("travel"))
    c.inferred_interests.insert({"travel", t->id});
  for (const topics::Topic* t : u.children_of("arts"))
    c.inferred_interests.insert({"arts", t->id});
  EXPECT_DOUBLE_EQ(evaluation::impact(c, u), 1.0);

  // Off-subtree extras do not add to the numerator.
  c.inferred_interests.insert({"science", "science.bio"});
  EXPECT_DOUBLE_EQ(evaluation::impact(c, u), 1.0);

  ProfileComparison childless;
  childless.targeted_topics = {"news"};
  childless.inferred_interests = {{"news", "news"}};
  EXPECT_THROW(evaluation::impact(childless, u), std::invalid_argument);
  ProfileComparison unknown;
  unknown.targeted_topics = {"nonesuch"};
  EXPECT_THROW(evaluation::impact(unknown, u), std::invalid_argument);
}

TEST(ProfileMetrics, PrecisionCountsTargetedCategories) {
  ProfileComparison c;
  c.targeted_topics = {"travel"};
  c.inferred_interests = {{"travel", "travel.air"}, {"travel", "travel.rail"}};
  EXPECT_DOUBLE_EQ(evaluation::precision(c), 1.0);
  c.inferred_interests.insert({"science", "science.bio"});
  EXPECT_DOUBLE_EQ(evaluation::precision(c), 2.0 / 3.0);
  c.inferred_interests = {{"science", "science.bio"}};
  EXPECT_DOUBLE_EQ(evaluation::precision(c), 0.0);
  c.inferred_interests.clear();
  EXPECT_THROW(evaluation::precision(c), std::invalid_argument);
}

TEST(ProfileMetrics, FabledEightRunAverages) {
  std::vector<double> impacts = {0.47, 0.09, 0.50, 0.50, 0.57, 0.35, 0.43, 0.57};
  std::vector<double> precisions = {0.41, 0.03, 0.11, 0.10, 0.12, 0.31, 0.08, 0.44};
  EXPECT_DOUBLE_EQ(stats::round2(stats::mean(impacts)), 0.44);
  EXPECT_DOUBLE_EQ(stats::round2(stats::mean(precisions)), 0.20);
}

corpus::KeywordPool make_pool(const std::string& topic, std::vector<std::string> terms) {
  corpus::KeywordPool pool;
  pool.topic_id = topic;
  std::sort(terms.begin(), terms.end());
  for (auto& t : terms)
    pool.entries.emplace_back(t, 1.0 / static_cast<double>(terms.size()));
  return pool;
}

corpus::PoolSet rich_pools() {
  corpus::PoolSet pools;
  pools["travel.air"] = make_pool("travel.air", {"airfare deals", "boarding pass", "jetway gate"});
  pools["travel.rail"] = make_pool("travel.rail", {"sleeper berth", "rail timetable"});
  pools["travel.sea"] = make_pool("travel.sea", {"ferry crossing", "cabin porthole"});
  pools["arts.paint"] = make_pool("arts.paint", {"fresco pigment", "easel canvas"});
  pools["arts.opera"] = make_pool("arts.opera", {"libretto aria", "soprano duet"});
  pools["science.physics"] = make_pool("science.physics", {"quark lattice", "photon drift"});
  pools["science.bio"] = make_pool("science.bio", {"ribosome fold", "enzyme assay"});
  pools["health.diet"] = make_pool("health.diet", {"fiber intake", "lentil salad"});
  pools["health.fitness"] = make_pool("health.fitness", {"interval sprint", "rowing cadence"});
  return pools;
}

TEST(Profiler, InfersAfterTwoTermSightings) {
  topics::TopicUniverse u = rich_universe();
  corpus::PoolSet pools = rich_pools();
  mockengine::KeywordProfiler p(u, pools);
  p.observe("cheap airfare deals today");
  EXPECT_TRUE(p.inferred().empty());
  p.observe("print my boarding pass");
  EXPECT_EQ(p.inferred(), (std::set<std::pair<std::string, std::string>>{{"travel", "travel.air"}}));
  // Word order matters and partial words do not: neither of these is a hit.
  p.observe("deals airfare");
  p.observe("airfaredeals");
  EXPECT_EQ(p.inferred().size(), 1u);
  // Two distinct terms inside one query clear the bar at once.
  p.observe("libretto aria after the soprano duet");
  EXPECT_TRUE(p.inferred().count({"arts", "arts.opera"}));

  corpus::PoolSet stray;
  stray["nonesuch"] = make_pool("nonesuch", {"x"});
  EXPECT_THROW(mockengine::KeywordProfiler(u, stray), std::invalid_argument);
}

TEST(Profiler, RootKeyedPoolIsItsOwnCategory) {
  topics::TopicUniverse u = rich_universe();
  corpus::PoolSet pools;
  pools["news"] = make_pool("news", {"byline brief"});
  mockengine::KeywordProfiler p(u, pools);
  p.observe("byline brief");
  p.observe("byline brief");
  EXPECT_EQ(p.inferred(), (std::set<std::pair<std::string, std::string>>{{"news", "news"}}));
}

TEST(Experiment, ClosedWorldRunsAreOnTargetAndDeterministic) {
  topics::TopicUniverse u = rich_universe();
  corpus::PoolSet pools = rich_pools();
  evaluation::ExperimentOptions opt;
  opt.seed = 7;
  auto runs = evaluation::mock_profile_experiment(u, pools, opt);
  ASSERT_EQ(runs.size(), 8u);
  for (auto& c : runs) {
    EXPECT_EQ(c.targeted_topics.size(), 2u);
    ASSERT_FALSE(c.inferred_interests.empty());
    // Only on-topic queries were issued, so the profiler can only place
    // interests inside the targeted subtrees.
    EXPECT_DOUBLE_EQ(evaluation::precision(c), 1.0);
    double i = evaluation::impact(c, u);
    EXPECT_GT(i, 0.0);
    EXPECT_LE(i, 1.0);
    // 180 queries over at most six pooled subcategories: each one is seen
    // far past the inference bar.
    std::set<std::pair<std::string, std::string>> pooled;
    for (auto& topic : c.targeted_topics)
      for (const topics::Topic* child : u.children_of(topic))
        if (rich_pools().count(child->id)) pooled.insert({topic, child->id});
    EXPECT_EQ(c.inferred_interests, pooled);
  }
  auto rerun = evaluation::mock_profile_experiment(u, pools, opt);
  for (std::size_t k = 0; k < runs.size(); ++k) {
    EXPECT_EQ(runs[k].targeted_topics, rerun[k].targeted_topics);
    EXPECT_EQ(runs[k].inferred_interests, rerun[k].inferred_interests);
  }
}

TEST(Experiment, RejectsThinSetups) {
  topics::TopicUniverse u = rich_universe();
  EXPECT_THROW(evaluation::mock_profile_experiment(u, {}), std::invalid_argument);
  evaluation::ExperimentOptions bad;
  bad.query_count = 0;
  EXPECT_THROW(evaluation::mock_profile_experiment(u, rich_pools(), bad), std::invalid_argument);
  bad = {};
  bad.queries_per_minute = 0.0;
  EXPECT_THROW(evaluation::mock_profile_experiment(u, rich_pools(), bad), std::invalid_argument);
}

TEST(Metrics, FileRoundTrip) {
  std::string path = ::testing::TempDir() + "metrics_roundtrip.tsv";
  std::vector<evaluation::MetricRow> rows = {{"impact", "test0", 0.4},
                                             {"precision", "test0", 1.0},
                                             {"impact", "test1", 2.0 / 3.0}};
  evaluation::write_metrics(path, rows);
  auto back = evaluation::read_metrics(path);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].metric, rows[i].metric);
    EXPECT_EQ(back[i].test_id, rows[i].test_id);
    EXPECT_DOUBLE_EQ(back[i].value, rows[i].value);
  }
}

}  // namespace

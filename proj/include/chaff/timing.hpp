#pragma once

// Behavioral timing: learn hour-of-week activity, within-session inter-arrival
// gaps and active sessions from a query history, then sample decoy schedules
// that live only inside those activity envelopes. All time is simulated; no
// wall clock anywhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaff/query.hpp"
#include "chaff/rng.hpp"
#include "chaff/tsv.hpp"

namespace chaff::timing {

inline constexpr double kDefaultSessionGap = 1800.0;  // 30 min

// Bin 0 is Monday 00:00 UTC (the epoch fell on a Thursday, hence the +72h shift).
inline int hour_of_week_bin(double t) {
  long long hours = static_cast<long long>(std::floor(t / 3600.0));
  long long bin = (hours + 72) % 168;
  if (bin < 0) bin += 168;
  return static_cast<int>(bin);
}

struct TimingProfile {
  std::array<double, 168> hour_of_week{};
  std::vector<double> interarrival;                 // within-session gaps, seconds, all > 0
  std::vector<std::pair<double, double>> sessions;  // ordered, non-overlapping [start, end]

  bool empty() const { return sessions.empty() && interarrival.empty() && total_mass() == 0.0; }
  double total_mass() const {
    double s = 0.0;
    for (double b : hour_of_week) s += b;
    return s;
  }
};

struct BurstPolicy {
  std::map<int, double> burst_size;  // size -> probability mass; empty means no bursts
  double burst_spread = 600.0;       // seconds after the triggering query
};

inline TimingProfile learn_timing(std::span<const Query> queries, double session_gap) {
  if (session_gap <= 0.0) throw std::invalid_argument("learn_timing: session_gap must be positive");
  TimingProfile p;
  if (queries.empty()) return p;
  std::vector<double> ts;
  ts.reserve(queries.size());
  for (const Query& q : queries) ts.push_back(q.timestamp);
  std::sort(ts.begin(), ts.end());
  double session_start = ts.front();
  double prev = ts.front();
  p.hour_of_week[hour_of_week_bin(ts.front())] += 1.0;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    double gap = ts[i] - prev;
    if (gap >= session_gap) {
      p.sessions.emplace_back(session_start, prev);
      session_start = ts[i];
    } else if (gap > 0.0) {
      p.interarrival.push_back(gap);
    }
    p.hour_of_week[hour_of_week_bin(ts[i])] += 1.0;
    prev = ts[i];
  }
  p.sessions.emplace_back(session_start, prev);
  return p;
}

namespace detail {

inline std::vector<std::pair<double, double>> active_intervals(const TimingProfile& profile, double start,
                                                               double horizon, bool uniform_fallback) {
  double end = start + horizon;
  std::vector<std::pair<double, double>> out;
  for (auto& [s, e] : profile.sessions) {
    double cs = std::max(s, start), ce = std::min(e, end);
    if (ce > cs) out.emplace_back(cs, ce);
  }
  if (!out.empty()) return out;
  if (profile.total_mass() > 0.0) {
    // Hour-of-week fallback: hours whose bin saw any activity.
    double h0 = std::floor(start / 3600.0) * 3600.0;
    for (double h = h0; h < end; h += 3600.0) {
      if (profile.hour_of_week[hour_of_week_bin(h)] <= 0.0) continue;
      double cs = std::max(h, start), ce = std::min(h + 3600.0, end);
      if (ce <= cs) continue;
      if (!out.empty() && out.back().second >= cs)
        out.back().second = ce;
      else
        out.emplace_back(cs, ce);
    }
    if (!out.empty()) return out;
  }
  if (uniform_fallback) return {{start, end}};
  throw std::invalid_argument("sample_schedule: profile has no active periods and no fallback enabled");
}

}  // namespace detail

// Decoy timestamps for [start, start+horizon). Gaps resample the empirical
// inter-arrival distribution, scaled so the whole-horizon rate meets
// rate_target (queries/hour) and perturbed by Uniform(1-jitter, 1+jitter).
// Gaps advance through active time only; dead time between sessions is skipped.
inline std::vector<double> sample_schedule(const TimingProfile& profile, double start, double horizon,
                                           double rate_target, double jitter, std::uint64_t seed,
                                           bool uniform_fallback = false) {
  if (horizon <= 0.0) throw std::invalid_argument("sample_schedule: horizon must be positive");
  if (rate_target <= 0.0) throw std::invalid_argument("sample_schedule: rate_target must be positive");
  if (jitter < 0.0 || jitter >= 1.0) throw std::invalid_argument("sample_schedule: jitter out of [0,1)");
  auto intervals = detail::active_intervals(profile, start, horizon, uniform_fallback);
  double active = 0.0;
  for (auto& [s, e] : intervals) active += e - s;
  double target_count = rate_target * horizon / 3600.0;
  if (target_count < 1.0) return {};
  double base_mean;
  if (profile.interarrival.empty()) {
    base_mean = active / target_count;
  } else {
    double sum = 0.0;
    for (double g : profile.interarrival) sum += g;
    base_mean = sum / static_cast<double>(profile.interarrival.size());
  }
  double scale = (active / target_count) / base_mean;

  Rng rng(seed);
  std::vector<double> out;
  double a = 0.0;  // consumed active seconds
  std::size_t iv = 0;
  double iv_base = 0.0;  // active seconds before intervals[iv]
  while (true) {
    double gap;
    if (profile.interarrival.empty())
      gap = base_mean;
    else
      gap = profile.interarrival[rng.below(profile.interarrival.size())];
    gap *= scale;
    if (jitter > 0.0) gap *= rng.uniform(1.0 - jitter, 1.0 + jitter);
    a += gap;
    while (iv < intervals.size() &&
           a >= iv_base + (intervals[iv].second - intervals[iv].first)) {
      iv_base += intervals[iv].second - intervals[iv].first;
      ++iv;
    }
    if (iv >= intervals.size()) break;
    out.push_back(intervals[iv].first + (a - iv_base));
  }
  return out;
}

// Burst of decoys shortly after a real query; sizes from the policy
// distribution, offsets uniform in (0, burst_spread], >= 2s apart, sorted.
inline std::vector<double> trigger_burst(const BurstPolicy& policy, double user_query_time,
                                         std::uint64_t seed) {
  if (policy.burst_size.empty()) return {};
  Rng rng(seed);
  std::vector<double> weights;
  std::vector<int> sizes;
  for (auto& [k, w] : policy.burst_size) {
    if (k < 0 || w < 0.0) throw std::invalid_argument("trigger_burst: bad burst_size distribution");
    sizes.push_back(k);
    weights.push_back(w);
  }
  int k = sizes[rng.discrete(weights)];
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(user_query_time + policy.burst_spread * (1.0 - rng.next_double()));
  std::sort(out.begin(), out.end());
  // Keep bursts inside (t, t+spread] while holding 2s of separation; spacing
  // is resolved backward from the last offset so the spread bound survives.
  for (std::size_t i = out.size(); i-- > 1;)
    out[i - 1] = std::min(out[i - 1], out[i] - 2.0);
  if (!out.empty() && out.front() <= user_query_time) {
    double t = user_query_time;
    for (auto& x : out) x = t = std::max(x, t + 1.0);
  }
  return out;
}

// --- timing profile file: 168 `hour` rows, `gap` rows, `session` rows ---

inline void save_timing(const std::string& path, const TimingProfile& p) {
  tsv::Document doc;
  doc.comments = {"# chaff timing profile v1"};
  for (int i = 0; i < 168; ++i)
    doc.rows.push_back({"hour", std::to_string(i), tsv::format_double(p.hour_of_week[i])});
  for (double g : p.interarrival) doc.rows.push_back({"gap", tsv::format_double(g)});
  for (auto& [s, e] : p.sessions)
    doc.rows.push_back({"session", tsv::format_double(s), tsv::format_double(e)});
  tsv::write_file(path, doc);
}

inline TimingProfile load_timing(const std::string& path) {
  tsv::Document doc = tsv::read_file(path);
  TimingProfile p;
  for (auto& row : doc.rows) {
    if (row.empty()) continue;
    if (row[0] == "hour" && row.size() == 3) {
      int bin = static_cast<int>(tsv::parse_int(row[1]));
      if (bin < 0 || bin >= 168) throw std::runtime_error("timing file " + path + ": bin out of range");
      p.hour_of_week[bin] = tsv::parse_double(row[2]);
    } else if (row[0] == "gap" && row.size() == 2) {
      p.interarrival.push_back(tsv::parse_double(row[1]));
    } else if (row[0] == "session" && row.size() == 3) {
      p.sessions.emplace_back(tsv::parse_double(row[1]), tsv::parse_double(row[2]));
    } else {
      throw std::runtime_error("timing file " + path + ": unrecognized record " + row[0]);
    }
  }
  return p;
}

}  // namespace chaff::timing

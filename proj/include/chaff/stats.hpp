#pragma once

// Statistics used by the timing model, the detector features and the test
// oracles: two-sample KS, chi-squared with a Wilson-Hilferty critical value,
// entropies, autocorrelation, decimal-stable rounding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace chaff::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Half-up rounding to 2 decimals, stable against binary representation of
// values like 0.435 that sit a hair below the decimal midpoint.
inline double round2(double x) {
  double scaled = x * 100.0 + (x >= 0 ? 1e-9 : -1e-9);
  return static_cast<double>(std::llround(scaled)) / 100.0;
}

// Shannon entropy in bits of a normalized distribution; zero weights skipped.
inline double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("shannon_entropy: negative probability");
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

template <typename K>
double entropy_from_counts(const std::map<K, std::int64_t>& counts) {
  double total = 0.0;
  for (auto& [k, c] : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (auto& [k, c] : counts) {
    if (c > 0) {
      double p = static_cast<double>(c) / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

// Two-sample Kolmogorov-Smirnov statistic D = sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Large-sample critical value c(alpha) * sqrt((n+m)/(n*m)), c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_critical(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0) throw std::invalid_argument("ks_critical: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ks_critical: alpha out of range");
  double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

struct Chi2Result {
  double statistic = 0.0;
  int df = 0;
};

// Upper-tail standard normal quantile via Acklam's rational approximation
// (relative error ~1e-9 over the usable range).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p out of range");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > phigh) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Wilson-Hilferty approximation of the chi-squared upper-alpha critical value.
inline double chi2_critical(int df, double alpha) {
  if (df <= 0) throw std::invalid_argument("chi2_critical: df must be positive");
  double z = normal_quantile(1.0 - alpha);
  double k = static_cast<double>(df);
  double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

// Two-sample chi-squared homogeneity test on category counts. Categories with a
// zero combined count are dropped; df = K-1.
template <typename K>
Chi2Result chi2_two_sample(const std::map<K, std::int64_t>& a, const std::map<K, std::int64_t>& b) {
  std::map<K, std::pair<double, double>> cells;
  for (auto& [k, c] : a) cells[k].first += static_cast<double>(c);
  for (auto& [k, c] : b) cells[k].second += static_cast<double>(c);
  double na = 0.0, nb = 0.0;
  for (auto& [k, cell] : cells) {
    na += cell.first;
    nb += cell.second;
  }
  if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("chi2_two_sample: empty sample");
  double total = na + nb;
  Chi2Result r;
  int categories = 0;
  for (auto& [k, cell] : cells) {
    double rowsum = cell.first + cell.second;
    if (rowsum <= 0.0) continue;
    ++categories;
    double ea = rowsum * na / total;
    double eb = rowsum * nb / total;
    r.statistic += (cell.first - ea) * (cell.first - ea) / ea;
    r.statistic += (cell.second - eb) * (cell.second - eb) / eb;
  }
  if (categories < 2) throw std::invalid_argument("chi2_two_sample: fewer than two categories");
  r.df = categories - 1;
  return r;
}

// Goodness of fit of observed counts against expected probabilities.
template <typename K>
Chi2Result chi2_gof(const std::map<K, std::int64_t>& observed, const std::map<K, double>& expected_probs) {
  double n = 0.0;
  for (auto& [k, c] : observed) n += static_cast<double>(c);
  if (n <= 0.0) throw std::invalid_argument("chi2_gof: empty sample");
  double psum = 0.0;
  for (auto& [k, p] : expected_probs) psum += p;
  if (!(psum > 0.0)) throw std::invalid_argument("chi2_gof: zero expected mass");
  Chi2Result r;
  int categories = 0;
  for (auto& [k, p] : expected_probs) {
    if (p <= 0.0) continue;
    ++categories;
    double e = n * p / psum;
    auto it = observed.find(k);
    double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    r.statistic += (o - e) * (o - e) / e;
  }
  for (auto& [k, c] : observed) {
    if (c > 0) {
      auto it = expected_probs.find(k);
      if (it == expected_probs.end() || it->second <= 0.0)
        throw std::invalid_argument("chi2_gof: observed category with zero expected probability");
    }
  }
  if (categories < 2) throw std::invalid_argument("chi2_gof: fewer than two categories");
  r.df = categories - 1;
  return r;
}

// Max autocorrelation of a series over lags 1..max_lag, clipped to [0,1].
// Nonempty zero-variance input scores 1.0 (perfectly periodic at every lag).
inline double max_autocorrelation(std::span<const double> series, int max_lag) {
  if (series.empty()) throw std::invalid_argument("max_autocorrelation: empty series");
  double mu = mean(series);
  double var = 0.0;
  for (double x : series) var += (x - mu) * (x - mu);
  if (var <= 0.0) return 1.0;
  double best = 0.0;
  int n = static_cast<int>(series.size());
  for (int lag = 1; lag <= max_lag && lag < n; ++lag) {
    double s = 0.0;
    for (int i = lag; i < n; ++i) s += (series[i] - mu) * (series[i - lag] - mu);
    best = std::max(best, s / var);
  }
  return std::clamp(best, 0.0, 1.0);
}

// Nearest-rank quantile on an unsorted copy; q in [0,1].
inline double quantile_nearest_rank(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile_nearest_rank: empty");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_nearest_rank: q out of range");
  std::sort(v.begin(), v.end());
  std::size_t rank = q <= 0.0 ? 1 : static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  if (rank == 0) rank = 1;
  if (rank > v.size()) rank = v.size();
  return v[rank - 1];
}

template <typename K>
double jaccard_set(const std::map<K, std::int64_t>& a, const std::map<K, std::int64_t>& b) {
  std::size_t inter = 0, uni = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    ++uni;
    if (ia == a.end()) {
      ++ib;
    } else if (ib == b.end()) {
      ++ia;
    } else if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Multiset Jaccard: sum of min counts over sum of max counts.
template <typename K>
double jaccard_multiset(const std::map<K, std::int64_t>& a, const std::map<K, std::int64_t>& b) {
  double num = 0.0, den = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ia == a.end()) {
      den += static_cast<double>(ib->second);
      ++ib;
    } else if (ib == b.end()) {
      den += static_cast<double>(ia->second);
      ++ia;
    } else if (ia->first < ib->first) {
      den += static_cast<double>(ia->second);
      ++ia;
    } else if (ib->first < ia->first) {
      den += static_cast<double>(ib->second);
      ++ib;
    } else {
      num += static_cast<double>(std::min(ia->second, ib->second));
      den += static_cast<double>(std::max(ia->second, ib->second));
      ++ia;
      ++ib;
    }
  }
  if (den <= 0.0) return 0.0;
  return num / den;
}

}  // namespace chaff::stats

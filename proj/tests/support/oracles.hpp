#pragma once

// Independent reference computations used to check the library. Nothing
// here calls into the code under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "selfpref/records.hpp"

namespace oracle {

inline double t_density(double x, double df) {
  const double log_c = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) - 0.5 * std::log(df * std::numbers::pi);
  return std::exp(log_c - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

// Composite Simpson integration of the density from 0 to |t|.
inline double t_cdf(double t, double df, int intervals = 4000) {
  const double b = std::abs(t);
  const double h = b / intervals;
  double sum = t_density(0.0, df) + t_density(b, df);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * t_density(i * h, df);
  const double half_mass = sum * h / 3.0;
  return t >= 0 ? 0.5 + half_mass : 0.5 - half_mass;
}

// Closed form for two degrees of freedom.
inline double t_cdf_df2(double t) { return 0.5 + t / (2.0 * std::sqrt(2.0 + t * t)); }

inline double binary_entropy(double p) {
  long double q = p;
  auto term = [](long double x) { return x <= 0 ? 0.0L : -x * std::log2(x); };
  return static_cast<double>(term(q) + term(1.0L - q));
}

inline double binomial_pmf(std::size_t n, std::size_t k, double p) {
  const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_choose + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Smallest [lo, hi] such that each tail outside it has mass <= (1 - level) / 2.
inline std::pair<std::size_t, std::size_t> binomial_interval(std::size_t n, double p, double level) {
  const double tail = (1.0 - level) / 2.0;
  std::size_t lo = 0;
  double below = 0.0;
  while (lo < n && below + binomial_pmf(n, lo, p) <= tail) below += binomial_pmf(n, lo++, p);
  std::size_t hi = n;
  double above = 0.0;
  while (hi > 0 && above + binomial_pmf(n, hi, p) <= tail) above += binomial_pmf(n, hi--, p);
  return {lo, hi};
}

// Kolmogorov-Smirnov distance between a sample and Uniform(0, 1).
inline double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max(d, (i + 1) / n - xs[i]);
    d = std::max(d, xs[i] - i / n);
  }
  return d;
}

// Two-sample KS distance.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

// All (self, proxy) pairs satisfying the eligibility rule, by exhaustive scan.
struct Pair {
  std::size_t self_index;
  std::size_t proxy_index;
  friend bool operator==(const Pair&, const Pair&) = default;
  friend auto operator<=>(const Pair&, const Pair&) = default;
};

inline std::vector<Pair> eligible_pairs(std::span<const selfpref::EvalRecord> records, bool exclude_same_family) {
  std::vector<Pair> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& s = records[i];
    if (s.subject.id != s.judge.id) continue;
    for (std::size_t j = 0; j < records.size(); ++j) {
      const auto& p = records[j];
      if (p.subject.id == p.judge.id) continue;
      if (p.query != s.query || p.judge.id != s.judge.id || p.reference.id != s.reference.id) continue;
      if (p.outcome != s.outcome) continue;
      if (exclude_same_family && p.subject.family == s.judge.family) continue;
      out.push_back({i, j});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double mean(std::span<const double> xs) {
  long double sum = 0;
  for (double x : xs) sum += x;
  return static_cast<double>(sum / xs.size());
}

}  // namespace oracle

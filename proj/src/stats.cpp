#include "selfpref/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "selfpref/error.hpp"

namespace selfpref {
namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) return h;
  }
  return h;
}

bool all_identical(std::span<const double> xs) {
  return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end();
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::kEmptyInput, "mean of an empty sequence");
  if (all_identical(xs)) return xs.front();
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorCode::kEmptyInput, "sample variance needs at least two values");
  if (all_identical(xs)) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "incomplete beta requires a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("incomplete beta: x = {} outside [0,1]", x));
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::kInvalidArgument, "student t: df must be positive");
  if (std::isnan(t)) throw Error(ErrorCode::kInvalidArgument, "student t: t is NaN");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? tail : 1.0 - tail;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::kInvalidArgument, "student t: df must be positive");
  if (std::isnan(t)) throw Error(ErrorCode::kInvalidArgument, "student t: t is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

const char* to_string(OutcomeCell cell) {
  switch (cell) {
    case OutcomeCell::kLoss: return "0";
    case OutcomeCell::kWin: return "1";
    case OutcomeCell::kAll: return "all";
  }
  return "?";
}

QualityTestResult paired_test(std::span<const double> deltas) {
  if (deltas.size() < 2)
    throw Error(ErrorCode::kEmptyInput,
                fmt::format("paired_test needs at least 2 differentials, got {}", deltas.size()));
  QualityTestResult out;
  out.n = deltas.size();
  out.mean_delta = mean(deltas);
  out.ilsp_upd = 100.0 * out.mean_delta;
  const double var = sample_variance(deltas);
  out.se = std::sqrt(var / static_cast<double>(out.n));
  if (*out.se == 0.0) {
    if (out.mean_delta == 0.0)
      throw Error(ErrorCode::kDegenerateStatistic, "paired_test: all differentials are zero; the test is undefined");
    out.degenerate = true;
    out.p = out.mean_delta > 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.t = out.mean_delta / *out.se;
  out.p = student_t_sf(*out.t, static_cast<double>(out.n - 1));
  return out;
}

QualityTestResult quality_test(std::span<const MatchedExample> matched, std::span<const EvalRecord> self_records,
                               OutcomeCell cell) {
  auto in_cell = [cell](int y) { return cell == OutcomeCell::kAll || y == static_cast<int>(cell); };
  std::vector<double> deltas;
  for (const auto& m : matched)
    if (in_cell(m.y)) deltas.push_back(m.delta);
  auto out = paired_test(deltas);

  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : self_records) {
    if (!r.is_self()) throw Error(ErrorCode::kInvalidArgument, "quality_test: self_records contains a proxy record");
    if (!in_cell(r.outcome)) continue;
    sum += r.s;
    ++count;
  }
  if (count > 0) {
    out.ilsp_orig = 100.0 * sum / static_cast<double>(count);
    if (*out.ilsp_orig != 0.0) out.rel_delta = relative_delta(*out.ilsp_orig, *out.ilsp_upd);
  }
  return out;
}

double relative_delta(double ilsp_orig, double ilsp_upd) {
  if (ilsp_orig == 0.0) throw Error(ErrorCode::kInvalidArgument, "relative_delta: ilsp_orig is zero");
  return 100.0 * (ilsp_upd - ilsp_orig) / ilsp_orig;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw Error(ErrorCode::kInvalidArgument, fmt::format("pearson: length mismatch ({} vs {})", xs.size(), ys.size()));
  if (xs.size() < 2) throw Error(ErrorCode::kEmptyInput, "pearson needs at least two points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kDegenerateStatistic, "pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AggregateSummary aggregate(std::span<const ResultRow> rows, double alpha) {
  AggregateSummary out;
  out.n_rows = rows.size();
  std::map<std::string, std::vector<const ResultRow*>> by_dataset;
  for (const auto& row : rows) by_dataset[row.dataset].push_back(&row);

  std::vector<double> all_rel, abs_rel, capped, dataset_means;
  for (const auto& [dataset, members] : by_dataset) {
    DatasetAggregate agg;
    agg.dataset = dataset;
    agg.n_rows = members.size();
    std::vector<double> rel;
    for (const ResultRow* row : members) {
      const auto& r = row->result;
      if (r.significant(alpha)) ++agg.n_significant;
      if (r.ilsp_upd && *r.ilsp_upd <= 0.0) ++out.variants.n_rows_nonpositive_upd;
      if (!r.rel_delta) continue;
      rel.push_back(*r.rel_delta);
      all_rel.push_back(*r.rel_delta);
      abs_rel.push_back(std::abs(*r.rel_delta));
      capped.push_back(std::max(-100.0, *r.rel_delta));
    }
    if (!rel.empty()) {
      agg.mean_rel_delta = mean(rel);
      dataset_means.push_back(*agg.mean_rel_delta);
    }
    out.n_significant += agg.n_significant;
    out.datasets.push_back(std::move(agg));
  }
  if (out.n_rows > 0)
    out.significance_fraction = static_cast<double>(out.n_significant) / static_cast<double>(out.n_rows);
  if (!all_rel.empty()) {
    out.variants.mean_rel_delta = mean(all_rel);
    out.variants.mean_abs_rel_delta = mean(abs_rel);
    out.variants.mean_rel_delta_capped = mean(capped);
    out.variants.mean_of_dataset_means = mean(dataset_means);
  }
  return out;
}

LinearFit ols(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::kInvalidArgument, "ols: length mismatch");
  if (xs.size() < 3) throw Error(ErrorCode::kEmptyInput, "ols needs at least three points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kDegenerateStatistic, "ols: regressor has zero variance");
  LinearFit fit;
  fit.n = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    sse += r * r;
  }
  fit.slope_se = std::sqrt(sse / static_cast<double>(fit.n - 2) / sxx);
  return fit;
}

}  // namespace selfpref

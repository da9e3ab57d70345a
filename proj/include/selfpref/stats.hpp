#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfpref/matching.hpp"
#include "selfpref/records.hpp"

namespace selfpref {

// Regularized incomplete beta I_x(a, b), evaluated with the Lentz continued
// fraction on whichever side of the symmetry point converges fastest.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);
/// Upper tail P(T > t).
double student_t_sf(double t, double df);

enum class OutcomeCell { kLoss = 0, kWin = 1, kAll = 2 };

const char* to_string(OutcomeCell cell);

struct QualityTestResult {
  std::size_t n = 0;
  double mean_delta = 0.0;
  std::optional<double> se;
  std::optional<double> t;
  double p = 1.0;
  // Zero-variance deltas with nonzero mean: p is 0 or 1 by convention.
  bool degenerate = false;
  // p is only known to be below the display floor (transcribed tables).
  bool p_censored = false;
  // Percent units.
  std::optional<double> ilsp_orig;
  std::optional<double> ilsp_upd;
  std::optional<double> rel_delta;

  bool significant(double alpha) const { return p < alpha; }

  friend bool operator==(const QualityTestResult&, const QualityTestResult&) = default;
};

/// One-sided paired t-test of H0: mean delta <= 0. Throws Error(kEmptyInput)
/// for n < 2 and Error(kDegenerateStatistic) when every delta is zero.
QualityTestResult paired_test(std::span<const double> deltas);

/// Filters matched examples to `cell`, runs the paired test and fills the
/// ILSP columns: ilsp_orig is the mean self-vote over the group's self-records
/// in that cell, ilsp_upd the mean differential.
QualityTestResult quality_test(std::span<const MatchedExample> matched, std::span<const EvalRecord> self_records,
                               OutcomeCell cell = OutcomeCell::kLoss);

/// 100 * (upd - orig) / orig, inputs in percent.
double relative_delta(double ilsp_orig, double ilsp_upd);

double pearson(std::span<const double> xs, std::span<const double> ys);

struct ResultRow {
  std::string dataset;
  std::string judge;
  QualityTestResult result;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct DatasetAggregate {
  std::string dataset;
  std::size_t n_rows = 0;
  // Absent when no row of the dataset has a Rel delta.
  std::optional<double> mean_rel_delta;
  std::size_t n_significant = 0;

  friend bool operator==(const DatasetAggregate&, const DatasetAggregate&) = default;
};

// Several readings of a headline reduction figure; none is privileged.
struct AggregateVariants {
  double mean_abs_rel_delta = 0.0;
  double mean_rel_delta = 0.0;
  double mean_rel_delta_capped = 0.0;  // each row floored at -100%
  double mean_of_dataset_means = 0.0;
  std::size_t n_rows_nonpositive_upd = 0;

  friend bool operator==(const AggregateVariants&, const AggregateVariants&) = default;
};

struct AggregateSummary {
  std::vector<DatasetAggregate> datasets;  // sorted by dataset name
  std::size_t n_rows = 0;
  std::size_t n_significant = 0;
  double significance_fraction = 0.0;
  AggregateVariants variants;
};

/// Unweighted per-dataset means of row-level Rel delta and the share of rows
/// with p < alpha. Rows without a Rel delta are counted for significance only.
AggregateSummary aggregate(std::span<const ResultRow> rows, double alpha = 0.05);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  std::size_t n = 0;
};

LinearFit ols(std::span<const double> xs, std::span<const double> ys);

double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> xs);

}  // namespace selfpref

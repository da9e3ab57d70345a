#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "selfpref/report.hpp"

namespace selfpref {

// A judge-swap summary row transcribed from a published table (percent units).
struct PublishedRow {
  std::string dataset;
  std::string model;
  double ilsp_orig = 0.0;
  double ilsp_upd = 0.0;
  std::size_t n = 0;
  double rel_delta_printed = 0.0;
  double p = 1.0;
  bool p_censored = false;
  bool bold = false;
};

struct EntropyGapRow {
  std::string dataset;
  std::size_t n = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  double pct_positive = 0.0;
  double mean_gap = 0.0;
};

/// The consolidated ILSP summary (one row per dataset/judge).
std::vector<PublishedRow> ilsp_summary_fixture();
/// Chain-of-thought ILSP summary.
std::vector<PublishedRow> cot_summary_fixture();
/// Entropy-gap statistics; the last row is the printed overall line.
std::vector<EntropyGapRow> entropy_gap_fixture();

std::vector<PublishedRow> parse_published_rows(const std::string& csv);
std::vector<EntropyGapRow> parse_entropy_gap_rows(const std::string& csv);

/// Report rows whose Rel delta is recomputed from the ILSP columns.
std::vector<ResultRow> to_result_rows(const std::vector<PublishedRow>& rows);

}  // namespace selfpref

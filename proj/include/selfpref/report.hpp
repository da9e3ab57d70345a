#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfpref/matching.hpp"
#include "selfpref/metrics.hpp"
#include "selfpref/stats.hpp"

namespace selfpref {

struct GroupDiagnostics {
  std::string dataset;
  std::string judge;
  std::string reference;
  std::size_t n_self = 0;
  std::size_t n_matched = 0;
  std::size_t n_unmatched = 0;
  std::optional<DecompositionSummary> decomposition;
  std::optional<ProxyValidity> validity;
  std::optional<EntropyReport> entropy;
  std::optional<ProxyCountProfile> proxy_counts;

  friend bool operator==(const GroupDiagnostics&, const GroupDiagnostics&) = default;
};

struct AuditReport {
  double alpha = 0.05;
  std::vector<ResultRow> rows;
  std::vector<DatasetAggregate> dataset_aggregates;
  std::size_t n_significant = 0;
  double significance_fraction = 0.0;
  std::vector<GroupDiagnostics> diagnostics;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

/// Sorts rows by (dataset, judge) and fills the aggregate fields.
AuditReport make_report(std::vector<ResultRow> rows, std::vector<GroupDiagnostics> diagnostics, double alpha = 0.05);

enum class ReportFormat { kTable, kDelimited, kStructured };

ReportFormat parse_report_format(std::string_view name);

std::string render(const AuditReport& report, ReportFormat format);

/// Inverse of render(report, kStructured).
AuditReport parse_structured(std::string_view text);

std::string format_percent(double value);
std::string format_p(double p, bool censored = false);

}  // namespace selfpref

#pragma once

#include <string>
#include <vector>

#include "selfpref/matching.hpp"
#include "selfpref/records.hpp"
#include "selfpref/report.hpp"
#include "selfpref/stats.hpp"

namespace selfpref {

struct AuditOptions {
  double alpha = 0.05;
  OutcomeCell cell = OutcomeCell::kLoss;
  MatchOptions matching;
  bool diagnostics = true;
};

// A (dataset, judge) row that could not be tested.
struct SkippedRow {
  std::string dataset;
  std::string judge;
  std::string reason;
};

struct AuditOutcome {
  AuditReport report;
  std::vector<SkippedRow> skipped;
};

/// Partitions by (judge, reference, dataset), matches each group and runs the
/// paired test once per (dataset, judge), pooling matched examples over
/// references. Groups are processed in parallel; the result is deterministic.
AuditOutcome audit(const RecordSet& records, const AuditOptions& options = {});

/// Decomposition, proxy validity, entropy and proxy-count sections for every
/// group. Sections that are undefined for a group are left empty.
std::vector<GroupDiagnostics> group_diagnostics(const RecordSet& records, const MatchOptions& options = {});

}  // namespace selfpref

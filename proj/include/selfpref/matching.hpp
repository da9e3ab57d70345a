#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfpref/records.hpp"

namespace selfpref {

// A self-record joined with every outcome-equivalent proxy record on the
// same query.
struct MatchedExample {
  QueryKey query;
  EvalRecord self_record;
  std::vector<EvalRecord> proxy_records;
  double proxy_mean_s = 0.0;
  double delta = 0.0;
  int y = 0;

  friend bool operator==(const MatchedExample&, const MatchedExample&) = default;
};

struct MatchOptions {
  bool exclude_same_family = false;
};

enum class UnmatchedReason {
  kNoProxyRecords,
  kNoOutcomeMatch,
  kOnlySameFamily,
};

const char* to_string(UnmatchedReason reason);

struct UnmatchedSelf {
  EvalRecord self_record;
  UnmatchedReason reason = UnmatchedReason::kNoProxyRecords;
};

struct MatchResult {
  std::vector<MatchedExample> matched;
  std::vector<UnmatchedSelf> unmatched;

  std::size_t n_self() const { return matched.size() + unmatched.size(); }
  double coverage() const;
};

/// Pairs each self-record with the proxy records that share its
/// (query, judge, reference) and its oracle outcome. All inputs must belong to
/// one (judge, reference, dataset) group; otherwise throws Error(kMixedGroups).
/// Matched examples are ordered by query, proxies by subject id.
MatchResult match(std::span<const EvalRecord> self_records, std::span<const EvalRecord> proxy_records,
                  const MatchOptions& options = {});

MatchResult match(const RecordGroup& group, const MatchOptions& options = {});

struct ProxyValidity {
  double judge_winrate = 0.0;
  double weighted_proxy_winrate = 0.0;
  std::map<std::string, std::size_t> per_proxy_counts;
  std::map<std::string, double> per_proxy_winrate;

  std::pair<double, double> scatter_point() const { return {judge_winrate, weighted_proxy_winrate}; }

  friend bool operator==(const ProxyValidity&, const ProxyValidity&) = default;
};

/// Judge winrate against the reference, and the winrate of the selected
/// proxies weighted by how many matched examples each contributed. A proxy's
/// winrate is taken over every record in `all_records` with that proxy as
/// subject against the same reference on the same dataset, one vote per query.
ProxyValidity validity(std::span<const MatchedExample> matched, const RecordSet& all_records);

struct ProxyCountStratum {
  std::size_t proxies = 0;
  std::size_t n_exact = 0;
  double fraction_at_least = 0.0;
  std::optional<double> mean_delta;
  std::optional<double> se;

  friend bool operator==(const ProxyCountStratum&, const ProxyCountStratum&) = default;
};

struct ProxyCountProfile {
  std::vector<ProxyCountStratum> strata;
  // OLS slope of delta on proxy count over examples; absent with < 2 distinct counts.
  std::optional<double> slope;
  std::optional<double> slope_se;

  friend bool operator==(const ProxyCountProfile&, const ProxyCountProfile&) = default;
};

ProxyCountProfile proxy_count_profile(std::span<const MatchedExample> matched);

}  // namespace selfpref

#include "selfpref/matching.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "selfpref/error.hpp"
#include "selfpref/metrics.hpp"
#include "selfpref/stats.hpp"

namespace selfpref {
namespace {

void require_group(const EvalRecord& record, const GroupKey& key) {
  if (group_of(record) != key)
    throw Error(ErrorCode::kMixedGroups, fmt::format("record for (judge={}, reference={}, dataset={}) mixed into group "
                                                     "(judge={}, reference={}, dataset={})",
                                                     record.judge.id, record.reference.id, record.query.dataset,
                                                     key.judge, key.reference, key.dataset));
}

}  // namespace

const char* to_string(UnmatchedReason reason) {
  switch (reason) {
    case UnmatchedReason::kNoProxyRecords: return "no_proxy_records";
    case UnmatchedReason::kNoOutcomeMatch: return "no_outcome_match";
    case UnmatchedReason::kOnlySameFamily: return "only_same_family";
  }
  return "unknown";
}

double MatchResult::coverage() const {
  const auto total = n_self();
  return total == 0 ? 0.0 : static_cast<double>(matched.size()) / static_cast<double>(total);
}

MatchResult match(std::span<const EvalRecord> self_records, std::span<const EvalRecord> proxy_records,
                  const MatchOptions& options) {
  MatchResult result;
  if (self_records.empty()) return result;

  const GroupKey key = group_of(self_records.front());
  for (const auto& r : self_records) {
    require_group(r, key);
    if (!r.is_self())
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("match: subject '{}' in self_records is not the judge", r.subject.id));
  }
  std::map<QueryKey, std::vector<const EvalRecord*>> by_query;
  for (const auto& r : proxy_records) {
    require_group(r, key);
    if (!r.is_proxy()) throw Error(ErrorCode::kInvalidArgument, "match: proxy_records contains a self-record");
    by_query[r.query].push_back(&r);
  }

  std::vector<const EvalRecord*> selves;
  selves.reserve(self_records.size());
  for (const auto& r : self_records) selves.push_back(&r);
  std::stable_sort(selves.begin(), selves.end(),
                   [](const EvalRecord* a, const EvalRecord* b) { return a->query < b->query; });

  for (const EvalRecord* self : selves) {
    auto it = by_query.find(self->query);
    if (it == by_query.end()) {
      result.unmatched.push_back({*self, UnmatchedReason::kNoProxyRecords});
      continue;
    }
    std::vector<const EvalRecord*> same_outcome;
    for (const EvalRecord* p : it->second)
      if (p->outcome == self->outcome) same_outcome.push_back(p);
    if (same_outcome.empty()) {
      result.unmatched.push_back({*self, UnmatchedReason::kNoOutcomeMatch});
      continue;
    }
    std::vector<const EvalRecord*> eligible;
    for (const EvalRecord* p : same_outcome)
      if (!options.exclude_same_family || !p->subject.same_family(self->judge)) eligible.push_back(p);
    if (eligible.empty()) {
      result.unmatched.push_back({*self, UnmatchedReason::kOnlySameFamily});
      continue;
    }
    std::sort(eligible.begin(), eligible.end(),
              [](const EvalRecord* a, const EvalRecord* b) { return a->subject.id < b->subject.id; });

    MatchedExample m;
    m.query = self->query;
    m.self_record = *self;
    m.y = self->outcome;
    double sum = 0.0;
    for (const EvalRecord* p : eligible) {
      m.proxy_records.push_back(*p);
      sum += p->s;
    }
    m.proxy_mean_s = sum / static_cast<double>(eligible.size());
    m.delta = self->s - m.proxy_mean_s;
    result.matched.push_back(std::move(m));
  }
  return result;
}

MatchResult match(const RecordGroup& group, const MatchOptions& options) {
  const auto selves = group.self_records();
  const auto proxies = group.proxy_records();
  return match(selves, proxies, options);
}

ProxyValidity validity(std::span<const MatchedExample> matched, const RecordSet& all_records) {
  if (matched.empty()) throw Error(ErrorCode::kEmptyInput, "validity: no matched examples");
  const GroupKey key = group_of(matched.front().self_record);

  ProxyValidity out;
  std::vector<EvalRecord> judge_records;
  for (const auto& r : all_records)
    if (r.is_self() && group_of(r) == key) judge_records.push_back(r);
  if (judge_records.empty())
    throw Error(ErrorCode::kEmptyInput, "validity: record set holds no self-records for the group");
  out.judge_winrate = task_accuracy(judge_records);

  for (const auto& m : matched) {
    require_group(m.self_record, key);
    for (const auto& p : m.proxy_records) ++out.per_proxy_counts[p.subject.id];
  }

  // One oracle outcome per (proxy, query): the outcome does not depend on the judge.
  std::map<std::string, std::map<std::string, int>> outcomes;
  for (const auto& r : all_records) {
    if (r.reference.id != key.reference || r.query.dataset != key.dataset) continue;
    if (!out.per_proxy_counts.contains(r.subject.id)) continue;
    outcomes[r.subject.id].emplace(r.query.example_id, r.outcome);
  }

  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& [proxy, count] : out.per_proxy_counts) {
    const auto& per_query = outcomes[proxy];
    std::size_t wins = 0;
    for (const auto& [id, y] : per_query) wins += y == 1;
    const double rate = static_cast<double>(wins) / static_cast<double>(per_query.size());
    out.per_proxy_winrate[proxy] = rate;
    weighted += rate * static_cast<double>(count);
    total += count;
  }
  out.weighted_proxy_winrate = weighted / static_cast<double>(total);
  return out;
}

ProxyCountProfile proxy_count_profile(std::span<const MatchedExample> matched) {
  ProxyCountProfile out;
  if (matched.empty()) return out;

  std::map<std::size_t, std::vector<double>> by_count;
  std::vector<double> ks, deltas;
  for (const auto& m : matched) {
    by_count[m.proxy_records.size()].push_back(m.delta);
    ks.push_back(static_cast<double>(m.proxy_records.size()));
    deltas.push_back(m.delta);
  }
  const std::size_t max_k = by_count.rbegin()->first;
  const auto n = static_cast<double>(matched.size());
  std::size_t at_least = matched.size();
  for (std::size_t k = 1; k <= max_k; ++k) {
    ProxyCountStratum stratum;
    stratum.proxies = k;
    stratum.fraction_at_least = static_cast<double>(at_least) / n;
    if (auto it = by_count.find(k); it != by_count.end()) {
      const auto& ds = it->second;
      stratum.n_exact = ds.size();
      stratum.mean_delta = mean(ds);
      if (ds.size() >= 2) stratum.se = std::sqrt(sample_variance(ds) / static_cast<double>(ds.size()));
      at_least -= ds.size();
    }
    out.strata.push_back(stratum);
  }
  if (by_count.size() >= 2 && matched.size() >= 3) {
    const auto fit = ols(ks, deltas);
    out.slope = fit.slope;
    out.slope_se = fit.slope_se;
  }
  return out;
}

}  // namespace selfpref

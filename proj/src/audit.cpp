#include "selfpref/audit.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <thread>

#include "selfpref/error.hpp"
#include "selfpref/metrics.hpp"

namespace selfpref {
namespace {

struct GroupWork {
  const RecordGroup* group = nullptr;
  std::vector<EvalRecord> self;
  MatchResult matched;
  std::optional<GroupDiagnostics> diagnostics;
};

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

GroupDiagnostics diagnose(const RecordGroup& group, const std::vector<EvalRecord>& self, const MatchResult& m,
                          const RecordSet& all) {
  GroupDiagnostics d;
  d.dataset = group.key.dataset;
  d.judge = group.key.judge;
  d.reference = group.key.reference;
  d.n_self = m.n_self();
  d.n_matched = m.matched.size();
  d.n_unmatched = m.unmatched.size();
  if (!self.empty()) d.decomposition = decompose(self);
  if (!m.matched.empty()) {
    d.validity = validity(m.matched, all);
    d.proxy_counts = proxy_count_profile(m.matched);
    const bool any_loss = std::any_of(m.matched.begin(), m.matched.end(), [](const auto& x) { return x.y == 0; });
    if (any_loss) d.entropy = entropy_report(m.matched, self);
  }
  return d;
}

std::vector<GroupWork> process(const Partition& parts, const RecordSet& all, const MatchOptions& options,
                               bool diagnostics) {
  std::vector<GroupWork> work;
  work.reserve(parts.size());
  for (const auto& [key, group] : parts) work.push_back({&group, {}, {}, {}});
  parallel_for(work.size(), [&](std::size_t i) {
    auto& w = work[i];
    w.self = w.group->self_records();
    w.matched = match(*w.group, options);
    if (diagnostics) w.diagnostics = diagnose(*w.group, w.self, w.matched, all);
  });
  return work;
}

bool in_cell(int y, OutcomeCell cell) { return cell == OutcomeCell::kAll || y == static_cast<int>(cell); }

}  // namespace

AuditOutcome audit(const RecordSet& records, const AuditOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error(ErrorCode::kConfig, "alpha must lie in (0, 1)");
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to audit");

  const auto parts = partition(records);
  auto work = process(parts, records, options.matching, options.diagnostics);

  struct Pooled {
    std::vector<MatchedExample> matched;
    std::vector<EvalRecord> self;
  };
  std::map<std::pair<std::string, std::string>, Pooled> pooled;
  std::vector<GroupDiagnostics> diagnostics;
  for (auto& w : work) {
    auto& p = pooled[{w.group->key.dataset, w.group->key.judge}];
    p.matched.insert(p.matched.end(), w.matched.matched.begin(), w.matched.matched.end());
    p.self.insert(p.self.end(), w.self.begin(), w.self.end());
    if (w.diagnostics) diagnostics.push_back(std::move(*w.diagnostics));
  }

  AuditOutcome out;
  std::vector<ResultRow> rows;
  for (const auto& [key, p] : pooled) {
    const auto n_cell =
        std::count_if(p.self.begin(), p.self.end(), [&](const auto& r) { return in_cell(r.outcome, options.cell); });
    if (n_cell == 0) {
      out.skipped.push_back({key.first, key.second, "no self-records in the outcome cell"});
      continue;
    }
    try {
      rows.push_back({key.first, key.second, quality_test(p.matched, p.self, options.cell)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyInput && e.code() != ErrorCode::kDegenerateStatistic) throw;
      out.skipped.push_back({key.first, key.second, e.what()});
    }
  }
  out.report = make_report(std::move(rows), std::move(diagnostics), options.alpha);
  return out;
}

std::vector<GroupDiagnostics> group_diagnostics(const RecordSet& records, const MatchOptions& options) {
  const auto parts = partition(records);
  auto work = process(parts, records, options, true);
  std::vector<GroupDiagnostics> out;
  out.reserve(work.size());
  for (auto& w : work) out.push_back(std::move(*w.diagnostics));
  return out;
}

}  // namespace selfpref

#include "selfpref/metrics.hpp"

#include <fmt/format.h>

#include <cmath>

#include "selfpref/error.hpp"
#include "selfpref/matching.hpp"

namespace selfpref {
namespace {

void require_self_records(std::span<const EvalRecord> records, const char* op) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, fmt::format("{}: no self-records", op));
  for (const auto& r : records) {
    if (!r.is_self())
      throw Error(
          ErrorCode::kInvalidArgument,
          fmt::format("{}: record with subject '{}' is not a self-record of judge '{}'", op, r.subject.id, r.judge.id));
  }
}

}  // namespace

double self_preference(std::span<const EvalRecord> self_records) {
  require_self_records(self_records, "self_preference");
  double sum = 0.0;
  for (const auto& r : self_records) sum += r.s;
  return sum / static_cast<double>(self_records.size());
}

double task_accuracy(std::span<const EvalRecord> self_records) {
  require_self_records(self_records, "task_accuracy");
  std::size_t wins = 0;
  for (const auto& r : self_records) wins += r.outcome == 1;
  return static_cast<double>(wins) / static_cast<double>(self_records.size());
}

DecompositionSummary decompose(std::span<const EvalRecord> self_records) {
  require_self_records(self_records, "decompose");
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (const auto& r : self_records) {
    sum[r.outcome] += r.s;
    ++count[r.outcome];
  }
  const auto n = static_cast<double>(self_records.size());

  DecompositionSummary out;
  out.n_loss = count[0];
  out.n_win = count[1];
  out.sp = (sum[0] + sum[1]) / n;
  out.acc = static_cast<double>(count[1]) / n;
  out.bias = out.sp - out.acc;
  if (count[0] > 0) out.ilsp = sum[0] / static_cast<double>(count[0]);
  if (count[1] > 0) out.lsp = sum[1] / static_cast<double>(count[1]);
  return out;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("binary_entropy: p = {} outside [0,1]", p));
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

EntropyReport entropy_report(std::span<const MatchedExample> matched, std::span<const EvalRecord> self_records) {
  EntropyReport out;
  double self_sum = 0.0;
  double proxy_sum = 0.0;
  for (const auto& m : matched) {
    if (m.y != 0) continue;
    self_sum += binary_entropy(m.self_record.s);
    // Entropy of each proxy vote, averaged within the example.
    double per_example = 0.0;
    for (const auto& p : m.proxy_records) per_example += binary_entropy(p.s);
    proxy_sum += per_example / static_cast<double>(m.proxy_records.size());
    ++out.n_loss;
  }
  if (out.n_loss == 0) throw Error(ErrorCode::kEmptyInput, "entropy_report: no matched examples with outcome 0");
  out.h_self_loss = self_sum / static_cast<double>(out.n_loss);
  out.h_proxy_loss = proxy_sum / static_cast<double>(out.n_loss);

  double win_sum = 0.0;
  for (const auto& r : self_records) {
    if (!r.is_self()) throw Error(ErrorCode::kInvalidArgument, "entropy_report: self_records contains a proxy record");
    if (r.outcome != 1) continue;
    win_sum += binary_entropy(r.s);
    ++out.n_win;
  }
  if (out.n_win > 0) {
    out.h_self_win = win_sum / static_cast<double>(out.n_win);
    out.gap = out.h_self_loss - *out.h_self_win;
  }
  return out;
}

}  // namespace selfpref

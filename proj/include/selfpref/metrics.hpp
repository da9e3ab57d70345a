#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "selfpref/records.hpp"

namespace selfpref {

struct MatchedExample;

// Conditional means are absent (not zero) when their outcome cell is empty.
struct DecompositionSummary {
  double sp = 0.0;
  double acc = 0.0;
  double bias = 0.0;
  std::optional<double> ilsp;
  std::optional<double> lsp;
  std::size_t n_loss = 0;
  std::size_t n_win = 0;

  friend bool operator==(const DecompositionSummary&, const DecompositionSummary&) = default;
};

double self_preference(std::span<const EvalRecord> self_records);
double task_accuracy(std::span<const EvalRecord> self_records);
DecompositionSummary decompose(std::span<const EvalRecord> self_records);

/// Binary Shannon entropy in bits, with 0 log 0 = 0.
double binary_entropy(double p);

struct EntropyReport {
  double h_self_loss = 0.0;
  double h_proxy_loss = 0.0;
  std::optional<double> h_self_win;
  // h_self_loss - h_self_win; absent when there are no winning self-records.
  std::optional<double> gap;
  std::size_t n_loss = 0;
  std::size_t n_win = 0;

  friend bool operator==(const EntropyReport&, const EntropyReport&) = default;
};

/// Entropy of losing self-votes vs their matched proxy votes, and the
/// hard-minus-easy gap against winning self-votes. Matched examples with
/// y = 1 are ignored.
EntropyReport entropy_report(std::span<const MatchedExample> matched, std::span<const EvalRecord> self_records);

}  // namespace selfpref

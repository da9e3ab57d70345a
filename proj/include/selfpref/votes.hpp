#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "selfpref/templates.hpp"

namespace selfpref {

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

enum class ExtractionMode { kFirstToken, kCotVerdict };

struct VoteExtraction {
  std::map<std::string, double> per_label_logprob;
  double p_subject_win = 0.5;
  ExtractionMode mode = ExtractionMode::kFirstToken;
  // Renormalized-away tie probability (first-token mode only).
  double tie_mass = 0.0;
};

/// Canonical alphabet label for a vote token, tolerating leading whitespace
/// and case differences; empty when the token is not a label.
std::optional<std::string> normalize_label(std::string_view token, const VoteAlphabet& alphabet);

/// P(subject label) / (P(subject label) + P(other label)) from the first
/// generated token's top log-probabilities. The best-scoring variant of each
/// label is used. Returns nullopt if either label is missing.
std::optional<VoteExtraction> extract_first_token(std::span<const TokenLogprob> top_logprobs,
                                                  const VoteAlphabet& alphabet, bool subject_shown_first);

enum class VerdictFailure { kNoMarker, kMalformed, kOutsideAlphabet };

const char* to_string(VerdictFailure failure);

struct CotVerdict {
  std::optional<std::string> label;
  std::optional<VerdictFailure> failure;

  bool ok() const { return label.has_value(); }
};

/// Label enclosed by the last well-formed "My final verdict is $$X$$." in the
/// completion. Total: every input yields a label or a failure code.
CotVerdict parse_cot_verdict(std::string_view completion, const VoteAlphabet& alphabet);

/// 1 for the subject's label, 0 for the other candidate's, 0.5 for a tie.
VoteExtraction verdict_vote(const std::string& label, const VoteAlphabet& alphabet, bool subject_shown_first);

}  // namespace selfpref

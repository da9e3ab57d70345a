#include "selfpref/votes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "selfpref/error.hpp"

namespace selfpref {
namespace {

constexpr std::string_view kVerdictMarker = "my final verdict is";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) { return lower(a) == lower(b); }

// Strips whitespace and the word-boundary markers BPE/SentencePiece vocabularies
// put in front of a token.
std::string_view strip_token(std::string_view token) {
  for (bool changed = true; changed;) {
    changed = false;
    token = trim(token);
    for (std::string_view marker : {std::string_view("\xC4\xA0"), std::string_view("\xE2\x96\x81")}) {
      if (token.starts_with(marker)) {
        token.remove_prefix(marker.size());
        changed = true;
      }
    }
  }
  return token;
}

}  // namespace

std::optional<std::string> normalize_label(std::string_view token, const VoteAlphabet& alphabet) {
  const auto stripped = strip_token(token);
  if (stripped.empty()) return std::nullopt;
  for (const auto& label : alphabet.labels())
    if (iequals(stripped, label)) return label;
  return std::nullopt;
}

std::optional<VoteExtraction> extract_first_token(std::span<const TokenLogprob> top_logprobs,
                                                  const VoteAlphabet& alphabet, bool subject_shown_first) {
  VoteExtraction out;
  out.mode = ExtractionMode::kFirstToken;
  for (const auto& entry : top_logprobs) {
    const auto label = normalize_label(entry.token, alphabet);
    if (!label || !std::isfinite(entry.logprob)) continue;
    auto [it, inserted] = out.per_label_logprob.emplace(*label, entry.logprob);
    if (!inserted) it->second = std::max(it->second, entry.logprob);
  }
  const auto& subject_label = subject_shown_first ? alphabet.first : alphabet.second;
  const auto& other_label = subject_shown_first ? alphabet.second : alphabet.first;
  auto subject_it = out.per_label_logprob.find(subject_label);
  auto other_it = out.per_label_logprob.find(other_label);
  if (subject_it == out.per_label_logprob.end() || other_it == out.per_label_logprob.end()) return std::nullopt;

  // p = P(s) / (P(s) + P(o)) = logistic(lp_s - lp_o), shift invariant in log space.
  const double diff = subject_it->second - other_it->second;
  out.p_subject_win = diff >= 0 ? 1.0 / (1.0 + std::exp(-diff)) : std::exp(diff) / (1.0 + std::exp(diff));

  if (alphabet.tie) {
    if (auto tie_it = out.per_label_logprob.find(*alphabet.tie); tie_it != out.per_label_logprob.end()) {
      const double top = std::max({subject_it->second, other_it->second, tie_it->second});
      const double ps = std::exp(subject_it->second - top);
      const double po = std::exp(other_it->second - top);
      const double pt = std::exp(tie_it->second - top);
      out.tie_mass = pt / (ps + po + pt);
    }
  }
  return out;
}

const char* to_string(VerdictFailure failure) {
  switch (failure) {
    case VerdictFailure::kNoMarker: return "no_verdict_marker";
    case VerdictFailure::kMalformed: return "malformed_verdict";
    case VerdictFailure::kOutsideAlphabet: return "label_outside_alphabet";
  }
  return "unknown";
}

CotVerdict parse_cot_verdict(std::string_view completion, const VoteAlphabet& alphabet) {
  const std::string haystack = lower(completion);
  std::vector<std::size_t> markers;
  for (auto pos = haystack.find(kVerdictMarker); pos != std::string::npos; pos = haystack.find(kVerdictMarker, pos + 1))
    markers.push_back(pos);
  if (markers.empty()) return {std::nullopt, VerdictFailure::kNoMarker};

  for (auto it = markers.rbegin(); it != markers.rend(); ++it) {
    auto rest = completion.substr(*it + kVerdictMarker.size());
    std::size_t i = 0;
    while (i < rest.size() && is_space(rest[i])) ++i;
    rest.remove_prefix(i);
    if (!rest.starts_with("$$")) continue;
    rest.remove_prefix(2);
    const auto close = rest.find("$$");
    if (close == std::string_view::npos) continue;
    const auto inner = trim(rest.substr(0, close));
    if (inner.empty() || inner.find_first_of("\n$") != std::string_view::npos) continue;
    if (!alphabet.contains(inner)) return {std::nullopt, VerdictFailure::kOutsideAlphabet};
    return {std::string(inner), std::nullopt};
  }
  return {std::nullopt, VerdictFailure::kMalformed};
}

VoteExtraction verdict_vote(const std::string& label, const VoteAlphabet& alphabet, bool subject_shown_first) {
  if (!alphabet.contains(label))
    throw Error(ErrorCode::kInvalidArgument, "verdict_vote: label '" + label + "' is not in the alphabet");
  VoteExtraction out;
  out.mode = ExtractionMode::kCotVerdict;
  const auto& subject_label = subject_shown_first ? alphabet.first : alphabet.second;
  if (alphabet.tie && label == *alphabet.tie) {
    out.p_subject_win = 0.5;
  } else {
    out.p_subject_win = label == subject_label ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace selfpref

#pragma once

// Hand-labelled chain-of-thought completions for an A/B/T alphabet.

#include <optional>
#include <string>
#include <vector>

#include "selfpref/votes.hpp"

namespace corpus {

struct CotCase {
  std::string text;
  std::optional<std::string> label;
  std::optional<selfpref::VerdictFailure> failure;
};

inline std::vector<CotCase> cot_cases() {
  using F = selfpref::VerdictFailure;
  return {
      // Plain verdicts.
      {"My final verdict is $$A$$.", "A", {}},
      {"My final verdict is $$B$$.", "B", {}},
      {"My final verdict is $$T$$.", "T", {}},
      {"Both answers reach 42. My final verdict is $$T$$.", "T", {}},
      {"Assistant A forgets the base case.\nMy final verdict is $$B$$.", "B", {}},
      {"My final verdict is $$A$$", "A", {}},
      {"My final verdict is $$ A $$.", "A", {}},
      {"My final verdict is $$\tB\t$$.", "B", {}},
      {"My final verdict is   $$T$$.", "T", {}},
      {"my final verdict is $$A$$.", "A", {}},
      {"MY FINAL VERDICT IS $$B$$.", "B", {}},
      {"My final verdict is\n$$A$$.", "A", {}},
      {"My final verdict is $$B$$.\n", "B", {}},
      {"My final verdict is $$A$$. Thank you.", "A", {}},
      // Multi-sentence reasoning.
      {"Let me check each step. Assistant A computes 3*4 = 12 correctly. Assistant B writes 3*4 = 13, which is "
       "wrong. Therefore A is better.\n\nMy final verdict is $$A$$.",
       "A",
       {}},
      {"First, the question asks for the capital of Australia. Assistant A says Sydney. Assistant B says "
       "Canberra. B is correct. My final verdict is $$B$$.",
       "B",
       {}},
      {"Both functions handle empty lists. Both return sorted output. They are equivalent in accuracy.\n"
       "My final verdict is $$T$$.",
       "T",
       {}},
      {"Step 1: parse.\nStep 2: compare.\nStep 3: conclude that B is cleaner.\nMy final verdict is $$B$$.", "B", {}},
      {"Assistant A's proof has a gap in the induction step; Assistant B's proof is complete. Hence, B. "
       "My final verdict is $$B$$.",
       "B",
       {}},
      {"The answers differ only in formatting ($x$ vs $$x$$ in LaTeX). My final verdict is $$T$$.", "T", {}},
      // Repeated verdict lines: the last one decides.
      {"My final verdict is $$A$$. Wait, I misread B. My final verdict is $$B$$.", "B", {}},
      {"My final verdict is $$B$$.\nOn reflection:\nMy final verdict is $$T$$.", "T", {}},
      {"My final verdict is $$T$$. My final verdict is $$A$$. My final verdict is $$A$$.", "A", {}},
      {"Draft: My final verdict is $$B$$.\nRevised: My final verdict is $$A$$.", "A", {}},
      {"My final verdict is $$A$$.\nMy final verdict is $$B$$.\nMy final verdict is $$T$$.\nMy final verdict is $$B$$.",
       "B",
       {}},
      // Malformed trailing verdicts fall back to the last well-formed one.
      {"My final verdict is $$A$$. Actually, my final verdict is $B$.", "A", {}},
      {"My final verdict is $$B$$. My final verdict is $$T", "B", {}},
      {"My final verdict is $$T$$. My final verdict is A.", "T", {}},
      {"My final verdict is $$A$$. My final verdict is $$$$.", "A", {}},
      {"My final verdict is $$B$$. My final verdict is", "B", {}},
      // Malformed delimiters with nothing to fall back on.
      {"My final verdict is $A$.", {}, F::kMalformed},
      {"My final verdict is A.", {}, F::kMalformed},
      {"My final verdict is $$A.", {}, F::kMalformed},
      {"My final verdict is $$$$.", {}, F::kMalformed},
      {"My final verdict is $$ $$.", {}, F::kMalformed},
      {"My final verdict is $$A\nB$$.", {}, F::kMalformed},
      {"My final verdict is [[A]].", {}, F::kMalformed},
      {"My final verdict is", {}, F::kMalformed},
      {"My final verdict is **A**.", {}, F::kMalformed},
      {"My final verdict is $$$A$$$.", {}, F::kMalformed},
      // Labels outside the alphabet.
      {"My final verdict is $$Q$$.", {}, F::kOutsideAlphabet},
      {"My final verdict is $$C$$.", {}, F::kOutsideAlphabet},
      {"My final verdict is $$a$$.", {}, F::kOutsideAlphabet},
      {"My final verdict is $$AB$$.", {}, F::kOutsideAlphabet},
      {"My final verdict is $$A$$. My final verdict is $$tie$$.", {}, F::kOutsideAlphabet},
      // No marker at all.
      {"", {}, F::kNoMarker},
      {"Assistant A is better.", {}, F::kNoMarker},
      {"$$A$$", {}, F::kNoMarker},
      {"My verdict is $$A$$.", {}, F::kNoMarker},
      {"Final verdict: $$B$$.", {}, F::kNoMarker},
  };
}

}  // namespace corpus

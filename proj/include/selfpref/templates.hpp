#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfpref {

struct VoteAlphabet {
  std::string first;   // label for the candidate shown first
  std::string second;  // label for the candidate shown second
  std::optional<std::string> tie;

  bool contains(std::string_view label) const;
  std::vector<std::string> labels() const;
};

struct PromptTemplate {
  std::string name;
  std::string body;
  std::string query_slot;
  std::string first_slot;
  std::string second_slot;
  VoteAlphabet alphabet;
  bool chain_of_thought = false;
};

/// Placeholder names appearing as {name} in a template body, in order.
std::vector<std::string> placeholders(std::string_view body);

/// Substitutes the query and both candidates, plus any extra bindings
/// (e.g. the passage for reading comprehension). Template text outside the
/// placeholders is copied byte for byte; substituted text is never rescanned.
/// Throws Error(kTemplate) if a placeholder is left unbound.
std::string render(const PromptTemplate& tmpl, std::string_view query, std::string_view cand_a, std::string_view cand_b,
                   const std::map<std::string, std::string>& extra = {});

const PromptTemplate& builtin_template(std::string_view name);
std::vector<std::string> builtin_template_names();

}  // namespace selfpref

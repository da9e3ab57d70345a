#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfpref/endpoint.hpp"
#include "selfpref/records.hpp"
#include "selfpref/templates.hpp"

namespace selfpref {

// One subject-vs-reference comparison to put in front of a judge.
struct PairTask {
  QueryKey query;
  ModelId judge;
  ModelId reference;
  ModelId subject;
  std::string question;
  std::string subject_response;
  std::string reference_response;
  int outcome = 0;
  std::map<std::string, std::string> extra;
};

struct CollectorConfig {
  std::string model;  // empty: use the judge id
  double temperature = 0.0;
  int max_tokens = 1;
  int cot_max_tokens = 1024;
  int top_logprobs = 20;
  RetryPolicy retry;
  std::size_t max_in_flight = 8;
};

struct CollectionFailure {
  QueryKey query;
  std::string judge;
  std::string subject;
  std::string reason;
  // A one-order record was still emitted for this pair.
  bool partial = false;
};

struct PairOutcome {
  std::optional<EvalRecord> record;
  std::optional<CollectionFailure> failure;
};

/// Asks the judge twice (subject first, then subject second), extracts the
/// subject-win probability of each order and averages them.
PairOutcome collect_pair(ChatEndpoint& endpoint, const CollectorConfig& config, const PromptTemplate& tmpl,
                         const PairTask& task, const SleepFn& sleep = {});

struct CollectionResult {
  RecordSet records;
  std::vector<CollectionFailure> failures;
};

/// Runs every task with at most config.max_in_flight requests outstanding.
/// Output order follows input order.
CollectionResult collect_all(ChatEndpoint& endpoint, const CollectorConfig& config, const PromptTemplate& tmpl,
                             std::span<const PairTask> tasks, const SleepFn& sleep = {});

/// Line-delimited pair tasks: the record fields minus the probabilities, plus
/// question, subject_response, reference_response and optional "extra".
std::vector<PairTask> read_pair_tasks(const std::filesystem::path& path);
std::vector<PairTask> parse_pair_tasks(std::string_view text, std::string_view source_name);

std::string serialize_failures(std::span<const CollectionFailure> failures);

}  // namespace selfpref

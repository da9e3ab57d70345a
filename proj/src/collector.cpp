#include "selfpref/collector.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "selfpref/error.hpp"

namespace selfpref {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct OrderResult {
  std::optional<double> p;
  std::string reason;
  bool endpoint_failed = false;
};

OrderResult collect_order(ChatEndpoint& endpoint, const CollectorConfig& config, const PromptTemplate& tmpl,
                          const PairTask& task, bool subject_first, const SleepFn& sleep) {
  const auto& cand_a = subject_first ? task.subject_response : task.reference_response;
  const auto& cand_b = subject_first ? task.reference_response : task.subject_response;

  ChatRequest request;
  request.model = config.model.empty() ? task.judge.id : config.model;
  request.prompt = render(tmpl, task.question, cand_a, cand_b, task.extra);
  request.temperature = config.temperature;
  request.logprobs = !tmpl.chain_of_thought;
  request.top_logprobs = config.top_logprobs;
  request.max_tokens = tmpl.chain_of_thought ? config.cot_max_tokens : config.max_tokens;

  const char* order = subject_first ? "subject-first" : "subject-second";
  ChatResponse response;
  try {
    response = complete_with_retry(endpoint, request, config.retry, sleep);
  } catch (const EndpointError& e) {
    return {std::nullopt, fmt::format("{}: endpoint error: {}", order, e.what()), true};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kCollection) throw;
    return {std::nullopt, fmt::format("{}: {}", order, e.what()), false};
  }

  if (tmpl.chain_of_thought) {
    const auto verdict = parse_cot_verdict(response.content, tmpl.alphabet);
    if (!verdict.ok()) return {std::nullopt, fmt::format("{}: {}", order, to_string(*verdict.failure)), false};
    return {verdict_vote(*verdict.label, tmpl.alphabet, subject_first).p_subject_win, {}, false};
  }
  if (!response.has_logprobs) return {std::nullopt, fmt::format("{}: missing logprobs", order), false};
  const auto vote = extract_first_token(response.first_token_top_logprobs, tmpl.alphabet, subject_first);
  if (!vote) return {std::nullopt, fmt::format("{}: label tokens absent from top logprobs", order), false};
  return {vote->p_subject_win, {}, false};
}

std::string require_string(const json& obj, const char* field, std::string_view where) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string())
    throw Error(ErrorCode::kInvalidRecord, fmt::format("{}: missing string field '{}'", where, field));
  return it->get<std::string>();
}

}  // namespace

PairOutcome collect_pair(ChatEndpoint& endpoint, const CollectorConfig& config, const PromptTemplate& tmpl,
                         const PairTask& task, const SleepFn& sleep) {
  const auto first = collect_order(endpoint, config, tmpl, task, true, sleep);
  const auto second = collect_order(endpoint, config, tmpl, task, false, sleep);

  PairOutcome out;
  auto failure = [&](std::string reason, bool partial) {
    out.failure = CollectionFailure{task.query, task.judge.id, task.subject.id, std::move(reason), partial};
  };
  if (first.p && second.p) {
    out.record = make_record(task.query, task.judge, task.reference, task.subject, first.p, second.p, task.outcome);
    return out;
  }
  // A one-order record survives only a permanent endpoint failure on the other order.
  if (first.p && second.endpoint_failed) {
    out.record = make_record(task.query, task.judge, task.reference, task.subject, first.p, std::nullopt, task.outcome);
    failure(second.reason, true);
  } else if (second.p && first.endpoint_failed) {
    out.record =
        make_record(task.query, task.judge, task.reference, task.subject, std::nullopt, second.p, task.outcome);
    failure(first.reason, true);
  } else {
    std::string reason = first.p ? second.reason : first.reason;
    if (!first.p && !second.p) reason = first.reason + "; " + second.reason;
    failure(std::move(reason), false);
  }
  return out;
}

CollectionResult collect_all(ChatEndpoint& endpoint, const CollectorConfig& config, const PromptTemplate& tmpl,
                             std::span<const PairTask> tasks, const SleepFn& sleep) {
  if (config.max_in_flight < 1) throw Error(ErrorCode::kConfig, "max_in_flight must be >= 1");
  std::vector<PairOutcome> outcomes(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  // Each worker has at most one request outstanding.
  const std::size_t workers = std::min(config.max_in_flight, tasks.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        try {
          outcomes[i] = collect_pair(endpoint, config, tmpl, tasks[i], sleep);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  CollectionResult result;
  std::vector<EvalRecord> records;
  for (auto& o : outcomes) {
    if (o.record) records.push_back(std::move(*o.record));
    if (o.failure) result.failures.push_back(std::move(*o.failure));
  }
  result.records = RecordSet(std::move(records), Provenance{{"collector"}, ""});
  if (!result.failures.empty())
    spdlog::warn("collection: {} of {} pairs excluded or partial", result.failures.size(), tasks.size());
  return result;
}

std::vector<PairTask> parse_pair_tasks(std::string_view text, std::string_view source_name) {
  std::vector<PairTask> tasks;
  std::set<RecordKey> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = fmt::format("{}:{}", source_name, line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kInvalidRecord, fmt::format("{}: malformed line: {}", where, e.what()));
    }
    if (!obj.is_object()) throw Error(ErrorCode::kInvalidRecord, where + ": line is not an object");
    PairTask task;
    task.query = {require_string(obj, "dataset", where), require_string(obj, "example_id", where)};
    task.judge = {require_string(obj, "judge", where), require_string(obj, "judge_family", where)};
    task.reference = {require_string(obj, "reference", where), require_string(obj, "reference_family", where)};
    task.subject = {require_string(obj, "subject", where), require_string(obj, "subject_family", where)};
    task.question = require_string(obj, "question", where);
    task.subject_response = require_string(obj, "subject_response", where);
    task.reference_response = require_string(obj, "reference_response", where);
    auto outcome = obj.find("outcome");
    if (outcome == obj.end() || !outcome->is_number() ||
        (outcome->get<double>() != 0.0 && outcome->get<double>() != 1.0))
      throw Error(ErrorCode::kInvalidRecord, where + ": outcome must be 0 or 1 (ties are excluded)");
    task.outcome = static_cast<int>(outcome->get<double>());
    if (auto extra = obj.find("extra"); extra != obj.end()) {
      if (!extra->is_object()) throw Error(ErrorCode::kInvalidRecord, where + ": 'extra' must be an object");
      for (auto& [k, v] : extra->items()) {
        if (!v.is_string()) throw Error(ErrorCode::kInvalidRecord, where + ": 'extra' values must be strings");
        task.extra[k] = v.get<std::string>();
      }
    }
    if (!seen.insert({task.query, task.judge.id, task.reference.id, task.subject.id}).second)
      throw Error(ErrorCode::kInvalidRecord, where + ": duplicate tuple (query, judge, reference, subject)");
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<PairTask> read_pair_tasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, fmt::format("cannot open pair file '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_pair_tasks(buffer.str(), path.string());
}

std::string serialize_failures(std::span<const CollectionFailure> failures) {
  std::string out;
  for (const auto& f : failures) {
    ordered_json obj;
    obj["dataset"] = f.query.dataset;
    obj["example_id"] = f.query.example_id;
    obj["judge"] = f.judge;
    obj["subject"] = f.subject;
    obj["reason"] = f.reason;
    obj["partial"] = f.partial;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace selfpref

#include "selfpref/ingest.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <json.hpp>
#include <set>
#include <sstream>
#include <variant>

namespace selfpref {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct LineFailure {
  RejectCode code;
  std::string reason;
};

struct ParsedLine {
  std::size_t line = 0;
  std::optional<EvalRecord> record;
  std::optional<LineFailure> failure;
};

struct ParsedFile {
  std::string path;
  std::vector<ParsedLine> lines;
};

std::optional<LineFailure> read_string(const json& obj, const char* field, std::string& out) {
  auto it = obj.find(field);
  if (it == obj.end()) return LineFailure{RejectCode::kMissingField, fmt::format("missing field '{}'", field)};
  if (!it->is_string()) return LineFailure{RejectCode::kBadType, fmt::format("field '{}' must be a string", field)};
  out = it->get<std::string>();
  if (out.empty()) return LineFailure{RejectCode::kMissingField, fmt::format("field '{}' is empty", field)};
  return std::nullopt;
}

std::optional<LineFailure> read_family(const json& obj, const char* field, const std::string& id,
                                       const IngestOptions& options, std::string& out) {
  if (obj.contains(field)) return read_string(obj, field, out);
  out = family_from_prefix(id, options.family_prefixes);
  if (out.empty()) return LineFailure{RejectCode::kMissingField, fmt::format("missing field '{}'", field)};
  return std::nullopt;
}

std::optional<LineFailure> read_probability(const json& obj, const char* field, std::optional<double>& out) {
  auto it = obj.find(field);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_number()) return LineFailure{RejectCode::kBadType, fmt::format("field '{}' must be a number", field)};
  const double p = it->get<double>();
  if (!std::isfinite(p) || p < 0.0 || p > 1.0)
    return LineFailure{RejectCode::kOutOfRange, fmt::format("probability out of range: {} = {}", field, p)};
  out = p;
  return std::nullopt;
}

std::variant<EvalRecord, LineFailure> parse_line(std::string_view text, const IngestOptions& options) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    return LineFailure{RejectCode::kSyntax, fmt::format("malformed line: {}", e.what())};
  }
  if (!obj.is_object()) return LineFailure{RejectCode::kSyntax, "line is not a JSON object"};

  QueryKey query;
  ModelId judge, reference, subject;
  for (auto [field, target] :
       {std::pair{"dataset", &query.dataset}, std::pair{"example_id", &query.example_id}, std::pair{"judge", &judge.id},
        std::pair{"reference", &reference.id}, std::pair{"subject", &subject.id}}) {
    if (auto f = read_string(obj, field, *target)) return *f;
  }
  if (auto f = read_family(obj, "judge_family", judge.id, options, judge.family)) return *f;
  if (auto f = read_family(obj, "reference_family", reference.id, options, reference.family)) return *f;
  if (auto f = read_family(obj, "subject_family", subject.id, options, subject.family)) return *f;

  std::optional<double> p_first, p_second, s_given;
  if (auto f = read_probability(obj, "p_subject_first", p_first)) return *f;
  if (auto f = read_probability(obj, "p_subject_second", p_second)) return *f;
  if (auto f = read_probability(obj, "s", s_given)) return *f;
  if (!p_first && !p_second)
    return LineFailure{RejectCode::kMissingField,
                       "missing field: one of 'p_subject_first' or 'p_subject_second' is required"};

  auto it = obj.find("outcome");
  if (it == obj.end()) return LineFailure{RejectCode::kMissingField, "missing field 'outcome'"};
  if (!it->is_number())
    return LineFailure{RejectCode::kBadOutcome, fmt::format("outcome must be 0 or 1, got {}", it->dump())};
  const double raw_outcome = it->get<double>();
  if (raw_outcome != 0.0 && raw_outcome != 1.0)
    return LineFailure{RejectCode::kBadOutcome, fmt::format("outcome must be 0 or 1, got {}", it->dump())};

  auto record = make_record(std::move(query), std::move(judge), std::move(reference), std::move(subject), p_first,
                            p_second, static_cast<int>(raw_outcome));
  if (s_given && std::abs(*s_given - record.s) > 1e-12)
    return LineFailure{RejectCode::kOutOfRange,
                       fmt::format("s = {} disagrees with the order average {}", *s_given, record.s)};
  return record;
}

ParsedFile parse_text(std::string_view text, std::string path, const IngestOptions& options) {
  ParsedFile file{std::move(path), {}};
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      ParsedLine parsed;
      parsed.line = line_no;
      try {
        auto result = parse_line(line, options);
        if (auto* rec = std::get_if<EvalRecord>(&result)) {
          parsed.record = std::move(*rec);
        } else {
          parsed.failure = std::get<LineFailure>(std::move(result));
        }
      } catch (const Error& e) {
        parsed.failure = LineFailure{RejectCode::kMissingField, e.what()};
      }
      file.lines.push_back(std::move(parsed));
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return file;
}

ParsedFile parse_file(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(fmt::format("cannot open record file '{}'", path.string()), {});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path.string(), options);
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

IngestResult assemble(std::vector<ParsedFile> files, const IngestOptions& options) {
  IngestResult result;
  std::vector<EvalRecord> records;
  std::set<RecordKey> seen;
  Provenance provenance;
  for (auto& file : files) {
    provenance.sources.push_back(file.path);
    for (auto& line : file.lines) {
      ++result.lines_read;
      if (line.failure) {
        result.rejections.push_back({file.path, line.line, line.failure->code, line.failure->reason});
        continue;
      }
      if (!seen.insert(key_of(*line.record)).second) {
        result.rejections.push_back(
            {file.path, line.line, RejectCode::kDuplicate, "duplicate tuple (query, judge, reference, subject)"});
        continue;
      }
      records.push_back(std::move(*line.record));
    }
  }
  provenance.ingested_at = now_iso8601();

  const double fraction =
      result.lines_read == 0 ? 0.0 : static_cast<double>(result.rejections.size()) / result.lines_read;
  if (fraction > options.max_reject_fraction) {
    const auto& first = result.rejections.front();
    throw IngestError(fmt::format("{} of {} lines rejected (first: {}:{}: {})", result.rejections.size(),
                                  result.lines_read, first.path, first.line, first.reason),
                      std::move(result.rejections));
  }
  result.records = RecordSet(std::move(records), std::move(provenance));
  return result;
}

void check_options(const IngestOptions& options) {
  if (options.schema_version != kRecordSchemaVersion)
    throw Error(ErrorCode::kConfig, fmt::format("unsupported record schema version '{}'", options.schema_version));
  if (!(options.max_reject_fraction >= 0.0 && options.max_reject_fraction <= 1.0))
    throw Error(ErrorCode::kConfig, "max_reject_fraction must lie in [0,1]");
}

}  // namespace

const char* to_string(RejectCode code) {
  switch (code) {
    case RejectCode::kSyntax: return "syntax";
    case RejectCode::kMissingField: return "missing_field";
    case RejectCode::kBadType: return "bad_type";
    case RejectCode::kOutOfRange: return "out_of_range";
    case RejectCode::kBadOutcome: return "bad_outcome";
    case RejectCode::kDuplicate: return "duplicate";
  }
  return "unknown";
}

std::string family_from_prefix(const std::string& id, const std::map<std::string, std::string>& prefixes) {
  // Longest matching prefix wins.
  std::string best_prefix;
  std::string family;
  for (const auto& [prefix, tag] : prefixes) {
    if (id.starts_with(prefix) && prefix.size() >= best_prefix.size()) {
      best_prefix = prefix;
      family = tag;
    }
  }
  return family;
}

IngestResult ingest(std::span<const std::filesystem::path> paths, const IngestOptions& options) {
  check_options(options);
  std::vector<std::future<ParsedFile>> pending;
  pending.reserve(paths.size());
  for (const auto& path : paths)
    pending.push_back(std::async(std::launch::async, [&path, &options] { return parse_file(path, options); }));
  std::vector<ParsedFile> files;
  files.reserve(paths.size());
  for (auto& f : pending) files.push_back(f.get());
  return assemble(std::move(files), options);
}

IngestResult ingest_text(std::string_view text, std::string_view source_name, const IngestOptions& options) {
  check_options(options);
  std::vector<ParsedFile> files;
  files.push_back(parse_text(text, std::string(source_name), options));
  return assemble(std::move(files), options);
}

std::string serialize_record(const EvalRecord& record) {
  ordered_json obj;
  obj["dataset"] = record.query.dataset;
  obj["example_id"] = record.query.example_id;
  obj["judge"] = record.judge.id;
  obj["judge_family"] = record.judge.family;
  obj["reference"] = record.reference.id;
  obj["reference_family"] = record.reference.family;
  obj["subject"] = record.subject.id;
  obj["subject_family"] = record.subject.family;
  if (record.p_subject_first) obj["p_subject_first"] = *record.p_subject_first;
  if (record.p_subject_second) obj["p_subject_second"] = *record.p_subject_second;
  obj["outcome"] = record.outcome;
  return obj.dump();
}

std::string serialize_records(const RecordSet& records) {
  std::string out;
  for (const auto& record : records) {
    out += serialize_record(record);
    out += '\n';
  }
  return out;
}

}  // namespace selfpref

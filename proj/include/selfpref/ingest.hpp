#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfpref/error.hpp"
#include "selfpref/records.hpp"

namespace selfpref {

inline constexpr std::string_view kRecordSchemaVersion = "1";

enum class RejectCode {
  kSyntax,
  kMissingField,
  kBadType,
  kOutOfRange,
  kBadOutcome,
  kDuplicate,
};

const char* to_string(RejectCode code);

struct Rejection {
  std::string path;
  std::size_t line = 0;
  RejectCode code = RejectCode::kSyntax;
  std::string reason;
};

struct IngestOptions {
  std::string schema_version{kRecordSchemaVersion};
  // Fraction of non-blank lines that may be rejected before ingestion fails.
  double max_reject_fraction = 0.0;
  // id prefix -> family tag, consulted when a *_family field is absent.
  std::map<std::string, std::string> family_prefixes;
};

struct IngestResult {
  RecordSet records;
  std::vector<Rejection> rejections;
  std::size_t lines_read = 0;
};

class IngestError : public Error {
 public:
  IngestError(const std::string& message, std::vector<Rejection> rejections)
      : Error(ErrorCode::kIngestion, message), rejections_(std::move(rejections)) {}

  const std::vector<Rejection>& rejections() const { return rejections_; }

 private:
  std::vector<Rejection> rejections_;
};

/// Reads line-delimited record files. Lines that fail validation are
/// reported as rejections; if their share exceeds `max_reject_fraction`
/// the whole ingestion fails with IngestError and nothing is returned.
IngestResult ingest(std::span<const std::filesystem::path> paths, const IngestOptions& options = {});

/// Parses in-memory text as if it were one file called `source_name`.
IngestResult ingest_text(std::string_view text, std::string_view source_name, const IngestOptions& options = {});

std::string family_from_prefix(const std::string& id, const std::map<std::string, std::string>& prefixes);

/// One JSON object per record, fixed key order, optional fields omitted.
std::string serialize_record(const EvalRecord& record);
std::string serialize_records(const RecordSet& records);

}  // namespace selfpref

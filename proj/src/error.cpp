#include "selfpref/error.hpp"

namespace selfpref {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInvalidRecord: return "invalid_record";
    case ErrorCode::kIngestion: return "ingestion";
    case ErrorCode::kMixedGroups: return "mixed_groups";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kDegenerateStatistic: return "degenerate_statistic";
    case ErrorCode::kTemplate: return "template";
    case ErrorCode::kCollection: return "collection";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kFixture: return "fixture";
  }
  return "unknown";
}

}  // namespace selfpref

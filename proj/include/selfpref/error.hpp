#pragma once

#include <stdexcept>
#include <string>

namespace selfpref {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidRecord,
  kIngestion,
  kMixedGroups,
  kEmptyInput,
  kDegenerateStatistic,
  kTemplate,
  kCollection,
  kConfig,
  kFixture,
};

const char* to_string(ErrorCode code);

/// Base exception for the library; every throw site carries a stable code so
/// the CLI can map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace selfpref

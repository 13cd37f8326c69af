#pragma once

#include <stdexcept>
#include <string>

namespace dtwin {

enum class ErrorCode {
  kInvalidGeometry,
  kXmlParse,
  kStructural,
  kDanglingLink,
  kInterfaceMismatch,
  kBadReference,
  kItemFormat,
  kStreamInvariant,
  kUnknownType,
  kConnectivity,
  kMissingParameter,
  kDuplicateParameter,
  kEmptyProduct,
  kPlanningFailure,
  kManifest,
  kSimulation,
};

const char* to_string(ErrorCode code);

/// Domain error carrying a machine-checkable code. Parse errors set `line`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int line = 0)
      : std::runtime_error(message), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

}  // namespace dtwin

#include "dtwin/error.hpp"

namespace dtwin {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidGeometry: return "invalid-geometry";
    case ErrorCode::kXmlParse: return "xml-parse";
    case ErrorCode::kStructural: return "structural";
    case ErrorCode::kDanglingLink: return "dangling-link";
    case ErrorCode::kInterfaceMismatch: return "interface-mismatch";
    case ErrorCode::kBadReference: return "bad-reference";
    case ErrorCode::kItemFormat: return "item-format";
    case ErrorCode::kStreamInvariant: return "stream-invariant";
    case ErrorCode::kUnknownType: return "unknown-type";
    case ErrorCode::kConnectivity: return "connectivity";
    case ErrorCode::kMissingParameter: return "missing-parameter";
    case ErrorCode::kDuplicateParameter: return "duplicate-parameter";
    case ErrorCode::kEmptyProduct: return "empty-product";
    case ErrorCode::kPlanningFailure: return "planning-failure";
    case ErrorCode::kManifest: return "manifest";
    case ErrorCode::kSimulation: return "simulation";
  }
  return "unknown";
}

}  // namespace dtwin

#include "stagehpo/error.hpp"

namespace stagehpo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidValue: return "InvalidValue";
    case ErrorCode::kInvalidTrial: return "InvalidTrial";
    case ErrorCode::kInvalidSpace: return "InvalidSpace";
    case ErrorCode::kDuplicateTrial: return "DuplicateTrial";
    case ErrorCode::kInvalidSplit: return "InvalidSplit";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kEmptyTree: return "EmptyTree";
    case ErrorCode::kMissingPriority: return "MissingPriority";
    case ErrorCode::kInvalidAssignment: return "InvalidAssignment";
    case ErrorCode::kUnsatisfiableStage: return "UnsatisfiableStage";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMalformedTrace: return "MalformedTrace";
  }
  return "Unknown";
}

}  // namespace stagehpo

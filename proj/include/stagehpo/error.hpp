#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stagehpo {

enum class ErrorCode {
  kInvalidValue,
  kInvalidTrial,
  kInvalidSpace,
  kDuplicateTrial,
  kInvalidSplit,
  kNotFound,
  kEmptyTree,
  kMissingPriority,
  kInvalidAssignment,
  kUnsatisfiableStage,
  kInvalidConfig,
  kMalformedTrace,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; `code()` tells callers
// (and the CLI exit-code mapping) which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace stagehpo

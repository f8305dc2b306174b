#pragma once

#include <stdexcept>
#include <string>

namespace cellrecon {

enum class ErrorCode {
  InvalidArgument,
  NoJumpDetected,
  PartitionFailure,
  IncompleteWindow,
  SingularSystem,
  EmptyContour,
  NoValidWindow,
  SingularLinearSystem,
  NewtonDivergence,
  SingularJacobian,
  EmptyChain,
  InsufficientValidRun,
  OutOfDomain,
  Io,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// that callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cellrecon

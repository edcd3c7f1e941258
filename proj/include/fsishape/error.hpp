#pragma once

#include <stdexcept>
#include <string>

namespace fsi {

enum class ErrorCode {
  ParseError,
  EvalError,
  NestingViolation,
  QualityFailure,
  InvalidMesh,
  TangledMesh,
  QuadratureDataMissing,
  SingularSystem,
  NoninvertibleTransform,
  MaxIterExceeded,
  AdjointUnavailable,
  InvalidConfig,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

} // namespace fsi

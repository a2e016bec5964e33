#pragma once

#include <stdexcept>
#include <string>

namespace ringd {

enum class ErrorCode {
  UnknownChannel,
  DuplicateName,
  ShapeMismatch,
  ReadOnly,
  BadName,
  BindFailure,
  Connection,
  Protocol,
  Parse,
  Io,
  InsufficientData,
  NonPositiveCurrent,
  NegativeInjection,
  BadThreshold,
  DegenerateTune,
  SingularFit,
  RankDeficient,
  ConvergenceFailure,
  AllDisabled,
  BadTransition,
  BadMask,
  InvalidArgument,
};

// Short token used on the wire (`ERR <name> <reason>`) and in logs.
const char* error_token(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, int line = 0)
      : std::runtime_error(what), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  // 1-based line number for parse errors, 0 otherwise.
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

}  // namespace ringd

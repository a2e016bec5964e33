#include "common/error.hpp"

namespace ringd {

const char* error_token(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownChannel: return "unknown-channel";
    case ErrorCode::DuplicateName: return "duplicate-name";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::ReadOnly: return "read-only";
    case ErrorCode::BadName: return "bad-name";
    case ErrorCode::BindFailure: return "bind-failure";
    case ErrorCode::Connection: return "connection";
    case ErrorCode::Protocol: return "bad-request";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::NonPositiveCurrent: return "non-positive-current";
    case ErrorCode::NegativeInjection: return "negative-injection";
    case ErrorCode::BadThreshold: return "bad-threshold";
    case ErrorCode::DegenerateTune: return "degenerate-tune";
    case ErrorCode::SingularFit: return "singular-fit";
    case ErrorCode::RankDeficient: return "rank-deficient";
    case ErrorCode::ConvergenceFailure: return "convergence-failure";
    case ErrorCode::AllDisabled: return "all-disabled";
    case ErrorCode::BadTransition: return "bad-transition";
    case ErrorCode::BadMask: return "bad-mask";
    case ErrorCode::InvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

}  // namespace ringd

#include "sfdia/error.hpp"

namespace sfdia {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::Range: return "range";
    case ErrorCode::Config: return "config";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::Observability: return "observability";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::Contract: return "contract";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace sfdia

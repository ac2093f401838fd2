#pragma once

#include <stdexcept>
#include <string>

namespace sfdia {

enum class ErrorCode {
  InvalidParameter,
  Range,
  Config,
  NonConvergence,
  Observability,
  Numerical,
  Contract,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code lets the
/// CLI map failures onto distinct exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Newton/Gauss-Newton divergence. Carries the last mismatch norm.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_mismatch, int iterations)
      : Error(ErrorCode::NonConvergence, what), last_mismatch_(last_mismatch), iterations_(iterations) {}
  double last_mismatch() const noexcept { return last_mismatch_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_mismatch_;
  int iterations_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace sfdia

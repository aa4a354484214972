#pragma once

#include <stdexcept>
#include <string>

namespace kdpc {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  config,
  pe_failure,
  fit_failure,
  diverged,
  not_warm,
  io,
};

/// Library-wide exception. The C API maps `code()` onto `kdpc_status`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace kdpc

#pragma once

#include <stdexcept>
#include <string>

namespace snfseg {

/// Broad failure classes. The CLI maps them onto process exit codes.
enum class ErrorCode {
  Usage = 1,      // invalid parameters or unsupported combination
  Input = 2,      // unreadable / malformed input data
  Numerical = 3,  // solver failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace snfseg

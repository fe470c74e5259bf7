#pragma once

#include <stdexcept>
#include <string>

namespace phi4 {

/// Failure categories shared by the C++ layer and the C API status codes.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kNotNormalized = 3,
  kNotHermitian = 4,
  kGuardExceeded = 5,
  kNumerical = 6,
  kUnsupported = 7,
  kSchema = 8,
  kIo = 9,
  kGoldenMismatch = 10,
};

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

}  // namespace phi4

#pragma once

#include <stdexcept>
#include <string>

namespace ifsldp {

// Numeric values are shared with the C API status codes and the CLI exit codes.
enum class ErrorCode : int {
  parse = 1,
  validation = 2,
  solver = 3,
  contradiction = 4,
  argument = 5,
  io = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ifsldp

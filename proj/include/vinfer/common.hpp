#pragma once

#include <stdexcept>
#include <string>

namespace vinfer {

// Error categories map onto CLI exit codes: usage=1, data=2, backend=3.
enum class ErrorCode { usage = 1, data = 2, backend = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(ErrorCode::usage, msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(ErrorCode::data, msg) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& msg) : Error(ErrorCode::backend, msg) {}
};

}  // namespace vinfer

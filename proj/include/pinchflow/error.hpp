#pragma once

#include <stdexcept>
#include <string>

namespace pinchflow {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  invalid_argument = 1,
  inadmissible = 2,
  out_of_range = 3,
  config = 4,
  io = 5,
  numerical = 6,
  assertion = 7,
  not_applicable = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InadmissibleError : public Error {
 public:
  explicit InadmissibleError(const std::string& what)
      : Error(ErrorCode::inadmissible, what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what)
      : Error(ErrorCode::out_of_range, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCode::numerical, what) {}
};

}  // namespace pinchflow

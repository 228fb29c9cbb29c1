#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ufpl {

enum class ErrorCode {
  kInvalidArgument,
  kModeViolation,
  kOverflow,
  kNotPositiveDefinite,
  kIo,
  kConfig,
};

// Single exception type for the library. The C API maps `code()` onto
// ufpl_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot, const std::string& what)
      : Error(ErrorCode::kNotPositiveDefinite, what), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, std::string field, const std::string& what)
      : Error(ErrorCode::kConfig, what), line_(line), field_(std::move(field)) {}

  // 0 when the problem is not tied to a specific line.
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace ufpl

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pulse {

enum class ErrorKind {
  Parse,
  Validation,
  Config,
  UnsupportedRate,
  Design,
  Domain,
  Length,
  Shape,
  Usage,
  InsufficientData,
  Leakage,
  Fit,
  Degenerate,
  Numeric,
  Version,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Process exit code for CLI reporting: 1 validation-class, 2 numeric, 3 I/O.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Returns a copy whose message is prefixed with "<stage>: ".
  Error with_stage(std::string_view stage) const;

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace pulse

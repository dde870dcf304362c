#include "pulse/error.hpp"

namespace pulse {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::UnsupportedRate: return "unsupported rate";
    case ErrorKind::Design: return "design error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Length: return "length error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Leakage: return "leakage error";
    case ErrorKind::Fit: return "fit error";
    case ErrorKind::Degenerate: return "degenerate data";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Version: return "version mismatch";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Numeric:
    case ErrorKind::Degenerate:
      return 2;
    case ErrorKind::Io:
      return 3;
    default:
      return 1;
  }
}

Error Error::with_stage(std::string_view stage) const {
  return Error(kind_, std::string(stage) + ": " + what());
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace pulse

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace intentd {

enum class ErrorCode {
  Parse,
  Validation,
  NoPath,
  NotFound,
  UnknownHost,
  UnknownDevice,
  IllegalState,
  Capacity,
  Duplicate,
  LoopDetected,
  Unreachable,
  InsufficientSamples,
  Degenerate,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::NoPath: return "no-path";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::UnknownHost: return "unknown-host";
    case ErrorCode::UnknownDevice: return "unknown-device";
    case ErrorCode::IllegalState: return "illegal-state";
    case ErrorCode::Capacity: return "capacity-exceeded";
    case ErrorCode::Duplicate: return "duplicate";
    case ErrorCode::LoopDetected: return "loop-detected";
    case ErrorCode::Unreachable: return "unreachable";
    case ErrorCode::InsufficientSamples: return "insufficient-samples";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// northbound layers can map it onto exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace intentd

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace candlekit {

enum class ErrorKind {
  Validation,
  Alignment,
  Gap,
  OutOfRange,
  DegenerateMarket,
  DegenerateResidual,
  UnsupportedDimension,
  SingularFactor,
  CalibrationFailure,
  SingularDraws,
  ArtifactMismatch,
  Io,
};

// Every error belongs to one of two families; the CLI maps them to exit
// codes 1 (bad input) and 2 (numerical failure).
enum class ErrorFamily { Input, Numerical };

constexpr ErrorFamily family_of(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateMarket:
    case ErrorKind::DegenerateResidual:
    case ErrorKind::SingularFactor:
    case ErrorKind::CalibrationFailure:
    case ErrorKind::SingularDraws:
      return ErrorFamily::Numerical;
    default:
      return ErrorFamily::Input;
  }
}

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorFamily family() const noexcept { return family_of(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace candlekit

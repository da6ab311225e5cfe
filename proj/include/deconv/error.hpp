#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deconv {

enum class ErrorKind {
  InvalidParameter,
  Config,
  Io,
  DegenerateRange,
  NonPositiveData,
  NonPositiveSupport,
  InadequateGrid,
  NotNormalized,
  Numerical,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::NonPositiveData: return "NonPositiveData";
    case ErrorKind::NonPositiveSupport: return "NonPositiveSupport";
    case ErrorKind::InadequateGrid: return "InadequateGrid";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::Numerical: return "NumericalError";
  }
  return "UnknownError";
}

/// Process exit code for an error kind: 2 configuration, 3 I/O, 4 numerical.
constexpr int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::Config: return 2;
    case ErrorKind::Io: return 3;
    default: return 4;
  }
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace deconv

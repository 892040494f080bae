#pragma once

#include <stdexcept>
#include <string>

namespace phasevol {

enum class ErrorKind {
  Format,
  BadGrid,
  DegenerateLabels,
  UnknownGeometry,
  BadShape,
  NonFiniteLoss,
  NonFiniteUpdate,
  EmptySurface,
  Io,
  Usage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::BadGrid: return "BadGrid";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::UnknownGeometry: return "UnknownGeometry";
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::NonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorKind::EmptySurface: return "EmptySurface";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Usage: return "UsageError";
  }
  return "Error";
}

}  // namespace phasevol

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bars {

enum class ErrorCode {
  InvalidArgument,
  LengthMismatch,
  AllInvalid,
  DegenerateRange,
  DegenerateGeometry,
  TooFewPoints,
  WindowTooLarge,
  EmptyInput,
  NoEvents,
  NoCycles,
  ZeroDuration,
  SeriesTooShort,
  TooFewRows,
  NonFinite,
  SinglePatient,
  ZeroVariance,
  IncompleteMatrix,
  EmptyRaters,
  EmptyResult,
  Schema,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllInvalid: return "AllInvalid";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::NoCycles: return "NoCycles";
    case ErrorCode::ZeroDuration: return "ZeroDuration";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SinglePatient: return "SinglePatient";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::IncompleteMatrix: return "IncompleteMatrix";
    case ErrorCode::EmptyRaters: return "EmptyRaters";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure in the library is reported as a bars::Error carrying a
/// machine-readable code; what() holds the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bars

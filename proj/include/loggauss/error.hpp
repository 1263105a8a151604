#pragma once

#include <stdexcept>
#include <string>

namespace loggauss {

enum class ErrorKind {
  InvalidArgument,
  Parse,
  OutsideTorus,
  NonFinite,
  RankDeficient,
  SingularPoint,
  UncertainRank,
  OffVariety,
  NonConvergence,
  IterateLeftTorus,
  DegenerateParametrization,
  UnsupportedShape,
  InsufficientRegularTrials,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::OutsideTorus: return "OutsideTorus";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::UncertainRank: return "UncertainRank";
    case ErrorKind::OffVariety: return "OffVariety";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::IterateLeftTorus: return "IterateLeftTorus";
    case ErrorKind::DegenerateParametrization: return "DegenerateParametrization";
    case ErrorKind::UnsupportedShape: return "UnsupportedShape";
    case ErrorKind::InsufficientRegularTrials: return "InsufficientRegularTrials";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so front ends can map
/// it to exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure with the byte offset into the input text.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error(ErrorKind::Parse, "at position " + std::to_string(position) + ": " + what),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace loggauss

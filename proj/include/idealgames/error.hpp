#pragma once

#include <stdexcept>
#include <string>

namespace idealgames {

enum class Errc {
  InvalidArgument,
  Parse,
  Overflow,
  Range,
  OutsideFragment,
  HorizonTooSmall,
  SpaceMismatch,
  InvalidMove,
  ExhaustedIndices,
  OracleViolation,
  CheckpointImpossible,
  SteeringStuck,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Parse: return "ParseError";
    case Errc::Overflow: return "Overflow";
    case Errc::Range: return "RangeViolation";
    case Errc::OutsideFragment: return "OutsideFragment";
    case Errc::HorizonTooSmall: return "HorizonTooSmall";
    case Errc::SpaceMismatch: return "SpaceMismatch";
    case Errc::InvalidMove: return "InvalidMove";
    case Errc::ExhaustedIndices: return "ExhaustedIndices";
    case Errc::OracleViolation: return "OracleViolation";
    case Errc::CheckpointImpossible: return "CheckpointImpossible";
    case Errc::SteeringStuck: return "SteeringStuck";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// DSL parse failures carry a 1-based line/column into the parsed text.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(Errc::Parse, msg + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace idealgames

#pragma once

#include <stdexcept>
#include <string>

namespace kpzlab {

enum class ErrorKind {
  InvalidArgument,
  DegreeTooLow,
  QuadraticNotUnit,
  NotPositive,
  ModeOutOfRange,
  UnresolvedMode,
  GridMismatch,
  AreaOverflow,
  TailNotSummable,
  CoverageGap,
  BudgetExceeded,
  BoxTooSmall,
  NonFinite,
  IncommensurateGrids,
  PositivityLost,
  MissingConstant,
  SupportEscape,
  InsufficientLadder,
  StageFailure,
  Io,
};

const char* to_string(ErrorKind kind);

class LabError : public std::runtime_error {
 public:
  LabError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kpzlab

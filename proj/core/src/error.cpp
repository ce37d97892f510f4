#include "kpzlab/error.hpp"

namespace kpzlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DegreeTooLow: return "DegreeTooLow";
    case ErrorKind::QuadraticNotUnit: return "QuadraticNotUnit";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::ModeOutOfRange: return "ModeOutOfRange";
    case ErrorKind::UnresolvedMode: return "UnresolvedMode";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::AreaOverflow: return "AreaOverflow";
    case ErrorKind::TailNotSummable: return "TailNotSummable";
    case ErrorKind::CoverageGap: return "CoverageGap";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::BoxTooSmall: return "BoxTooSmall";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::IncommensurateGrids: return "IncommensurateGrids";
    case ErrorKind::PositivityLost: return "PositivityLost";
    case ErrorKind::MissingConstant: return "MissingConstant";
    case ErrorKind::SupportEscape: return "SupportEscape";
    case ErrorKind::InsufficientLadder: return "InsufficientLadder";
    case ErrorKind::StageFailure: return "StageFailure";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace kpzlab

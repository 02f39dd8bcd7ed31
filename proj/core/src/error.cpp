#include "det6d/error.hpp"

namespace det6d {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kGimbalLock: return "GimbalLock";
    case ErrorKind::kNonUnitAxis: return "NonUnitAxis";
    case ErrorKind::kNonHorizontalAxis: return "NonHorizontalAxis";
    case ErrorKind::kInvalidBox: return "InvalidBox";
    case ErrorKind::kKTooLarge: return "KTooLarge";
    case ErrorKind::kMissingScore: return "MissingScore";
    case ErrorKind::kZeroAnchor: return "ZeroAnchor";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kTiltOutOfRange: return "TiltOutOfRange";
    case ErrorKind::kNonPositiveDimension: return "NonPositiveDimension";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyGroup: return "EmptyGroup";
    case ErrorKind::kProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorKind::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kInputOutOfRange: return "InputOutOfRange";
    case ErrorKind::kFrameMismatch: return "FrameMismatch";
    case ErrorKind::kPlacementFailure: return "PlacementFailure";
    case ErrorKind::kTruncatedFile: return "TruncatedFile";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace det6d

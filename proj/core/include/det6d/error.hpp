#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace det6d {

enum class ErrorKind {
  kGimbalLock,
  kNonUnitAxis,
  kNonHorizontalAxis,
  kInvalidBox,
  kKTooLarge,
  kMissingScore,
  kZeroAnchor,
  kInvalidConfig,
  kTiltOutOfRange,
  kNonPositiveDimension,
  kShapeMismatch,
  kEmptyGroup,
  kProbabilityOutOfRange,
  kLabelOutOfRange,
  kEmptyDataset,
  kInputOutOfRange,
  kFrameMismatch,
  kPlacementFailure,
  kTruncatedFile,
  kIoError,
  kParseError,
  kConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (and tests) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace det6d

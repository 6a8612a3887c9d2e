#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fastcca {

enum class ErrorCode {
  NonFinite,
  EmptyMatrix,
  ParseError,
  DimensionMismatch,
  NotPowerOfTwo,
  IndexOutOfRange,
  InvalidSampleSize,
  RowCountMismatch,
  RankZero,
  RankCollapse,
  TooLarge,
  InvalidAccuracy,
  HypothesisUnverifiable,
  DatasetNotFound,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures that are numerical (rank loss) rather than bad input.
  bool is_numerical() const noexcept {
    return code_ == ErrorCode::RankZero || code_ == ErrorCode::RankCollapse;
  }

 private:
  ErrorCode code_;
};

}  // namespace fastcca

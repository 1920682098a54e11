// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fastmatch {

enum class ErrorCode {
  InvalidArgument,
  ZeroTotal,
  LengthMismatch,
  EmptyComplement,
  InvalidProbability,
  NonPositiveEpsilon,
  OutOfSupport,
  IoError,
  SchemaMismatch,
  EmptyDataset,
  UnknownAttribute,
  OutOfRange,
  CorruptFile,
  InfeasibleSpec,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fastmatch

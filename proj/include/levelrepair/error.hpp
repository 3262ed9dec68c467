#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace levelrepair {

enum class ErrorCode {
  RaggedLines,
  UnknownCharacter,
  MissingOrDuplicateStartGoal,
  AmbiguousCell,
  DimensionMismatch,
  UnknownDomain,
  InvalidTemplate,
  SingleClassDataset,
  NonFiniteLoss,
  VersionMismatch,
  CorruptFile,
  EmptyGrid,
  EmptyConjunction,
  EmptyDisjunction,
  NonPositiveWeight,
  BadBounds,
  MalformedProgram,
  UnsupportedConstruct,
  QuotaUnreachable,
  RepairTimeout,
  InfeasibleRepair,
  NoCompletedRows,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the Python bindings) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace levelrepair

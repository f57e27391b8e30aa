#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anonql {

/// Stable machine-readable rejection and failure codes. The names are part of
/// the CLI contract: they appear verbatim in diagnostics and exit reporting.
enum class ErrorCode {
  SyntaxError,
  UnknownFunction,
  OrNotAllowed,
  JoinNotAllowed,
  UnknownTable,
  UnknownColumn,
  TypeMismatch,
  AggregateMisuse,
  ColumnComparison,
  ConstantCondition,
  MultiColumnCondition,
  RangeUnbounded,
  RangeNotSnapped,
  UnclearNegative,
  UnclearRange,
  UnclearIn,
  UnclearLike,
  SubqueryDepth,
  SubqueryNoUid,
  SubqueryGroupNotUid,
  SubqueryClause,
  HavingNotUidGrouped,
  UnsupportedDistinct,
  UnsupportedCast,
  DataFormat,
  ConfigInvalid,
};

/// Upper-snake-case name of a code, e.g. RANGE_NOT_SNAPPED.
std::string_view error_name(ErrorCode code);

/// Thrown by every stage of the pipeline; line/column are 1-based and 0 when
/// the error has no source position (data or config problems).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, unsigned line = 0, unsigned column = 0)
      : std::runtime_error(std::move(message)), code_(code), line_(line), column_(column) {}

  ErrorCode code() const { return code_; }
  unsigned line() const { return line_; }
  unsigned column() const { return column_; }

  /// "error RANGE_NOT_SNAPPED at 1:23: ..." form used by the CLI on stderr.
  std::string formatted() const;

 private:
  ErrorCode code_;
  unsigned line_;
  unsigned column_;
};

}  // namespace anonql

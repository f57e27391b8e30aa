#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anonql/value.hpp"

namespace anonql {

/// Functions that may wrap a column without making a condition unclear.
bool is_clear_wrapper(std::string_view fn);
/// Subset of the wrappers that remove characters and earn an extra layer.
bool is_char_removing(std::string_view fn);
bool is_case_fn(std::string_view fn);

/// Trim character-set constant in canonical form: unique bytes in code-point
/// order.
std::string normalize_trim_chars(std::string_view chars);

struct WildcardDescriptor {
  int length = 0;  // N: characters in the %-stripped pattern
  int index = 0;   // '_': own position; '%': position of the preceding character
  char symbol = '%';
  bool operator==(const WildcardDescriptor&) const = default;
};

/// A LIKE pattern after escape resolution and wildcard normalization.
/// canonical uses backslash escapes for literal '%', '_' and '\' so patterns
/// written with different ESCAPE characters compare and seed identically.
struct LikePattern {
  std::string canonical;
  std::vector<WildcardDescriptor> descriptors;
};

/// Applies the wildcard normalization: repeated '%' collapse to one, a run
/// mixing '%' and '_' becomes one leading '%' plus the run's underscores, and
/// descriptors index into the %-stripped pattern. fold_case lowercases
/// literals (ILIKE).
LikePattern normalize_like(std::string_view pattern, std::optional<char> escape, bool fold_case);

/// Matches a canonical pattern against a text value.
bool like_match(std::string_view canonical_pattern, std::string_view subject, bool fold_case);

/// Snapped numeric range sizes are {1,2,5} * 10^k for k in [-6, 12] and the
/// lower bound must sit on a multiple of the size.
bool is_snapped_size(double size);
bool is_snap_aligned(double lower, double size);

struct NumericRangeCheck {
  bool ok = false;
  std::string suggestion;  // two nearest legal ranges when not ok
};
NumericRangeCheck check_numeric_range(double lower, double upper);

enum class DtUnit { Second, Minute, Hour, Day, Month, Quarter, Year };
std::string_view unit_name(DtUnit unit);

bool on_boundary(DateTime t, DtUnit unit);
DateTime add_unit(DateTime t, DtUnit unit, int count = 1);
/// Start of the unit cell containing t.
DateTime floor_to_unit(DateTime t, DtUnit unit);

/// Smallest aligned calendar cell [lower, end) that covers the requested
/// upper bound; nullopt when lower sits on no usable boundary or upper is
/// before lower.
std::optional<std::pair<DateTime, DtUnit>> datetime_cell(DateTime lower, DateTime upper);
std::string suggest_datetime_ranges(DateTime lower, DateTime upper);

/// Cell selected by trunc(x, p) = c or round(x, p) = c with power-of-ten
/// step; nullopt when c does not sit on the function's output grid.
std::optional<std::pair<double, double>> numeric_fn_cell(std::string_view fn, int precision,
                                                         double c);

}  // namespace anonql

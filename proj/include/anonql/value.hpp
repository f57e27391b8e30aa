#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace anonql {

enum class ValueType { Null, Integer, Real, Text, Boolean, DateTime };

std::string_view type_name(ValueType type);
std::optional<ValueType> type_from_name(std::string_view name);

/// Seconds since 1970-01-01 00:00:00 in the proleptic Gregorian calendar,
/// no time zone. Second precision is the finest the engine distinguishes.
struct DateTime {
  int64_t seconds = 0;
  auto operator<=>(const DateTime&) const = default;
};

/// One cell. Index order matches ValueType.
using Value = std::variant<std::monostate, int64_t, double, std::string, bool, DateTime>;

ValueType type_of(const Value& value);
inline bool is_null(const Value& value) { return value.index() == 0; }

/// Canonical text used for seed components: integers in decimal, reals in
/// shortest round-trip form, datetimes as YYYY-MM-DDTHH:MM:SS, booleans as
/// true/false, text verbatim.
std::string canonical(const Value& value);

/// Human/CSV form. Differs from canonical only for datetimes (space separator)
/// and nulls (empty).
std::string display(const Value& value);

/// Three-way compare for sorting and range tests. Integer and real compare
/// numerically against each other; nulls sort before everything; values of
/// unrelated types order by type index (schema typing keeps that case out of
/// query paths).
int compare(const Value& a, const Value& b);
bool equals(const Value& a, const Value& b);

/// Numeric access with integer widening; nullopt for non-numeric.
std::optional<double> as_real(const Value& value);
std::optional<int64_t> as_integer(const Value& value);

struct CivilTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
};

CivilTime civil_from_datetime(DateTime dt);
DateTime datetime_from_civil(const CivilTime& civil);
bool civil_valid(const CivilTime& civil);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS" and the T-separated form.
std::optional<DateTime> parse_datetime(std::string_view text);

/// 0 = Sunday .. 6 = Saturday.
int day_of_week(DateTime dt);

/// Parses a cell of the given type; nullopt when the text does not fully
/// parse as that type. Text cells always succeed.
std::optional<Value> parse_value(std::string_view text, ValueType type);

std::string format_real(double v);

}  // namespace anonql

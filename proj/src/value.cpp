#include "anonql/value.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "anonql/error.hpp"

namespace anonql {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SYNTAX_ERROR";
    case ErrorCode::UnknownFunction: return "UNKNOWN_FUNCTION";
    case ErrorCode::OrNotAllowed: return "OR_NOT_ALLOWED";
    case ErrorCode::JoinNotAllowed: return "JOIN_NOT_ALLOWED";
    case ErrorCode::UnknownTable: return "UNKNOWN_TABLE";
    case ErrorCode::UnknownColumn: return "UNKNOWN_COLUMN";
    case ErrorCode::TypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::AggregateMisuse: return "AGGREGATE_MISUSE";
    case ErrorCode::ColumnComparison: return "COLUMN_COMPARISON";
    case ErrorCode::ConstantCondition: return "CONSTANT_CONDITION";
    case ErrorCode::MultiColumnCondition: return "MULTI_COLUMN_CONDITION";
    case ErrorCode::RangeUnbounded: return "RANGE_UNBOUNDED";
    case ErrorCode::RangeNotSnapped: return "RANGE_NOT_SNAPPED";
    case ErrorCode::UnclearNegative: return "UNCLEAR_NEGATIVE";
    case ErrorCode::UnclearRange: return "UNCLEAR_RANGE";
    case ErrorCode::UnclearIn: return "UNCLEAR_IN";
    case ErrorCode::UnclearLike: return "UNCLEAR_LIKE";
    case ErrorCode::SubqueryDepth: return "SUBQUERY_DEPTH";
    case ErrorCode::SubqueryNoUid: return "SUBQUERY_NO_UID";
    case ErrorCode::SubqueryGroupNotUid: return "SUBQUERY_GROUP_NOT_UID";
    case ErrorCode::SubqueryClause: return "SUBQUERY_CLAUSE";
    case ErrorCode::HavingNotUidGrouped: return "HAVING_NOT_UID_GROUPED";
    case ErrorCode::UnsupportedDistinct: return "UNSUPPORTED_DISTINCT";
    case ErrorCode::UnsupportedCast: return "UNSUPPORTED_CAST";
    case ErrorCode::DataFormat: return "DATA_FORMAT";
    case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
  }
  return "UNKNOWN";
}

std::string Error::formatted() const {
  std::string out = "error ";
  out += error_name(code_);
  if (line_ > 0) {
    out += " at " + std::to_string(line_) + ":" + std::to_string(column_);
  }
  out += ": ";
  out += what();
  return out;
}

std::string_view type_name(ValueType type) {
  switch (type) {
    case ValueType::Null: return "null";
    case ValueType::Integer: return "integer";
    case ValueType::Real: return "real";
    case ValueType::Text: return "text";
    case ValueType::Boolean: return "boolean";
    case ValueType::DateTime: return "datetime";
  }
  return "?";
}

std::optional<ValueType> type_from_name(std::string_view name) {
  if (name == "integer" || name == "int") return ValueType::Integer;
  if (name == "real" || name == "float" || name == "double") return ValueType::Real;
  if (name == "text" || name == "string") return ValueType::Text;
  if (name == "boolean" || name == "bool") return ValueType::Boolean;
  if (name == "datetime") return ValueType::DateTime;
  return std::nullopt;
}

ValueType type_of(const Value& value) { return static_cast<ValueType>(value.index()); }

std::string format_real(double v) {
  if (v == 0.0) return "0";
  std::array<char, 48> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

static std::string format_datetime(DateTime dt, char separator) {
  CivilTime c = civil_from_datetime(dt);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d%c%02d:%02d:%02d", c.year, c.month, c.day,
                separator, c.hour, c.minute, c.second);
  return buf;
}

std::string canonical(const Value& value) {
  switch (type_of(value)) {
    case ValueType::Null: return ":null";
    case ValueType::Integer: return std::to_string(std::get<int64_t>(value));
    case ValueType::Real: return format_real(std::get<double>(value));
    case ValueType::Text: return std::get<std::string>(value);
    case ValueType::Boolean: return std::get<bool>(value) ? "true" : "false";
    case ValueType::DateTime: return format_datetime(std::get<DateTime>(value), 'T');
  }
  return {};
}

std::string display(const Value& value) {
  switch (type_of(value)) {
    case ValueType::Null: return "";
    case ValueType::DateTime: return format_datetime(std::get<DateTime>(value), ' ');
    default: return canonical(value);
  }
}

std::optional<double> as_real(const Value& value) {
  switch (type_of(value)) {
    case ValueType::Integer: return static_cast<double>(std::get<int64_t>(value));
    case ValueType::Real: return std::get<double>(value);
    default: return std::nullopt;
  }
}

std::optional<int64_t> as_integer(const Value& value) {
  switch (type_of(value)) {
    case ValueType::Integer: return std::get<int64_t>(value);
    case ValueType::Real: {
      double v = std::get<double>(value);
      if (std::nearbyint(v) == v && std::abs(v) < 9.2e18) return static_cast<int64_t>(v);
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

int compare(const Value& a, const Value& b) {
  ValueType ta = type_of(a);
  ValueType tb = type_of(b);
  bool numa = ta == ValueType::Integer || ta == ValueType::Real;
  bool numb = tb == ValueType::Integer || tb == ValueType::Real;
  if (numa && numb) {
    if (ta == ValueType::Integer && tb == ValueType::Integer) {
      int64_t x = std::get<int64_t>(a);
      int64_t y = std::get<int64_t>(b);
      return x < y ? -1 : x > y ? 1 : 0;
    }
    double x = *as_real(a);
    double y = *as_real(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (ta != tb) return ta < tb ? -1 : 1;
  switch (ta) {
    case ValueType::Null: return 0;
    case ValueType::Text: {
      int c = std::get<std::string>(a).compare(std::get<std::string>(b));
      return c < 0 ? -1 : c > 0 ? 1 : 0;
    }
    case ValueType::Boolean: {
      int x = std::get<bool>(a);
      int y = std::get<bool>(b);
      return x < y ? -1 : x > y ? 1 : 0;
    }
    case ValueType::DateTime: {
      int64_t x = std::get<DateTime>(a).seconds;
      int64_t y = std::get<DateTime>(b).seconds;
      return x < y ? -1 : x > y ? 1 : 0;
    }
    default: return 0;
  }
}

bool equals(const Value& a, const Value& b) { return compare(a, b) == 0; }

CivilTime civil_from_datetime(DateTime dt) {
  using namespace std::chrono;
  int64_t secs = dt.seconds;
  int64_t day_count = secs / 86400;
  int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    day_count -= 1;
  }
  year_month_day ymd{sys_days{days{static_cast<int>(day_count)}}};
  CivilTime c;
  c.year = int(ymd.year());
  c.month = int(unsigned(ymd.month()));
  c.day = int(unsigned(ymd.day()));
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>((rem / 60) % 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

DateTime datetime_from_civil(const CivilTime& c) {
  using namespace std::chrono;
  sys_days d = sys_days(year_month_day(year(c.year), month(unsigned(c.month)), day(unsigned(c.day))));
  int64_t secs = int64_t(d.time_since_epoch().count()) * 86400;
  secs += c.hour * 3600 + c.minute * 60 + c.second;
  return DateTime{secs};
}

bool civil_valid(const CivilTime& c) {
  using namespace std::chrono;
  if (c.hour < 0 || c.hour > 23 || c.minute < 0 || c.minute > 59 || c.second < 0 || c.second > 59)
    return false;
  return year_month_day(year(c.year), month(unsigned(c.month)), day(unsigned(c.day))).ok();
}

std::optional<DateTime> parse_datetime(std::string_view text) {
  CivilTime c;
  auto read_int = [&](size_t pos, size_t len, int& out) {
    if (pos + len > text.size()) return false;
    int v = 0;
    for (size_t i = pos; i < pos + len; i++) {
      char ch = text[i];
      if (ch < '0' || ch > '9') return false;
      v = v * 10 + (ch - '0');
    }
    out = v;
    return true;
  };
  if (text.size() != 10 && text.size() != 19) return std::nullopt;
  if (!read_int(0, 4, c.year) || text[4] != '-' || !read_int(5, 2, c.month) || text[7] != '-' ||
      !read_int(8, 2, c.day))
    return std::nullopt;
  if (text.size() == 19) {
    if ((text[10] != ' ' && text[10] != 'T') || !read_int(11, 2, c.hour) || text[13] != ':' ||
        !read_int(14, 2, c.minute) || text[16] != ':' || !read_int(17, 2, c.second))
      return std::nullopt;
  }
  if (!civil_valid(c)) return std::nullopt;
  return datetime_from_civil(c);
}

int day_of_week(DateTime dt) {
  int64_t days = dt.seconds / 86400;
  if (dt.seconds % 86400 < 0) days -= 1;
  // 1970-01-01 was a Thursday.
  int64_t dow = (days + 4) % 7;
  if (dow < 0) dow += 7;
  return static_cast<int>(dow);
}

std::optional<Value> parse_value(std::string_view text, ValueType type) {
  switch (type) {
    case ValueType::Text: return Value(std::string(text));
    case ValueType::Integer: {
      int64_t v = 0;
      auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
      return Value(v);
    }
    case ValueType::Real: {
      double v = 0;
      auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
      return Value(v);
    }
    case ValueType::Boolean: {
      std::string lower;
      for (char ch : text) lower.push_back(static_cast<char>(std::tolower(ch)));
      if (lower == "true") return Value(true);
      if (lower == "false") return Value(false);
      return std::nullopt;
    }
    case ValueType::DateTime: {
      auto dt = parse_datetime(text);
      if (!dt) return std::nullopt;
      return Value(*dt);
    }
    case ValueType::Null: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace anonql

#include "anonql/eval.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "anonql/condition.hpp"
#include "anonql/error.hpp"

namespace anonql {

namespace {

const Value kNull = Value{};

Value int_value(int64_t v) { return Value{v}; }
Value real_value(double v) { return Value{v}; }

/// Datetime argument coercion: text parses at runtime, failure means NULL.
std::optional<DateTime> to_datetime(const Value& v) {
  if (type_of(v) == ValueType::DateTime) return std::get<DateTime>(v);
  if (type_of(v) == ValueType::Text) return parse_datetime(std::get<std::string>(v));
  return std::nullopt;
}
Value text_value(std::string v) { return Value{std::move(v)}; }

// Wrapping signed arithmetic through unsigned so overflow stays defined.
int64_t wrap_add(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
int64_t wrap_sub(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
int64_t wrap_mul(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

Value eval_binary(const Expr& expr, const Value& lhs, const Value& rhs) {
  if (is_null(lhs) || is_null(rhs)) return kNull;
  const bool both_int =
      type_of(lhs) == ValueType::Integer && type_of(rhs) == ValueType::Integer;
  switch (expr.op) {
    case BinOp::Add:
      if (both_int) return int_value(wrap_add(std::get<int64_t>(lhs), std::get<int64_t>(rhs)));
      return real_value(*as_real(lhs) + *as_real(rhs));
    case BinOp::Sub:
      if (both_int) return int_value(wrap_sub(std::get<int64_t>(lhs), std::get<int64_t>(rhs)));
      return real_value(*as_real(lhs) - *as_real(rhs));
    case BinOp::Mul:
      if (both_int) return int_value(wrap_mul(std::get<int64_t>(lhs), std::get<int64_t>(rhs)));
      return real_value(*as_real(lhs) * *as_real(rhs));
    case BinOp::Div: {
      double d = *as_real(rhs);
      if (d == 0.0) return kNull;
      return real_value(*as_real(lhs) / d);
    }
    case BinOp::Mod: {
      int64_t m = std::get<int64_t>(rhs);
      if (m == 0) return kNull;
      if (m == -1) return int_value(0);  // INT64_MIN % -1 traps otherwise
      return int_value(std::get<int64_t>(lhs) % m);
    }
    case BinOp::Pow: {
      double r = std::pow(*as_real(lhs), *as_real(rhs));
      if (!std::isfinite(r)) return kNull;
      return real_value(r);
    }
  }
  return kNull;
}

std::string ascii_lower(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

std::string ascii_upper(std::string s) {
  for (char& c : s)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  return s;
}

std::string take_left(const std::string& s, int64_t n) {
  int64_t len = static_cast<int64_t>(s.size());
  if (n >= 0) return s.substr(0, static_cast<size_t>(std::min(n, len)));
  int64_t keep = len + n;  // drop |n| characters from the end
  if (keep <= 0) return "";
  return s.substr(0, static_cast<size_t>(keep));
}

std::string take_right(const std::string& s, int64_t n) {
  int64_t len = static_cast<int64_t>(s.size());
  if (n >= 0) {
    int64_t k = std::min(n, len);
    return s.substr(static_cast<size_t>(len - k));
  }
  int64_t keep = len + n;  // drop |n| characters from the start
  if (keep <= 0) return "";
  return s.substr(static_cast<size_t>(len - keep));
}

bool in_set(char c, const std::string& set) { return set.find(c) != std::string::npos; }

std::string trim_impl(const std::string& s, const std::string& chars, bool left, bool right) {
  size_t b = 0;
  size_t e = s.size();
  if (left)
    while (b < e && in_set(s[b], chars)) ++b;
  if (right)
    while (e > b && in_set(s[e - 1], chars)) --e;
  return s.substr(b, e - b);
}

std::string to_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

std::string int_hex(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  if (v == 0) return "0";
  std::string out;
  while (v != 0) {
    out.insert(out.begin(), digits[v & 0xf]);
    v >>= 4;
  }
  return out;
}

double pow10i(int p) { return std::pow(10.0, p); }

Value eval_round_like(const std::string& fn, const Value& x, int64_t precision) {
  if (is_null(x)) return kNull;
  const bool was_int = type_of(x) == ValueType::Integer;
  if (was_int && precision >= 0) return x;
  double scale = pow10i(static_cast<int>(precision));
  double scaled = *as_real(x) * scale;
  double cell = (fn == "round") ? std::round(scaled) : std::trunc(scaled);
  double out = cell / scale;
  if (was_int) {
    if (out >= -9.2e18 && out <= 9.2e18) return int_value(static_cast<int64_t>(out));
    return kNull;
  }
  return real_value(out);
}

Value eval_function(const Expr& expr, std::vector<Value> args) {
  const std::string& fn = expr.fn;
  // concat is the one function that swallows NULL arguments.
  if (fn == "concat") {
    std::string out;
    for (const Value& a : args) out += display(a);
    return text_value(std::move(out));
  }
  for (const Value& a : args)
    if (is_null(a)) return kNull;

  if (fn == "length") return int_value(static_cast<int64_t>(std::get<std::string>(args[0]).size()));
  if (fn == "lower") return text_value(ascii_lower(std::get<std::string>(args[0])));
  if (fn == "upper") return text_value(ascii_upper(std::get<std::string>(args[0])));
  if (fn == "left")
    return text_value(take_left(std::get<std::string>(args[0]), std::get<int64_t>(args[1])));
  if (fn == "right")
    return text_value(take_right(std::get<std::string>(args[0]), std::get<int64_t>(args[1])));
  if (fn == "btrim" || fn == "ltrim" || fn == "rtrim") {
    std::string chars = args.size() > 1 ? std::get<std::string>(args[1]) : std::string(" ");
    return text_value(trim_impl(std::get<std::string>(args[0]), chars, fn != "rtrim",
                                fn != "ltrim"));
  }
  if (fn == "substring") {
    const std::string& s = std::get<std::string>(args[0]);
    int64_t from = std::get<int64_t>(args[1]);
    if (from < 1) from = 1;  // FROM 0 behaves as FROM 1, keeping left() equivalence
    size_t idx = static_cast<size_t>(from - 1);
    if (idx >= s.size()) return text_value("");
    if (args.size() == 2) return text_value(s.substr(idx));
    int64_t count = std::get<int64_t>(args[2]);
    if (count < 0) return kNull;
    return text_value(s.substr(idx, static_cast<size_t>(count)));
  }
  if (fn == "hex") {
    if (type_of(args[0]) == ValueType::Integer)
      return text_value(int_hex(static_cast<uint64_t>(std::get<int64_t>(args[0]))));
    return text_value(to_hex(std::get<std::string>(args[0])));
  }

  if (fn == "abs") {
    if (type_of(args[0]) == ValueType::Integer) {
      int64_t v = std::get<int64_t>(args[0]);
      return int_value(v < 0 ? wrap_sub(0, v) : v);
    }
    return real_value(std::fabs(*as_real(args[0])));
  }
  if (fn == "ceil" || fn == "floor") {
    if (type_of(args[0]) == ValueType::Integer) return args[0];
    double r = *as_real(args[0]);
    return real_value(fn == "ceil" ? std::ceil(r) : std::floor(r));
  }
  if (fn == "round" || fn == "trunc") {
    int64_t p = args.size() > 1 ? std::get<int64_t>(args[1]) : 0;
    return eval_round_like(fn, args[0], p);
  }
  if (fn == "div") {
    if (type_of(args[0]) == ValueType::Integer && type_of(args[1]) == ValueType::Integer) {
      int64_t b = std::get<int64_t>(args[1]);
      if (b == 0) return kNull;
      if (b == -1) return int_value(wrap_sub(0, std::get<int64_t>(args[0])));
      return int_value(std::get<int64_t>(args[0]) / b);
    }
    double b = *as_real(args[1]);
    if (b == 0.0) return kNull;
    return real_value(std::trunc(*as_real(args[0]) / b));
  }
  if (fn == "mod") {
    int64_t b = std::get<int64_t>(args[1]);
    if (b == 0) return kNull;
    if (b == -1) return int_value(0);
    return int_value(std::get<int64_t>(args[0]) % b);
  }
  if (fn == "pow") {
    double r = std::pow(*as_real(args[0]), *as_real(args[1]));
    if (!std::isfinite(r)) return kNull;
    return real_value(r);
  }
  if (fn == "sqrt") {
    double x = *as_real(args[0]);
    if (x < 0) return kNull;
    return real_value(std::sqrt(x));
  }

  if (fn == "year" || fn == "quarter" || fn == "month" || fn == "day" || fn == "hour" ||
      fn == "minute" || fn == "second" || fn == "weekday") {
    auto dtv = to_datetime(args[0]);
    if (!dtv) return kNull;
    DateTime dt = *dtv;
    if (fn == "weekday") return int_value(day_of_week(dt));
    CivilTime c = civil_from_datetime(dt);
    if (fn == "year") return int_value(c.year);
    if (fn == "quarter") return int_value((c.month - 1) / 3 + 1);
    if (fn == "month") return int_value(c.month);
    if (fn == "day") return int_value(c.day);
    if (fn == "hour") return int_value(c.hour);
    if (fn == "minute") return int_value(c.minute);
    return int_value(c.second);
  }
  if (fn == "date_trunc") {
    // Unit literal is validated up front; see validate.cpp.
    const std::string& unit = std::get<std::string>(args[0]);
    auto dtv = to_datetime(args[1]);
    if (!dtv) return kNull;
    DateTime dt = *dtv;
    DtUnit u = DtUnit::Second;
    if (unit == "minute") u = DtUnit::Minute;
    else if (unit == "hour") u = DtUnit::Hour;
    else if (unit == "day") u = DtUnit::Day;
    else if (unit == "month") u = DtUnit::Month;
    else if (unit == "quarter") u = DtUnit::Quarter;
    else if (unit == "year") u = DtUnit::Year;
    return Value{floor_to_unit(dt, u)};
  }
  return kNull;
}

}  // namespace

Value apply_cast(const Value& value, ValueType target) {
  if (is_null(value)) return kNull;
  ValueType source = type_of(value);
  if (source == target) return value;
  switch (target) {
    case ValueType::Text:
      return text_value(display(value));
    case ValueType::Integer:
      if (source == ValueType::Real) {
        double d = std::get<double>(value);
        if (!(d >= -9.2e18 && d <= 9.2e18)) return kNull;
        return int_value(static_cast<int64_t>(std::llround(d)));
      }
      if (source == ValueType::Boolean) return int_value(std::get<bool>(value) ? 1 : 0);
      if (source == ValueType::Text) {
        auto v = parse_value(std::get<std::string>(value), ValueType::Integer);
        return v ? *v : kNull;
      }
      return kNull;
    case ValueType::Real:
      if (source == ValueType::Integer)
        return real_value(static_cast<double>(std::get<int64_t>(value)));
      if (source == ValueType::Boolean) return real_value(std::get<bool>(value) ? 1.0 : 0.0);
      if (source == ValueType::Text) {
        auto v = parse_value(std::get<std::string>(value), ValueType::Real);
        return v ? *v : kNull;
      }
      return kNull;
    case ValueType::Boolean:
      if (source == ValueType::Integer) return Value{std::get<int64_t>(value) != 0};
      if (source == ValueType::Real) return Value{std::get<double>(value) != 0.0};
      if (source == ValueType::Text) {
        auto v = parse_value(std::get<std::string>(value), ValueType::Boolean);
        return v ? *v : kNull;
      }
      return kNull;
    case ValueType::DateTime:
      if (source == ValueType::Text) {
        auto v = parse_datetime(std::get<std::string>(value));
        return v ? Value{*v} : kNull;
      }
      return kNull;
    case ValueType::Null:
      return kNull;
  }
  return kNull;
}

Value evaluate(const Expr& expr, const Row* row, std::span<const Value> agg_values) {
  switch (expr.kind) {
    case ExprKind::Literal:
      return expr.literal;
    case ExprKind::ColumnRef:
      if (row == nullptr || expr.bound_index < 0)
        throw Error(ErrorCode::DataFormat, "internal: unbound column reference");
      return (*row)[static_cast<size_t>(expr.bound_index)];
    case ExprKind::Aggregate:
      if (expr.bound_index < 0 || static_cast<size_t>(expr.bound_index) >= agg_values.size())
        throw Error(ErrorCode::DataFormat, "internal: unbound aggregate reference");
      return agg_values[static_cast<size_t>(expr.bound_index)];
    case ExprKind::Binary: {
      Value lhs = evaluate(*expr.args[0], row, agg_values);
      Value rhs = evaluate(*expr.args[1], row, agg_values);
      return eval_binary(expr, lhs, rhs);
    }
    case ExprKind::Unary: {
      Value v = evaluate(*expr.args[0], row, agg_values);
      if (is_null(v)) return kNull;
      if (type_of(v) == ValueType::Integer) return int_value(wrap_sub(0, std::get<int64_t>(v)));
      return real_value(-*as_real(v));
    }
    case ExprKind::Function: {
      std::vector<Value> args;
      args.reserve(expr.args.size());
      for (const ExprPtr& a : expr.args) args.push_back(evaluate(*a, row, agg_values));
      return eval_function(expr, std::move(args));
    }
    case ExprKind::Cast:
      return apply_cast(evaluate(*expr.args[0], row, agg_values), expr.cast_type);
    case ExprKind::Star:
      throw Error(ErrorCode::DataFormat, "internal: bare * evaluated");
  }
  return kNull;
}

}  // namespace anonql

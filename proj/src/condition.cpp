#include "anonql/condition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace anonql {

bool is_clear_wrapper(std::string_view fn) {
  return fn == "right" || fn == "left" || fn == "ltrim" || fn == "rtrim" || fn == "btrim" ||
         fn == "substring" || fn == "upper" || fn == "lower";
}

bool is_char_removing(std::string_view fn) {
  return fn == "right" || fn == "left" || fn == "ltrim" || fn == "rtrim" || fn == "btrim" ||
         fn == "substring";
}

bool is_case_fn(std::string_view fn) { return fn == "upper" || fn == "lower"; }

std::string normalize_trim_chars(std::string_view chars) {
  std::set<unsigned char> bytes(chars.begin(), chars.end());
  return std::string(bytes.begin(), bytes.end());
}

namespace {

struct PatternItem {
  char ch = 0;
  bool wildcard = false;
};

std::vector<PatternItem> resolve_escapes(std::string_view pattern, std::optional<char> escape,
                                         bool fold_case) {
  std::vector<PatternItem> items;
  for (size_t i = 0; i < pattern.size(); i++) {
    char ch = pattern[i];
    if (escape && ch == *escape && i + 1 < pattern.size()) {
      char next = pattern[++i];
      items.push_back({fold_case ? static_cast<char>(std::tolower(static_cast<unsigned char>(next)))
                                 : next,
                       false});
      continue;
    }
    if (ch == '%' || ch == '_') {
      items.push_back({ch, true});
      continue;
    }
    items.push_back(
        {fold_case ? static_cast<char>(std::tolower(static_cast<unsigned char>(ch))) : ch, false});
  }
  return items;
}

void append_canonical(std::string& out, const PatternItem& item) {
  if (!item.wildcard && (item.ch == '%' || item.ch == '_' || item.ch == '\\')) out.push_back('\\');
  out.push_back(item.ch);
}

}  // namespace

LikePattern normalize_like(std::string_view pattern, std::optional<char> escape, bool fold_case) {
  std::vector<PatternItem> items = resolve_escapes(pattern, escape, fold_case);

  // Wildcard runs: all-% collapses to one '%'; a mixed run becomes '%' plus
  // the run's underscores.
  std::vector<PatternItem> modified;
  size_t i = 0;
  while (i < items.size()) {
    if (!items[i].wildcard) {
      modified.push_back(items[i++]);
      continue;
    }
    size_t j = i;
    int underscores = 0;
    bool any_percent = false;
    while (j < items.size() && items[j].wildcard) {
      if (items[j].ch == '%')
        any_percent = true;
      else
        underscores++;
      j++;
    }
    if (any_percent) {
      modified.push_back({'%', true});
      for (int k = 0; k < underscores; k++) modified.push_back({'_', true});
    } else {
      for (int k = 0; k < underscores; k++) modified.push_back({'_', true});
    }
    i = j;
  }

  LikePattern out;
  int stripped_len = 0;
  for (const PatternItem& item : modified) {
    if (!(item.wildcard && item.ch == '%')) stripped_len++;
  }
  int pos = 0;  // index into the %-stripped pattern
  for (const PatternItem& item : modified) {
    append_canonical(out.canonical, item);
    if (item.wildcard && item.ch == '%') {
      out.descriptors.push_back({stripped_len, pos - 1, '%'});
    } else if (item.wildcard && item.ch == '_') {
      out.descriptors.push_back({stripped_len, pos, '_'});
      pos++;
    } else {
      pos++;
    }
  }
  return out;
}

namespace {

/// Matcher over the canonical (backslash-escaped) form.
bool match_from(std::string_view pattern, std::string_view subject, bool fold_case) {
  auto lower = [fold_case](char c) {
    return fold_case ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c;
  };
  size_t pi = 0;
  size_t si = 0;
  size_t star_pi = std::string_view::npos;
  size_t star_si = 0;
  while (si < subject.size()) {
    char pc = pi < pattern.size() ? pattern[pi] : 0;
    if (pi < pattern.size() && pc == '%') {
      star_pi = ++pi;
      star_si = si;
      continue;
    }
    bool literal = false;
    char want = pc;
    if (pi < pattern.size() && pc == '\\' && pi + 1 < pattern.size()) {
      want = pattern[pi + 1];
      literal = true;
    }
    if (pi < pattern.size() &&
        ((!literal && pc == '_') || lower(want) == lower(subject[si]))) {
      pi += literal ? 2 : 1;
      si++;
      continue;
    }
    if (star_pi != std::string_view::npos) {
      pi = star_pi;
      si = ++star_si;
      continue;
    }
    return false;
  }
  while (pi < pattern.size() && pattern[pi] == '%') pi++;
  return pi == pattern.size();
}

}  // namespace

bool like_match(std::string_view canonical_pattern, std::string_view subject, bool fold_case) {
  return match_from(canonical_pattern, subject, fold_case);
}

bool is_snapped_size(double size) {
  if (!(size > 0)) return false;
  for (int k = -6; k <= 12; k++) {
    double base = std::pow(10.0, k);
    for (double m : {1.0, 2.0, 5.0}) {
      double s = m * base;
      if (std::abs(size - s) <= s * 1e-9) return true;
    }
  }
  return false;
}

bool is_snap_aligned(double lower, double size) {
  if (!(size > 0)) return false;
  double r = lower / size;
  return std::abs(r - std::nearbyint(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

namespace {

double snap_floor(double size) {
  // Largest snapped size <= size; smallest snapped size when below the grid.
  double best = 1e-6;
  for (int k = -6; k <= 12; k++) {
    double base = std::pow(10.0, k);
    for (double m : {1.0, 2.0, 5.0}) {
      double s = m * base;
      if (s <= size * (1 + 1e-9)) best = std::max(best, s);
    }
  }
  return best;
}

double snap_ceil(double size) {
  double best = 5e12;
  for (int k = 12; k >= -6; k--) {
    double base = std::pow(10.0, k);
    for (double m : {5.0, 2.0, 1.0}) {
      double s = m * base;
      if (s >= size * (1 - 1e-9)) best = std::min(best, s);
    }
  }
  return best;
}

std::string range_text(double lower, double size) {
  double aligned = std::floor(lower / size) * size;
  return "[" + format_real(aligned) + ", " + format_real(aligned + size) + ")";
}

}  // namespace

NumericRangeCheck check_numeric_range(double lower, double upper) {
  NumericRangeCheck out;
  double size = upper - lower;
  if (size > 0 && is_snapped_size(size) && is_snap_aligned(lower, size)) {
    out.ok = true;
    return out;
  }
  double s1 = snap_floor(std::max(size, 1e-6));
  double s2 = snap_ceil(std::max(size, 1e-6));
  if (s1 == s2) s2 = snap_ceil(s1 * 1.5);
  out.suggestion = "nearest snapped ranges: " + range_text(lower, s1) + " or " +
                   range_text(lower, s2);
  return out;
}

std::string_view unit_name(DtUnit unit) {
  switch (unit) {
    case DtUnit::Second: return "second";
    case DtUnit::Minute: return "minute";
    case DtUnit::Hour: return "hour";
    case DtUnit::Day: return "day";
    case DtUnit::Month: return "month";
    case DtUnit::Quarter: return "quarter";
    case DtUnit::Year: return "year";
  }
  return "?";
}

bool on_boundary(DateTime t, DtUnit unit) {
  CivilTime c = civil_from_datetime(t);
  switch (unit) {
    case DtUnit::Second: return true;
    case DtUnit::Minute: return c.second == 0;
    case DtUnit::Hour: return c.second == 0 && c.minute == 0;
    case DtUnit::Day: return c.second == 0 && c.minute == 0 && c.hour == 0;
    case DtUnit::Month:
      return c.second == 0 && c.minute == 0 && c.hour == 0 && c.day == 1;
    case DtUnit::Quarter:
      return c.second == 0 && c.minute == 0 && c.hour == 0 && c.day == 1 &&
             (c.month == 1 || c.month == 4 || c.month == 7 || c.month == 10);
    case DtUnit::Year:
      return c.second == 0 && c.minute == 0 && c.hour == 0 && c.day == 1 && c.month == 1;
  }
  return false;
}

DateTime add_unit(DateTime t, DtUnit unit, int count) {
  switch (unit) {
    case DtUnit::Second: return DateTime{t.seconds + count};
    case DtUnit::Minute: return DateTime{t.seconds + 60l * count};
    case DtUnit::Hour: return DateTime{t.seconds + 3600l * count};
    case DtUnit::Day: return DateTime{t.seconds + 86400l * count};
    default: {
      CivilTime c = civil_from_datetime(t);
      int months = unit == DtUnit::Month ? count : unit == DtUnit::Quarter ? 3 * count : 12 * count;
      int total = (c.year * 12 + (c.month - 1)) + months;
      c.year = total / 12;
      c.month = total % 12 + 1;
      if (c.month < 1) {
        c.month += 12;
        c.year -= 1;
      }
      return datetime_from_civil(c);
    }
  }
}

DateTime floor_to_unit(DateTime t, DtUnit unit) {
  CivilTime c = civil_from_datetime(t);
  switch (unit) {
    case DtUnit::Second: return t;
    case DtUnit::Minute: c.second = 0; break;
    case DtUnit::Hour: c.second = c.minute = 0; break;
    case DtUnit::Day: c.second = c.minute = c.hour = 0; break;
    case DtUnit::Month:
      c.second = c.minute = c.hour = 0;
      c.day = 1;
      break;
    case DtUnit::Quarter:
      c.second = c.minute = c.hour = 0;
      c.day = 1;
      c.month = ((c.month - 1) / 3) * 3 + 1;
      break;
    case DtUnit::Year:
      c.second = c.minute = c.hour = 0;
      c.day = 1;
      c.month = 1;
      break;
  }
  return datetime_from_civil(c);
}

static const DtUnit all_units[] = {DtUnit::Second, DtUnit::Minute,  DtUnit::Hour, DtUnit::Day,
                                   DtUnit::Month,  DtUnit::Quarter, DtUnit::Year};

std::optional<std::pair<DateTime, DtUnit>> datetime_cell(DateTime lower, DateTime upper) {
  if (upper.seconds < lower.seconds) return std::nullopt;
  for (DtUnit unit : all_units) {
    if (!on_boundary(lower, unit)) continue;
    DateTime end = add_unit(lower, unit);
    if (upper.seconds <= end.seconds) return std::make_pair(end, unit);
  }
  return std::nullopt;
}

std::string suggest_datetime_ranges(DateTime lower, DateTime upper) {
  // Pick the unit whose length best matches the requested span, aligned down.
  double span = std::max<double>(1.0, static_cast<double>(upper.seconds - lower.seconds));
  DtUnit best = DtUnit::Second;
  double best_ratio = 1e300;
  for (DtUnit unit : all_units) {
    double len = static_cast<double>(add_unit(floor_to_unit(lower, unit), unit).seconds -
                                     floor_to_unit(lower, unit).seconds);
    double ratio = len > span ? len / span : span / len;
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = unit;
    }
  }
  auto cell_text = [&](DtUnit unit) {
    DateTime lo = floor_to_unit(lower, unit);
    DateTime hi = add_unit(lo, unit);
    return "[" + display(Value(lo)) + ", " + display(Value(hi)) + ")";
  };
  std::string out = "nearest snapped ranges: " + cell_text(best);
  size_t idx = 0;
  while (all_units[idx] != best) idx++;
  DtUnit other = idx + 1 < std::size(all_units) ? all_units[idx + 1]
                                                : all_units[idx > 0 ? idx - 1 : 0];
  if (other != best) out += " or " + cell_text(other);
  return out;
}

std::optional<std::pair<double, double>> numeric_fn_cell(std::string_view fn, int precision,
                                                         double c) {
  if (precision < -12 || precision > 6) return std::nullopt;
  double step = std::pow(10.0, -precision);
  double r = c / step;
  if (std::abs(r - std::nearbyint(r)) > 1e-9 * std::max(1.0, std::abs(r))) return std::nullopt;
  if (fn == "trunc") return std::make_pair(c, c + step);
  if (fn == "round") return std::make_pair(c - step / 2, c + step / 2);
  return std::nullopt;
}

}  // namespace anonql

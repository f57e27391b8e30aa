#include "anonql/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "anonql/noise.hpp"

namespace anonql {
namespace {

using Iter = std::vector<double>::const_iterator;

double mean_of(Iter begin, Iter end) {
  return std::accumulate(begin, end, 0.0) / static_cast<double>(end - begin);
}

double pop_stddev(Iter begin, Iter end) {
  if (begin == end) return 0;
  double m = mean_of(begin, end);
  double acc = 0;
  for (Iter it = begin; it != end; ++it) acc += (*it - m) * (*it - m);
  return std::sqrt(acc / static_cast<double>(end - begin));
}

/// One flattening pass over same-signed contributions. The extreme values sit
/// first after ordering; the top t1 are replaced by the average of the next
/// t2. Empty passes succeed as no-ops; false means too few users.
bool flatten_pass(std::vector<double>& values, bool lowest_first, int t1, int t2, double& sum_out,
                  double& factor_out) {
  if (values.empty()) return true;
  if (values.size() < static_cast<size_t>(t1) + static_cast<size_t>(t2)) return false;
  std::sort(values.begin(), values.end());
  if (!lowest_first) std::reverse(values.begin(), values.end());
  double a2 = mean_of(values.begin() + t1, values.begin() + t1 + t2);
  std::fill(values.begin(), values.begin() + t1, a2);
  double a_all = mean_of(values.begin(), values.end());
  sum_out += std::accumulate(values.begin(), values.end(), 0.0);
  factor_out += std::max(std::abs(a2) / 2, std::abs(a_all));
  return true;
}

}  // namespace

int SeededThresholds::threshold(std::string_view tag) const {
  return noisy_threshold(seed_, tag);
}

AggResult anon_sum(std::vector<double> contributions, double baseline, double sigma_base,
                   const ThresholdSource& thresholds) {
  if (contributions.empty()) return {.suppressed = true};
  int t1 = thresholds.threshold("t1");
  int t2 = thresholds.threshold("t2");
  std::vector<double> pos, neg;
  for (double v : contributions) (v < 0 ? neg : pos).push_back(v);
  // Zeros ride with the positive pass; when only negative values exist they
  // join that single pass instead of forcing a second one.
  if (!neg.empty() && std::none_of(pos.begin(), pos.end(), [](double v) { return v > 0; })) {
    neg.insert(neg.end(), pos.begin(), pos.end());
    pos.clear();
  }
  double total = 0;
  double factor = 0;
  if (!flatten_pass(pos, /*lowest_first=*/false, t1, t2, total, factor) ||
      !flatten_pass(neg, /*lowest_first=*/true, t1, t2, total, factor)) {
    return {.suppressed = true};
  }
  AggResult r;
  r.value = total + baseline * factor;
  r.noise_sd = factor * sigma_base;
  return r;
}

AggResult anon_count(const std::vector<double>& counts, double baseline, double sigma_base,
                     const ThresholdSource& thresholds) {
  AggResult r = anon_sum(counts, baseline, sigma_base, thresholds);
  if (!r.suppressed) {
    r.value = std::max(0.0, static_cast<double>(std::llround(r.value)));
  }
  return r;
}

AggResult anon_avg(const std::vector<double>& sums, const std::vector<double>& counts,
                   double baseline_sum, double baseline_count, double sigma_base,
                   const ThresholdSource& thresholds) {
  AggResult s = anon_sum(sums, baseline_sum, sigma_base, thresholds);
  AggResult c = anon_sum(counts, baseline_count, sigma_base, thresholds);
  if (s.suppressed || c.suppressed) return {.suppressed = true};
  double denom = std::max(1.0, c.value);
  AggResult r;
  r.value = s.value / denom;
  // First-order propagation through the quotient of two noisy terms.
  double ds = s.noise_sd / denom;
  double dc = s.value * c.noise_sd / (denom * denom);
  r.noise_sd = std::sqrt(ds * ds + dc * dc);
  return r;
}

AggResult anon_stddev(const std::vector<double>& sq_sums, const std::vector<double>& counts,
                      double baseline_sum, double baseline_count, double sigma_base,
                      const ThresholdSource& thresholds) {
  AggResult a = anon_avg(sq_sums, counts, baseline_sum, baseline_count, sigma_base, thresholds);
  if (a.suppressed) return a;
  double m = std::max(0.0, a.value);
  AggResult r;
  r.value = std::sqrt(m);
  // Finite-difference propagation through the square root; stays finite when
  // the mean square is zero.
  r.noise_sd = std::sqrt(m + a.noise_sd) - r.value;
  return r;
}

AggResult anon_extreme(std::vector<double> extremes, bool highest, double baseline,
                       double sigma_base, const ThresholdSource& thresholds) {
  int drop = thresholds.threshold("mm-drop");
  int grp = thresholds.threshold("mm-grp");
  if (extremes.size() < static_cast<size_t>(drop) + static_cast<size_t>(grp)) {
    return {.suppressed = true};
  }
  std::sort(extremes.begin(), extremes.end());
  if (highest) std::reverse(extremes.begin(), extremes.end());
  Iter begin = extremes.cbegin() + drop;
  Iter end = begin + grp;
  double sd = pop_stddev(begin, end);
  AggResult r;
  r.value = mean_of(begin, end) + baseline * sd / 8;
  r.noise_sd = sd / 8 * sigma_base;
  return r;
}

AggResult anon_median(std::vector<UidRow> rows, double baseline, double sigma_base,
                      const ThresholdSource& thresholds) {
  int strip = thresholds.threshold("mm-drop");
  int t = thresholds.threshold("med");
  std::sort(rows.begin(), rows.end(), [](const UidRow& a, const UidRow& b) {
    return a.value == b.value ? a.user < b.user : a.value < b.value;
  });
  for (int high = 0; high < 2; ++high) {
    for (int i = 0; i < strip; ++i) {
      if (rows.empty()) return {.suppressed = true};
      int victim = high == 0 ? rows.back().user : rows.front().user;
      std::erase_if(rows, [victim](const UidRow& r) { return r.user == victim; });
    }
  }
  if (rows.empty()) return {.suppressed = true};

  size_t m = (rows.size() - 1) / 2;
  // Rows of the first t distinct users encountered walking away from the
  // median; all of a chosen user's rows on that side count.
  auto side_values = [&](bool above, std::vector<double>& out) {
    std::vector<int> chosen;
    auto visit = [&](size_t i) {
      int u = rows[i].user;
      if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) {
        if (chosen.size() < static_cast<size_t>(t)) chosen.push_back(u);
      }
    };
    if (above) {
      for (size_t i = m + 1; i < rows.size(); ++i) visit(i);
    } else {
      for (size_t i = m; i-- > 0;) visit(i);
    }
    if (chosen.size() < static_cast<size_t>(t)) return false;
    auto labeled = [&](size_t i) {
      return std::find(chosen.begin(), chosen.end(), rows[i].user) != chosen.end();
    };
    if (above) {
      for (size_t i = m + 1; i < rows.size(); ++i)
        if (labeled(i)) out.push_back(rows[i].value);
    } else {
      for (size_t i = m; i-- > 0;)
        if (labeled(i)) out.push_back(rows[i].value);
    }
    return true;
  };

  std::vector<double> group = {rows[m].value};
  if (!side_values(true, group) || !side_values(false, group)) return {.suppressed = true};
  double sd = pop_stddev(group.cbegin(), group.cend());
  AggResult r;
  r.value = mean_of(group.cbegin(), group.cend()) + baseline * sd / 8;
  r.noise_sd = sd / 8 * sigma_base;
  return r;
}

std::vector<std::vector<Value>> assign_distinct(
    const std::vector<std::vector<Value>>& values_by_user) {
  const int users = static_cast<int>(values_by_user.size());
  // Distinct values in first-appearance order; canonical text is the identity
  // (one column's values share a type).
  std::vector<Value> vals;
  std::vector<std::vector<int>> holders;
  std::map<std::string, int> index;
  for (int u = 0; u < users; ++u) {
    for (const Value& v : values_by_user[u]) {
      auto [it, inserted] = index.try_emplace(canonical(v), static_cast<int>(vals.size()));
      if (inserted) {
        vals.push_back(v);
        holders.emplace_back();
      }
      std::vector<int>& h = holders[it->second];
      if (h.empty() || h.back() != u) h.push_back(u);
    }
  }
  const int n = static_cast<int>(vals.size());

  // Credit as many users as possible with at least one value: a maximum
  // value-user matching via augmenting paths.
  std::vector<int> match_user(n, -1);
  std::vector<int> match_value(users, -1);
  auto augment = [&](auto&& self, int v, std::vector<char>& seen) -> bool {
    for (int u : holders[v]) {
      if (seen[u]) continue;
      seen[u] = 1;
      if (match_value[u] < 0 || self(self, match_value[u], seen)) {
        match_value[u] = v;
        match_user[v] = u;
        return true;
      }
    }
    return false;
  };
  for (int v = 0; v < n; ++v) {
    std::vector<char> seen(users, 0);
    augment(augment, v, seen);
  }

  // Remaining values go to their least-loaded holder.
  std::vector<size_t> load(users, 0);
  for (int v = 0; v < n; ++v) {
    if (match_user[v] >= 0) load[match_user[v]] += 1;
  }
  std::vector<std::vector<Value>> out(users);
  for (int v = 0; v < n; ++v) {
    int target = match_user[v];
    if (target < 0) {
      for (int u : holders[v]) {
        if (target < 0 || load[u] < load[target]) target = u;
      }
      load[target] += 1;
    }
    out[target].push_back(vals[v]);
  }
  return out;
}

double noise_report(double true_sd) {
  if (true_sd == 0) return 0;
  double mag = std::pow(10.0, std::floor(std::log10(std::abs(true_sd))) - 1);
  return std::round(true_sd / mag) * mag;
}

}  // namespace anonql

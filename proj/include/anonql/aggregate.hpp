#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "anonql/value.hpp"

namespace anonql {

/// Source of the noisy user-group sizes the aggregates use. The engine draws
/// them from the bucket's combined seed; tests may pin them.
class ThresholdSource {
 public:
  virtual ~ThresholdSource() = default;
  virtual int threshold(std::string_view tag) const = 0;
};

class SeededThresholds final : public ThresholdSource {
 public:
  explicit SeededThresholds(uint64_t combined_seed) : seed_(combined_seed) {}
  int threshold(std::string_view tag) const override;

 private:
  uint64_t seed_;
};

class FixedThresholds final : public ThresholdSource {
 public:
  explicit FixedThresholds(int value) : value_(value) {}
  int threshold(std::string_view) const override { return value_; }

 private:
  int value_;
};

/// Outcome of one anonymizing aggregate over one bucket.
///  value:    the reported number (count-family results are pre-rounded).
///  noise_sd: standard deviation of the noise inside value, before
///            report-rounding.
struct AggResult {
  bool suppressed = false;
  double value = 0;
  double noise_sd = 0;
};

/// Flattened noisy sum over per-user contributions, one entry per distinct
/// user. baseline is the bucket's sticky unit-noise draw for this aggregate;
/// sigma_base is that draw's standard deviation.
AggResult anon_sum(std::vector<double> contributions, double baseline, double sigma_base,
                   const ThresholdSource& thresholds);

/// Count family: the flattened sum of per-user row or value counts, rounded
/// to a non-negative integer.
AggResult anon_count(const std::vector<double>& counts, double baseline, double sigma_base,
                     const ThresholdSource& thresholds);

/// sum / count with independent baseline draws for numerator and denominator.
AggResult anon_avg(const std::vector<double>& sums, const std::vector<double>& counts,
                   double baseline_sum, double baseline_count, double sigma_base,
                   const ThresholdSource& thresholds);

/// Square root of the anonymized mean of per-row squared deviations from the
/// true mean. sq_sums[u] sums (value - true mean)^2 over user u's rows;
/// counts[u] is the row count.
AggResult anon_stddev(const std::vector<double>& sq_sums, const std::vector<double>& counts,
                      double baseline_sum, double baseline_count, double sigma_base,
                      const ThresholdSource& thresholds);

/// max (highest = true) or min over one extreme value per distinct user: the
/// outermost user group is dropped, the next group averaged, and noise scales
/// with that group's spread.
AggResult anon_extreme(std::vector<double> extremes, bool highest, double baseline,
                       double sigma_base, const ThresholdSource& thresholds);

/// One bucket row for the median; user is a dense ordinal, distinct per user.
struct UidRow {
  int user = 0;
  double value = 0;
};

AggResult anon_median(std::vector<UidRow> rows, double baseline, double sigma_base,
                      const ThresholdSource& thresholds);

/// Duplicate removal for `distinct` aggregates: every distinct value is
/// credited to exactly one of the users holding it, and the assignment
/// maximizes how many users end up credited with at least one value. Returns
/// the values credited to each user, indexed like the input.
std::vector<std::vector<Value>> assign_distinct(
    const std::vector<std::vector<Value>>& values_by_user);

/// Rounds a noise standard deviation to two significant decimal digits
/// (relative error at most 5%).
double noise_report(double true_sd);

}  // namespace anonql

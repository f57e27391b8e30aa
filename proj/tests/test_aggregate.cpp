#include "anonql/aggregate.hpp"

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "anonql/noise.hpp"

using namespace anonql;
using doctest::Approx;

namespace {

const FixedThresholds two{2};
const FixedThresholds three{3};

double true_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Flattened sums and counts
// ---------------------------------------------------------------------------

TEST_CASE("flattening replaces the top group with the next group's average") {
  // Groups {100,20} -> 9 each; post-replacement sum 48; averages 9 and 8 give
  // a noise factor of max(4.5, 8) = 8.
  auto r = anon_sum({100, 20, 10, 8, 7, 5}, 0, 2, two);
  REQUIRE_FALSE(r.suppressed);
  CHECK(r.value == Approx(48));
  CHECK(r.noise_sd == Approx(16));
  CHECK(anon_sum({100, 20, 10, 8, 7, 5}, 1.0, 2, two).value == Approx(56));
}

TEST_CASE("unit contributions flatten without distortion") {
  std::vector<double> ones(6, 1.0);
  auto r = anon_sum(ones, 0.25, 2, two);
  CHECK(r.value == Approx(6.25));
  CHECK(r.noise_sd == Approx(2));  // factor is exactly 1
  CHECK(anon_count(ones, 0.25, 2, two).value == 6);
}

TEST_CASE("all-equal contributions are reported exactly at zero baseline") {
  auto r = anon_sum({7, 7, 7, 7}, 0, 2, two);
  CHECK(r.value == 28);
  CHECK(r.noise_sd == Approx(14));  // factor 7
}

TEST_CASE("negative-only contributions mirror the flattening") {
  auto r = anon_sum({-100, -20, -10, -8, -7, -5}, 0, 2, two);
  CHECK(r.value == Approx(-48));
  CHECK(r.noise_sd == Approx(16));
}

TEST_CASE("mixed signs run two passes and add their noise") {
  std::vector<double> both = {100, 20, 10, 8, 7, 5, -100, -20, -10, -8, -7, -5};
  auto r = anon_sum(both, 0, 2, two);
  CHECK(r.value == Approx(0));
  CHECK(r.noise_sd == Approx(32));
  CHECK(anon_sum(both, 1.0, 2, two).value == Approx(16));
}

TEST_CASE("a thin pass on either sign suppresses the bucket") {
  CHECK(anon_sum({5, 6, 7, 8, -1}, 0, 2, two).suppressed);
  CHECK(anon_sum({1, 2, 3}, 0, 2, two).suppressed);
  CHECK_FALSE(anon_sum({1, 2, 3, 4}, 0, 2, two).suppressed);
}

TEST_CASE("no contributing users suppresses rather than reporting a clean zero") {
  CHECK(anon_sum({}, 0, 2, two).suppressed);
  CHECK(anon_count({}, 0, 2, two).suppressed);
  CHECK(anon_avg({}, {}, 0, 0, 2, two).suppressed);
}

TEST_CASE("zero contributions join the positive pass, or the only pass") {
  // Descending {8,7,6,5,0,0}: groups {8,7} -> 5.5, sum 22.
  CHECK(anon_sum({0, 0, 5, 6, 7, 8}, 0, 2, two).value == Approx(22));
  CHECK(anon_sum({0, 0, -5, -6, -7, -8}, 0, 2, two).value == Approx(-22));
}

TEST_CASE("noiseless flattening never exceeds the true sum of positive values") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> size_dist(4, 12);
  std::exponential_distribution<double> value_dist(0.1);
  for (int iter = 0; iter < 200; ++iter) {
    int n = size_dist(rng);
    std::vector<double> values;
    for (int i = 0; i < n; ++i) values.push_back(value_dist(rng));
    auto r = anon_sum(values, 0, 1, two);
    REQUIRE_FALSE(r.suppressed);
    CHECK(r.value <= true_sum(values) + 1e-9);
    if (n >= 6) {
      auto r3 = anon_sum(values, 0, 1, three);
      CHECK(r3.value <= true_sum(values) + 1e-9);
    }
  }
}

TEST_CASE("noiseless flattening scales with the contributions") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> value_dist(0.5, 40);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> values;
    for (int i = 0; i < 8; ++i) values.push_back(value_dist(rng));
    std::vector<double> scaled = values;
    for (double& v : scaled) v *= 3.5;
    CHECK(anon_sum(scaled, 0, 1, two).value ==
          Approx(3.5 * anon_sum(values, 0, 1, two).value));
  }
}

TEST_CASE("contribution order does not matter") {
  std::vector<double> values = {100, 20, 10, 8, 7, 5, -9, -9, -4, -3};
  std::vector<double> shuffled = values;
  std::mt19937 rng(3);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(anon_sum(values, 0.7, 2, two).value == anon_sum(shuffled, 0.7, 2, two).value);
}

TEST_CASE("counts round and never go negative") {
  CHECK(anon_count({1, 1, 1, 1}, -10, 2, two).value == 0);
  CHECK(anon_count({1, 1, 1, 1, 1}, 0.3, 2, two).value == 5);
  CHECK(anon_count({1, 1, 1, 1, 1}, 0.7, 2, two).value == 6);
}

// ---------------------------------------------------------------------------
// avg and stddev
// ---------------------------------------------------------------------------

TEST_CASE("noiseless average of a constant column is the constant") {
  auto r = anon_avg({20, 30, 10, 40}, {2, 3, 1, 4}, 0, 0, 2, two);
  REQUIRE_FALSE(r.suppressed);
  CHECK(r.value == Approx(10));
}

TEST_CASE("average clamps a non-positive noisy denominator to one") {
  auto r = anon_avg({5, 5, 5, 5}, {1, 1, 1, 1}, 0, -10, 2, two);
  CHECK(r.value == Approx(20));
}

TEST_CASE("average noise combines both draws") {
  // sum: value 40, sd 20; count: value 4, sd 2.
  auto r = anon_avg({10, 10, 10, 10}, {1, 1, 1, 1}, 0, 0, 2, two);
  CHECK(r.value == Approx(10));
  CHECK(r.noise_sd == Approx(std::sqrt(50.0)));
}

TEST_CASE("stddev of a single-valued column is exactly zero") {
  auto r = anon_stddev({0, 0, 0, 0}, {2, 1, 3, 1}, 3.0, 0.5, 2, two);
  CHECK(r.value == 0);
  CHECK(r.noise_sd == 0);
}

TEST_CASE("stddev follows the flattened mean of squared deviations") {
  // Users hold values 1..20, one row each; squared deviations from 10.5 sum
  // to 665 and flatten to 629.
  std::vector<double> sq, counts;
  for (int i = 1; i <= 20; ++i) {
    sq.push_back((i - 10.5) * (i - 10.5));
    counts.push_back(1);
  }
  auto r = anon_stddev(sq, counts, 0, 0, 2, two);
  CHECK(r.value == Approx(std::sqrt(629.0 / 20)));
}

// ---------------------------------------------------------------------------
// min, max, median
// ---------------------------------------------------------------------------

TEST_CASE("max drops the top group and averages the next") {
  std::vector<double> ramp;
  for (int i = 1; i <= 20; ++i) ramp.push_back(i);
  auto r = anon_extreme(ramp, true, 0, 2, three);
  REQUIRE_FALSE(r.suppressed);
  CHECK(r.value == Approx(16));  // drop {20,19,18}, average {17,16,15}
  double sd = std::sqrt(2.0 / 3.0);
  CHECK(r.noise_sd == Approx(sd / 8 * 2));
  CHECK(anon_extreme(ramp, true, 8, 2, three).value == Approx(16 + sd));
}

TEST_CASE("min mirrors max") {
  std::vector<double> ramp;
  for (int i = 1; i <= 20; ++i) ramp.push_back(i);
  CHECK(anon_extreme(ramp, false, 0, 2, three).value == Approx(5));
}

TEST_CASE("an all-equal group reports the exact extreme") {
  auto r = anon_extreme({7, 7, 7, 7, 7, 7}, true, 99, 2, three);
  CHECK(r.value == 7);
  CHECK(r.noise_sd == 0);
}

TEST_CASE("extremes suppress with too few users") {
  CHECK(anon_extreme({1, 2, 3, 4, 5}, true, 0, 2, three).suppressed);
  CHECK_FALSE(anon_extreme({1, 2, 3, 4, 5, 6}, true, 0, 2, three).suppressed);
}

TEST_CASE("median strips both ends and averages around the middle") {
  std::vector<UidRow> rows;
  for (int i = 1; i <= 7; ++i) rows.push_back({i, static_cast<double>(i)});
  FixedThresholds one{1};
  auto r = anon_median(rows, 0, 2, one);
  REQUIRE_FALSE(r.suppressed);
  CHECK(r.value == Approx(4));  // strip {7} and {1}; label {3,4,5}
  double sd = std::sqrt(2.0 / 3.0);
  CHECK(anon_median(rows, 8, 2, one).value == Approx(4 + sd));
}

TEST_CASE("median labels every side row of a chosen user") {
  std::vector<UidRow> rows = {{0, 1}, {1, 2}, {1, 3}, {2, 4}, {3, 5},
                              {3, 6}, {4, 7}, {5, 0}, {6, 10}};
  FixedThresholds one{1};
  auto r = anon_median(rows, 0, 2, one);
  REQUIRE_FALSE(r.suppressed);
  // Strip removes users 6 (high) and 5 (low); median row is 4; user 3 above
  // contributes {5,6}, user 1 below contributes {3,2}.
  CHECK(r.value == Approx(4));
  CHECK(anon_median(rows, 8, 2, one).value == Approx(4 + std::sqrt(2.0)));
}

TEST_CASE("median is symmetric under negation") {
  std::vector<UidRow> rows;
  std::vector<double> values = {1, 3, 4, 7, 9, 11, 15};
  for (size_t i = 0; i < values.size(); ++i) rows.push_back({static_cast<int>(i), values[i]});
  std::vector<UidRow> negated = rows;
  for (UidRow& row : negated) row.value = -row.value;
  FixedThresholds one{1};
  CHECK(anon_median(negated, 0, 2, one).value == Approx(-anon_median(rows, 0, 2, one).value));
}

TEST_CASE("median suppresses when stripping exhausts the users") {
  std::vector<UidRow> rows = {{0, 1}, {0, 2}, {0, 3}};
  CHECK(anon_median(rows, 0, 2, FixedThresholds{1}).suppressed);
  std::vector<UidRow> three_users = {{0, 1}, {1, 2}, {2, 3}};
  CHECK(anon_median(three_users, 0, 2, FixedThresholds{1}).suppressed);
}

// ---------------------------------------------------------------------------
// Distinct-value assignment
// ---------------------------------------------------------------------------

namespace {

Value val(int64_t v) { return Value{v}; }

int credited(const std::vector<std::vector<Value>>& assigned) {
  int n = 0;
  for (const auto& list : assigned) n += list.empty() ? 0 : 1;
  return n;
}

/// Exhaustive best coverage for small instances: every value picks one
/// holder; count the most users coverable.
int brute_max_coverage(const std::vector<std::vector<int>>& holders) {
  int best = 0;
  auto rec = [&](auto&& self, size_t v, uint32_t covered) -> void {
    if (v == holders.size()) {
      best = std::max(best, std::popcount(covered));
      return;
    }
    for (int u : holders[v]) self(self, v + 1, covered | (1u << u));
  };
  rec(rec, 0, 0);
  return best;
}

}  // namespace

TEST_CASE("a duplicated value is credited to exactly one user") {
  auto assigned = assign_distinct({{val(5), val(5)}, {val(5)}});
  REQUIRE(assigned.size() == 2);
  CHECK(assigned[0].size() + assigned[1].size() == 1);
}

TEST_CASE("assignment spreads values over as many users as possible") {
  // User 0 holds {1,2,3}; users 1 and 2 hold one value each.
  auto assigned = assign_distinct({{val(1), val(2), val(3)}, {val(1)}, {val(2)}});
  CHECK(credited(assigned) == 3);
  for (const auto& list : assigned) CHECK(list.size() == 1);

  // A chain where a one-pass greedy can strand a user: full coverage needs
  // value 1 -> user 1, value 3 -> user 0.
  auto chain = assign_distinct({{val(1), val(3)}, {val(1)}, {val(2), val(3)}});
  CHECK(credited(chain) == 3);
}

TEST_CASE("assignment coverage matches the exhaustive optimum on small instances") {
  std::mt19937 rng(23);
  for (int iter = 0; iter < 60; ++iter) {
    int users = 3 + static_cast<int>(rng() % 2);
    int values = 2 + static_cast<int>(rng() % 5);
    std::vector<std::vector<int>> holders(values);
    std::vector<std::vector<Value>> by_user(users);
    for (int v = 0; v < values; ++v) {
      for (int u = 0; u < users; ++u) {
        if (rng() % 2) holders[v].push_back(u);
      }
      if (holders[v].empty()) holders[v].push_back(static_cast<int>(rng() % users));
      for (int u : holders[v]) by_user[u].push_back(val(v));
    }
    CHECK(credited(assign_distinct(by_user)) == brute_max_coverage(holders));
  }
}

TEST_CASE("leftover values go to the least-loaded holder") {
  auto assigned = assign_distinct({{val(1), val(2), val(3), val(4), val(5)}});
  REQUIRE(assigned.size() == 1);
  CHECK(assigned[0].size() == 5);
}

TEST_CASE("assignment is deterministic") {
  std::vector<std::vector<Value>> input = {{val(1), val(3)}, {val(1)}, {val(2), val(3)}};
  auto a = assign_distinct(input);
  auto b = assign_distinct(input);
  REQUIRE(a.size() == b.size());
  for (size_t u = 0; u < a.size(); ++u) {
    REQUIRE(a[u].size() == b[u].size());
    for (size_t i = 0; i < a[u].size(); ++i) CHECK(equals(a[u][i], b[u][i]));
  }
}

// ---------------------------------------------------------------------------
// Noise reporting
// ---------------------------------------------------------------------------

TEST_CASE("reported noise keeps two significant digits") {
  CHECK(noise_report(0) == 0);
  CHECK(noise_report(123.4) == Approx(120));
  CHECK(noise_report(0.0123) == Approx(0.012));
  CHECK(noise_report(95) == Approx(95));
  CHECK(noise_report(10.4999) == Approx(10));
}

TEST_CASE("reported noise stays within five percent of the true value") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> exp_dist(-5, 5);
  for (int i = 0; i < 10000; ++i) {
    double sd = std::pow(10.0, exp_dist(rng));
    double reported = noise_report(sd);
    CHECK(std::abs(reported - sd) / sd <= 0.05 + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Threshold sources
// ---------------------------------------------------------------------------

TEST_CASE("seeded thresholds wrap the noisy threshold draw") {
  const uint64_t seed = 0x0123456789abcdefULL;
  CHECK(SeededThresholds{seed}.threshold("t1") == noisy_threshold(seed, "t1"));
  CHECK(SeededThresholds{seed}.threshold("t1") == 5);
  CHECK(FixedThresholds{3}.threshold("anything") == 3);
}

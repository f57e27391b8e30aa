#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "anonql/executor.hpp"
#include "anonql/table.hpp"

namespace anonql {

/// Outcome of one attack scenario. confidence (C) is the attacker's measured
/// hit rate, prior (S) the statistical guessing probability; kappa_value is
/// the confidence improvement (C - S) / (1 - S) and alpha_value the
/// learned-vs-prior-knowledge ratio L / (P + 1).
struct AttackReport {
  std::string attack;
  int trials = 0;
  double confidence = 0;
  double prior = 0;
  double kappa_value = 0;
  double alpha_value = 0;
  double variance = 0;        // repeated-query attacks: spread of the answers
  double residual_sigma = 0;  // averaging attacks: spread of the residual error
  std::vector<double> measurements;

  /// Deterministic JSON object (keys in fixed order) for the CLI.
  std::string to_json() const;
};

/// Confidence improvement (C - S) / (1 - S). Negative when the attack did
/// worse than guessing. Rejects prior outside [0, 1).
double kappa(double confidence, double prior);

/// Prior-knowledge ratio L / (P + 1) for L learned cells against P known
/// cells. Rejects negative arguments.
double alpha(double learned, double prior_cells);

/// One-sided two-proportion z-test p-value for "arm 1 hits more often than
/// arm 0", given hit counts out of `trials` each.
double proportion_p_value(int hits1, int hits0, int trials);

/// Synthetic personnel table "people" (uid column "uid"): `levels` salary
/// grades of `men_per_level` male CS staff each, `filler` staff outside CS,
/// and optionally a single female CS employee (the victim) at salary grade
/// `victim_level`. The generator seed shuffles ids and ages so distinct
/// seeds give distinct user sets per bucket.
Table make_attack_fixture(uint64_t seed, int levels, int men_per_level, int filler,
                          int victim_level, bool include_victim);

/// Salary (in currency units) of grade `level` in the synthetic table.
double fixture_salary(int level);

/// Issues the identical query `trials` times against the engine and reports
/// the variance of the first numeric answer cell. Sticky noise makes the
/// variance exactly zero: repetition teaches the attacker nothing.
AttackReport run_averaging(Engine& engine, const std::string& query, int trials);

/// Split averaging: for the first `pairs` distinct values v of split_column,
/// issues the pair  base AND col = v  /  base AND col <> v, and averages the
/// pair sums into one estimate of the base-condition count. Repeats under
/// `salts` derived salts and reports the sample sigma of the residual
/// (estimate - true count). The static layer of the base condition repeats
/// in every query, so the residual keeps its noise: sigma ~ 2 noise units.
/// An empty base condition leaves no repeated layer and the residual decays
/// with the number of pairs.
AttackReport run_split_averaging(Engine& engine, const std::string& base_condition,
                                 const std::string& split_column, int pairs, int salts);

/// Difference attack settings; defaults match the harness fixture.
struct DifferenceSettings {
  int levels = 20;          // salary histogram buckets (prior S = 1 / levels)
  int men_per_level = 12;   // bucket population, comfortably above suppression
  int filler = 40;          // staff outside the targeted department
  int trials = 500;
  uint64_t fixture_seed = 1;
  bool include_victim = true;
};

/// Difference attack: the victim is the only woman in CS. Per trial (fresh
/// fixture and salt) the harness issues the excluding/plain histogram pair
///   select salary, count(*) ... where dept='CS' and gender='M' group by salary
///   select salary, count(*) ... where dept='CS' group by salary
/// takes per-bucket count differences, and guesses the victim's salary as
/// the bucket with the largest difference (ties broken uniformly at random):
/// only the victim's bucket gains a member between the two queries.
/// Reports C, S and kappa; measurements hold per-trial hit indicators.
AttackReport run_difference(const EngineConfig& config, const DifferenceSettings& settings);

}  // namespace anonql

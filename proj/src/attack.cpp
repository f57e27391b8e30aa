#include "anonql/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "anonql/error.hpp"
#include "anonql/parser.hpp"
#include "anonql/validate.hpp"

namespace anonql {
namespace {

double first_numeric(const AnswerTable& answer) {
  if (answer.rows.empty()) return 0;
  for (const Value& v : answer.rows.front()) {
    if (auto r = as_real(v)) return *r;
  }
  return 0;
}

double sample_sigma(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double population_variance(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size());
}

std::string json_number(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

std::string AttackReport::to_json() const {
  std::ostringstream out;
  out << "{\n";
  out << "  \"attack\": \"" << attack << "\",\n";
  out << "  \"trials\": " << trials << ",\n";
  out << "  \"confidence\": " << json_number(confidence) << ",\n";
  out << "  \"prior\": " << json_number(prior) << ",\n";
  out << "  \"kappa\": " << json_number(kappa_value) << ",\n";
  out << "  \"alpha\": " << json_number(alpha_value) << ",\n";
  out << "  \"variance\": " << json_number(variance) << ",\n";
  out << "  \"residual_sigma\": " << json_number(residual_sigma) << ",\n";
  out << "  \"measurements\": [";
  for (size_t i = 0; i < measurements.size(); ++i) {
    if (i > 0) out << ", ";
    out << json_number(measurements[i]);
  }
  out << "]\n}";
  return out.str();
}

double kappa(double confidence, double prior) {
  if (prior < 0 || prior >= 1) {
    throw Error(ErrorCode::ConfigInvalid, "statistical prior must lie in [0, 1)");
  }
  return (confidence - prior) / (1 - prior);
}

double alpha(double learned, double prior_cells) {
  if (learned < 0 || prior_cells < 0) {
    throw Error(ErrorCode::ConfigInvalid, "cell counts must be non-negative");
  }
  return learned / (prior_cells + 1);
}

double proportion_p_value(int hits1, int hits0, int trials) {
  if (trials <= 0) return 1;
  double n = trials;
  double p1 = hits1 / n;
  double p0 = hits0 / n;
  double pooled = (hits1 + hits0) / (2 * n);
  double spread = std::sqrt(pooled * (1 - pooled) * 2 / n);
  if (spread == 0) return p1 > p0 ? 0 : 1;
  double z = (p1 - p0) / spread;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double fixture_salary(int level) { return 50000.0 + 5000.0 * level; }

Table make_attack_fixture(uint64_t seed, int levels, int men_per_level, int filler,
                          int victim_level, bool include_victim) {
  std::mt19937_64 rng(seed);
  int population = levels * men_per_level + filler + 1;
  std::vector<int> ids(static_cast<size_t>(population) * 2);
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::uniform_int_distribution<int> age(21, 64);
  std::uniform_int_distribution<int> any_level(0, levels - 1);
  std::uniform_int_distribution<int> coin(0, 1);

  Table t;
  t.name = "people";
  t.schema = parse_schema(
      "uid:text:uid\n"
      "dept:text\n"
      "gender:text\n"
      "age:integer\n"
      "salary:real\n");
  size_t next_id = 0;
  auto uid = [&] {
    char buf[12];
    std::snprintf(buf, sizeof buf, "p%05d", ids[next_id++]);
    return std::string(buf);
  };
  auto add = [&](std::string dept, std::string gender, int level) {
    Row row;
    row.push_back(Value{uid()});
    row.push_back(Value{std::move(dept)});
    row.push_back(Value{std::move(gender)});
    row.push_back(Value{static_cast<int64_t>(age(rng))});
    row.push_back(Value{fixture_salary(level)});
    t.rows.push_back(std::move(row));
  };
  for (int level = 0; level < levels; ++level) {
    for (int i = 0; i < men_per_level; ++i) add("CS", "M", level);
  }
  if (include_victim) add("CS", "F", victim_level);
  for (int i = 0; i < filler; ++i) add("EE", coin(rng) ? "M" : "F", any_level(rng));
  return t;
}

AttackReport run_averaging(Engine& engine, const std::string& query, int trials) {
  AnalyzedQuery q = analyze(parse_query(query), engine.tables());
  AttackReport report;
  report.attack = "averaging";
  report.trials = trials;
  report.alpha_value = alpha(1, 0);  // one target cell, nothing known in advance
  report.measurements.reserve(static_cast<size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    report.measurements.push_back(first_numeric(run_query(q, engine.config())));
  }
  report.variance = population_variance(report.measurements);
  report.kappa_value = 0;  // identical answers: nothing beyond the first one
  return report;
}

AttackReport run_split_averaging(Engine& engine, const std::string& base_condition,
                                 const std::string& split_column, int pairs, int salts) {
  const EngineConfig& base_cfg = engine.config();
  const std::map<std::string, Table>& tables = engine.tables();
  const std::string table_name =
      !base_cfg.default_table.empty() ? base_cfg.default_table : tables.begin()->first;
  const Table& table = tables.at(table_name);

  auto column = table.schema.find(split_column);
  if (!column) {
    throw Error(ErrorCode::UnknownColumn, "unknown split column " + split_column);
  }
  std::vector<std::string> values;
  for (const Row& row : table.rows) {
    const Value& v = row[*column];
    if (is_null(v)) continue;
    std::string c = canonical(v);
    if (std::find(values.begin(), values.end(), c) == values.end()) values.push_back(std::move(c));
  }
  std::sort(values.begin(), values.end());
  if (static_cast<int>(values.size()) < pairs) {
    throw Error(ErrorCode::ConfigInvalid, "split column has too few distinct values");
  }
  values.resize(static_cast<size_t>(pairs));

  const std::string prefix = "select count(*) from " + table_name + " where " +
                             (base_condition.empty() ? "" : base_condition + " and ");
  std::vector<AnalyzedQuery> queries;  // eq / neq, pair by pair
  queries.reserve(static_cast<size_t>(pairs) * 2);
  for (const std::string& v : values) {
    queries.push_back(analyze(parse_query(prefix + split_column + " = " + v), tables));
    queries.push_back(analyze(parse_query(prefix + split_column + " <> " + v), tables));
  }

  // True count of the base condition: the engine itself with all noise layers
  // off, relying on the attack's one-row-per-user fixture assumption.
  EngineConfig quiet = base_cfg;
  quiet.toggles.static_layers = false;
  quiet.toggles.dynamic_layers = false;
  std::string truth_sql = "select count(*) from " + table_name;
  if (!base_condition.empty()) truth_sql += " where " + base_condition;
  double truth = first_numeric(run_sql(truth_sql, tables, quiet));

  AttackReport report;
  report.attack = "split-averaging";
  report.trials = salts;
  report.alpha_value = alpha(1, 1);  // learns the exact count, knows the department
  report.measurements.reserve(static_cast<size_t>(salts));
  for (int s = 0; s < salts; ++s) {
    EngineConfig cfg = base_cfg;
    cfg.salt = base_cfg.salt + "#" + std::to_string(s);
    double estimate = 0;
    for (size_t i = 0; i < queries.size(); i += 2) {
      estimate += first_numeric(run_query(queries[i], cfg)) +
                  first_numeric(run_query(queries[i + 1], cfg));
    }
    estimate /= static_cast<double>(pairs);
    report.measurements.push_back(estimate - truth);
  }
  report.residual_sigma = sample_sigma(report.measurements);
  return report;
}

AttackReport run_difference(const EngineConfig& config, const DifferenceSettings& settings) {
  AttackReport report;
  report.attack = "difference";
  report.trials = settings.trials;
  report.prior = 1.0 / settings.levels;
  report.alpha_value = alpha(1, 2);  // learns the salary, knows dept and gender

  const std::string excluding_sql =
      "select salary, count(*) from people where dept = 'CS' and gender = 'M' group by salary";
  const std::string plain_sql =
      "select salary, count(*) from people where dept = 'CS' group by salary";

  int hits = 0;
  for (int trial = 0; trial < settings.trials; ++trial) {
    int victim_level = trial % settings.levels;
    std::map<std::string, Table> tables;
    tables.emplace("people",
                   make_attack_fixture(settings.fixture_seed + static_cast<uint64_t>(trial),
                                       settings.levels, settings.men_per_level, settings.filler,
                                       victim_level, settings.include_victim));
    EngineConfig cfg = config;
    cfg.salt = config.salt + "#" + std::to_string(trial);

    auto histogram = [&](const std::string& sql) {
      std::vector<double> counts(static_cast<size_t>(settings.levels), 0);
      AnswerTable a = run_sql(sql, tables, cfg);
      for (const Row& row : a.rows) {
        double salary = *as_real(row[0]);
        int level = static_cast<int>(std::lround((salary - fixture_salary(0)) / 5000.0));
        if (level >= 0 && level < settings.levels) {
          counts[static_cast<size_t>(level)] = *as_real(row[1]);
        }
      }
      return counts;
    };
    std::vector<double> excluding = histogram(excluding_sql);
    std::vector<double> plain = histogram(plain_sql);

    std::vector<double> diffs(static_cast<size_t>(settings.levels));
    for (int i = 0; i < settings.levels; ++i) {
      diffs[static_cast<size_t>(i)] = plain[static_cast<size_t>(i)] - excluding[static_cast<size_t>(i)];
    }

    // The victim only ever adds to the plain query, so her bucket pair shows
    // the most extreme (largest) difference; ties are a blind guess.
    double best = *std::max_element(diffs.begin(), diffs.end());
    std::vector<int> candidates;
    for (int i = 0; i < settings.levels; ++i) {
      if (diffs[static_cast<size_t>(i)] == best) candidates.push_back(i);
    }
    std::mt19937_64 tie_rng(settings.fixture_seed * 7919 + static_cast<uint64_t>(trial));
    int guess = candidates[std::uniform_int_distribution<size_t>(0, candidates.size() - 1)(tie_rng)];
    bool correct = guess == victim_level;
    hits += correct ? 1 : 0;
    report.measurements.push_back(correct ? 1.0 : 0.0);
  }

  report.confidence = static_cast<double>(hits) / settings.trials;
  report.kappa_value = kappa(report.confidence, report.prior);
  return report;
}

}  // namespace anonql

#pragma once

#include <map>
#include <string>
#include <vector>

#include "anonql/table.hpp"
#include "anonql/validate.hpp"

namespace anonql {

/// One finished answer: output column names plus materialized value rows.
/// Suppressed buckets are simply absent.
struct AnswerTable {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

/// Executes a validated query end to end: row filtering, the per-user
/// aggregation stage when present, bucket grouping, suppression, anonymizing
/// aggregation and presentation. Deterministic in (query, table contents,
/// config salt).
AnswerTable run_query(const AnalyzedQuery& q, const EngineConfig& config);

/// Parse + validate + execute.
AnswerTable run_sql(const std::string& sql, const std::map<std::string, Table>& tables,
                    const EngineConfig& config);

/// Human-readable anonymization plan: condition classes, seed component
/// recipes, float requirements and layer counts. Contains neither the salt
/// nor any resolved seed.
std::string explain_plan(const AnalyzedQuery& q);

std::string explain_sql(const std::string& sql, const std::map<std::string, Table>& tables);

/// Session facade owning the loaded tables and the runtime configuration.
class Engine {
 public:
  Engine() = default;
  Engine(std::map<std::string, Table> tables, EngineConfig config)
      : tables_(std::move(tables)), config_(std::move(config)) {}

  void add_table(Table table);
  const std::map<std::string, Table>& tables() const { return tables_; }
  EngineConfig& config() { return config_; }
  const EngineConfig& config() const { return config_; }

  AnswerTable run(const std::string& sql) const { return run_sql(sql, tables_, config_); }
  std::string explain(const std::string& sql) const { return explain_sql(sql, tables_); }

 private:
  std::map<std::string, Table> tables_;
  EngineConfig config_;
};

}  // namespace anonql

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anonql/value.hpp"

namespace anonql {

struct Column {
  std::string name;
  ValueType type = ValueType::Text;
};

/// Column layout of a table; exactly one column is the user id.
struct Schema {
  std::vector<Column> columns;
  size_t uid_index = 0;

  std::optional<size_t> find(std::string_view name) const;
  const Column& uid_column() const { return columns[uid_index]; }
};

using Row = std::vector<Value>;

/// Immutable in-memory columnar-ish table (row storage, column-typed).
struct Table {
  std::string name;
  Schema schema;
  std::vector<Row> rows;

  size_t row_count() const { return rows.size(); }
  /// Distinct uid values in first-seen order.
  std::vector<Value> distinct_uids() const;
  /// Rows passing a predicate; the predicate sees the full row.
  std::vector<const Row*> scan(const std::function<bool(const Row&)>& predicate) const;
};

/// Parses the schema sidecar: one "name:type" per line, the uid column marked
/// by a third ":uid" field; '#' starts a comment.
Schema parse_schema(std::string_view text);

/// RFC 4180 CSV with a header row naming every schema column in order.
/// Unquoted empty cells load as NULL (rejected for the uid column); quoted
/// empty cells are empty text.
Table load_csv(std::string_view table_name, std::string_view csv_text, const Schema& schema);

Table load_csv_file(std::string_view table_name, const std::string& csv_path,
                    const std::string& schema_path);

/// Writer used for answers and the load round-trip; quotes only when needed.
std::string write_csv(const std::vector<std::string>& header,
                      const std::vector<Row>& rows);
std::string write_csv(const Table& table);

/// Runtime settings shared by every query. The salt is secret: nothing in the
/// engine may print or log it.
struct LayerToggles {
  bool static_layers = true;
  bool dynamic_layers = true;
};

struct EngineConfig {
  std::string salt;
  std::string uid_column;     // optional cross-check against schema sidecars
  std::string default_table;  // table used by the CLI when FROM is ambiguous
  /// Reachable only from the attack harness and tests; no CLI flag or config
  /// key maps to it.
  LayerToggles toggles;
};

std::string read_file(const std::string& path);

}  // namespace anonql

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anonql/ast.hpp"
#include "anonql/condition.hpp"
#include "anonql/table.hpp"

namespace anonql {

enum class ConditionKind {
  PosEq,      // equality that keeps matching rows
  NegEq,      // <> (also each element of an expanded NOT IN)
  PosRange,   // snapped half-open range [lower, upper)
  NegRange,   // NOT BETWEEN over a snapped range
  In,         // IN with two or more listed elements
  Like,       // LIKE / ILIKE
  NotLike,    // NOT LIKE / NOT ILIKE
  IsNull,
  IsNotNull,
};

/// Which execution stage evaluates a condition.
///  RawRows: against base-table rows (plain WHERE, subquery WHERE).
///  UidRows: against the per-user aggregation subquery's output rows
///           (subquery HAVING and outer WHERE over those outputs).
///  Bucket:  against each outer group's true aggregates (outer HAVING).
enum class CondStage { RawRows, UidRows, Bucket };

enum class ClauseOrigin { Where, Having };

/// Where the seed value components of a layer come from.
///  Sql:         constants written in the query.
///  FloatColumn: min/max/distinct-count of the backing raw column over the
///               bucket's qualifying rows.
///  FloatExpr:   the condition expression's own output values over the bucket
///               (IN under a character-removing wrapper).
enum class SeedSource { Sql, FloatColumn, FloatExpr };

struct StringFnInfo {
  std::string name;                    // left, right, btrim, ltrim, rtrim, substring
  std::vector<std::string> constants;  // canonical argument constants
};

struct AnalyzedCondition {
  ConditionKind kind = ConditionKind::PosEq;
  CondStage stage = CondStage::RawRows;
  ClauseOrigin origin = ClauseOrigin::Where;
  ExprPtr lhs;                 // bound against the stage's relation
  std::vector<Value> values;   // Eq: 1; ranges: lower, upper; In: elements as written
  LikePattern pattern;         // Like kinds only
  bool fold_case = false;      // ILIKE
  bool clear = false;
  SeedSource seed_source = SeedSource::Sql;
  std::string seed_column;     // column identity used in layer components
  int float_column = -1;       // base-table column backing FloatColumn seeding
  std::optional<StringFnInfo> string_fn;  // character-removing wrapper
  bool case_fn = false;        // wrapped in upper/lower
  std::string display;         // canonical source text for diagnostics/explain
  unsigned line = 0;
  unsigned col = 0;

  bool negative() const {
    return kind == ConditionKind::NegEq || kind == ConditionKind::NegRange ||
           kind == ConditionKind::NotLike || kind == ConditionKind::IsNotNull;
  }
};

/// Layer recipe of one selected/grouped expression.
///  FloatColumn:  seed from the backing column's floated values.
///  ClearWrapped: seed [v, v, 1] from the bucket value, plus the wrapper's
///                extra dynamic layer.
///  Derived:      positive equality on a derived column named "fn(col)".
///  CellFn:       the bucket value names a snapped cell (trunc/round/year/
///                date_trunc); seeded as a range over the backing column.
///  Concat:       one constituent spec per non-literal argument.
///  Skip:         constant expression, no layer.
enum class ImplicitMode { FloatColumn, ClearWrapped, Derived, CellFn, Concat, Skip };

struct ImplicitSpec {
  ImplicitMode mode = ImplicitMode::FloatColumn;
  std::string seed_column;
  int float_column = -1;
  std::optional<StringFnInfo> string_fn;  // ClearWrapped
  std::string cell_fn;                    // CellFn: trunc | round | year | date_trunc
  int precision = 0;                      // trunc/round second argument
  DtUnit cell_unit = DtUnit::Day;         // date_trunc unit
  std::vector<ImplicitSpec> constituents; // Concat
  std::string display;
};

/// One bucket key: grouped and/or selected expression plus its layer recipe.
struct AnalyzedGroupKey {
  ExprPtr expr;  // bound; evaluated per relation row to form the bucket key
  ImplicitSpec implicit;
  std::string display;
};

struct AggregateCall {
  std::string fn;        // count, sum, avg, min, max, median, stddev
  bool noise = false;    // *_noise twin reporting the paired noise magnitude
  bool distinct = false;
  bool star = false;     // count(*)
  ExprPtr arg;           // bound; null when star
  std::string key;       // canonical form of the paired aggregate, e.g. "count(*)"
  ValueType result_type = ValueType::Real;
};

struct AnalyzedItem {
  ExprPtr expr;      // bound; Aggregate nodes carry bound_index into `aggs`
  std::string name;  // output column name
  bool aggregate = false;
  int key_index = -1;  // non-aggregate items: which bucket key carries the value
};

/// One output column of the per-user aggregation subquery.
struct UidOutput {
  std::string name;      // exported name; empty for hidden HAVING-only outputs
  bool is_uid = false;
  AggregateCall agg;     // true (pre-noise) per-user aggregate when !is_uid
  int base_column = -1;  // backing base column: the uid column for uid/count(*),
                         // the single referenced column otherwise, -2 when the
                         // argument mixes several columns
  bool via_expression = false;  // argument wraps the column in math/functions
  std::string display;
};

struct OrderSpec {
  int item = 0;
  bool ascending = true;
};

struct AnalyzedQuery {
  const Table* table = nullptr;
  std::string table_name;
  bool uid_stage = false;               // per-user aggregation subquery present
  std::vector<UidOutput> uid_outputs;   // relation columns when uid_stage
  std::vector<AnalyzedCondition> conditions;
  std::vector<AggregateCall> having_aggs;  // true aggregates of Bucket-stage conditions
  std::vector<AnalyzedGroupKey> keys;
  std::vector<AnalyzedItem> items;
  std::vector<AggregateCall> aggs;      // anonymizing aggregates of the select list
  bool row_listing = false;             // no aggregates: replicate rows by noisy count
  bool distinct = false;
  std::vector<OrderSpec> order;
  std::optional<int64_t> limit;
  std::optional<int64_t> offset;
};

/// Full semantic analysis: binds names, enforces every query restriction,
/// classifies conditions and derives their seeding recipes. Throws Error with
/// a stable code on any violation.
AnalyzedQuery analyze(const QueryAst& ast, const std::map<std::string, Table>& tables);

}  // namespace anonql

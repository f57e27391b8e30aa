#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "anonql/value.hpp"

namespace anonql {

enum class ExprKind { Literal, ColumnRef, Binary, Unary, Function, Aggregate, Cast, Star };

enum class BinOp { Add, Sub, Mul, Div, Mod, Pow };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

/// One expression node. A single struct covers every kind; unused fields stay
/// empty. Function and aggregate names are stored lower-cased and with alias
/// spellings (lcase/ucase) already canonicalized.
struct Expr {
  ExprKind kind = ExprKind::Literal;
  Value literal;
  std::string table;   // optional qualifier of a column ref
  std::string column;  // column ref name
  BinOp op = BinOp::Add;
  std::vector<ExprPtr> args;
  std::string fn;        // function or aggregate name
  bool distinct = false;  // aggregate DISTINCT
  ValueType cast_type = ValueType::Text;
  unsigned line = 0;
  unsigned col = 0;
  /// Set by analysis: relation column index for ColumnRef nodes, aggregate
  /// slot for Aggregate nodes. -1 until bound.
  int bound_index = -1;

  ExprPtr clone() const;
};

ExprPtr make_literal(Value v, unsigned line = 0, unsigned col = 0);
ExprPtr make_column(std::string name, unsigned line = 0, unsigned col = 0);

enum class CompOp {
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Between,
  NotBetween,
  In,
  NotIn,
  Like,
  NotLike,
  ILike,
  NotILike,
  IsNull,
  IsNotNull,
};

struct ConditionAst {
  ExprPtr lhs;
  CompOp op = CompOp::Eq;
  std::vector<ExprPtr> rhs;  // 1 for comparisons/LIKE, 2 for BETWEEN, n for IN
  std::optional<char> escape;  // LIKE ... ESCAPE 'c'
  unsigned line = 0;
  unsigned col = 0;

  ConditionAst clone() const;
};

struct SelectItem {
  ExprPtr expr;
  std::string alias;
  bool star = false;
};

struct GroupKey {
  ExprPtr expr;       // null when position is used
  int position = -1;  // 1-based select-list position
};

struct OrderKey {
  ExprPtr expr;
  int position = -1;
  bool ascending = true;
};

struct QueryAst {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::string from_table;              // set when FROM names a table
  std::unique_ptr<QueryAst> subquery;  // set when FROM is a subselect
  std::string from_alias;
  std::vector<ConditionAst> where;
  std::vector<GroupKey> group_by;
  std::vector<ConditionAst> having;
  std::vector<OrderKey> order_by;
  std::optional<int64_t> limit;
  std::optional<int64_t> offset;
};

/// Canonical SQL text; parse(print(q)) == print-identical AST.
std::string to_sql(const Expr& expr);
std::string to_sql(const ConditionAst& cond);
std::string to_sql(const QueryAst& query);

bool is_aggregate_name(std::string_view name);
bool is_noise_aggregate_name(std::string_view name);  // count_noise etc.
bool is_known_function(std::string_view name);

}  // namespace anonql

#include "anonql/ast.hpp"

#include <array>

namespace anonql {

ExprPtr Expr::clone() const {
  auto out = std::make_unique<Expr>();
  out->kind = kind;
  out->literal = literal;
  out->table = table;
  out->column = column;
  out->op = op;
  for (const ExprPtr& a : args) out->args.push_back(a->clone());
  out->fn = fn;
  out->distinct = distinct;
  out->cast_type = cast_type;
  out->line = line;
  out->col = col;
  out->bound_index = bound_index;
  return out;
}

ConditionAst ConditionAst::clone() const {
  ConditionAst out;
  out.lhs = lhs ? lhs->clone() : nullptr;
  out.op = op;
  for (const ExprPtr& r : rhs) out.rhs.push_back(r->clone());
  out.escape = escape;
  out.line = line;
  out.col = col;
  return out;
}

ExprPtr make_literal(Value v, unsigned line, unsigned col) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Literal;
  e->literal = std::move(v);
  e->line = line;
  e->col = col;
  return e;
}

ExprPtr make_column(std::string name, unsigned line, unsigned col) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::ColumnRef;
  e->column = std::move(name);
  e->line = line;
  e->col = col;
  return e;
}

static const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Pow: return "^";
  }
  return "?";
}

static std::string quote_text(const std::string& text) {
  std::string out = "'";
  for (char ch : text) {
    if (ch == '\'') out.push_back('\'');
    out.push_back(ch);
  }
  out.push_back('\'');
  return out;
}

static std::string literal_sql(const Value& v) {
  switch (type_of(v)) {
    case ValueType::Null: return "null";
    case ValueType::Text: return quote_text(std::get<std::string>(v));
    case ValueType::DateTime: return quote_text(display(v));
    default: return canonical(v);
  }
}

std::string to_sql(const Expr& expr) {
  switch (expr.kind) {
    case ExprKind::Literal: return literal_sql(expr.literal);
    case ExprKind::ColumnRef:
      return expr.table.empty() ? expr.column : expr.table + "." + expr.column;
    case ExprKind::Star: return "*";
    case ExprKind::Binary:
      return "(" + to_sql(*expr.args[0]) + " " + binop_text(expr.op) + " " +
             to_sql(*expr.args[1]) + ")";
    case ExprKind::Unary: return "(- " + to_sql(*expr.args[0]) + ")";
    case ExprKind::Cast:
      return "cast(" + to_sql(*expr.args[0]) + ", " + std::string(type_name(expr.cast_type)) + ")";
    case ExprKind::Function:
    case ExprKind::Aggregate: {
      std::string out = expr.fn + "(";
      if (expr.distinct) out += "distinct ";
      for (size_t i = 0; i < expr.args.size(); i++) {
        if (i) out += ", ";
        out += to_sql(*expr.args[i]);
      }
      out += ")";
      return out;
    }
  }
  return {};
}

std::string to_sql(const ConditionAst& cond) {
  std::string lhs = to_sql(*cond.lhs);
  switch (cond.op) {
    case CompOp::Eq: return lhs + " = " + to_sql(*cond.rhs[0]);
    case CompOp::Ne: return lhs + " <> " + to_sql(*cond.rhs[0]);
    case CompOp::Lt: return lhs + " < " + to_sql(*cond.rhs[0]);
    case CompOp::Le: return lhs + " <= " + to_sql(*cond.rhs[0]);
    case CompOp::Gt: return lhs + " > " + to_sql(*cond.rhs[0]);
    case CompOp::Ge: return lhs + " >= " + to_sql(*cond.rhs[0]);
    case CompOp::Between:
      return lhs + " between " + to_sql(*cond.rhs[0]) + " and " + to_sql(*cond.rhs[1]);
    case CompOp::NotBetween:
      return lhs + " not between " + to_sql(*cond.rhs[0]) + " and " + to_sql(*cond.rhs[1]);
    case CompOp::In:
    case CompOp::NotIn: {
      std::string out = lhs + (cond.op == CompOp::In ? " in (" : " not in (");
      for (size_t i = 0; i < cond.rhs.size(); i++) {
        if (i) out += ", ";
        out += to_sql(*cond.rhs[i]);
      }
      return out + ")";
    }
    case CompOp::Like:
    case CompOp::NotLike:
    case CompOp::ILike:
    case CompOp::NotILike: {
      const char* op = cond.op == CompOp::Like      ? " like "
                       : cond.op == CompOp::NotLike ? " not like "
                       : cond.op == CompOp::ILike   ? " ilike "
                                                    : " not ilike ";
      std::string out = lhs + op + to_sql(*cond.rhs[0]);
      if (cond.escape) out += std::string(" escape ") + quote_text(std::string(1, *cond.escape));
      return out;
    }
    case CompOp::IsNull: return lhs + " is null";
    case CompOp::IsNotNull: return lhs + " is not null";
  }
  return {};
}

std::string to_sql(const QueryAst& query) {
  std::string out = "select ";
  if (query.distinct) out += "distinct ";
  for (size_t i = 0; i < query.items.size(); i++) {
    if (i) out += ", ";
    if (query.items[i].star) {
      out += "*";
    } else {
      out += to_sql(*query.items[i].expr);
      if (!query.items[i].alias.empty()) out += " as " + query.items[i].alias;
    }
  }
  out += " from ";
  if (query.subquery) {
    out += "(" + to_sql(*query.subquery) + ")";
    if (!query.from_alias.empty()) out += " " + query.from_alias;
  } else {
    out += query.from_table;
  }
  auto join_conditions = [](const std::vector<ConditionAst>& conds) {
    std::string s;
    for (size_t i = 0; i < conds.size(); i++) {
      if (i) s += " and ";
      s += to_sql(conds[i]);
    }
    return s;
  };
  if (!query.where.empty()) out += " where " + join_conditions(query.where);
  if (!query.group_by.empty()) {
    out += " group by ";
    for (size_t i = 0; i < query.group_by.size(); i++) {
      if (i) out += ", ";
      if (query.group_by[i].position > 0)
        out += std::to_string(query.group_by[i].position);
      else
        out += to_sql(*query.group_by[i].expr);
    }
  }
  if (!query.having.empty()) out += " having " + join_conditions(query.having);
  if (!query.order_by.empty()) {
    out += " order by ";
    for (size_t i = 0; i < query.order_by.size(); i++) {
      if (i) out += ", ";
      if (query.order_by[i].position > 0)
        out += std::to_string(query.order_by[i].position);
      else
        out += to_sql(*query.order_by[i].expr);
      if (!query.order_by[i].ascending) out += " desc";
    }
  }
  if (query.limit) out += " limit " + std::to_string(*query.limit);
  if (query.offset) out += " offset " + std::to_string(*query.offset);
  return out;
}

bool is_aggregate_name(std::string_view name) {
  static const std::array<std::string_view, 7> names = {"count", "sum",    "avg",   "stddev",
                                                        "min",   "max", "median"};
  for (auto n : names)
    if (n == name) return true;
  return is_noise_aggregate_name(name);
}

bool is_noise_aggregate_name(std::string_view name) {
  return name == "count_noise" || name == "sum_noise" || name == "avg_noise" ||
         name == "stddev_noise";
}

bool is_known_function(std::string_view name) {
  static const std::array<std::string_view, 31> names = {
      "btrim",  "concat",  "hex",    "left",    "length", "lower",   "ltrim",   "right",
      "rtrim",  "substring", "trim", "upper",   "year",   "quarter", "month",   "day",
      "hour",   "minute",  "second", "weekday", "extract", "date_trunc", "abs", "ceil",
      "div",    "floor",   "mod",    "pow",     "round",  "sqrt",    "trunc"};
  for (auto n : names)
    if (n == name) return true;
  return false;
}

}  // namespace anonql

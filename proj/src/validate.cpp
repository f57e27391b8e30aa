#include "anonql/validate.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "anonql/error.hpp"
#include "anonql/eval.hpp"

namespace anonql {
namespace {

constexpr int kNoColumn = -1;
constexpr int kMultiColumn = -2;

[[noreturn]] void fail(ErrorCode code, std::string msg, unsigned line = 0, unsigned col = 0) {
  throw Error(code, std::move(msg), line, col);
}

[[noreturn]] void fail_at(ErrorCode code, std::string msg, const Expr& e) {
  throw Error(code, std::move(msg), e.line, e.col);
}

bool numeric_kind(ValueType t) {
  return t == ValueType::Integer || t == ValueType::Real || t == ValueType::Null;
}

bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::Aggregate) return true;
  for (const ExprPtr& a : e.args)
    if (contains_aggregate(*a)) return true;
  return false;
}

bool contains_column(const Expr& e) {
  if (e.kind == ExprKind::ColumnRef) return true;
  for (const ExprPtr& a : e.args)
    if (contains_column(*a)) return true;
  return false;
}

void collect_bound_columns(const Expr& e, std::set<int>& out) {
  if (e.kind == ExprKind::ColumnRef && e.bound_index >= 0) out.insert(e.bound_index);
  for (const ExprPtr& a : e.args) collect_bound_columns(*a, out);
}

void collect_aggregate_nodes(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == ExprKind::Aggregate) {
    out.push_back(&e);
    return;
  }
  for (const ExprPtr& a : e.args) collect_aggregate_nodes(*a, out);
}

bool is_derived_fn(std::string_view fn) {
  return fn == "weekday" || fn == "quarter" || fn == "month" || fn == "day" || fn == "hour" ||
         fn == "minute" || fn == "second";
}

std::optional<DtUnit> unit_from_name(std::string_view n) {
  if (n == "second") return DtUnit::Second;
  if (n == "minute") return DtUnit::Minute;
  if (n == "hour") return DtUnit::Hour;
  if (n == "day") return DtUnit::Day;
  if (n == "month") return DtUnit::Month;
  if (n == "quarter") return DtUnit::Quarter;
  if (n == "year") return DtUnit::Year;
  return std::nullopt;
}

/// Rewrites substring forms onto their canonical equivalents, folds negated
/// numeric literals, and gives trim functions their implied blank charset so
/// equivalent spellings analyze, evaluate and seed identically.
void normalize_tree(ExprPtr& e) {
  for (ExprPtr& a : e->args) normalize_tree(a);
  if (e->kind == ExprKind::Unary && e->args[0]->kind == ExprKind::Literal) {
    const Value& v = e->args[0]->literal;
    if (type_of(v) == ValueType::Integer) {
      e = make_literal(Value{-std::get<int64_t>(v)}, e->line, e->col);
    } else if (type_of(v) == ValueType::Real) {
      e = make_literal(Value{-std::get<double>(v)}, e->line, e->col);
    }
    return;
  }
  if (e->kind != ExprKind::Function) return;
  if (e->fn == "substring" && e->args.size() >= 2 && e->args[1]->kind == ExprKind::Literal) {
    auto from = as_integer(e->args[1]->literal);
    if (from && *from <= 1) {
      if (e->args.size() == 2) {
        ExprPtr inner = std::move(e->args[0]);
        e = std::move(inner);
        return;
      }
      ExprPtr subject = std::move(e->args[0]);
      ExprPtr count = std::move(e->args[2]);
      e->fn = "left";
      e->args.clear();
      e->args.push_back(std::move(subject));
      e->args.push_back(std::move(count));
    }
  } else if ((e->fn == "btrim" || e->fn == "ltrim" || e->fn == "rtrim") && e->args.size() == 1) {
    e->args.push_back(make_literal(Value{std::string(" ")}, e->line, e->col));
  }
}

struct RelationInfo {
  std::vector<std::string> names;
  std::vector<ValueType> types;

  std::optional<size_t> find(std::string_view name) const {
    for (size_t i = 0; i < names.size(); i++)
      if (!names[i].empty() && names[i] == name) return i;
    return std::nullopt;
  }
};

std::string op_word(CompOp op) {
  switch (op) {
    case CompOp::In:
    case CompOp::NotIn: return "IN";
    case CompOp::Like:
    case CompOp::NotLike: return "LIKE";
    case CompOp::ILike:
    case CompOp::NotILike: return "ILIKE";
    case CompOp::IsNull:
    case CompOp::IsNotNull: return "IS NULL";
    default: return "comparison";
  }
}

std::string quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

}  // namespace

namespace {

class Analyzer {
 public:
  Analyzer(const QueryAst& ast, const std::map<std::string, Table>& tables)
      : ast_(ast), tables_(tables) {}

  AnalyzedQuery run() {
    setup_from();
    analyze_conditions();
    analyze_items();
    analyze_group_keys();
    analyze_outer_having();
    finalize_item_keys();
    analyze_order();
    out_.distinct = ast_.distinct;
    out_.limit = ast_.limit;
    out_.offset = ast_.offset;
    return std::move(out_);
  }

 private:
  // ----- binding -----------------------------------------------------------

  enum class AggPolicy { Forbid, Anon, BucketTrue };

  struct BindCtx {
    const RelationInfo* rel = nullptr;
    const std::set<std::string>* aliases = nullptr;
    AggPolicy agg = AggPolicy::Forbid;
    const char* agg_context = "here";
    bool inside_aggregate = false;
  };

  ValueType bind_expr(Expr& e, BindCtx& ctx) {
    switch (e.kind) {
      case ExprKind::Literal:
        return type_of(e.literal);
      case ExprKind::ColumnRef: {
        if (e.bound_index >= 0)  // pre-resolved (HAVING aggregate rewrite)
          return ctx.rel->types[static_cast<size_t>(e.bound_index)];
        if (!ctx.rel) fail_at(ErrorCode::DataFormat, "internal: column in constant context", e);
        if (!e.table.empty()) {
          if (!ctx.aliases || !ctx.aliases->count(e.table))
            fail_at(ErrorCode::UnknownTable, "unknown table or alias " + quoted(e.table), e);
          e.table.clear();
        }
        auto idx = ctx.rel->find(e.column);
        if (!idx) fail_at(ErrorCode::UnknownColumn, "unknown column " + quoted(e.column), e);
        e.bound_index = static_cast<int>(*idx);
        return ctx.rel->types[*idx];
      }
      case ExprKind::Star:
        fail_at(ErrorCode::SyntaxError, "'*' is only valid as count(*)", e);
      case ExprKind::Unary: {
        ValueType t = bind_expr(*e.args[0], ctx);
        if (!numeric_kind(t))
          fail_at(ErrorCode::TypeMismatch, "operator '-' needs a numeric operand", e);
        return t;
      }
      case ExprKind::Binary: {
        ValueType lt = bind_expr(*e.args[0], ctx);
        ValueType rt = bind_expr(*e.args[1], ctx);
        if (e.op == BinOp::Mod) {
          if ((lt != ValueType::Integer && lt != ValueType::Null) ||
              (rt != ValueType::Integer && rt != ValueType::Null))
            fail_at(ErrorCode::TypeMismatch, "operator '%' needs integer operands", e);
          return ValueType::Integer;
        }
        if (!numeric_kind(lt) || !numeric_kind(rt))
          fail_at(ErrorCode::TypeMismatch, "arithmetic needs numeric operands", e);
        if (e.op == BinOp::Div || e.op == BinOp::Pow) return ValueType::Real;
        if (lt == ValueType::Real || rt == ValueType::Real) return ValueType::Real;
        if (lt == ValueType::Null || rt == ValueType::Null)
          return lt == ValueType::Null ? rt : lt;
        return ValueType::Integer;
      }
      case ExprKind::Function: {
        std::vector<ValueType> at;
        at.reserve(e.args.size());
        for (ExprPtr& a : e.args) at.push_back(bind_expr(*a, ctx));
        return check_function(e, at);
      }
      case ExprKind::Cast: {
        ValueType t = bind_expr(*e.args[0], ctx);
        if (!cast_allowed(t, e.cast_type))
          fail_at(ErrorCode::UnsupportedCast,
                  "cannot cast " + std::string(type_name(t)) + " to " +
                      std::string(type_name(e.cast_type)),
                  e);
        return e.cast_type;
      }
      case ExprKind::Aggregate: {
        if (ctx.inside_aggregate) fail_at(ErrorCode::AggregateMisuse, "aggregates cannot nest", e);
        if (ctx.agg == AggPolicy::Forbid)
          fail_at(ErrorCode::AggregateMisuse,
                  std::string("aggregates are not allowed ") + ctx.agg_context, e);
        std::vector<AggregateCall>* sink =
            ctx.agg == AggPolicy::Anon ? &out_.aggs : &out_.having_aggs;
        auto [call, type] = make_aggregate(e, ctx, ctx.agg == AggPolicy::Anon);
        if (ctx.agg == AggPolicy::BucketTrue && call.noise)
          fail_at(ErrorCode::AggregateMisuse, "noise aggregates are only allowed in the select list",
                  e);
        e.bound_index = static_cast<int>(sink->size());
        sink->push_back(std::move(call));
        return type;
      }
    }
    fail_at(ErrorCode::DataFormat, "internal: unhandled expression kind", e);
  }

  static bool cast_allowed(ValueType from, ValueType to) {
    if (from == ValueType::Null) return true;
    switch (from) {
      case ValueType::Text:
        return true;  // text casts to every engine type
      case ValueType::Integer:
      case ValueType::Real:
      case ValueType::Boolean:
        return to != ValueType::DateTime;
      case ValueType::DateTime:
        return to == ValueType::Text || to == ValueType::DateTime;
      default:
        return false;
    }
  }

  ValueType check_function(Expr& e, const std::vector<ValueType>& at) {
    const std::string& fn = e.fn;
    auto arity = [&](size_t lo, size_t hi) {
      if (e.args.size() < lo || e.args.size() > hi) {
        std::string n = lo == hi ? std::to_string(lo)
                                 : std::to_string(lo) + " to " + std::to_string(hi);
        fail_at(ErrorCode::SyntaxError, quoted(fn) + " expects " + n + " argument(s)", e);
      }
    };
    auto want = [&](size_t i, bool ok, const char* what) {
      if (!ok) fail_at(ErrorCode::TypeMismatch, quoted(fn) + " argument must be " + what,
                       *e.args[i]);
    };
    auto text_at = [&](size_t i) { return at[i] == ValueType::Text || at[i] == ValueType::Null; };
    auto num_at = [&](size_t i) { return numeric_kind(at[i]); };
    auto int_at = [&](size_t i) {
      return at[i] == ValueType::Integer || at[i] == ValueType::Null;
    };
    auto dt_at = [&](size_t i) {
      return at[i] == ValueType::DateTime || at[i] == ValueType::Null;
    };
    auto int_literal_at = [&](size_t i) {
      if (e.args[i]->kind != ExprKind::Literal ||
          type_of(e.args[i]->literal) != ValueType::Integer)
        fail_at(ErrorCode::SyntaxError, quoted(fn) + " precision must be an integer literal",
                *e.args[i]);
    };

    if (fn == "length" || fn == "lower" || fn == "upper") {
      arity(1, 1);
      want(0, text_at(0), "text");
      return fn == "length" ? ValueType::Integer : ValueType::Text;
    }
    if (fn == "left" || fn == "right") {
      arity(2, 2);
      want(0, text_at(0), "text");
      want(1, int_at(1), "an integer");
      return ValueType::Text;
    }
    if (fn == "btrim" || fn == "ltrim" || fn == "rtrim") {
      arity(2, 2);  // normalize_tree supplies the implied charset
      want(0, text_at(0), "text");
      want(1, text_at(1), "text");
      return ValueType::Text;
    }
    if (fn == "substring") {
      arity(2, 3);
      want(0, text_at(0), "text");
      want(1, int_at(1), "an integer");
      if (e.args.size() == 3) want(2, int_at(2), "an integer");
      return ValueType::Text;
    }
    if (fn == "concat") {
      arity(1, 64);
      return ValueType::Text;
    }
    if (fn == "hex") {
      arity(1, 1);
      want(0, int_at(0) || text_at(0), "an integer or text");
      return ValueType::Text;
    }
    if (fn == "abs" || fn == "ceil" || fn == "floor") {
      arity(1, 1);
      want(0, num_at(0), "numeric");
      return at[0] == ValueType::Null ? ValueType::Real : at[0];
    }
    if (fn == "round" || fn == "trunc") {
      arity(1, 2);
      want(0, num_at(0), "numeric");
      if (e.args.size() == 2) {
        want(1, int_at(1), "an integer");
        int_literal_at(1);
      }
      return at[0] == ValueType::Null ? ValueType::Real : at[0];
    }
    if (fn == "div" || fn == "mod" || fn == "pow") {
      arity(2, 2);
      if (fn == "mod") {
        want(0, int_at(0), "an integer");
        want(1, int_at(1), "an integer");
        return ValueType::Integer;
      }
      want(0, num_at(0), "numeric");
      want(1, num_at(1), "numeric");
      if (fn == "pow") return ValueType::Real;
      return (at[0] == ValueType::Integer && at[1] == ValueType::Integer) ? ValueType::Integer
                                                                          : ValueType::Real;
    }
    if (fn == "sqrt") {
      arity(1, 1);
      want(0, num_at(0), "numeric");
      return ValueType::Real;
    }
    if (fn == "year" || fn == "quarter" || fn == "month" || fn == "day" || fn == "hour" ||
        fn == "minute" || fn == "second" || fn == "weekday") {
      arity(1, 1);
      want(0, dt_at(0) || text_at(0), "a datetime");
      return ValueType::Integer;
    }
    if (fn == "date_trunc") {
      arity(2, 2);
      if (e.args[0]->kind != ExprKind::Literal || type_of(e.args[0]->literal) != ValueType::Text ||
          !unit_from_name(std::get<std::string>(e.args[0]->literal)))
        fail_at(ErrorCode::SyntaxError,
                "date_trunc unit must be one of 'second', 'minute', 'hour', 'day', 'month', "
                "'quarter', 'year'",
                *e.args[0]);
      want(1, dt_at(1) || text_at(1), "a datetime");
      return ValueType::DateTime;
    }
    fail_at(ErrorCode::UnknownFunction, "unknown function " + quoted(fn), e);
  }

  /// Builds an aggregate call; binds the argument against ctx's relation.
  /// anon_mode: the noisy top-level semantics (numeric-only min/max, noise
  /// twins allowed); otherwise the true per-group semantics.
  std::pair<AggregateCall, ValueType> make_aggregate(Expr& e, BindCtx& ctx, bool anon_mode) {
    AggregateCall call;
    std::string fn = e.fn;
    call.noise = is_noise_aggregate_name(fn);
    if (call.noise) {
      if (!anon_mode)
        fail_at(ErrorCode::AggregateMisuse, "noise aggregates are only allowed in the select list",
                e);
      fn = fn.substr(0, fn.size() - 6);  // strip "_noise"
    }
    call.fn = fn;
    call.distinct = e.distinct;
    ValueType at = ValueType::Null;
    if (!e.args.empty() && e.args[0]->kind == ExprKind::Star) {
      call.star = true;
    } else {
      BindCtx argctx = ctx;
      argctx.inside_aggregate = true;
      at = bind_expr(*e.args[0], argctx);
      call.arg = e.args[0]->clone();
    }
    if (call.distinct && fn != "count" && fn != "sum")
      fail_at(ErrorCode::UnsupportedDistinct, "DISTINCT is not supported for " + quoted(e.fn), e);
    if (fn == "sum" || fn == "avg" || fn == "stddev" || fn == "median") {
      if (!numeric_kind(at))
        fail_at(ErrorCode::TypeMismatch, quoted(e.fn) + " needs a numeric argument", e);
    } else if ((fn == "min" || fn == "max") && anon_mode) {
      if (!numeric_kind(at))
        fail_at(ErrorCode::TypeMismatch, quoted(e.fn) + " needs a numeric argument", e);
    }
    call.key = fn + "(" +
               (call.star ? std::string("*")
                          : std::string(call.distinct ? "distinct " : "") + to_sql(*call.arg)) +
               ")";
    ValueType result;
    if (anon_mode) {
      if (call.noise) result = ValueType::Real;
      else if (fn == "count") result = ValueType::Integer;
      else result = ValueType::Real;
    } else {
      if (fn == "count") result = ValueType::Integer;
      else if (fn == "sum") result = at == ValueType::Real ? ValueType::Real : ValueType::Integer;
      else if (fn == "min" || fn == "max") result = at;
      else result = ValueType::Real;
    }
    call.result_type = result;
    return {std::move(call), result};
  }

  // ----- FROM / subquery ---------------------------------------------------

  void setup_from() {
    const QueryAst* source = &ast_;
    if (ast_.subquery) {
      const QueryAst& sub = *ast_.subquery;
      if (sub.subquery)
        fail(ErrorCode::SubqueryDepth, "subqueries cannot nest more than one level");
      if (sub.distinct) fail(ErrorCode::SubqueryClause, "DISTINCT is not allowed in a subquery");
      if (!sub.order_by.empty())
        fail(ErrorCode::SubqueryClause, "ORDER BY is not allowed in a subquery");
      if (sub.limit || sub.offset)
        fail(ErrorCode::SubqueryClause, "LIMIT/OFFSET is not allowed in a subquery");
      source = &sub;
    }
    lookup_table(source->from_table);
    sub_aliases_ = {out_.table_name};
    if (!source->from_alias.empty()) sub_aliases_.insert(source->from_alias);
    if (ast_.subquery) {
      if (!ast_.from_alias.empty()) outer_aliases_.insert(ast_.from_alias);
      if (ast_.subquery->group_by.empty()) setup_projection(*ast_.subquery);
      else setup_uid_stage(*ast_.subquery);
    } else {
      outer_aliases_ = sub_aliases_;
    }
  }

  void lookup_table(const std::string& name) {
    if (name.empty()) fail(ErrorCode::DataFormat, "internal: missing FROM table");
    auto it = tables_.find(name);
    if (it == tables_.end()) fail(ErrorCode::UnknownTable, "unknown table " + quoted(name));
    out_.table = &it->second;
    out_.table_name = name;
    const Schema& schema = it->second.schema;
    for (const Column& c : schema.columns) {
      base_rel_.names.push_back(c.name);
      base_rel_.types.push_back(c.type);
    }
  }

  const Schema& schema() const { return out_.table->schema; }

  void setup_projection(const QueryAst& sub) {
    flattened_ = true;
    if (!sub.having.empty())
      fail(ErrorCode::HavingNotUidGrouped,
           "HAVING in a subquery requires GROUP BY the user id column");
    bool uid_exported = false;
    auto add_export = [&](const std::string& name, ExprPtr expr) {
      for (const auto& [n, e] : exports_)
        if (n == name) fail(ErrorCode::SyntaxError, "duplicate column name " + quoted(name) +
                                                        " in subquery");
      exports_.emplace_back(name, std::move(expr));
    };
    for (const SelectItem& item : sub.items) {
      if (item.star) {
        for (const Column& c : schema().columns) add_export(c.name, make_column(c.name));
        uid_exported = true;
        continue;
      }
      if (contains_aggregate(*item.expr))
        fail_at(ErrorCode::AggregateMisuse, "aggregates in a subquery require GROUP BY the user id",
                *item.expr);
      std::string name = item.alias;
      if (name.empty() && item.expr->kind == ExprKind::ColumnRef) name = item.expr->column;
      if (name.empty())
        fail_at(ErrorCode::SyntaxError, "subquery select item needs an alias", *item.expr);
      if (item.expr->kind == ExprKind::ColumnRef &&
          item.expr->column == schema().uid_column().name)
        uid_exported = true;
      add_export(name, item.expr->clone());
    }
    if (!uid_exported)
      fail(ErrorCode::SubqueryNoUid, "subquery must select the user id column");
  }

  void setup_uid_stage(const QueryAst& sub) {
    out_.uid_stage = true;
    // Select items: the user id passthrough plus single aggregates.
    auto add_output = [&](UidOutput output) {
      if (!output.name.empty())
        for (const UidOutput& o : out_.uid_outputs)
          if (o.name == output.name)
            fail(ErrorCode::SyntaxError,
                 "duplicate column name " + quoted(output.name) + " in subquery");
      out_.uid_outputs.push_back(std::move(output));
    };
    int uid_item = -1;
    for (size_t i = 0; i < sub.items.size(); i++) {
      const SelectItem& item = sub.items[i];
      if (item.star)
        fail(ErrorCode::AggregateMisuse,
             "subquery select items must be the user id or a single aggregate");
      ExprPtr expr = item.expr->clone();
      normalize_tree(expr);
      if (expr->kind == ExprKind::ColumnRef) {
        BindCtx ctx{&base_rel_, &sub_aliases_, AggPolicy::Forbid, "here", false};
        bind_expr(*expr, ctx);
        if (expr->bound_index != static_cast<int>(schema().uid_index))
          fail_at(ErrorCode::AggregateMisuse,
                  "only the user id column may be selected ungrouped in a subquery", *expr);
        UidOutput o;
        o.is_uid = true;
        o.name = item.alias.empty() ? expr->column : item.alias;
        o.base_column = static_cast<int>(schema().uid_index);
        o.display = to_sql(*item.expr);
        uid_item = static_cast<int>(i);
        add_output(std::move(o));
        continue;
      }
      if (expr->kind != ExprKind::Aggregate)
        fail_at(ErrorCode::AggregateMisuse,
                "subquery select items must be the user id or a single aggregate", *expr);
      add_output(make_uid_output(*expr, item.alias));
    }
    if (uid_item < 0) fail(ErrorCode::SubqueryNoUid, "subquery must select the user id column");

    // GROUP BY must name exactly the user id.
    if (sub.group_by.size() != 1)
      fail(ErrorCode::SubqueryGroupNotUid, "subquery must group by exactly the user id column");
    const GroupKey& key = sub.group_by[0];
    bool ok = false;
    if (key.position > 0) {
      ok = key.position == uid_item + 1;
    } else if (key.expr->kind == ExprKind::ColumnRef && key.expr->table.empty()) {
      const std::string& n = key.expr->column;
      ok = n == schema().uid_column().name;
      for (const UidOutput& o : out_.uid_outputs)
        if (o.is_uid && o.name == n) ok = true;
    }
    if (!ok)
      fail(ErrorCode::SubqueryGroupNotUid, "subquery must group by exactly the user id column");
  }

  UidOutput make_uid_output(Expr& agg_node, const std::string& alias) {
    UidOutput o;
    o.display = to_sql(agg_node);
    BindCtx ctx{&base_rel_, &sub_aliases_, AggPolicy::Forbid, "here", false};
    auto [call, type] = make_aggregate(agg_node, ctx, /*anon_mode=*/false);
    if (call.noise)
      fail_at(ErrorCode::AggregateMisuse, "noise aggregates are only allowed in the select list",
              agg_node);
    o.name = alias.empty() ? call.key : alias;
    if (call.star) {
      o.base_column = static_cast<int>(schema().uid_index);
      o.via_expression = false;
    } else {
      std::set<int> cols;
      collect_bound_columns(*call.arg, cols);
      if (cols.empty()) {
        o.base_column = static_cast<int>(schema().uid_index);
        o.via_expression = true;
      } else if (cols.size() == 1) {
        o.base_column = *cols.begin();
        o.via_expression = call.arg->kind != ExprKind::ColumnRef;
      } else {
        o.base_column = kMultiColumn;
        o.via_expression = true;
      }
    }
    o.agg = std::move(call);
    return o;
  }

  /// Relation the outer clauses bind against.
  const RelationInfo& outer_rel() {
    if (!out_.uid_stage) return base_rel_;
    if (uid_rel_.names.size() != out_.uid_outputs.size()) {
      uid_rel_.names.clear();
      uid_rel_.types.clear();
      for (const UidOutput& o : out_.uid_outputs) {
        uid_rel_.names.push_back(o.name);
        uid_rel_.types.push_back(o.is_uid ? base_rel_.types[static_cast<size_t>(o.base_column)]
                                          : o.agg.result_type);
      }
    }
    return uid_rel_;
  }

  /// Projection flattening: outer column references are replaced by the
  /// exporting expression so the whole query reads from the base table.
  ExprPtr substitute(const Expr& e) {
    if (e.kind == ExprKind::ColumnRef) {
      if (!e.table.empty() && !outer_aliases_.count(e.table))
        fail_at(ErrorCode::UnknownTable, "unknown table or alias " + quoted(e.table), e);
      for (const auto& [name, expr] : exports_)
        if (name == e.column) return expr->clone();
      fail_at(ErrorCode::UnknownColumn, "unknown column " + quoted(e.column), e);
    }
    ExprPtr out = e.clone();
    out->args.clear();
    for (const ExprPtr& a : e.args) out->args.push_back(substitute(*a));
    return out;
  }

  /// substitute (when flattened) + normalize + bind for an outer expression.
  ExprPtr prepare_outer(const Expr& e, BindCtx& ctx) {
    ExprPtr p = flattened_ ? substitute(e) : e.clone();
    normalize_tree(p);
    bind_expr(*p, ctx);
    return p;
  }

  BindCtx outer_ctx(AggPolicy agg, const char* context) {
    return BindCtx{&outer_rel(), flattened_ ? &sub_aliases_ : &outer_aliases_, agg, context,
                   false};
  }

  // ----- condition classification ------------------------------------------

  struct Shape {
    enum Kind { BareColumn, Wrapped, CaseWrapped, RangeFn, DerivedFn, Other } kind = Other;
    int column = kNoColumn;  // kNoColumn / kMultiColumn / single base column
    std::string seed_column;
    bool clean = true;  // identity reached without math or expression wrapping
    std::optional<StringFnInfo> string_fn;
    std::string range_fn;
    int precision = 0;
    DtUnit unit = DtUnit::Day;
    ExprPtr range_col;  // bare bound column ref for range evaluation
  };

  /// Resolves the set of relation columns (and Bucket-stage aggregates) an
  /// expression touches down to base-table identities.
  void resolve_identity(const Expr& e, CondStage stage, Shape& s) {
    std::set<int> base_cols;
    bool clean = true;
    std::set<int> rel_cols;
    collect_bound_columns(e, rel_cols);
    for (int rc : rel_cols) {
      if (stage == CondStage::RawRows || !out_.uid_stage) {
        base_cols.insert(rc);
      } else {
        const UidOutput& o = out_.uid_outputs[static_cast<size_t>(rc)];
        if (o.base_column == kMultiColumn) {
          s.column = kMultiColumn;
          return;
        }
        base_cols.insert(o.base_column);
        clean = clean && !o.via_expression;
      }
    }
    if (stage == CondStage::Bucket) {
      std::vector<const Expr*> aggs;
      collect_aggregate_nodes(e, aggs);
      for (const Expr* a : aggs) {
        const AggregateCall& call = out_.having_aggs[static_cast<size_t>(a->bound_index)];
        if (call.star) {
          base_cols.insert(uid_base_column());
          continue;
        }
        std::set<int> arg_rel;
        collect_bound_columns(*call.arg, arg_rel);
        if (arg_rel.empty()) {
          base_cols.insert(uid_base_column());
          clean = false;
          continue;
        }
        clean = clean && call.arg->kind == ExprKind::ColumnRef;
        for (int rc : arg_rel) {
          if (out_.uid_stage) {
            const UidOutput& o = out_.uid_outputs[static_cast<size_t>(rc)];
            if (o.base_column == kMultiColumn) {
              s.column = kMultiColumn;
              return;
            }
            base_cols.insert(o.base_column);
            clean = clean && !o.via_expression;
          } else {
            base_cols.insert(rc);
          }
        }
      }
    }
    if (base_cols.empty()) {
      s.column = kNoColumn;
    } else if (base_cols.size() > 1) {
      s.column = kMultiColumn;
    } else {
      s.column = *base_cols.begin();
      s.seed_column = schema().columns[static_cast<size_t>(s.column)].name;
      s.clean = clean;
    }
  }

  int uid_base_column() const { return static_cast<int>(schema().uid_index); }

  ValueType bound_column_type(const Expr& col_ref, CondStage stage) {
    const RelationInfo& rel = stage == CondStage::RawRows ? base_rel_ : outer_rel();
    return rel.types[static_cast<size_t>(col_ref.bound_index)];
  }

  static std::string canonical_fn_constant(const std::string& fn, size_t arg_index,
                                           const Value& v) {
    if ((fn == "btrim" || fn == "ltrim" || fn == "rtrim") && arg_index == 1)
      return normalize_trim_chars(std::get<std::string>(v));
    return canonical(v);
  }

  Shape classify_lhs(const Expr& lhs, CondStage stage, ValueType lhs_type) {
    Shape s;
    resolve_identity(lhs, stage, s);
    if (s.column < 0) return s;  // Other with no/multi column

    if (lhs.kind == ExprKind::ColumnRef) {
      s.kind = Shape::BareColumn;
      return s;
    }
    if (stage == CondStage::Bucket && lhs.kind == ExprKind::Aggregate) {
      s.kind = Shape::BareColumn;  // single aggregate compared to a constant
      return s;
    }
    if (lhs.kind != ExprKind::Function) {
      s.kind = Shape::Other;
      s.clean = false;
      return s;
    }

    const std::string& fn = lhs.fn;
    bool arg0_col = !lhs.args.empty() && lhs.args[0]->kind == ExprKind::ColumnRef;
    bool rest_literal = true;
    for (size_t i = 1; i < lhs.args.size(); i++)
      if (lhs.args[i]->kind != ExprKind::Literal) rest_literal = false;

    if (is_char_removing(fn) && arg0_col && rest_literal) {
      s.kind = Shape::Wrapped;
      StringFnInfo info;
      info.name = fn;
      for (size_t i = 1; i < lhs.args.size(); i++)
        info.constants.push_back(canonical_fn_constant(fn, i, lhs.args[i]->literal));
      s.string_fn = std::move(info);
      return s;
    }
    if (is_case_fn(fn) && arg0_col) {
      s.kind = Shape::CaseWrapped;
      return s;
    }
    if ((fn == "trunc" || fn == "round") && arg0_col && rest_literal) {
      s.kind = Shape::RangeFn;
      s.range_fn = fn;
      s.precision =
          lhs.args.size() > 1 ? static_cast<int>(std::get<int64_t>(lhs.args[1]->literal)) : 0;
      s.range_col = lhs.args[0]->clone();
      return s;
    }
    if (fn == "year" && arg0_col &&
        bound_column_type(*lhs.args[0], stage) == ValueType::DateTime) {
      s.kind = Shape::RangeFn;
      s.range_fn = fn;
      s.range_col = lhs.args[0]->clone();
      return s;
    }
    if (fn == "date_trunc" && lhs.args.size() == 2 &&
        lhs.args[1]->kind == ExprKind::ColumnRef &&
        bound_column_type(*lhs.args[1], stage) == ValueType::DateTime) {
      s.kind = Shape::RangeFn;
      s.range_fn = fn;
      s.unit = *unit_from_name(std::get<std::string>(lhs.args[0]->literal));
      s.range_col = lhs.args[1]->clone();
      return s;
    }
    if (is_derived_fn(fn) && arg0_col &&
        bound_column_type(*lhs.args[0], stage) == ValueType::DateTime) {
      s.kind = Shape::DerivedFn;
      s.seed_column = to_sql(lhs);
      return s;
    }
    s.kind = Shape::Other;
    s.clean = false;
    (void)lhs_type;
    return s;
  }

  // ----- condition analysis -------------------------------------------------

  struct PendingIneq {
    std::string key;
    ExprPtr lhs;
    bool is_lower = false;
    Value bound;
    ValueType lhs_type = ValueType::Null;
    Shape shape;
    std::string display;
    unsigned line = 0, col = 0;
  };

  struct ClauseEnv {
    CondStage stage;
    ClauseOrigin origin;
    bool outer;  // outer clause: substitution + outer relation binding
  };

  void analyze_conditions() {
    const QueryAst* sub = ast_.subquery.get();
    if (sub && !sub->where.empty())
      analyze_clause(sub->where, {CondStage::RawRows, ClauseOrigin::Where, false});
    if (sub && out_.uid_stage && !sub->having.empty())
      analyze_uid_having(sub->having);
    if (!ast_.where.empty())
      analyze_clause(ast_.where,
                     {out_.uid_stage ? CondStage::UidRows : CondStage::RawRows,
                      ClauseOrigin::Where, true});
  }

  void analyze_clause(const std::vector<ConditionAst>& conds, ClauseEnv env) {
    std::vector<PendingIneq> pending;
    for (const ConditionAst& c : conds) analyze_one(c, env, pending);
    pair_inequalities(pending, env);
  }

  /// Subquery HAVING: rewrite aggregates onto (possibly hidden) outputs, then
  /// analyze against the per-user relation.
  void analyze_uid_having(const std::vector<ConditionAst>& conds) {
    std::vector<ConditionAst> rewritten;
    for (const ConditionAst& c : conds) {
      ConditionAst copy = c.clone();
      rewrite_uid_aggregates(copy.lhs);
      rewritten.push_back(std::move(copy));
    }
    uid_rel_.names.clear();  // hidden outputs may have been appended
    uid_rel_.types.clear();
    std::vector<PendingIneq> pending;
    ClauseEnv env{CondStage::UidRows, ClauseOrigin::Having, false};
    for (const ConditionAst& c : rewritten) analyze_one(c, env, pending);
    pair_inequalities(pending, env);
  }

  void rewrite_uid_aggregates(ExprPtr& e) {
    if (e->kind == ExprKind::Aggregate) {
      int idx = match_or_add_uid_output(*e);
      ExprPtr ref = make_column(out_.uid_outputs[static_cast<size_t>(idx)].name.empty()
                                    ? out_.uid_outputs[static_cast<size_t>(idx)].agg.key
                                    : out_.uid_outputs[static_cast<size_t>(idx)].name,
                                e->line, e->col);
      ref->bound_index = idx;
      e = std::move(ref);
      return;
    }
    for (ExprPtr& a : e->args) rewrite_uid_aggregates(a);
  }

  int match_or_add_uid_output(Expr& agg_node) {
    ExprPtr copy = agg_node.clone();
    normalize_tree(copy);
    UidOutput fresh = make_uid_output(*copy, "");
    for (size_t i = 0; i < out_.uid_outputs.size(); i++) {
      const UidOutput& o = out_.uid_outputs[i];
      if (!o.is_uid && o.agg.key == fresh.agg.key) return static_cast<int>(i);
    }
    fresh.name.clear();  // hidden: reachable only through the rewrite
    out_.uid_outputs.push_back(std::move(fresh));
    return static_cast<int>(out_.uid_outputs.size() - 1);
  }

  void check_rhs_expr(const Expr& rhs) {
    if (contains_column(rhs))
      fail_at(ErrorCode::ColumnComparison, "the right side of a condition must be constant", rhs);
    if (contains_aggregate(rhs))
      fail_at(ErrorCode::AggregateMisuse, "aggregates cannot appear on the right side of a "
                                          "condition",
              rhs);
  }

  /// Folds a constant right-hand side to a value (types checked during bind).
  Value fold_rhs(const Expr& rhs) {
    ExprPtr copy = rhs.clone();
    normalize_tree(copy);
    BindCtx ctx{nullptr, nullptr, AggPolicy::Forbid, "here", false};
    bind_expr(*copy, ctx);
    return evaluate(*copy, nullptr);
  }

  Value coerce_rhs(ValueType lhs_type, Value v, const Expr& at) {
    if (is_null(v)) return v;  // comparing against NULL matches nothing
    ValueType vt = type_of(v);
    switch (lhs_type) {
      case ValueType::Null:
        return v;
      case ValueType::Integer:
      case ValueType::Real:
        if (vt == ValueType::Integer || vt == ValueType::Real) return v;
        break;
      case ValueType::Text:
        if (vt == ValueType::Text) return v;
        break;
      case ValueType::Boolean:
        if (vt == ValueType::Boolean) return v;
        break;
      case ValueType::DateTime:
        if (vt == ValueType::DateTime) return v;
        if (vt == ValueType::Text) {
          auto d = parse_datetime(std::get<std::string>(v));
          if (d) return Value{*d};
          fail_at(ErrorCode::TypeMismatch,
                  quoted(std::get<std::string>(v)) + " is not a datetime", at);
        }
        break;
    }
    fail_at(ErrorCode::TypeMismatch, "condition value does not match the column type", at);
  }

  struct BoundLhs {
    ExprPtr expr;
    ValueType type;
    Shape shape;
  };

  BoundLhs prepare_lhs(const ConditionAst& c, ClauseEnv env) {
    BoundLhs out;
    BindCtx ctx;
    if (env.stage == CondStage::Bucket) {
      ctx = outer_ctx(AggPolicy::BucketTrue, "here");
    } else if (env.outer) {
      ctx = outer_ctx(AggPolicy::Forbid, "in WHERE");
    } else {
      ctx = BindCtx{env.stage == CondStage::UidRows ? &outer_rel() : &base_rel_, &sub_aliases_,
                    AggPolicy::Forbid,
                    env.origin == ClauseOrigin::Having ? "in HAVING" : "in WHERE", false};
    }
    out.expr = env.outer && flattened_ ? substitute(*c.lhs) : c.lhs->clone();
    normalize_tree(out.expr);
    out.type = bind_expr(*out.expr, ctx);
    out.shape = classify_lhs(*out.expr, env.stage, out.type);
    return out;
  }

  AnalyzedCondition base_condition(const ConditionAst& c, ClauseEnv env) {
    AnalyzedCondition cond;
    cond.stage = env.stage;
    cond.origin = env.origin;
    cond.display = to_sql(c);
    cond.line = c.line;
    cond.col = c.col;
    return cond;
  }

  void analyze_one(const ConditionAst& c, ClauseEnv env, std::vector<PendingIneq>& pending) {
    if (env.stage != CondStage::RawRows) {
      switch (c.op) {
        case CompOp::Eq:
        case CompOp::Ne:
        case CompOp::Lt:
        case CompOp::Le:
        case CompOp::Gt:
        case CompOp::Ge:
        case CompOp::Between:
        case CompOp::NotBetween:
          break;
        default:
          fail(ErrorCode::SyntaxError,
               op_word(c.op) + " is not allowed on aggregated results", c.line, c.col);
      }
    }
    for (const ExprPtr& r : c.rhs) check_rhs_expr(*r);

    BoundLhs lhs = prepare_lhs(c, env);
    switch (c.op) {
      case CompOp::Eq:
      case CompOp::Ne:
        analyze_equality(c, env, lhs, c.op == CompOp::Ne);
        return;
      case CompOp::Lt:
      case CompOp::Le:
      case CompOp::Gt:
      case CompOp::Ge: {
        check_range_lhs(lhs, c);
        require_simple(*c.rhs[0], ErrorCode::UnclearRange, "range bounds", c);
        PendingIneq p;
        p.key = to_sql(*lhs.expr);
        p.is_lower = c.op == CompOp::Gt || c.op == CompOp::Ge;
        p.bound = coerce_rhs(lhs.type, fold_rhs(*c.rhs[0]), *c.rhs[0]);
        if (is_null(p.bound))
          fail(ErrorCode::TypeMismatch, "range bounds cannot be NULL", c.line, c.col);
        p.lhs = std::move(lhs.expr);
        p.lhs_type = lhs.type;
        p.shape = std::move(lhs.shape);
        p.display = to_sql(c);
        p.line = c.line;
        p.col = c.col;
        pending.push_back(std::move(p));
        return;
      }
      case CompOp::Between:
      case CompOp::NotBetween:
        analyze_between(c, env, lhs, c.op == CompOp::NotBetween);
        return;
      case CompOp::In:
      case CompOp::NotIn:
        analyze_in(c, env, lhs, c.op == CompOp::NotIn);
        return;
      case CompOp::Like:
      case CompOp::NotLike:
      case CompOp::ILike:
      case CompOp::NotILike:
        analyze_like(c, env, lhs);
        return;
      case CompOp::IsNull:
      case CompOp::IsNotNull:
        analyze_null_check(c, env, lhs);
        return;
    }
  }

  void require_simple(const Expr& rhs, ErrorCode code, const char* what, const ConditionAst& c) {
    if (rhs.kind != ExprKind::Literal)
      fail(code, std::string(what) + " must be a plain constant", c.line, c.col);
  }

  void analyze_equality(const ConditionAst& c, ClauseEnv env, BoundLhs& lhs, bool negative) {
    Value v = coerce_rhs(lhs.type, fold_rhs(*c.rhs[0]), *c.rhs[0]);
    bool simple = c.rhs[0]->kind == ExprKind::Literal;
    AnalyzedCondition cond = base_condition(c, env);
    cond.lhs = std::move(lhs.expr);
    const Shape& s = lhs.shape;

    if (negative) {
      bool clear_shape = s.kind == Shape::BareColumn || s.kind == Shape::Wrapped ||
                         s.kind == Shape::CaseWrapped;
      if (!clear_shape || !s.clean || !simple)
        fail(ErrorCode::UnclearNegative, "negative conditions must be clear", c.line, c.col);
      cond.kind = ConditionKind::NegEq;
      cond.clear = true;
      cond.values = {std::move(v)};
      cond.seed_column = s.seed_column;
      cond.float_column = s.column;
      cond.string_fn = s.string_fn;
      cond.case_fn = s.kind == Shape::CaseWrapped;
      out_.conditions.push_back(std::move(cond));
      return;
    }

    switch (s.kind) {
      case Shape::RangeFn: {
        if (!s.clean)
          fail(ErrorCode::UnclearRange, "range conditions must be clear", c.line, c.col);
        auto [lo, hi] = range_fn_cell(s, v, c);
        cond.kind = ConditionKind::PosRange;
        cond.clear = true;
        cond.values = {std::move(lo), std::move(hi)};
        cond.seed_column = s.seed_column;
        cond.float_column = s.column;
        cond.lhs = s.range_col->clone();  // evaluated as a range over the column
        break;
      }
      case Shape::DerivedFn:
        if (!s.clean) {
          cond.kind = ConditionKind::PosEq;
          cond.seed_source = SeedSource::FloatColumn;
          cond.seed_column = schema().columns[static_cast<size_t>(s.column)].name;
          cond.float_column = s.column;
          cond.values = {std::move(v)};
          break;
        }
        cond.kind = ConditionKind::PosEq;
        cond.clear = true;
        cond.values = {std::move(v)};
        cond.seed_column = s.seed_column;  // derived column "fn(col)"
        cond.float_column = s.column;
        break;
      case Shape::CaseWrapped:
        // Case changes float the raw column so every case spelling seeds alike.
        cond.kind = ConditionKind::PosEq;
        cond.clear = s.clean && simple;
        cond.case_fn = true;
        cond.seed_source = SeedSource::FloatColumn;
        cond.seed_column = s.seed_column;
        cond.float_column = s.column;
        cond.values = {std::move(v)};
        break;
      case Shape::Wrapped:
        cond.kind = ConditionKind::PosEq;
        cond.string_fn = s.string_fn;
        cond.values = {std::move(v)};
        cond.seed_column = s.seed_column;
        cond.float_column = s.column;
        if (s.clean && simple) {
          cond.clear = true;
        } else {
          cond.seed_source = SeedSource::FloatColumn;
        }
        break;
      case Shape::BareColumn:
        cond.kind = ConditionKind::PosEq;
        cond.values = {std::move(v)};
        cond.seed_column = s.seed_column;
        cond.float_column = s.column;
        if (s.clean && simple) {
          cond.clear = true;
        } else {
          cond.seed_source = SeedSource::FloatColumn;
        }
        break;
      case Shape::Other:
        if (s.column == kNoColumn)
          fail(ErrorCode::ConstantCondition, "condition references no column", c.line, c.col);
        if (s.column == kMultiColumn)
          fail(ErrorCode::MultiColumnCondition, "condition references more than one column",
               c.line, c.col);
        cond.kind = ConditionKind::PosEq;
        cond.seed_source = SeedSource::FloatColumn;
        cond.seed_column = s.seed_column;
        cond.float_column = s.column;
        cond.values = {std::move(v)};
        break;
    }
    out_.conditions.push_back(std::move(cond));
  }

  void check_range_lhs(const BoundLhs& lhs, const ConditionAst& c) {
    if (!(numeric_kind(lhs.type) || lhs.type == ValueType::DateTime))
      fail(ErrorCode::TypeMismatch, "inequalities need a numeric or datetime column", c.line,
           c.col);
    if (lhs.shape.column == kNoColumn)
      fail(ErrorCode::ConstantCondition, "condition references no column", c.line, c.col);
    if (lhs.shape.column == kMultiColumn)
      fail(ErrorCode::MultiColumnCondition, "condition references more than one column", c.line,
           c.col);
    if (lhs.shape.kind != Shape::BareColumn || !lhs.shape.clean)
      fail(ErrorCode::UnclearRange, "range conditions must be clear", c.line, c.col);
  }

  std::pair<Value, Value> snap_range(ValueType t, const Value& lo, const Value& hi,
                                     const ConditionAst& c) {
    if (t == ValueType::DateTime) {
      DateTime lod = std::get<DateTime>(lo);
      DateTime hid = std::get<DateTime>(hi);
      auto cell = datetime_cell(lod, hid);
      if (!cell)
        fail(ErrorCode::RangeNotSnapped,
             "range is not snapped; " + suggest_datetime_ranges(lod, hid), c.line, c.col);
      return {lo, Value{cell->first}};
    }
    double lod = *as_real(lo);
    double hid = *as_real(hi);
    NumericRangeCheck check = check_numeric_range(lod, hid);
    if (!check.ok)
      fail(ErrorCode::RangeNotSnapped, "range is not snapped; " + check.suggestion, c.line,
           c.col);
    return {lo, hi};
  }

  void analyze_between(const ConditionAst& c, ClauseEnv env, BoundLhs& lhs, bool negative) {
    check_range_lhs(lhs, c);
    require_simple(*c.rhs[0], ErrorCode::UnclearRange, "range bounds", c);
    require_simple(*c.rhs[1], ErrorCode::UnclearRange, "range bounds", c);
    Value lo = coerce_rhs(lhs.type, fold_rhs(*c.rhs[0]), *c.rhs[0]);
    Value hi = coerce_rhs(lhs.type, fold_rhs(*c.rhs[1]), *c.rhs[1]);
    if (is_null(lo) || is_null(hi))
      fail(ErrorCode::TypeMismatch, "range bounds cannot be NULL", c.line, c.col);

    AnalyzedCondition cond = base_condition(c, env);
    cond.lhs = std::move(lhs.expr);
    cond.seed_column = lhs.shape.seed_column;
    cond.float_column = lhs.shape.column;
    cond.clear = true;

    if (compare(lo, hi) == 0) {  // BETWEEN x AND x is the equality
      cond.kind = negative ? ConditionKind::NegEq : ConditionKind::PosEq;
      cond.values = {std::move(lo)};
      out_.conditions.push_back(std::move(cond));
      return;
    }
    auto [lo2, hi2] = snap_range(lhs.type == ValueType::DateTime ? ValueType::DateTime
                                                                 : ValueType::Real,
                                 lo, hi, c);
    cond.kind = negative ? ConditionKind::NegRange : ConditionKind::PosRange;
    cond.values = {std::move(lo2), std::move(hi2)};
    out_.conditions.push_back(std::move(cond));
  }

  void pair_inequalities(std::vector<PendingIneq>& pending, ClauseEnv env) {
    std::vector<std::string> order;
    for (const PendingIneq& p : pending)
      if (std::find(order.begin(), order.end(), p.key) == order.end()) order.push_back(p.key);
    for (const std::string& key : order) {
      const PendingIneq* lower = nullptr;
      const PendingIneq* upper = nullptr;
      int lowers = 0, uppers = 0;
      for (const PendingIneq& p : pending) {
        if (p.key != key) continue;
        if (p.is_lower) {
          lowers++;
          lower = &p;
        } else {
          uppers++;
          upper = &p;
        }
      }
      const PendingIneq* first = lower ? lower : upper;
      if (lowers != 1 || uppers != 1)
        fail(ErrorCode::RangeUnbounded,
             "the range on " + quoted(key) + " needs exactly one lower and one upper bound",
             first->line, first->col);

      ConditionAst fake;  // position carrier for snap errors
      fake.line = lower->line;
      fake.col = lower->col;
      AnalyzedCondition cond;
      cond.stage = env.stage;
      cond.origin = env.origin;
      cond.display = lower->display + " and " + upper->display;
      cond.line = lower->line;
      cond.col = lower->col;
      cond.lhs = lower->lhs->clone();
      cond.seed_column = lower->shape.seed_column;
      cond.float_column = lower->shape.column;
      cond.clear = true;
      auto [lo, hi] = snap_range(lower->lhs_type, lower->bound, upper->bound, fake);
      cond.kind = ConditionKind::PosRange;
      cond.values = {std::move(lo), std::move(hi)};
      out_.conditions.push_back(std::move(cond));
    }
  }

  std::pair<Value, Value> range_fn_cell(const Shape& s, const Value& v, const ConditionAst& c) {
    if (s.range_fn == "year") {
      auto y = as_integer(v);
      if (!y || (type_of(v) == ValueType::Real &&
                 std::get<double>(v) != static_cast<double>(*y)))
        fail(ErrorCode::TypeMismatch, "year() compares against an integer", c.line, c.col);
      CivilTime lo{static_cast<int>(*y), 1, 1, 0, 0, 0};
      CivilTime hi{static_cast<int>(*y) + 1, 1, 1, 0, 0, 0};
      return {Value{datetime_from_civil(lo)}, Value{datetime_from_civil(hi)}};
    }
    if (s.range_fn == "date_trunc") {
      if (type_of(v) != ValueType::DateTime)
        fail(ErrorCode::TypeMismatch, "date_trunc() compares against a datetime", c.line, c.col);
      DateTime d = std::get<DateTime>(v);
      if (!on_boundary(d, s.unit))
        fail(ErrorCode::RangeNotSnapped,
             "value is not on a " + std::string(unit_name(s.unit)) + " boundary", c.line, c.col);
      return {v, Value{add_unit(d, s.unit)}};
    }
    auto x = as_real(v);
    if (!x) fail(ErrorCode::TypeMismatch, "condition value does not match the column type",
                 c.line, c.col);
    auto cell = numeric_fn_cell(s.range_fn, s.precision, *x);
    if (!cell)
      fail(ErrorCode::RangeNotSnapped,
           "value does not sit on the output grid of " + s.range_fn + "()", c.line, c.col);
    return {Value{cell->first}, Value{cell->second}};
  }

  void analyze_in(const ConditionAst& c, ClauseEnv env, BoundLhs& lhs, bool negative) {
    const Shape& s = lhs.shape;
    if (s.column == kNoColumn)
      fail(ErrorCode::ConstantCondition, "condition references no column", c.line, c.col);
    if (s.column == kMultiColumn)
      fail(ErrorCode::MultiColumnCondition, "condition references more than one column", c.line,
           c.col);
    bool clear_shape = (s.kind == Shape::BareColumn || s.kind == Shape::Wrapped ||
                        s.kind == Shape::CaseWrapped) &&
                       s.clean;
    if (!clear_shape)
      fail(negative ? ErrorCode::UnclearNegative : ErrorCode::UnclearIn,
           negative ? "negative conditions must be clear" : "the IN clause must be clear",
           c.line, c.col);

    std::vector<Value> elements;
    for (const ExprPtr& r : c.rhs) {
      if (r->kind != ExprKind::Literal)
        fail(negative ? ErrorCode::UnclearNegative : ErrorCode::UnclearIn,
             "IN list elements must be plain constants", c.line, c.col);
      Value v = coerce_rhs(lhs.type, fold_rhs(*r), *r);
      bool duplicate = false;
      for (const Value& seen : elements)
        if (type_of(seen) == type_of(v) && equals(seen, v)) duplicate = true;
      if (!duplicate) elements.push_back(std::move(v));
    }

    if (negative) {  // NOT IN is the conjunction of clear negative equalities
      for (Value& v : elements) {
        AnalyzedCondition cond = base_condition(c, env);
        cond.kind = ConditionKind::NegEq;
        cond.clear = true;
        cond.lhs = lhs.expr->clone();
        cond.values = {std::move(v)};
        cond.seed_column = s.seed_column;
        cond.float_column = s.column;
        cond.string_fn = s.string_fn;
        cond.case_fn = s.kind == Shape::CaseWrapped;
        out_.conditions.push_back(std::move(cond));
      }
      return;
    }

    AnalyzedCondition cond = base_condition(c, env);
    cond.lhs = std::move(lhs.expr);
    cond.seed_column = s.seed_column;
    cond.float_column = s.column;
    cond.string_fn = s.string_fn;
    cond.case_fn = s.kind == Shape::CaseWrapped;
    if (elements.size() == 1) {  // IN (x) is the equality
      cond.kind = ConditionKind::PosEq;
      if (s.kind == Shape::CaseWrapped) {
        cond.seed_source = SeedSource::FloatColumn;
        cond.clear = true;
      } else {
        cond.clear = true;
      }
      cond.values = std::move(elements);
      out_.conditions.push_back(std::move(cond));
      return;
    }
    cond.kind = ConditionKind::In;
    cond.clear = true;
    // Per-clause layer: floated values of the wrapped expression for
    // character-removing wrappers, of the raw column otherwise.
    cond.seed_source =
        s.kind == Shape::Wrapped ? SeedSource::FloatExpr : SeedSource::FloatColumn;
    cond.values = std::move(elements);
    out_.conditions.push_back(std::move(cond));
  }

  void analyze_like(const ConditionAst& c, ClauseEnv env, BoundLhs& lhs) {
    bool negative = c.op == CompOp::NotLike || c.op == CompOp::NotILike;
    bool fold = c.op == CompOp::ILike || c.op == CompOp::NotILike;
    if (lhs.type != ValueType::Text && lhs.type != ValueType::Null)
      fail(ErrorCode::TypeMismatch, "LIKE needs a text column", c.line, c.col);
    const Shape& s = lhs.shape;
    if (s.column == kNoColumn)
      fail(ErrorCode::ConstantCondition, "condition references no column", c.line, c.col);
    if (s.column == kMultiColumn)
      fail(ErrorCode::MultiColumnCondition, "condition references more than one column", c.line,
           c.col);
    bool clear_shape = (s.kind == Shape::BareColumn || s.kind == Shape::Wrapped ||
                        s.kind == Shape::CaseWrapped) &&
                       s.clean;
    if (!clear_shape) fail(ErrorCode::UnclearLike, "the LIKE clause must be clear", c.line, c.col);
    if (c.rhs[0]->kind != ExprKind::Literal || type_of(c.rhs[0]->literal) != ValueType::Text)
      fail(ErrorCode::UnclearLike, "the LIKE pattern must be a plain text constant", c.line,
           c.col);

    AnalyzedCondition cond = base_condition(c, env);
    cond.kind = negative ? ConditionKind::NotLike : ConditionKind::Like;
    cond.clear = true;
    cond.fold_case = fold;
    cond.lhs = std::move(lhs.expr);
    cond.seed_column = s.seed_column;
    cond.float_column = s.column;
    cond.string_fn = s.string_fn;
    cond.case_fn = s.kind == Shape::CaseWrapped;
    cond.pattern = normalize_like(std::get<std::string>(c.rhs[0]->literal), c.escape, fold);
    out_.conditions.push_back(std::move(cond));
  }

  void analyze_null_check(const ConditionAst& c, ClauseEnv env, BoundLhs& lhs) {
    const Shape& s = lhs.shape;
    if (s.column == kNoColumn)
      fail(ErrorCode::ConstantCondition, "condition references no column", c.line, c.col);
    if (s.column == kMultiColumn)
      fail(ErrorCode::MultiColumnCondition, "condition references more than one column", c.line,
           c.col);
    // upper/lower preserve NULL-ness, so the wrapper is dropped entirely and
    // both spellings seed identically.
    bool clear_shape = (s.kind == Shape::BareColumn || s.kind == Shape::Wrapped ||
                        s.kind == Shape::CaseWrapped) &&
                       s.clean;
    if (!clear_shape)
      fail(ErrorCode::UnclearNegative, "IS NULL checks must be clear", c.line, c.col);
    AnalyzedCondition cond = base_condition(c, env);
    cond.kind = c.op == CompOp::IsNull ? ConditionKind::IsNull : ConditionKind::IsNotNull;
    cond.clear = true;
    cond.lhs = std::move(lhs.expr);
    cond.seed_column = s.seed_column;
    cond.float_column = s.column;
    if (s.kind == Shape::Wrapped) cond.string_fn = s.string_fn;
    out_.conditions.push_back(std::move(cond));
  }

  // ----- select items, keys, having, order ---------------------------------

  void analyze_items() {
    for (const SelectItem& raw_item : ast_.items) {
      if (raw_item.star) {
        expand_star();
        continue;
      }
      AnalyzedItem item;
      std::string original = to_sql(*raw_item.expr);
      item.name = !raw_item.alias.empty()
                      ? raw_item.alias
                      : (raw_item.expr->kind == ExprKind::ColumnRef ? raw_item.expr->column
                                                                    : original);
      item.aggregate = contains_aggregate(*raw_item.expr);
      BindCtx ctx = outer_ctx(item.aggregate ? AggPolicy::Anon : AggPolicy::Forbid,
                              "outside the select list");
      item.expr = prepare_outer(*raw_item.expr, ctx);
      if (item.aggregate) check_columns_inside_aggregates(*item.expr);
      item_displays_.push_back(original);
      out_.items.push_back(std::move(item));
    }
    if (out_.items.empty()) fail(ErrorCode::SyntaxError, "empty select list");
  }

  void expand_star() {
    if (flattened_) {
      for (const auto& [name, expr] : exports_) {
        AnalyzedItem item;
        item.name = name;
        item.expr = expr->clone();
        normalize_tree(item.expr);
        BindCtx ctx{&base_rel_, &sub_aliases_, AggPolicy::Forbid, "here", false};
        bind_expr(*item.expr, ctx);
        item_displays_.push_back(name);
        out_.items.push_back(std::move(item));
      }
      return;
    }
    const RelationInfo& rel = outer_rel();
    for (size_t i = 0; i < rel.names.size(); i++) {
      if (rel.names[i].empty()) continue;  // hidden HAVING outputs stay hidden
      AnalyzedItem item;
      item.name = rel.names[i];
      item.expr = make_column(rel.names[i]);
      item.expr->bound_index = static_cast<int>(i);
      item_displays_.push_back(rel.names[i]);
      out_.items.push_back(std::move(item));
    }
  }

  void check_columns_inside_aggregates(const Expr& e, bool inside = false) {
    if (e.kind == ExprKind::Aggregate) {
      inside = true;
    } else if (e.kind == ExprKind::ColumnRef && !inside) {
      fail_at(ErrorCode::AggregateMisuse,
              quoted(e.column) + " must appear in GROUP BY or inside an aggregate", e);
    }
    for (const ExprPtr& a : e.args) check_columns_inside_aggregates(*a, inside);
  }

  int add_key(ExprPtr bound, std::string display) {
    std::string text = to_sql(*bound);
    for (size_t i = 0; i < key_texts_.size(); i++)
      if (key_texts_[i] == text) return static_cast<int>(i);
    AnalyzedGroupKey key;
    key.expr = std::move(bound);
    key.display = std::move(display);
    key.implicit = implicit_of(*key.expr);
    key.implicit.display = key.display;
    key_texts_.push_back(std::move(text));
    out_.keys.push_back(std::move(key));
    return static_cast<int>(out_.keys.size() - 1);
  }

  void analyze_group_keys() {
    for (const GroupKey& gk : ast_.group_by) {
      if (gk.position > 0) {
        if (gk.position > static_cast<int>(out_.items.size()))
          fail(ErrorCode::SyntaxError, "GROUP BY position out of range");
        AnalyzedItem& item = out_.items[static_cast<size_t>(gk.position - 1)];
        if (item.aggregate)
          fail(ErrorCode::AggregateMisuse, "GROUP BY cannot reference an aggregate");
        add_key(item.expr->clone(), item_displays_[static_cast<size_t>(gk.position - 1)]);
        continue;
      }
      if (contains_aggregate(*gk.expr))
        fail_at(ErrorCode::AggregateMisuse, "GROUP BY cannot reference an aggregate", *gk.expr);
      // A bare name prefers the relation column, then a select alias.
      if (gk.expr->kind == ExprKind::ColumnRef && gk.expr->table.empty() &&
          !outer_name_exists(gk.expr->column)) {
        bool matched = false;
        for (size_t i = 0; i < out_.items.size(); i++) {
          if (out_.items[i].name == gk.expr->column) {
            if (out_.items[i].aggregate)
              fail_at(ErrorCode::AggregateMisuse, "GROUP BY cannot reference an aggregate",
                      *gk.expr);
            add_key(out_.items[i].expr->clone(), item_displays_[i]);
            matched = true;
            break;
          }
        }
        if (matched) continue;
      }
      std::string display = to_sql(*gk.expr);
      BindCtx ctx = outer_ctx(AggPolicy::Forbid, "in GROUP BY");
      add_key(prepare_outer(*gk.expr, ctx), std::move(display));
    }
  }

  /// Whether a bare name resolves as a column from the outer query's view.
  bool outer_name_exists(const std::string& name) {
    if (flattened_) {
      for (const auto& [n, e] : exports_)
        if (n == name) return true;
      return false;
    }
    return outer_rel().find(name).has_value();
  }

  void analyze_outer_having() {
    if (ast_.having.empty()) return;
    bool uid_grouped = false;
    if (ast_.group_by.size() >= 1 && out_.keys.size() == 1 &&
        out_.keys[0].expr->kind == ExprKind::ColumnRef) {
      int idx = out_.keys[0].expr->bound_index;
      if (out_.uid_stage)
        uid_grouped = out_.uid_outputs[static_cast<size_t>(idx)].is_uid;
      else
        uid_grouped = idx == static_cast<int>(schema().uid_index);
    }
    if (!uid_grouped)
      fail(ErrorCode::HavingNotUidGrouped, "HAVING requires GROUP BY the user id column",
           ast_.having[0].line, ast_.having[0].col);
    analyze_clause(ast_.having, {CondStage::Bucket, ClauseOrigin::Having, true});
  }

  void finalize_item_keys() {
    bool any_agg = false;
    for (const AnalyzedItem& item : out_.items) any_agg = any_agg || item.aggregate;
    if (!any_agg && ast_.group_by.empty() && ast_.having.empty()) {
      out_.row_listing = true;
      for (size_t i = 0; i < out_.items.size(); i++) {
        AnalyzedItem& item = out_.items[i];
        item.key_index = add_key(item.expr->clone(), item_displays_[i]);
      }
      return;
    }
    for (size_t i = 0; i < out_.items.size(); i++) {
      AnalyzedItem& item = out_.items[i];
      if (item.aggregate) continue;
      std::string text = to_sql(*item.expr);
      int found = -1;
      for (size_t k = 0; k < key_texts_.size(); k++)
        if (key_texts_[k] == text) found = static_cast<int>(k);
      if (found < 0)
        fail_at(ErrorCode::AggregateMisuse,
                quoted(item.name) + " must appear in GROUP BY or inside an aggregate",
                *item.expr);
      item.key_index = found;
    }
  }

  void analyze_order() {
    for (const OrderKey& ok : ast_.order_by) {
      OrderSpec spec;
      spec.ascending = ok.ascending;
      if (ok.position > 0) {
        if (ok.position > static_cast<int>(out_.items.size()))
          fail(ErrorCode::SyntaxError, "ORDER BY position out of range");
        spec.item = ok.position - 1;
        out_.order.push_back(spec);
        continue;
      }
      std::string text = to_sql(*ok.expr);
      int found = -1;
      for (size_t i = 0; i < out_.items.size(); i++) {
        if (out_.items[i].name == text || item_displays_[i] == text) found = static_cast<int>(i);
      }
      if (found < 0)
        fail_at(ErrorCode::UnknownColumn, "ORDER BY must name an output column", *ok.expr);
      spec.item = found;
      out_.order.push_back(spec);
    }
  }

  // ----- implicit condition recipes ----------------------------------------

  ImplicitSpec implicit_of(const Expr& e) {
    ImplicitSpec spec;
    if (e.kind == ExprKind::Function && e.fn == "concat") {
      spec.mode = ImplicitMode::Concat;
      flatten_concat(e, spec.constituents);
      return spec;
    }
    CondStage stage = out_.uid_stage ? CondStage::UidRows : CondStage::RawRows;
    Shape s = classify_lhs(e, stage, ValueType::Null);
    if (s.column == kNoColumn) {
      spec.mode = ImplicitMode::Skip;
      return spec;
    }
    if (s.column == kMultiColumn)
      fail_at(ErrorCode::MultiColumnCondition,
              "grouped expression references more than one column", e);
    spec.seed_column = s.seed_column;
    spec.float_column = s.column;
    switch (s.kind) {
      case Shape::Wrapped:
        if (s.clean) {
          spec.mode = ImplicitMode::ClearWrapped;
          spec.string_fn = s.string_fn;
        } else {
          spec.mode = ImplicitMode::FloatColumn;
        }
        break;
      case Shape::RangeFn:
        if (s.clean) {
          spec.mode = ImplicitMode::CellFn;
          spec.cell_fn = s.range_fn;
          spec.precision = s.precision;
          spec.cell_unit = s.unit;
        } else {
          spec.mode = ImplicitMode::FloatColumn;
        }
        break;
      case Shape::DerivedFn:
        if (s.clean) {
          spec.mode = ImplicitMode::Derived;
          spec.seed_column = s.seed_column;  // derived column name "fn(col)"
          spec.float_column = s.column;
        } else {
          spec.mode = ImplicitMode::FloatColumn;
        }
        break;
      default:
        spec.mode = ImplicitMode::FloatColumn;
        break;
    }
    return spec;
  }

  void flatten_concat(const Expr& e, std::vector<ImplicitSpec>& out) {
    for (const ExprPtr& a : e.args) {
      if (a->kind == ExprKind::Function && a->fn == "concat") {
        flatten_concat(*a, out);
        continue;
      }
      std::set<int> rel_cols;
      collect_bound_columns(*a, rel_cols);
      if (rel_cols.empty()) continue;  // literal pieces carry no layer
      ImplicitSpec sub = implicit_of(*a);
      if (sub.mode == ImplicitMode::Skip) continue;
      // Constituents always float their backing column.
      if (sub.mode == ImplicitMode::Concat) continue;  // flattened above
      sub.mode = ImplicitMode::FloatColumn;
      sub.display = to_sql(*a);
      out.push_back(std::move(sub));
    }
  }

  // ----- state -------------------------------------------------------------

  const QueryAst& ast_;
  const std::map<std::string, Table>& tables_;
  AnalyzedQuery out_;
  RelationInfo base_rel_;
  RelationInfo uid_rel_;
  std::set<std::string> sub_aliases_;
  std::set<std::string> outer_aliases_;
  bool flattened_ = false;
  std::vector<std::pair<std::string, ExprPtr>> exports_;
  std::vector<std::string> item_displays_;
  std::vector<std::string> key_texts_;
};

}  // namespace

AnalyzedQuery analyze(const QueryAst& ast, const std::map<std::string, Table>& tables) {
  return Analyzer(ast, tables).run();
}

}  // namespace anonql

#include "anonql/layers.hpp"

#include <cassert>
#include <cctype>

#include "anonql/condition.hpp"

namespace anonql {
namespace {

/// [min, max, distinct-count] summary of an ordered distinct value list.
std::vector<std::string> float_triplet(const std::vector<std::string>& values) {
  if (values.empty()) return {":null", ":null", "0"};
  return {values.front(), values.back(), std::to_string(values.size())};
}

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

NoiseLayer make_layer(std::vector<std::string> parts, LayerOrigin origin, int condition_index,
                      bool emit_static, bool emit_dynamic) {
  NoiseLayer layer;
  layer.parts = std::move(parts);
  layer.origin = origin;
  layer.condition_index = condition_index;
  layer.emit_static = emit_static;
  layer.emit_dynamic = emit_dynamic;
  return layer;
}

/// Seed components naming the half-open cell a bucket value denotes under a
/// range-mapping function.
std::vector<std::string> cell_bounds(const ImplicitSpec& spec, const Value& bucket_value) {
  if (is_null(bucket_value)) return {":null", ":null", "1"};
  if (spec.cell_fn == "year") {
    auto y = as_integer(bucket_value);
    if (y) {
      CivilTime lo{static_cast<int>(*y), 1, 1, 0, 0, 0};
      CivilTime hi{static_cast<int>(*y) + 1, 1, 1, 0, 0, 0};
      return {canonical(Value{datetime_from_civil(lo)}),
              canonical(Value{datetime_from_civil(hi)})};
    }
  } else if (spec.cell_fn == "date_trunc") {
    if (type_of(bucket_value) == ValueType::DateTime) {
      DateTime lo = std::get<DateTime>(bucket_value);
      return {canonical(bucket_value), canonical(Value{add_unit(lo, spec.cell_unit)})};
    }
  } else {
    auto c = as_real(bucket_value);
    if (c) {
      if (auto cell = numeric_fn_cell(spec.cell_fn, spec.precision, *c)) {
        return {canonical(Value{cell->first}), canonical(Value{cell->second})};
      }
    }
  }
  // Off-grid or mistyped outputs cannot name a cell; seed them as the single
  // value they are.
  std::string c = canonical(bucket_value);
  return {c, c, "1"};
}

}  // namespace

std::vector<NoiseLayer> condition_layers(const std::string& table, const AnalyzedCondition& cond,
                                         int condition_index, const FloatProvider& floats) {
  std::vector<NoiseLayer> out;
  auto add = [&](std::vector<std::string> tail, LayerOrigin origin, bool emit_static = true,
                 bool emit_dynamic = true) {
    std::vector<std::string> parts = {table, cond.seed_column};
    for (std::string& p : tail) parts.push_back(std::move(p));
    out.push_back(make_layer(std::move(parts), origin, condition_index, emit_static, emit_dynamic));
  };
  auto float_values = [&]() {
    return cond.seed_source == SeedSource::FloatExpr ? floats.expr_floats(cond)
                                                     : floats.column_floats(cond.float_column);
  };

  switch (cond.kind) {
    case ConditionKind::PosEq:
      if (cond.seed_source == SeedSource::Sql) {
        std::string c = canonical(cond.values[0]);
        add({c, c, "1"}, LayerOrigin::Condition);
      } else {
        add(float_triplet(float_values()), LayerOrigin::Condition);
      }
      break;
    case ConditionKind::NegEq:
      add({canonical(cond.values[0])}, LayerOrigin::Condition);
      break;
    case ConditionKind::PosRange:
      add({canonical(cond.values[0]), canonical(cond.values[1])}, LayerOrigin::Condition);
      break;
    case ConditionKind::NegRange:
      add({canonical(cond.values[0]), canonical(cond.values[1]), ":<>"}, LayerOrigin::Condition);
      break;
    case ConditionKind::In: {
      // One static-only layer floating the clause as a whole defeats chaff
      // built from per-element seed differences; per-element dynamic layers
      // keep element sets from cancelling across users.
      add(float_values(), LayerOrigin::InClause, /*emit_static=*/true, /*emit_dynamic=*/false);
      for (const Value& v : cond.values) {
        add({canonical(v)}, LayerOrigin::InElement, /*emit_static=*/false, /*emit_dynamic=*/true);
      }
      break;
    }
    case ConditionKind::Like:
    case ConditionKind::NotLike: {
      const bool negated = cond.kind == ConditionKind::NotLike;
      auto tag = [&](std::vector<std::string> tail) {
        if (negated) tail.push_back(":not");
        return tail;
      };
      add(tag({cond.pattern.canonical}), LayerOrigin::Condition);
      for (const WildcardDescriptor& w : cond.pattern.descriptors) {
        add(tag({std::to_string(w.length), std::to_string(w.index), std::string(1, w.symbol)}),
            LayerOrigin::Wildcard);
      }
      break;
    }
    case ConditionKind::IsNull:
      add({":null"}, LayerOrigin::Condition);
      break;
    case ConditionKind::IsNotNull:
      add({":notnull"}, LayerOrigin::Condition);
      break;
  }

  if (cond.string_fn) {
    // Character-removing wrappers earn a dynamic-only layer so two spellings
    // matching the same rows still differ in noise per user set.
    std::vector<std::string> tail = {cond.string_fn->name};
    for (const std::string& c : cond.string_fn->constants) tail.push_back(c);
    if (cond.negative()) tail.push_back(":<>");
    add(std::move(tail), LayerOrigin::StringFn, /*emit_static=*/false, /*emit_dynamic=*/true);
  }
  if (cond.case_fn && cond.negative() &&
      (cond.kind == ConditionKind::NegEq || cond.kind == ConditionKind::NotLike)) {
    // Negated case-folding comparisons get a static-only layer keyed by the
    // folded constant: excluding 'Bob' and excluding 'bob' exclude different
    // rows yet share the bare layer, so the fold must leave a trace.
    std::string folded = cond.kind == ConditionKind::NotLike
                             ? lower_ascii(cond.pattern.canonical)
                             : lower_ascii(canonical(cond.values[0]));
    add({std::move(folded), ":<>", ":lower"}, LayerOrigin::CaseFn, /*emit_static=*/true,
        /*emit_dynamic=*/false);
  }
  return out;
}

std::vector<NoiseLayer> implicit_layers(const std::string& table, const ImplicitSpec& spec,
                                        const Value& bucket_value, const FloatProvider& floats) {
  std::vector<NoiseLayer> out;
  auto add = [&](std::vector<std::string> tail, LayerOrigin origin, bool emit_static = true,
                 bool emit_dynamic = true) {
    std::vector<std::string> parts = {table, spec.seed_column};
    for (std::string& p : tail) parts.push_back(std::move(p));
    out.push_back(make_layer(std::move(parts), origin, -1, emit_static, emit_dynamic));
  };

  switch (spec.mode) {
    case ImplicitMode::Skip:
      break;
    case ImplicitMode::Concat:
      for (const ImplicitSpec& sub : spec.constituents) {
        auto layers = implicit_layers(table, sub, bucket_value, floats);
        for (NoiseLayer& l : layers) out.push_back(std::move(l));
      }
      break;
    case ImplicitMode::FloatColumn:
      add(float_triplet(floats.column_floats(spec.float_column)), LayerOrigin::Implicit);
      break;
    case ImplicitMode::ClearWrapped: {
      std::string v = canonical(bucket_value);
      add({v, v, "1"}, LayerOrigin::Implicit);
      if (spec.string_fn) {
        std::vector<std::string> tail = {spec.string_fn->name};
        for (const std::string& c : spec.string_fn->constants) tail.push_back(c);
        add(std::move(tail), LayerOrigin::StringFn, /*emit_static=*/false, /*emit_dynamic=*/true);
      }
      break;
    }
    case ImplicitMode::Derived: {
      std::string v = canonical(bucket_value);
      add({v, v, "1"}, LayerOrigin::Implicit);
      break;
    }
    case ImplicitMode::CellFn:
      add(cell_bounds(spec, bucket_value), LayerOrigin::Implicit);
      break;
  }
  return out;
}

NoiseLayer table_layer(const std::string& table) {
  return make_layer({table}, LayerOrigin::Table, -1, /*emit_static=*/false, /*emit_dynamic=*/true);
}

LayerSet assemble(std::vector<NoiseLayer> layers, uint64_t uid_term_value, std::string_view salt) {
  for (NoiseLayer& l : layers) {
    l.static_seed = static_seed(l.parts, salt);
    l.dynamic_seed = l.static_seed ^ uid_term_value;
  }
  LayerSet set;
  set.layers = std::move(layers);
  set.uid_term_value = uid_term_value;
  return set;
}

}  // namespace anonql

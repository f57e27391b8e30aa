#pragma once

#include <span>

#include "anonql/ast.hpp"
#include "anonql/table.hpp"

namespace anonql {

/// Evaluates a bound expression against one relation row. Column references
/// read row[bound_index]; aggregate nodes read agg_values[bound_index]
/// (filled in by the executor after anonymization). NULL propagates through
/// every operator and function; division by zero, sqrt of a negative and
/// failed text casts evaluate to NULL so no data-dependent error can escape.
/// Pass row = nullptr for constant folding; reaching a column then throws.
Value evaluate(const Expr& expr, const Row* row, std::span<const Value> agg_values = {});

/// Cast with the engine's runtime semantics (display-form to text, strict
/// parses from text with NULL on failure, round-half-away real to integer).
/// Assumes the source/target pair was validated; anything else yields NULL.
Value apply_cast(const Value& value, ValueType target);

}  // namespace anonql

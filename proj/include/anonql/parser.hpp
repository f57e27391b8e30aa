#pragma once

#include <string_view>

#include "anonql/ast.hpp"

namespace anonql {

/// Parses one statement of the supported dialect. Throws Error with a stable
/// code: SYNTAX_ERROR, UNKNOWN_FUNCTION, OR_NOT_ALLOWED or JOIN_NOT_ALLOWED.
QueryAst parse_query(std::string_view sql);

}  // namespace anonql

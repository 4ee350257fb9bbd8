#pragma once
// Small integer expression language shared by template placeholders and the
// structural HDL parser (constant ranges such as `[WIDTH-1:0]`).
//
// Grammar: ternary `?:`, `||`, `&&`, `== !=`, `< <= > >=`, `+ -`, `* / %`,
// unary `- + !`, parentheses, decimal literals, identifiers and the
// functions `clog2(x)`, `$clog2(x)`, `min(a,b)`, `max(a,b)`.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hivegen::expr {

using Lookup = std::function<std::optional<std::int64_t>(std::string_view)>;

/// Throws Error(Syntax) on malformed input, Error(UnassignedPlaceholder) on an
/// identifier the lookup cannot resolve, Error(Domain) on division by zero.
std::int64_t evaluate(std::string_view text, const Lookup& lookup);

/// Free identifiers referenced by the expression (function names excluded).
std::vector<std::string> identifiers(std::string_view text);

}  // namespace hivegen::expr

#pragma once

#include <string>
#include <string_view>

#include "hivegen/core/model.hpp"

namespace hivegen {

/// Strips `//` and `/* */` comments (outside string literals), collapses
/// whitespace runs to one space and trims both ends.
std::string canonicalize_source(std::string_view source);

/// SHA-256 of the raw bytes.
Digest sha256(std::string_view bytes);

/// SHA-256 of canonicalize_source(source).
Digest hash_block(std::string_view source);

}  // namespace hivegen

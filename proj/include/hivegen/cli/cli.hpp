#pragma once

#include <iosfwd>

namespace hivegen::cli {

/// Entry point of the `hivegen` tool. Returns 0 on success, 1 when a
/// pipeline fails and 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace hivegen::cli

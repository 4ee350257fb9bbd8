#pragma once
// Structural parser for the Verilog subset the pipeline emits and consumes:
// module headers (ANSI and non-ANSI ports, #() parameters), declarations,
// continuous assigns, always/initial blocks, generate regions and module
// instances. Expressions are not typed; only operator counts and identifier
// references are extracted.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hivegen/core/model.hpp"

namespace hivegen::verilog {

struct Connection {
  std::string port;  // empty for positional connections
  std::string expr;  // connected expression text, whitespace-normalized
  friend bool operator==(const Connection&, const Connection&) = default;
};

struct Instance {
  std::string module;
  std::string name;
  std::vector<Connection> connections;
  int line = 0;
};

struct Port {
  std::string name;
  Direction direction = Direction::Input;
  int width = 1;
  bool width_known = true;
  bool is_reg = false;
};

struct OperatorCounts {
  int add = 0;
  int sub = 0;
  int mul = 0;
  int shift = 0;
  int cmp = 0;
  int mux = 0;
  int logic = 0;

  [[nodiscard]] int total() const { return add + sub + mul + shift + cmp + mux + logic; }
};

struct Assign {
  std::string lhs;
  std::string rhs;
};

struct Module {
  std::string name;
  std::vector<Port> ports;
  std::map<std::string, std::int64_t> parameters;
  std::vector<Instance> instances;
  std::vector<Assign> assigns;
  OperatorCounts ops;
  bool sequential = false;  // contains an edge-triggered always block
  int register_bits = 0;    // bits assigned inside edge-triggered blocks
  int line = 0;

  [[nodiscard]] const Port* find_port(std::string_view port) const;
  [[nodiscard]] ModuleSpec to_spec() const;
};

struct Diagnostic {
  int line = 0;
  int column = 0;
  std::string message;
};

struct ParseResult {
  std::vector<Module> modules;
  std::vector<Diagnostic> errors;

  [[nodiscard]] bool ok() const { return errors.empty(); }
  [[nodiscard]] const Module* find(std::string_view name) const;
  [[nodiscard]] std::string error_text() const;
};

ParseResult parse(std::string_view source);

/// Identifiers referenced by a connection expression (`a[3:0]` -> {"a"}).
std::vector<std::string> referenced_nets(std::string_view expr);

/// Renders a module header: `module name (input [7:0] a, output y);`
std::string render_header(const ModuleSpec& spec);

/// Extracts the first fenced code block (```verilog ... ```) or, absent any
/// fence, returns the text from the first `module` to the last `endmodule`.
std::string extract_code(std::string_view llm_text);

}  // namespace hivegen::verilog

#pragma once
// Kernel DSL front end producing a data-flow graph.
//
//   kernel    := { statement }
//   statement := IDENT '=' operand [ OP operand ] ';'  |  'pass' ';'
//   operand   := IDENT | INTEGER | '-' operand
//   OP        := '+' | '-' | '*' | '<<' | '>>' | '<'
//
// Assignments without an operator copy a value (PASS node); unary minus is a
// SUB node. Identifiers never assigned anywhere in the kernel are inputs.
// Reading an identifier before its first assignment is an error. `#` starts
// a comment running to end of line.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hivegen::dse {

enum class Op { Pass, Add, Sub, Mul, Shift, Cmp };

std::string_view to_string(Op op);
std::optional<Op> parse_op(std::string_view name);

struct DfgNode {
  int id = 0;
  Op op = Op::Pass;
  std::string target;  // variable receiving the result
  int line = 0;
};

struct KernelDfg {
  std::vector<DfgNode> nodes;
  std::vector<std::pair<int, int>> edges;  // (src, dst), def-use order
  std::set<Op> op_set;
  std::vector<std::string> inputs;  // free identifiers, first-use order

  [[nodiscard]] std::size_t node_count() const { return nodes.size(); }
  [[nodiscard]] int count(Op op) const;
  /// Nodes on the longest dependency chain (0 for an empty graph).
  [[nodiscard]] int depth() const;
};

/// Throws Error(Syntax) with "line L, column C" and Error(UseBeforeDef).
KernelDfg extract_dfg(std::string_view kernel_source);

/// "{ADD, MUL, SUB}" style rendering in enum order.
std::string format_op_set(const std::set<Op>& ops);

nlohmann::json to_json(const KernelDfg& dfg);

}  // namespace hivegen::dse

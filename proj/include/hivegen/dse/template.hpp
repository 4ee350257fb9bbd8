#pragma once
// Parameterized accelerator templates: parameter domains, design rules and
// a skeleton hierarchy with `{expr}` placeholders.
//
// Skeleton strings may embed `{expr}` where expr is an integer expression
// over parameters and loop variables. A bare subset, enum or boolean
// parameter renders by name ("PASS, ADD, SUB", "true").

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/prompt.hpp"
#include "hivegen/dse/dfg.hpp"

namespace hivegen::dse {

enum class ParamKind { Int, Bool, Enum, Subset };

struct ParamDef {
  std::string name;
  ParamKind kind = ParamKind::Int;
  std::int64_t min = 0, max = 0;    // Int
  std::vector<std::string> values;  // Enum (value = index), Subset (value = bitmask)
  std::string description;

  [[nodiscard]] bool contains(std::int64_t v) const;
  [[nodiscard]] std::string render(std::int64_t v) const;
  [[nodiscard]] nlohmann::json to_value_json(std::int64_t v) const;
  /// Throws Error(InvalidArgument) on a type mismatch or unknown enum name.
  [[nodiscard]] std::int64_t from_value_json(const nlohmann::json& j) const;
  [[nodiscard]] std::string domain_text() const;
};

enum class RuleKind { OpCoverage, Capacity, Linear };

struct DesignRule {
  std::string name;
  RuleKind kind = RuleKind::Linear;
  // OpCoverage: ops supported are `param` (a subset parameter) or `ops`
  std::string param;
  std::vector<Op> ops;
  // Capacity: rows * cols >= ceil(node_count / unroll)
  std::string rows = "rows", cols = "cols", unroll = "1";
  // Linear: sum(coef * param) <cmp> rhs
  std::vector<std::pair<std::string, std::int64_t>> terms;
  std::string cmp = ">=";
  std::int64_t rhs = 0;
  std::string message;
};

using Loops = std::vector<std::pair<std::string, std::string>>;  // (var, count expr)

struct SkelPort {
  std::string name;
  Direction direction = Direction::Input;
  std::string width = "1";
};

struct SkelInstance {
  std::string module, name;
  Loops loops;
  std::string when;
  std::vector<std::pair<std::string, std::string>> connections;
};

struct SkelNet {
  std::string name, width = "1";
  Loops loops;
  std::string when;
};

struct SkelAssign {
  std::string lhs, rhs;
  Loops loops;
  std::string when;
};

struct SkelModule {
  std::string name;
  Loops loops;  // at most one variable for module families such as GPE_{i+1}
  std::string when;
  std::string description;
  std::vector<std::pair<std::string, std::string>> notes;  // (when, text) appended
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<SkelPort> ports;
  std::vector<SkelInstance> instances;
  std::vector<SkelNet> nets;
  std::vector<SkelAssign> assigns;
};

struct TemplateDef {
  std::string name;
  std::string description;
  std::vector<ParamDef> parameters;
  std::vector<DesignRule> design_rules;
  std::string root;
  std::vector<SkelModule> skeleton;

  [[nodiscard]] const ParamDef* find_param(std::string_view n) const;
};

/// Throws Error(InvalidArgument) on malformed documents and
/// Error(UnknownParameter) when a placeholder names no parameter.
TemplateDef template_from_json(const nlohmann::json& j);
TemplateDef load_template(const std::string& path);
/// Loads `<dir>/<name>.json`.
TemplateDef load_template_named(const std::string& dir, const std::string& name);

struct DesignConfig {
  std::string template_name;
  std::map<std::string, std::int64_t> assignment;
  friend bool operator==(const DesignConfig&, const DesignConfig&) = default;
};

/// {"template": name, "assignment": {param: value}} with names for subsets.
nlohmann::json to_json(const DesignConfig& c, const TemplateDef& t);
/// Throws Error(UnknownParameter) or Error(InvalidArgument).
DesignConfig config_from_json(const nlohmann::json& j, const TemplateDef& t);
/// JSON schema of a configuration for this template.
nlohmann::json config_schema(const TemplateDef& t);
/// "rows=2, cols=2, alu_ops={PASS, ADD, SUB}, pipelining=false"
std::string describe(const DesignConfig& c, const TemplateDef& t);

struct Conflict {
  std::string rule;
  std::string message;
  friend bool operator==(const Conflict&, const Conflict&) = default;
  friend auto operator<=>(const Conflict&, const Conflict&) = default;
};

/// Empty result means ok. Conflicts are sorted. Throws Error(InvalidArgument)
/// on a template mismatch and Error(UnknownParameter) for unknown names.
std::vector<Conflict> evaluate_config(const DesignConfig& c, const TemplateDef& t, const KernelDfg& dfg);

struct ExpandedModule {
  PromptModule prompt;
  std::vector<std::pair<std::string, int>> nets;  // (name, width)
  std::vector<std::pair<std::string, std::string>> assigns;
};

struct Expansion {
  std::string root;
  std::vector<ExpandedModule> modules;  // breadth-first from the root
  [[nodiscard]] const ExpandedModule* find(std::string_view name) const;
};

/// Throws Error(UnassignedPlaceholder) when the config lacks a value.
Expansion expand(const DesignConfig& c, const TemplateDef& t);
HierarchicalPrompt enhance_prompt(const DesignConfig& c, const TemplateDef& t);

}  // namespace hivegen::dse

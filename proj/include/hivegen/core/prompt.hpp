#pragma once
// Hierarchical prompt: the ordered, per-module description of a design that
// the prompt engines produce and the parsing engine consumes.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/model.hpp"

namespace hivegen {

struct PromptModule {
  std::string name;
  std::string description;
  std::vector<PortDecl> ports;
  std::map<std::string, std::int64_t> parameters;
  std::vector<InstanceRef> instances;
  int level = 0;  // distance from the top module

  friend bool operator==(const PromptModule&, const PromptModule&) = default;
};

struct HierarchicalPrompt {
  std::string design;
  std::string top;
  std::vector<PromptModule> modules;

  /// Deterministic text form handed to the generation model.
  [[nodiscard]] std::string render() const;
  [[nodiscard]] const PromptModule* find(std::string_view name) const;
  /// Hierarchy induced by the module list (first mention of each name).
  [[nodiscard]] DesignHierarchy to_hierarchy() const;

  friend bool operator==(const HierarchicalPrompt&, const HierarchicalPrompt&) = default;
};

/// Port list in header syntax: "input [3:0] in, input sel, output out".
std::string render_ports(const std::vector<PortDecl>& ports);

void to_json(nlohmann::json& j, const PromptModule& m);
void from_json(const nlohmann::json& j, PromptModule& m);
void to_json(nlohmann::json& j, const HierarchicalPrompt& p);
void from_json(const nlohmann::json& j, HierarchicalPrompt& p);

}  // namespace hivegen

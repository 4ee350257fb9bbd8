#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/prompt.hpp"

namespace hivegen::parse {

/// Live skeleton of one module: header, instance lines and a body marker.
struct SketchDoc {
  std::string module_name;
  std::vector<PortDecl> ports;
  std::map<std::string, std::int64_t> parameters;
  std::vector<InstanceRef> instance_lines;
  BodyState body_state = BodyState::Placeholder;
  std::int64_t revision = 0;

  [[nodiscard]] const InstanceRef* find_instance(std::string_view name) const;
  [[nodiscard]] ModuleSpec to_spec() const;

  friend bool operator==(const SketchDoc&, const SketchDoc&) = default;
};

using SketchSet = std::map<std::string, SketchDoc>;

inline constexpr std::string_view kBodyPlaceholder = "/* body block */";

SketchDoc make_sketch(const PromptModule& m);
SketchDoc make_sketch(const ModuleSpec& m);

/// Canonical layout:
///   module <name> [#(parameter P = v, ...)] (<ports>);
///     <module> <instance> (.<port>(<net>), ...);   one line per instance
///     /* body block */                              while a placeholder
///   endmodule
/// Instances without a known mapping render as `(.port(port))`.
std::string render_sketch(const SketchDoc& s);

/// Hierarchy induced by a sketch set rooted at `root`.
DesignHierarchy induced_hierarchy(const SketchSet& sketches, const std::string& root);

nlohmann::json to_json(const SketchDoc& s);
SketchDoc sketch_from_json(const nlohmann::json& j);

}  // namespace hivegen::parse

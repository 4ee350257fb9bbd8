#include "hivegen/parse/sketch.hpp"

#include "hivegen/core/json_io.hpp"

namespace hivegen::parse {

const InstanceRef* SketchDoc::find_instance(std::string_view name) const {
  for (const auto& i : instance_lines)
    if (i.instance_name == name) return &i;
  return nullptr;
}

ModuleSpec SketchDoc::to_spec() const {
  ModuleSpec s;
  s.name = module_name;
  s.ports = ports;
  s.parameters = parameters;
  s.instances = instance_lines;
  s.body_state = body_state;
  return s;
}

SketchDoc make_sketch(const PromptModule& m) {
  SketchDoc s;
  s.module_name = m.name;
  s.ports = m.ports;
  s.parameters = m.parameters;
  s.instance_lines = m.instances;
  return s;
}

SketchDoc make_sketch(const ModuleSpec& m) {
  SketchDoc s;
  s.module_name = m.name;
  s.ports = m.ports;
  s.parameters = m.parameters;
  s.instance_lines = m.instances;
  s.body_state = m.body_state;
  return s;
}

std::string render_sketch(const SketchDoc& s) {
  std::string out = "module " + s.module_name;
  if (!s.parameters.empty()) {
    out += " #(";
    bool first = true;
    for (const auto& [k, v] : s.parameters) {
      if (!first) out += ", ";
      first = false;
      out += "parameter " + k + " = " + std::to_string(v);
    }
    out += ")";
  }
  if (!s.ports.empty()) out += " (" + render_ports(s.ports) + ")";
  out += ";\n";
  for (const auto& i : s.instance_lines) {
    out += "  " + i.module_name + " " + i.instance_name + " (";
    if (i.connections.empty()) {
      out += ".port(port)";
    } else {
      bool first = true;
      for (const auto& [port, net] : i.connections) {
        if (!first) out += ", ";
        first = false;
        out += "." + port + "(" + net + ")";
      }
    }
    out += ");\n";
  }
  if (s.body_state == BodyState::Placeholder) out += "  " + std::string(kBodyPlaceholder) + "\n";
  out += "endmodule";
  return out;
}

DesignHierarchy induced_hierarchy(const SketchSet& sketches, const std::string& root) {
  DesignHierarchy h;
  h.root = root;
  for (const auto& [name, s] : sketches) h.modules.emplace(name, s.to_spec());
  return h;
}

nlohmann::json to_json(const SketchDoc& s) {
  return nlohmann::json{{"module_name", s.module_name},
                        {"ports", s.ports},
                        {"parameters", s.parameters},
                        {"instance_lines", s.instance_lines},
                        {"body_state", s.body_state == BodyState::Filled ? "filled" : "placeholder"},
                        {"revision", s.revision}};
}

SketchDoc sketch_from_json(const nlohmann::json& j) {
  SketchDoc s;
  s.module_name = j.at("module_name").get<std::string>();
  s.ports = j.value("ports", std::vector<PortDecl>{});
  s.parameters = j.value("parameters", std::map<std::string, std::int64_t>{});
  s.instance_lines = j.value("instance_lines", std::vector<InstanceRef>{});
  s.body_state = j.value("body_state", std::string("placeholder")) == "filled" ? BodyState::Filled
                                                                                : BodyState::Placeholder;
  s.revision = j.value("revision", std::int64_t{0});
  return s;
}

}  // namespace hivegen::parse

#include "hivegen/core/prompt.hpp"

#include <sstream>

#include "hivegen/core/json_io.hpp"

namespace hivegen {

std::string render_ports(const std::vector<PortDecl>& ports) {
  std::string out;
  for (std::size_t i = 0; i < ports.size(); ++i) {
    if (i) out += ", ";
    out += std::string(to_string(ports[i].direction));
    if (ports[i].width > 1) out += " [" + std::to_string(ports[i].width - 1) + ":0]";
    out += " " + ports[i].name;
  }
  return out;
}

const PromptModule* HierarchicalPrompt::find(std::string_view name) const {
  for (const auto& m : modules)
    if (m.name == name) return &m;
  return nullptr;
}

std::string HierarchicalPrompt::render() const {
  std::ostringstream os;
  os << "Design: " << design << "\n";
  os << "Top module: " << top << "\n";
  os << "Modules (" << modules.size() << "):\n";
  for (const auto& m : modules) {
    os << "\n[level " << m.level << "] module " << m.name << "\n";
    if (!m.description.empty()) os << "  Description: " << m.description << "\n";
    if (!m.parameters.empty()) {
      os << "  Parameters:";
      bool first = true;
      for (const auto& [k, v] : m.parameters) {
        os << (first ? " " : ", ") << k << " = " << v;
        first = false;
      }
      os << "\n";
    }
    os << "  Ports: " << (m.ports.empty() ? "(none)" : render_ports(m.ports)) << "\n";
    if (!m.instances.empty()) {
      std::map<std::string, int> counts;
      std::vector<std::string> order;
      for (const auto& i : m.instances)
        if (counts[i.module_name]++ == 0) order.push_back(i.module_name);
      os << "  Submodules:";
      bool first = true;
      for (const auto& name : order) {
        os << (first ? " " : ", ") << counts[name] << " x " << name;
        first = false;
      }
      os << "\n";
    }
  }
  return os.str();
}

DesignHierarchy HierarchicalPrompt::to_hierarchy() const {
  DesignHierarchy h;
  h.root = top;
  for (const auto& m : modules) {
    if (h.modules.contains(m.name)) continue;
    ModuleSpec s;
    s.name = m.name;
    s.ports = m.ports;
    s.parameters = m.parameters;
    s.instances = m.instances;
    h.modules.emplace(m.name, std::move(s));
  }
  return h;
}

void to_json(nlohmann::json& j, const PromptModule& m) {
  j = nlohmann::json{{"name", m.name},
                     {"description", m.description},
                     {"ports", m.ports},
                     {"parameters", m.parameters},
                     {"instances", m.instances},
                     {"level", m.level}};
}

void from_json(const nlohmann::json& j, PromptModule& m) {
  m.name = j.at("name").get<std::string>();
  m.description = j.value("description", std::string());
  m.ports = j.value("ports", std::vector<PortDecl>{});
  m.parameters = j.value("parameters", std::map<std::string, std::int64_t>{});
  m.instances = j.value("instances", std::vector<InstanceRef>{});
  m.level = j.value("level", 0);
}

void to_json(nlohmann::json& j, const HierarchicalPrompt& p) {
  j = nlohmann::json{{"design", p.design}, {"top", p.top}, {"modules", p.modules}};
}

void from_json(const nlohmann::json& j, HierarchicalPrompt& p) {
  p.design = j.value("design", std::string());
  p.top = j.value("top", std::string());
  p.modules = j.at("modules").get<std::vector<PromptModule>>();
}

}  // namespace hivegen

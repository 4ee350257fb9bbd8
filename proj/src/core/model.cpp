#include "hivegen/core/model.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

#include "hivegen/core/error.hpp"
#include "hivegen/core/hash.hpp"

namespace hivegen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Cycle: return "cycle";
    case ErrorCode::Syntax: return "syntax";
    case ErrorCode::UseBeforeDef: return "use_before_def";
    case ErrorCode::UnknownParameter: return "unknown_parameter";
    case ErrorCode::UnassignedPlaceholder: return "unassigned_placeholder";
    case ErrorCode::UnrecognizedVerb: return "unrecognized_verb";
    case ErrorCode::MissingArgument: return "missing_argument";
    case ErrorCode::AmbiguousCommand: return "ambiguous_command";
    case ErrorCode::MalformedCommand: return "malformed_command";
    case ErrorCode::UnknownParent: return "unknown_parent";
    case ErrorCode::DuplicateInstanceName: return "duplicate_instance_name";
    case ErrorCode::DuplicatePort: return "duplicate_port";
    case ErrorCode::DuplicateModule: return "duplicate_module";
    case ErrorCode::FixtureMiss: return "fixture_miss";
    case ErrorCode::Transport: return "transport";
    case ErrorCode::ProposalFailed: return "proposal_failed";
    case ErrorCode::EmbedUnavailable: return "embed_unavailable";
    case ErrorCode::Storage: return "storage";
    case ErrorCode::Tool: return "tool";
    case ErrorCode::Assembly: return "assembly";
    case ErrorCode::ModuleFailed: return "module_failed";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Conflict: return "conflict";
  }
  return "unknown";
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto head = static_cast<unsigned char>(text.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(text.begin() + 1, text.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Input: return "input";
    case Direction::Output: return "output";
    case Direction::Inout: return "inout";
  }
  return "input";
}

std::optional<Direction> parse_direction(std::string_view text) {
  if (text == "input") return Direction::Input;
  if (text == "output") return Direction::Output;
  if (text == "inout") return Direction::Inout;
  return std::nullopt;
}

const PortDecl* ModuleSpec::find_port(std::string_view port) const {
  for (const auto& p : ports)
    if (p.name == port) return &p;
  return nullptr;
}

const InstanceRef* ModuleSpec::find_instance(std::string_view instance) const {
  for (const auto& i : instances)
    if (i.instance_name == instance) return &i;
  return nullptr;
}

std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(d.size() * 2);
  for (auto b : d) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

std::optional<Digest> digest_from_hex(std::string_view hex) {
  if (hex.size() != 64) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Digest d{};
  for (std::size_t i = 0; i < d.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    d[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return d;
}

CodeBlock make_block(std::string module_name, std::string source, bool verified) {
  CodeBlock block;
  block.module_name = std::move(module_name);
  block.content_hash = hash_block(source);
  block.source = std::move(source);
  block.verified = verified;
  return block;
}

void validate(const LlmParams& params) {
  if (params.temperature < 0.0 || params.temperature > 2.0)
    throw Error(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
  if (params.top_p <= 0.0 || params.top_p > 1.0)
    throw Error(ErrorCode::InvalidArgument, "top_p must lie in (0, 1]");
  if (params.max_output_tokens < 1)
    throw Error(ErrorCode::InvalidArgument, "max_output_tokens must be positive");
}

void validate(const GenerationConfig& config) {
  if (config.max_retries < 1 || config.second_chance_trigger < 1 || config.garbage_mark < 1)
    throw Error(ErrorCode::InvalidArgument, "k, m and j must all be >= 1");
  if (config.retrieval_threshold < 0.0 || config.retrieval_threshold > 1.0)
    throw Error(ErrorCode::InvalidArgument, "retrieval_threshold must lie in [0, 1]");
  if (config.worker_count < 1)
    throw Error(ErrorCode::InvalidArgument, "worker_count must be >= 1");
  if (config.round_budget < 1)
    throw Error(ErrorCode::InvalidArgument, "round_budget must be >= 1");
  validate(config.llm_params);
}

namespace {

// Returns the first cycle found as a closed path (A, B, ..., A); empty if none.
std::vector<std::string> find_cycle(const DesignHierarchy& h) {
  enum class Mark { White, Gray, Black };
  std::map<std::string, Mark> mark;
  std::vector<std::string> stack;
  std::vector<std::string> cycle;

  std::function<bool(const std::string&)> visit = [&](const std::string& name) {
    mark[name] = Mark::Gray;
    stack.push_back(name);
    const auto& spec = h.modules.at(name);
    for (const auto& inst : spec.instances) {
      if (!h.modules.contains(inst.module_name)) continue;
      auto m = mark[inst.module_name];
      if (m == Mark::Gray) {
        auto it = std::find(stack.begin(), stack.end(), inst.module_name);
        cycle.assign(it, stack.end());
        cycle.push_back(inst.module_name);
        return true;
      }
      if (m == Mark::White && visit(inst.module_name)) return true;
    }
    stack.pop_back();
    mark[name] = Mark::Black;
    return false;
  };

  for (const auto& [name, _] : h.modules) {
    if (mark[name] == Mark::White && visit(name)) return cycle;
  }
  return {};
}

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += "→";
    out += path[i];
  }
  return out;
}

}  // namespace

std::vector<Violation> validate_hierarchy(const DesignHierarchy& h) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  if (!h.modules.contains(h.root)) {
    out.push_back({K::MissingRoot, h.root, "", "root module " + h.root + " is not declared"});
  }
  for (const auto& [key, spec] : h.modules) {
    if (key != spec.name) {
      out.push_back({K::NameMismatch, key, "",
                     "module key " + key + " does not match spec name " + spec.name});
    }
    if (!is_identifier(spec.name)) {
      out.push_back({K::BadIdentifier, spec.name, "", "illegal module name " + spec.name});
    }
    std::set<std::string> port_names;
    for (const auto& p : spec.ports) {
      if (!is_identifier(p.name))
        out.push_back({K::BadIdentifier, spec.name, "", "illegal port name '" + p.name + "'"});
      if (p.width < 1)
        out.push_back({K::BadWidth, spec.name, "", "port " + p.name + " has width < 1"});
      if (!port_names.insert(p.name).second)
        out.push_back({K::DuplicatePort, spec.name, "", "duplicate port " + p.name});
    }
    std::set<std::string> inst_names;
    for (const auto& inst : spec.instances) {
      if (!is_identifier(inst.instance_name))
        out.push_back({K::BadIdentifier, spec.name, inst.instance_name,
                       "illegal instance name '" + inst.instance_name + "'"});
      if (!inst_names.insert(inst.instance_name).second)
        out.push_back({K::DuplicateInstance, spec.name, inst.instance_name,
                       "duplicate instance " + inst.instance_name + " in " + spec.name});
      if (!h.modules.contains(inst.module_name))
        out.push_back({K::UnresolvedModule, spec.name, inst.instance_name,
                       "unresolved module " + inst.module_name});
    }
  }
  auto cycle = find_cycle(h);
  if (!cycle.empty()) {
    out.push_back({K::Cycle, cycle.front(), "", "cycle " + join_path(cycle)});
  }
  return out;
}

std::vector<std::string> topological_order(const DesignHierarchy& h) {
  auto cycle = find_cycle(h);
  if (!cycle.empty()) throw Error(ErrorCode::Cycle, "cycle " + join_path(cycle));

  std::vector<std::string> order;
  std::set<std::string> done;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    if (!done.insert(name).second) return;
    for (const auto& inst : h.modules.at(name).instances)
      if (h.modules.contains(inst.module_name)) visit(inst.module_name);
    order.push_back(name);
  };
  for (const auto& [name, _] : h.modules)
    if (name != h.root) visit(name);
  if (h.modules.contains(h.root)) visit(h.root);
  return order;
}

}  // namespace hivegen

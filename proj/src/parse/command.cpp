#include "hivegen/parse/command.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "hivegen/core/error.hpp"
#include "hivegen/core/json_io.hpp"

namespace hivegen::parse {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::RootVerb: return "root_verb";
    case Role::Dobj: return "dobj";
    case Role::Prep: return "prep";
    case Role::Pobj: return "pobj";
    case Role::NpModifier: return "np_modifier";
    case Role::Det: return "det";
    case Role::Other: return "other";
  }
  return "?";
}

std::string_view role_label(Role r) {
  switch (r) {
    case Role::RootVerb: return "root";
    case Role::NpModifier: return "NP";
    default: return to_string(r);
  }
}

const LsToken& LsTree::root() const {
  for (const auto& t : tokens)
    if (t.role == Role::RootVerb) return t;
  throw Error(ErrorCode::MalformedCommand, "LS tree has no root");
}

const LsToken* LsTree::first(Role role) const {
  for (const auto& t : tokens)
    if (t.role == role) return &t;
  return nullptr;
}

namespace {

enum class Slot { Word, Ident, Dir, PortSpec, Dotted };

struct Elem {
  Slot kind;
  std::vector<std::string> words;  // Word alternatives (lower case)
  Role role;
  bool optional = false;
  std::string field;  // binding name for slots
  std::string what;   // human name used in error messages
  int head = 0;       // index of the governing element, -1 for the root
};

struct Rule {
  std::string name;
  std::string verb;
  std::vector<Elem> elems;
};

Elem word(std::vector<std::string> w, Role role, int head, bool optional = false) {
  Elem e{Slot::Word, std::move(w), role, optional, "", "", head};
  e.what = "'" + e.words.front() + "'";
  for (std::size_t i = 1; i < e.words.size(); ++i) e.what += "|'" + e.words[i] + "'";
  return e;
}

Elem slot(Slot kind, std::string field, std::string what, Role role, int head) {
  return Elem{kind, {}, role, false, std::move(field), std::move(what), head};
}

const std::vector<Rule>& rules() {
  static const std::vector<Rule> r = [] {
    std::vector<Rule> v;
    // indices in comments are element positions used for `head`
    v.push_back({"add_instance", "add",
                 {word({"add"}, Role::RootVerb, -1),                          // 0
                  word({"an", "a", "the"}, Role::Det, 2, true),               // 1
                  word({"instance"}, Role::Dobj, 0),                          // 2
                  slot(Slot::Ident, "instance", "instance name", Role::NpModifier, 2),  // 3
                  word({"of"}, Role::Prep, 2),                                // 4
                  word({"module"}, Role::Other, 6, true),                     // 5
                  slot(Slot::Ident, "module", "module name", Role::Pobj, 4),  // 6
                  word({"within", "in", "into"}, Role::Prep, 0),              // 7
                  word({"module"}, Role::Other, 9, true),                     // 8
                  slot(Slot::Ident, "parent", "parent module", Role::Pobj, 7)}});  // 9
    v.push_back({"add_port", "add",
                 {word({"add"}, Role::RootVerb, -1),                          // 0
                  word({"an", "a", "the"}, Role::Det, 2, true),               // 1
                  word({"port"}, Role::Dobj, 0),                              // 2
                  slot(Slot::Dir, "dir", "port direction", Role::Other, 4),   // 3
                  slot(Slot::PortSpec, "port", "port name", Role::NpModifier, 2),  // 4
                  word({"to"}, Role::Prep, 0),                                // 5
                  word({"module"}, Role::Other, 7, true),                     // 6
                  slot(Slot::Ident, "parent", "parent module", Role::Pobj, 5)}});  // 7
    v.push_back({"remove_instance", "remove",
                 {word({"remove"}, Role::RootVerb, -1),                       // 0
                  word({"the", "an", "a"}, Role::Det, 2, true),               // 1
                  word({"instance"}, Role::Dobj, 0, true),                    // 2
                  slot(Slot::Ident, "instance", "instance name", Role::NpModifier, 2),  // 3
                  word({"from"}, Role::Prep, 0),                              // 4
                  word({"module"}, Role::Other, 6, true),                     // 5
                  slot(Slot::Ident, "parent", "parent module", Role::Pobj, 4)}});  // 6
    v.push_back({"remove_port", "remove",
                 {word({"remove"}, Role::RootVerb, -1),
                  word({"the", "an", "a"}, Role::Det, 2, true),
                  word({"port"}, Role::Dobj, 0, true),
                  slot(Slot::Ident, "port", "port name", Role::NpModifier, 2),
                  word({"from"}, Role::Prep, 0),
                  word({"module"}, Role::Other, 6, true),
                  slot(Slot::Ident, "parent", "parent module", Role::Pobj, 4)}});
    v.push_back({"rename_module", "rename",
                 {word({"rename"}, Role::RootVerb, -1),                       // 0
                  word({"module"}, Role::Dobj, 0),                            // 1
                  slot(Slot::Ident, "old", "module name", Role::NpModifier, 1),  // 2
                  word({"to"}, Role::Prep, 0),                                // 3
                  slot(Slot::Ident, "new", "new module name", Role::Pobj, 3)}});  // 4
    v.push_back({"connect", "connect",
                 {word({"connect"}, Role::RootVerb, -1),                      // 0
                  word({"port"}, Role::Other, 2, true),                       // 1
                  slot(Slot::Dotted, "pin", "instance.port", Role::Dobj, 0),  // 2
                  word({"to"}, Role::Prep, 0),                                // 3
                  word({"net"}, Role::Other, 5, true),                        // 4
                  slot(Slot::Ident, "net", "net name", Role::Pobj, 3),        // 5
                  word({"in"}, Role::Prep, 0),                                // 6
                  word({"module"}, Role::Other, 8, true),                     // 7
                  slot(Slot::Ident, "parent", "parent module", Role::Pobj, 6)}});  // 8
    return v;
  }();
  return r;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t s = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > s) toks.emplace_back(text.substr(s, i - s));
  }
  if (!toks.empty()) {
    auto& last = toks.back();
    while (!last.empty() && std::string_view(".!?,;").find(last.back()) != std::string_view::npos) last.pop_back();
    if (last.empty()) toks.pop_back();
  }
  return toks;
}

bool parse_port_spec(const std::string& tok, PortDecl& out) {
  auto lb = tok.find('[');
  if (lb == std::string::npos) {
    if (!is_identifier(tok)) return false;
    out.name = tok;
    out.width = 1;
    return true;
  }
  if (tok.back() != ']') return false;
  out.name = tok.substr(0, lb);
  if (!is_identifier(out.name)) return false;
  auto inner = tok.substr(lb + 1, tok.size() - lb - 2);
  auto digits = [](const std::string& s) {
    return !s.empty() && s.size() < 9 && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  };
  auto colon = inner.find(':');
  if (colon == std::string::npos) {
    if (!digits(inner)) return false;
    out.width = std::stoi(inner);
  } else {
    auto msb = inner.substr(0, colon), lsb = inner.substr(colon + 1);
    if (!digits(msb) || !digits(lsb)) return false;
    out.width = std::abs(std::stoi(msb) - std::stoi(lsb)) + 1;
  }
  return out.width >= 1;
}

struct Match {
  std::vector<int> elem_of_token;  // element index bound to each token
  std::map<std::string, std::string> fields;
  PortDecl port;
};

struct Failure {
  std::size_t token = 0;  // furthest token position reached
  bool at_end = false;
  std::string expected;
  std::string after;  // text of the token preceding the failure
};

class Matcher {
 public:
  Matcher(const Rule& rule, const std::vector<std::string>& toks) : rule_(rule), toks_(toks) {}

  std::optional<Match> run() {
    Match m;
    m.elem_of_token.assign(toks_.size(), -1);
    if (go(0, 0, m)) return m;
    return std::nullopt;
  }
  const Failure& failure() const { return fail_; }

 private:
  void note_failure(std::size_t ti, const Elem& e) {
    bool at_end = ti >= toks_.size();
    if (ti > fail_.token || (ti == fail_.token && fail_.expected.empty()) || (at_end && !fail_.at_end && ti >= fail_.token)) {
      fail_.token = ti;
      fail_.at_end = at_end;
      fail_.expected = e.what;
      fail_.after = ti > 0 ? toks_[ti - 1] : "";
    }
  }

  bool go(std::size_t ei, std::size_t ti, Match& m) {
    if (ei == rule_.elems.size()) {
      if (ti == toks_.size()) return true;
      if (ti >= fail_.token) {
        fail_.token = ti;
        fail_.at_end = false;
        fail_.expected = "end of command";
        fail_.after = toks_[ti - 1];
      }
      return false;
    }
    const Elem& e = rule_.elems[ei];
    if (ti < toks_.size() && accepts(e, toks_[ti], m)) {
      m.elem_of_token[ti] = static_cast<int>(ei);
      if (go(ei + 1, ti + 1, m)) return true;
      m.elem_of_token[ti] = -1;
      if (!e.field.empty()) m.fields.erase(e.field);
    } else if (!e.optional) {
      note_failure(ti, e);
    }
    if (e.optional) return go(ei + 1, ti, m);
    return false;
  }

  bool accepts(const Elem& e, const std::string& tok, Match& m) {
    switch (e.kind) {
      case Slot::Word:
        return std::find(e.words.begin(), e.words.end(), lower(tok)) != e.words.end();
      case Slot::Ident:
        if (!is_identifier(tok)) return false;
        m.fields[e.field] = tok;
        return true;
      case Slot::Dir:
        if (!parse_direction(lower(tok))) return false;
        m.fields[e.field] = lower(tok);
        return true;
      case Slot::PortSpec:
        if (!parse_port_spec(tok, m.port)) return false;
        m.fields[e.field] = tok;
        return true;
      case Slot::Dotted: {
        auto dot = tok.find('.');
        if (dot == std::string::npos) return false;
        auto a = tok.substr(0, dot), b = tok.substr(dot + 1);
        if (!is_identifier(a) || !is_identifier(b)) return false;
        m.fields["instance"] = a;
        m.fields["port"] = b;
        m.fields[e.field] = tok;
        return true;
      }
    }
    return false;
  }

  const Rule& rule_;
  const std::vector<std::string>& toks_;
  Failure fail_;
};

EditCommand build(const Rule& r, const Match& m) {
  const auto& f = m.fields;
  if (r.name == "add_instance") return AddInstance{f.at("module"), f.at("instance"), f.at("parent")};
  if (r.name == "add_port") {
    PortDecl p = m.port;
    p.direction = *parse_direction(f.at("dir"));
    return AddPort{f.at("parent"), p};
  }
  if (r.name == "remove_instance") return RemoveInstance{f.at("instance"), f.at("parent")};
  if (r.name == "remove_port") return RemovePort{f.at("parent"), f.at("port")};
  if (r.name == "rename_module") return RenameModule{f.at("old"), f.at("new")};
  return Connect{f.at("parent"), f.at("instance"), f.at("port"), f.at("net")};
}

LsTree build_tree(const Rule& r, const Match& m, const std::vector<std::string>& toks) {
  std::map<int, int> token_of_elem;
  for (std::size_t t = 0; t < toks.size(); ++t) token_of_elem[m.elem_of_token[t]] = static_cast<int>(t);
  LsTree tree;
  for (std::size_t t = 0; t < toks.size(); ++t) {
    const Elem& e = r.elems[m.elem_of_token[t]];
    int head = -1;
    if (e.head >= 0) {
      auto it = token_of_elem.find(e.head);
      head = it != token_of_elem.end() ? it->second : token_of_elem.at(0);
    }
    tree.tokens.push_back({toks[t], e.role, head});
  }
  return tree;
}

}  // namespace

ParsedCommand parse_command(std::string_view text) {
  auto toks = tokenize(text);
  if (toks.empty()) throw Error(ErrorCode::MalformedCommand, "empty command");
  auto verb = lower(toks.front());
  std::vector<const Rule*> candidates;
  for (const auto& r : rules())
    if (r.verb == verb) candidates.push_back(&r);
  if (candidates.empty())
    throw Error(ErrorCode::UnrecognizedVerb,
                "unrecognized verb '" + toks.front() + "' (expected add, remove, rename or connect)");

  std::vector<std::pair<const Rule*, Match>> matches;
  std::optional<Failure> missing, malformed;
  for (const auto* r : candidates) {
    Matcher mt(*r, toks);
    if (auto m = mt.run()) {
      matches.emplace_back(r, std::move(*m));
      continue;
    }
    const auto& f = mt.failure();
    auto& slot = f.at_end ? missing : malformed;
    if (!slot || f.token > slot->token) slot = f;
  }
  if (matches.size() > 1) {
    std::string names;
    for (const auto& [r, m] : matches) names += (names.empty() ? "" : ", ") + r->name;
    throw Error(ErrorCode::AmbiguousCommand, "ambiguous command: matches " + names +
                                                 " (say 'instance' or 'port' explicitly)");
  }
  if (matches.empty()) {
    if (missing)
      throw Error(ErrorCode::MissingArgument, "missing argument: expected " + missing->expected +
                                                  (missing->after.empty() ? "" : " after '" + missing->after + "'"));
    throw Error(ErrorCode::MalformedCommand, "malformed command: expected " + malformed->expected + " at '" +
                                                 toks[std::min(malformed->token, toks.size() - 1)] + "'");
  }
  const auto& [rule, m] = matches.front();
  return ParsedCommand{build_tree(*rule, m, toks), build(*rule, m), rule->name};
}

std::string unparse(const EditCommand& c) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, AddInstance>)
          return "add an instance " + x.instance + " of module " + x.module + " within " + x.parent;
        else if constexpr (std::is_same_v<T, RemoveInstance>)
          return "remove instance " + x.instance + " from " + x.parent;
        else if constexpr (std::is_same_v<T, RenameModule>)
          return "rename module " + x.old_name + " to " + x.new_name;
        else if constexpr (std::is_same_v<T, AddPort>)
          return "add port " + std::string(to_string(x.port.direction)) + " " + x.port.name + "[" +
                 std::to_string(x.port.width) + "] to " + x.parent;
        else if constexpr (std::is_same_v<T, RemovePort>)
          return "remove port " + x.name + " from " + x.parent;
        else
          return "connect " + x.instance + "." + x.port + " to " + x.net + " in " + x.parent;
      },
      c);
}

std::string_view command_kind(const EditCommand& c) {
  static constexpr std::string_view names[] = {"AddInstance", "RemoveInstance", "RenameModule",
                                               "AddPort",     "RemovePort",     "Connect"};
  return names[c.index()];
}

std::string command_target(const EditCommand& c) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, RenameModule>) return x.old_name;
        else return x.parent;
      },
      c);
}

nlohmann::json to_json(const EditCommand& c) {
  nlohmann::json j = std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, AddInstance>)
          return {{"module", x.module}, {"instance", x.instance}, {"parent", x.parent}};
        else if constexpr (std::is_same_v<T, RemoveInstance>)
          return {{"instance", x.instance}, {"parent", x.parent}};
        else if constexpr (std::is_same_v<T, RenameModule>)
          return {{"old", x.old_name}, {"new", x.new_name}};
        else if constexpr (std::is_same_v<T, AddPort>)
          return {{"parent", x.parent}, {"port", x.port}};
        else if constexpr (std::is_same_v<T, RemovePort>)
          return {{"parent", x.parent}, {"name", x.name}};
        else
          return {{"parent", x.parent}, {"instance", x.instance}, {"port", x.port}, {"net", x.net}};
      },
      c);
  j["kind"] = std::string(command_kind(c));
  return j;
}

EditCommand command_from_json(const nlohmann::json& j) {
  auto kind = j.at("kind").get<std::string>();
  auto s = [&](const char* k) { return j.at(k).get<std::string>(); };
  if (kind == "AddInstance") return AddInstance{s("module"), s("instance"), s("parent")};
  if (kind == "RemoveInstance") return RemoveInstance{s("instance"), s("parent")};
  if (kind == "RenameModule") return RenameModule{s("old"), s("new")};
  if (kind == "AddPort") return AddPort{s("parent"), j.at("port").get<PortDecl>()};
  if (kind == "RemovePort") return RemovePort{s("parent"), s("name")};
  if (kind == "Connect") return Connect{s("parent"), s("instance"), s("port"), s("net")};
  throw Error(ErrorCode::InvalidArgument, "unknown edit command kind " + kind);
}

nlohmann::json to_json(const LsTree& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& tok : t.tokens)
    arr.push_back({{"text", tok.text}, {"role", to_string(tok.role)}, {"label", role_label(tok.role)}, {"head", tok.head}});
  return {{"tokens", arr}};
}

namespace {

void require_ident(const std::string& name, const char* what) {
  if (!is_identifier(name)) throw Error(ErrorCode::InvalidArgument, std::string("invalid ") + what + " '" + name + "'");
}

SketchDoc& parent_of(SketchSet& s, const std::string& parent) {
  auto it = s.find(parent);
  if (it == s.end()) throw Error(ErrorCode::UnknownParent, "unknown parent module '" + parent + "'");
  return it->second;
}

void reset_pending(TaskList& tasks, const std::string& module) {
  if (tasks.find(module)) tasks.set_status(module, TaskStatus::Pending);
}

void touch(EditResult& r, SketchDoc& doc) {
  ++doc.revision;
  if (std::find(r.touched.begin(), r.touched.end(), doc.module_name) == r.touched.end())
    r.touched.push_back(doc.module_name);
}

bool has_edge(const TaskList& t, const std::string& m, const std::string& d) {
  return std::find(t.dependency_edges.begin(), t.dependency_edges.end(), std::pair{m, d}) != t.dependency_edges.end();
}

void apply(EditResult& r, const AddInstance& c) {
  require_ident(c.module, "module name");
  require_ident(c.instance, "instance name");
  auto& parent = parent_of(r.sketches, c.parent);
  if (parent.find_instance(c.instance))
    throw Error(ErrorCode::DuplicateInstanceName,
                "instance '" + c.instance + "' already exists in module '" + c.parent + "'");
  parent.instance_lines.push_back(InstanceRef{c.module, c.instance, {}});
  touch(r, parent);
  if (!r.sketches.contains(c.module)) {
    SketchDoc doc;
    doc.module_name = c.module;
    r.sketches.emplace(c.module, doc);
    r.touched.push_back(c.module);
  }
  if (!r.tasks.find(c.module)) {
    auto pos = r.tasks.index_of(c.parent).value_or(r.tasks.tasks.size());
    r.tasks.tasks.insert(r.tasks.tasks.begin() + static_cast<std::ptrdiff_t>(pos), Task{c.module, TaskStatus::Pending});
  }
  if (!has_edge(r.tasks, c.parent, c.module)) r.tasks.dependency_edges.emplace_back(c.parent, c.module);
  if (!r.tasks.find(c.parent)) r.tasks.tasks.push_back(Task{c.parent, TaskStatus::Pending});
  reset_pending(r.tasks, c.parent);
  restore_order(r.tasks);
}

void apply(EditResult& r, const RemoveInstance& c) {
  auto& parent = parent_of(r.sketches, c.parent);
  auto& lines = parent.instance_lines;
  auto it = std::find_if(lines.begin(), lines.end(), [&](const auto& i) { return i.instance_name == c.instance; });
  if (it == lines.end())
    throw Error(ErrorCode::NotFound, "no instance '" + c.instance + "' in module '" + c.parent + "'");
  auto module = it->module_name;
  lines.erase(it);
  touch(r, parent);
  bool still_used = std::any_of(lines.begin(), lines.end(), [&](const auto& i) { return i.module_name == module; });
  if (!still_used) std::erase(r.tasks.dependency_edges, std::pair{c.parent, module});
  reset_pending(r.tasks, c.parent);
}

void apply(EditResult& r, const RenameModule& c) {
  require_ident(c.new_name, "module name");
  auto it = r.sketches.find(c.old_name);
  if (it == r.sketches.end()) throw Error(ErrorCode::NotFound, "no module '" + c.old_name + "'");
  if (r.sketches.contains(c.new_name)) throw Error(ErrorCode::DuplicateModule, "module '" + c.new_name + "' already exists");
  auto doc = std::move(it->second);
  r.sketches.erase(it);
  doc.module_name = c.new_name;
  auto& moved = r.sketches.emplace(c.new_name, std::move(doc)).first->second;
  touch(r, moved);
  for (auto& t : r.tasks.tasks)
    if (t.module_name == c.old_name) t.module_name = c.new_name;
  for (auto& [m, d] : r.tasks.dependency_edges) {
    if (m == c.old_name) m = c.new_name;
    if (d == c.old_name) d = c.new_name;
  }
  reset_pending(r.tasks, c.new_name);
  for (auto& [name, s] : r.sketches) {
    bool changed = false;
    for (auto& i : s.instance_lines)
      if (i.module_name == c.old_name) {
        i.module_name = c.new_name;
        changed = true;
      }
    if (changed) {
      touch(r, s);
      reset_pending(r.tasks, name);
    }
  }
}

void apply(EditResult& r, const AddPort& c) {
  require_ident(c.port.name, "port name");
  if (c.port.width < 1) throw Error(ErrorCode::InvalidArgument, "port width must be at least 1");
  auto& parent = parent_of(r.sketches, c.parent);
  for (const auto& p : parent.ports)
    if (p.name == c.port.name)
      throw Error(ErrorCode::DuplicatePort, "port '" + c.port.name + "' already exists on module '" + c.parent + "'");
  parent.ports.push_back(c.port);
  touch(r, parent);
  reset_pending(r.tasks, c.parent);
  for (const auto& [name, s] : r.sketches)
    for (const auto& i : s.instance_lines)
      if (i.module_name == c.parent) reset_pending(r.tasks, name);
}

void apply(EditResult& r, const RemovePort& c) {
  auto& parent = parent_of(r.sketches, c.parent);
  auto it = std::find_if(parent.ports.begin(), parent.ports.end(), [&](const auto& p) { return p.name == c.name; });
  if (it == parent.ports.end()) throw Error(ErrorCode::NotFound, "no port '" + c.name + "' on module '" + c.parent + "'");
  parent.ports.erase(it);
  touch(r, parent);
  reset_pending(r.tasks, c.parent);
  for (auto& [name, s] : r.sketches) {
    bool changed = false;
    for (auto& i : s.instance_lines)
      if (i.module_name == c.parent && i.connections.erase(c.name)) changed = true;
    if (changed) touch(r, s);
    if (std::any_of(s.instance_lines.begin(), s.instance_lines.end(),
                    [&](const auto& i) { return i.module_name == c.parent; }))
      reset_pending(r.tasks, name);
  }
}

void apply(EditResult& r, const Connect& c) {
  require_ident(c.net, "net name");
  auto& parent = parent_of(r.sketches, c.parent);
  auto it = std::find_if(parent.instance_lines.begin(), parent.instance_lines.end(),
                         [&](const auto& i) { return i.instance_name == c.instance; });
  if (it == parent.instance_lines.end())
    throw Error(ErrorCode::NotFound, "no instance '" + c.instance + "' in module '" + c.parent + "'");
  if (auto child = r.sketches.find(it->module_name); child != r.sketches.end() && !child->second.ports.empty()) {
    const auto& ports = child->second.ports;
    if (std::none_of(ports.begin(), ports.end(), [&](const auto& p) { return p.name == c.port; }))
      throw Error(ErrorCode::NotFound, "module '" + it->module_name + "' has no port '" + c.port + "'");
  }
  it->connections[c.port] = c.net;
  touch(r, parent);
  reset_pending(r.tasks, c.parent);
}

}  // namespace

EditResult apply_edit(const SketchSet& sketches, const TaskList& tasks, const EditCommand& cmd) {
  EditResult r{sketches, tasks, {}};
  std::visit([&](const auto& c) { apply(r, c); }, cmd);
  return r;
}

}  // namespace hivegen::parse

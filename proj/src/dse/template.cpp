#include "hivegen/dse/template.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include "hivegen/core/error.hpp"
#include "hivegen/core/expr.hpp"
#include "hivegen/core/json_io.hpp"

namespace hivegen::dse {

using nlohmann::json;

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void bad(const std::string& tpl, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "template " + tpl + ": " + what);
}

std::string expr_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw Error(ErrorCode::InvalidArgument, "expected an expression, got " + j.dump());
}

Loops loops_from(const json& j) {
  Loops out;
  if (!j.contains("for")) return out;
  for (const auto& l : j.at("for")) out.emplace_back(l.at(0).get<std::string>(), expr_text(l.at(1)));
  return out;
}

std::vector<std::pair<std::string, std::string>> pairs_from(const json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  if (j.is_object())
    for (const auto& [k, v] : j.items()) out.emplace_back(k, expr_text(v));
  else
    for (const auto& p : j) out.emplace_back(p.at(0).get<std::string>(), expr_text(p.at(1)));
  return out;
}

// Calls fn(text) for each `{...}` placeholder in s.
template <class F>
void for_each_placeholder(const std::string& s, F&& fn) {
  std::size_t i = 0;
  while ((i = s.find('{', i)) != std::string::npos) {
    auto j = s.find('}', i);
    if (j == std::string::npos) throw Error(ErrorCode::Syntax, "unterminated placeholder in '" + s + "'");
    fn(s.substr(i + 1, j - i - 1));
    i = j + 1;
  }
}

class Scope {
 public:
  Scope(const TemplateDef& t, const DesignConfig* c) : t_(t), c_(c) {}

  std::optional<std::int64_t> lookup(std::string_view name) const {
    for (auto it = vars_.rbegin(); it != vars_.rend(); ++it)
      if (it->first == name) return it->second;
    if (c_) {
      auto it = c_->assignment.find(std::string(name));
      if (it != c_->assignment.end()) return it->second;
    }
    return std::nullopt;
  }

  std::int64_t eval(const std::string& e) const {
    return expr::evaluate(e, [this](std::string_view n) { return lookup(n); });
  }

  bool holds(const std::string& when) const { return when.empty() || eval(when) != 0; }

  std::string subst(const std::string& s) const {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      auto b = s.find('{', i);
      if (b == std::string::npos) {
        out += s.substr(i);
        break;
      }
      auto e = s.find('}', b);
      if (e == std::string::npos) throw Error(ErrorCode::Syntax, "unterminated placeholder in '" + s + "'");
      out += s.substr(i, b - i);
      auto inner = s.substr(b + 1, e - b - 1);
      const ParamDef* p = t_.find_param(inner);
      if (p && p->kind != ParamKind::Int && !is_var(inner)) {
        auto v = lookup(inner);
        if (!v) throw Error(ErrorCode::UnassignedPlaceholder, "unassigned placeholder '" + inner + "'");
        out += p->render(*v);
      } else {
        out += std::to_string(eval(inner));
      }
      i = e + 1;
    }
    return out;
  }

  void for_each(const Loops& loops, const std::function<void()>& fn, std::size_t depth = 0) {
    if (depth == loops.size()) {
      fn();
      return;
    }
    auto n = eval(loops[depth].second);
    for (std::int64_t v = 0; v < n; ++v) {
      vars_.emplace_back(loops[depth].first, v);
      for_each(loops, fn, depth + 1);
      vars_.pop_back();
    }
  }

 private:
  bool is_var(std::string_view n) const {
    return std::any_of(vars_.begin(), vars_.end(), [&](const auto& v) { return v.first == n; });
  }

  const TemplateDef& t_;
  const DesignConfig* c_;
  std::vector<std::pair<std::string, std::int64_t>> vars_;
};

void check_names(const TemplateDef& t, const std::string& what, const std::string& e, const std::set<std::string>& vars) {
  for (const auto& id : expr::identifiers(e))
    if (!vars.contains(id) && !t.find_param(id))
      throw Error(ErrorCode::UnknownParameter,
                  "template " + t.name + ": " + what + " references unknown parameter '" + id + "'");
}

void check_text(const TemplateDef& t, const std::string& what, const std::string& s, const std::set<std::string>& vars) {
  for_each_placeholder(s, [&](const std::string& inner) { check_names(t, what, inner, vars); });
}

std::set<std::string> with_loops(std::set<std::string> vars, const TemplateDef& t, const std::string& what,
                                 const Loops& loops) {
  for (const auto& [v, n] : loops) {
    check_names(t, what, n, vars);
    vars.insert(v);
  }
  return vars;
}

void validate(const TemplateDef& t) {
  for (const auto& m : t.skeleton) {
    const std::string what = "module " + m.name;
    auto vars = with_loops({}, t, what, m.loops);
    check_text(t, what, m.name, vars);
    if (!m.when.empty()) check_names(t, what, m.when, vars);
    check_text(t, what, m.description, vars);
    for (const auto& [w, text] : m.notes) {
      if (!w.empty()) check_names(t, what, w, vars);
      check_text(t, what, text, vars);
    }
    for (const auto& [k, v] : m.parameters) check_names(t, what, v, vars);
    for (const auto& p : m.ports) check_names(t, what, p.width, vars);
    for (const auto& i : m.instances) {
      auto iv = with_loops(vars, t, what, i.loops);
      check_text(t, what, i.module, iv);
      check_text(t, what, i.name, iv);
      if (!i.when.empty()) check_names(t, what, i.when, iv);
      for (const auto& [p, n] : i.connections) check_text(t, what, n, iv);
    }
    for (const auto& n : m.nets) {
      auto nv = with_loops(vars, t, what, n.loops);
      check_text(t, what, n.name, nv);
      check_names(t, what, n.width, nv);
    }
    for (const auto& a : m.assigns) {
      auto av = with_loops(vars, t, what, a.loops);
      check_text(t, what, a.lhs, av);
      check_text(t, what, a.rhs, av);
    }
  }
  for (const auto& r : t.design_rules) {
    if (r.kind == RuleKind::OpCoverage && !r.param.empty()) {
      auto p = t.find_param(r.param);
      if (!p || p->kind != ParamKind::Subset) bad(t.name, "rule " + r.name + " needs a subset parameter");
      for (const auto& v : p->values)
        if (!parse_op(v)) bad(t.name, "subset value " + v + " is not an operator");
    }
    if (r.kind == RuleKind::Capacity)
      for (const auto& e : {r.rows, r.cols, r.unroll}) check_names(t, "rule " + r.name, e, {});
    for (const auto& [p, c] : r.terms)
      if (!t.find_param(p)) throw Error(ErrorCode::UnknownParameter, "rule " + r.name + " names unknown parameter " + p);
  }
}

}  // namespace

bool ParamDef::contains(std::int64_t v) const {
  switch (kind) {
    case ParamKind::Int: return v >= min && v <= max;
    case ParamKind::Bool: return v == 0 || v == 1;
    case ParamKind::Enum: return v >= 0 && v < static_cast<std::int64_t>(values.size());
    case ParamKind::Subset: return v >= 0 && v < (std::int64_t{1} << values.size());
  }
  return false;
}

std::string ParamDef::render(std::int64_t v) const {
  switch (kind) {
    case ParamKind::Int: return std::to_string(v);
    case ParamKind::Bool: return v ? "true" : "false";
    case ParamKind::Enum:
      return contains(v) ? values[static_cast<std::size_t>(v)] : std::to_string(v);
    case ParamKind::Subset: {
      std::string out;
      for (std::size_t i = 0; i < values.size(); ++i)
        if (v & (std::int64_t{1} << i)) out += (out.empty() ? "" : ", ") + values[i];
      return out;
    }
  }
  return {};
}

json ParamDef::to_value_json(std::int64_t v) const {
  switch (kind) {
    case ParamKind::Int: return v;
    case ParamKind::Bool: return v != 0;
    case ParamKind::Enum: return render(v);
    case ParamKind::Subset: {
      json arr = json::array();
      for (std::size_t i = 0; i < values.size(); ++i)
        if (v & (std::int64_t{1} << i)) arr.push_back(values[i]);
      return arr;
    }
  }
  return nullptr;
}

std::int64_t ParamDef::from_value_json(const json& j) const {
  auto fail = [&](const std::string& why) -> std::int64_t {
    throw Error(ErrorCode::InvalidArgument, "parameter " + name + ": " + why + " (got " + j.dump() + ")");
  };
  switch (kind) {
    case ParamKind::Int:
      if (j.is_number_integer()) return j.get<std::int64_t>();
      if (j.is_number_float() && j.get<double>() == static_cast<double>(static_cast<std::int64_t>(j.get<double>())))
        return static_cast<std::int64_t>(j.get<double>());
      return fail("expected an integer");
    case ParamKind::Bool:
      if (j.is_boolean()) return j.get<bool>() ? 1 : 0;
      if (j.is_number_integer() && (j.get<std::int64_t>() == 0 || j.get<std::int64_t>() == 1)) return j.get<std::int64_t>();
      return fail("expected a boolean");
    case ParamKind::Enum: {
      if (!j.is_string()) return fail("expected one of " + domain_text());
      auto s = upper(j.get<std::string>());
      for (std::size_t i = 0; i < values.size(); ++i)
        if (upper(values[i]) == s) return static_cast<std::int64_t>(i);
      return fail("expected one of " + domain_text());
    }
    case ParamKind::Subset: {
      if (!j.is_array()) return fail("expected an array of names");
      std::int64_t mask = 0;
      for (const auto& e : j) {
        if (!e.is_string()) return fail("expected an array of names");
        auto s = upper(e.get<std::string>());
        auto it = std::find_if(values.begin(), values.end(), [&](const auto& v) { return upper(v) == s; });
        if (it == values.end()) return fail("unknown value '" + e.get<std::string>() + "'");
        mask |= std::int64_t{1} << (it - values.begin());
      }
      return mask;
    }
  }
  return 0;
}

std::string ParamDef::domain_text() const {
  auto joined = [&] {
    std::string s;
    for (const auto& v : values) s += (s.empty() ? "" : ", ") + v;
    return "{" + s + "}";
  };
  switch (kind) {
    case ParamKind::Int: return "[" + std::to_string(min) + ", " + std::to_string(max) + "]";
    case ParamKind::Bool: return "{false, true}";
    case ParamKind::Enum: return joined();
    case ParamKind::Subset: return "subsets of " + joined();
  }
  return {};
}

const ParamDef* TemplateDef::find_param(std::string_view n) const {
  for (const auto& p : parameters)
    if (p.name == n) return &p;
  return nullptr;
}

TemplateDef template_from_json(const json& j) {
  TemplateDef t;
  try {
    t.name = j.at("name").get<std::string>();
    t.description = j.value("description", "");
    for (const auto& p : j.at("parameters")) {
      ParamDef d;
      d.name = p.at("name").get<std::string>();
      auto type = p.at("type").get<std::string>();
      if (type == "int") {
        d.kind = ParamKind::Int;
        d.min = p.at("min").get<std::int64_t>();
        d.max = p.at("max").get<std::int64_t>();
        if (d.min > d.max) bad(t.name, "empty domain for " + d.name);
      } else if (type == "bool") {
        d.kind = ParamKind::Bool;
      } else if (type == "enum" || type == "subset") {
        d.kind = type == "enum" ? ParamKind::Enum : ParamKind::Subset;
        d.values = p.at("values").get<std::vector<std::string>>();
        if (d.values.empty() || d.values.size() > 30) bad(t.name, "bad value list for " + d.name);
      } else {
        bad(t.name, "unknown parameter type " + type);
      }
      d.description = p.value("description", "");
      if (t.find_param(d.name)) bad(t.name, "duplicate parameter " + d.name);
      t.parameters.push_back(std::move(d));
    }
    for (const auto& r : j.value("design_rules", json::array())) {
      DesignRule d;
      auto kind = r.at("kind").get<std::string>();
      d.name = r.value("name", kind);
      d.message = r.value("message", "");
      if (kind == "op_coverage") {
        d.kind = RuleKind::OpCoverage;
        d.param = r.value("param", "");
        for (const auto& o : r.value("ops", std::vector<std::string>{})) {
          auto op = parse_op(o);
          if (!op) bad(t.name, "unknown operator " + o);
          d.ops.push_back(*op);
        }
      } else if (kind == "capacity") {
        d.kind = RuleKind::Capacity;
        if (r.contains("rows")) d.rows = expr_text(r.at("rows"));
        if (r.contains("cols")) d.cols = expr_text(r.at("cols"));
        if (r.contains("unroll")) d.unroll = expr_text(r.at("unroll"));
      } else if (kind == "linear") {
        d.kind = RuleKind::Linear;
        const auto& terms = r.at("terms");
        if (terms.is_object())
          for (const auto& [k, v] : terms.items()) d.terms.emplace_back(k, v.get<std::int64_t>());
        else
          for (const auto& p : terms) d.terms.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::int64_t>());
        d.cmp = r.value("cmp", ">=");
        if (d.cmp != ">=" && d.cmp != "<=" && d.cmp != "==" && d.cmp != ">" && d.cmp != "<")
          bad(t.name, "bad comparison " + d.cmp);
        d.rhs = r.value("rhs", std::int64_t{0});
      } else {
        bad(t.name, "unknown rule kind " + kind);
      }
      t.design_rules.push_back(std::move(d));
    }
    const auto& sk = j.at("skeleton");
    t.root = sk.at("root").get<std::string>();
    for (const auto& m : sk.at("modules")) {
      SkelModule s;
      s.name = m.at("name").get<std::string>();
      s.loops = loops_from(m);
      s.when = m.value("when", "");
      s.description = m.value("description", "");
      for (const auto& n : m.value("notes", json::array())) s.notes.emplace_back(n.value("when", ""), n.at("text").get<std::string>());
      if (m.contains("parameters")) s.parameters = pairs_from(m.at("parameters"));
      for (const auto& p : m.value("ports", json::array())) {
        auto dir = parse_direction(p.value("direction", "input"));
        if (!dir) bad(t.name, "bad direction on port " + p.at("name").get<std::string>());
        s.ports.push_back({p.at("name").get<std::string>(), *dir, p.contains("width") ? expr_text(p.at("width")) : "1"});
      }
      for (const auto& i : m.value("instances", json::array())) {
        SkelInstance si;
        si.module = i.at("module").get<std::string>();
        si.name = i.at("name").get<std::string>();
        si.loops = loops_from(i);
        si.when = i.value("when", "");
        if (i.contains("connections")) si.connections = pairs_from(i.at("connections"));
        s.instances.push_back(std::move(si));
      }
      for (const auto& n : m.value("nets", json::array()))
        s.nets.push_back({n.at("name").get<std::string>(), n.contains("width") ? expr_text(n.at("width")) : "1",
                          loops_from(n), n.value("when", "")});
      for (const auto& a : m.value("assigns", json::array()))
        s.assigns.push_back({a.at("lhs").get<std::string>(), a.at("rhs").get<std::string>(), loops_from(a), a.value("when", "")});
      t.skeleton.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "malformed template " + t.name + ": " + e.what());
  }
  if (!is_identifier(t.name)) bad(t.name, "name must be an identifier");
  validate(t);
  return t;
}

TemplateDef load_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open template " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Syntax, "template " + path + ": " + e.what());
  }
  return template_from_json(j);
}

TemplateDef load_template_named(const std::string& dir, const std::string& name) {
  if (!is_identifier(name)) throw Error(ErrorCode::InvalidArgument, "bad template name " + name);
  return load_template(dir + "/" + name + ".json");
}

json to_json(const DesignConfig& c, const TemplateDef& t) {
  json a = json::object();
  for (const auto& [k, v] : c.assignment) {
    const auto* p = t.find_param(k);
    a[k] = p ? p->to_value_json(v) : json(v);
  }
  return {{"template", c.template_name}, {"assignment", a}};
}

DesignConfig config_from_json(const json& j, const TemplateDef& t) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "configuration must be a JSON object");
  DesignConfig c;
  c.template_name = t.name;
  if (j.contains("template")) {
    if (!j.at("template").is_string()) throw Error(ErrorCode::InvalidArgument, "template must be a string");
    c.template_name = j.at("template").get<std::string>();
    if (c.template_name != t.name)
      throw Error(ErrorCode::InvalidArgument, "configuration is for template '" + c.template_name + "', expected '" + t.name + "'");
  }
  json a = json::object();
  if (j.contains("assignment")) {
    a = j.at("assignment");
    if (!a.is_object()) throw Error(ErrorCode::InvalidArgument, "assignment must be a JSON object");
  } else {
    for (const auto& [k, v] : j.items())
      if (k != "template") a[k] = v;
  }
  for (const auto& [k, v] : a.items()) {
    const auto* p = t.find_param(k);
    if (!p) throw Error(ErrorCode::UnknownParameter, "unknown parameter '" + k + "' for template " + t.name);
    c.assignment[k] = p->from_value_json(v);
  }
  return c;
}

json config_schema(const TemplateDef& t) {
  json props = json::object();
  json required = json::array();
  for (const auto& p : t.parameters) {
    json s;
    switch (p.kind) {
      case ParamKind::Int: s = {{"type", "integer"}, {"minimum", p.min}, {"maximum", p.max}}; break;
      case ParamKind::Bool: s = {{"type", "boolean"}}; break;
      case ParamKind::Enum: s = {{"type", "string"}, {"enum", p.values}}; break;
      case ParamKind::Subset:
        s = {{"type", "array"}, {"items", {{"type", "string"}, {"enum", p.values}}}, {"uniqueItems", true}};
        break;
    }
    if (!p.description.empty()) s["description"] = p.description;
    props[p.name] = s;
    required.push_back(p.name);
  }
  return {{"type", "object"},
          {"required", {"template", "assignment"}},
          {"properties",
           {{"template", {{"const", t.name}}},
            {"assignment",
             {{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}}}}}};
}

std::string describe(const DesignConfig& c, const TemplateDef& t) {
  std::string out;
  for (const auto& p : t.parameters) {
    auto it = c.assignment.find(p.name);
    if (it == c.assignment.end()) continue;
    auto v = p.render(it->second);
    if (p.kind == ParamKind::Subset) v = "{" + v + "}";
    out += (out.empty() ? "" : ", ") + p.name + "=" + v;
  }
  return out;
}

std::vector<Conflict> evaluate_config(const DesignConfig& c, const TemplateDef& t, const KernelDfg& dfg) {
  if (c.template_name != t.name)
    throw Error(ErrorCode::InvalidArgument, "configuration is for template '" + c.template_name + "', not '" + t.name + "'");
  for (const auto& [k, v] : c.assignment)
    if (!t.find_param(k)) throw Error(ErrorCode::UnknownParameter, "unknown parameter '" + k + "' for template " + t.name);

  std::vector<Conflict> out;
  for (const auto& p : t.parameters) {
    auto it = c.assignment.find(p.name);
    if (it == c.assignment.end())
      out.push_back({"domain", "parameter " + p.name + " is unassigned"});
    else if (!p.contains(it->second))
      out.push_back({"domain", "parameter " + p.name + " = " + std::to_string(it->second) + " outside " + p.domain_text()});
  }
  Scope scope(t, &c);
  auto evaluable = [&](const std::string& e) {
    for (const auto& id : expr::identifiers(e))
      if (!c.assignment.contains(id)) return false;
    return true;
  };
  for (const auto& r : t.design_rules) {
    switch (r.kind) {
      case RuleKind::OpCoverage: {
        std::set<Op> supported(r.ops.begin(), r.ops.end());
        if (!r.param.empty()) {
          auto it = c.assignment.find(r.param);
          if (it == c.assignment.end()) break;
          const auto* p = t.find_param(r.param);
          for (std::size_t i = 0; i < p->values.size(); ++i)
            if (it->second & (std::int64_t{1} << i)) supported.insert(*parse_op(p->values[i]));
        }
        for (auto op : dfg.op_set)
          if (!supported.contains(op)) out.push_back({r.name, "op " + std::string(to_string(op)) + " unsupported by ALU"});
        break;
      }
      case RuleKind::Capacity: {
        if (!evaluable(r.rows) || !evaluable(r.cols) || !evaluable(r.unroll)) break;
        auto unroll = scope.eval(r.unroll);
        if (unroll <= 0) throw Error(ErrorCode::Domain, "rule " + r.name + ": unroll factor must be positive");
        auto cap = scope.eval(r.rows) * scope.eval(r.cols);
        auto n = static_cast<std::int64_t>(dfg.node_count());
        auto need = (n + unroll - 1) / unroll;
        if (cap < need) out.push_back({r.name, "capacity " + std::to_string(cap) + " < " + std::to_string(need)});
        break;
      }
      case RuleKind::Linear: {
        std::int64_t sum = 0;
        std::string lhs;
        bool complete = true;
        for (const auto& [p, coef] : r.terms) {
          auto it = c.assignment.find(p);
          if (it == c.assignment.end()) {
            complete = false;
            break;
          }
          sum += coef * it->second;
          std::string mag = (coef == 1 || coef == -1) ? p : std::to_string(coef < 0 ? -coef : coef) + "*" + p;
          if (lhs.empty()) lhs = coef < 0 ? "-" + mag : mag;
          else lhs += (coef < 0 ? " - " : " + ") + mag;
        }
        if (!complete) break;
        bool ok = r.cmp == ">=" ? sum >= r.rhs
                : r.cmp == "<=" ? sum <= r.rhs
                : r.cmp == "==" ? sum == r.rhs
                : r.cmp == ">"  ? sum > r.rhs
                                : sum < r.rhs;
        if (!ok) {
          auto detail = lhs + " = " + std::to_string(sum) + " violates " + r.cmp + " " + std::to_string(r.rhs);
          out.push_back({r.name, r.message.empty() ? detail : r.message + " (" + detail + ")"});
        }
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

const ExpandedModule* Expansion::find(std::string_view name) const {
  for (const auto& m : modules)
    if (m.prompt.name == name) return &m;
  return nullptr;
}

Expansion expand(const DesignConfig& c, const TemplateDef& t) {
  Scope scope(t, &c);
  std::map<std::string, ExpandedModule> built;
  std::vector<std::string> order;
  for (const auto& sm : t.skeleton) {
    if (!sm.loops.empty() || scope.holds(sm.when)) {
      scope.for_each(sm.loops, [&] {
        if (!scope.holds(sm.when)) return;
        ExpandedModule em;
        auto& pm = em.prompt;
        pm.name = scope.subst(sm.name);
        pm.description = scope.subst(sm.description);
        for (const auto& [w, text] : sm.notes)
          if (scope.holds(w)) pm.description += " " + scope.subst(text);
        for (const auto& [k, v] : sm.parameters) pm.parameters[k] = scope.eval(v);
        for (const auto& p : sm.ports) {
          auto w = scope.eval(p.width);
          if (w < 1) throw Error(ErrorCode::Domain, "port " + p.name + " of " + pm.name + " has width " + std::to_string(w));
          pm.ports.push_back({p.name, p.direction, static_cast<int>(w)});
        }
        for (const auto& si : sm.instances)
          scope.for_each(si.loops, [&] {
            if (!scope.holds(si.when)) return;
            InstanceRef ref{scope.subst(si.module), scope.subst(si.name), {}};
            for (const auto& [port, net] : si.connections) ref.connections[port] = scope.subst(net);
            pm.instances.push_back(std::move(ref));
          });
        for (const auto& n : sm.nets)
          scope.for_each(n.loops, [&] {
            if (scope.holds(n.when)) em.nets.emplace_back(scope.subst(n.name), static_cast<int>(scope.eval(n.width)));
          });
        for (const auto& a : sm.assigns)
          scope.for_each(a.loops, [&] {
            if (scope.holds(a.when)) em.assigns.emplace_back(scope.subst(a.lhs), scope.subst(a.rhs));
          });
        if (built.contains(pm.name)) bad(t.name, "module " + pm.name + " expands twice");
        order.push_back(pm.name);
        built.emplace(pm.name, std::move(em));
      });
    }
  }
  if (!built.contains(t.root)) bad(t.name, "root module " + t.root + " is not generated");

  Expansion out;
  out.root = t.root;
  std::set<std::string> seen{t.root};
  std::vector<std::string> frontier{t.root};
  for (int level = 0; !frontier.empty(); ++level) {
    std::vector<std::string> next;
    for (const auto& name : frontier) {
      auto& em = built.at(name);
      em.prompt.level = level;
      for (const auto& inst : em.prompt.instances) {
        if (!built.contains(inst.module_name))
          bad(t.name, "module " + name + " instantiates undefined module " + inst.module_name);
        if (seen.insert(inst.module_name).second) next.push_back(inst.module_name);
      }
      out.modules.push_back(em);
    }
    frontier = std::move(next);
  }
  return out;
}

HierarchicalPrompt enhance_prompt(const DesignConfig& c, const TemplateDef& t) {
  auto e = expand(c, t);
  HierarchicalPrompt p;
  p.design = t.name + " (" + describe(c, t) + ")";
  p.top = e.root;
  for (auto& m : e.modules) p.modules.push_back(std::move(m.prompt));
  return p;
}

}  // namespace hivegen::dse

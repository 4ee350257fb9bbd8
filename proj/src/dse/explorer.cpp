#include "hivegen/dse/explorer.hpp"

#include <fstream>
#include <sstream>

#include "hivegen/core/json_io.hpp"
#include "hivegen/metrics/metrics.hpp"

namespace hivegen::dse {

using nlohmann::json;

const char* const kConfigSystemPrompt =
    "You are the design space explorer of a hierarchical Verilog generation framework. "
    "Given an accelerator template with configurable parameters and the properties of an application kernel, "
    "propose a configuration JSON file that assigns every explorable parameter. "
    "Be PPA-aware: study the previous-round feedback from the PPA checker and any design-rule conflicts, "
    "and move the next configuration toward the stated objective. Answer with JSON only.";

const char* const kPromptSystemPrompt =
    "You are the design space explorer of a hierarchical Verilog generation framework. "
    "Turn the natural-language design request into a hierarchical prompt: an ordered list of modules from the "
    "top module down to the leaves, each with a precise functional description, ports, parameters and submodule "
    "instances. Reuse one module wherever identical structure repeats. "
    "Be PPA-aware: study the previous-round feedback from the PPA checker and move the design toward the stated "
    "objective. Answer with JSON only.";

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::Power: return "power";
    case Objective::Clock: return "clock";
    case Objective::Area: return "area";
  }
  return "?";
}

std::optional<Objective> parse_objective(std::string_view s) {
  for (auto o : {Objective::Power, Objective::Clock, Objective::Area})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

std::string_view to_string(IclMode m) { return m == IclMode::OneShot ? "one_shot" : "none"; }

std::optional<IclMode> parse_icl_mode(std::string_view s) {
  if (s == "none") return IclMode::None;
  if (s == "one_shot") return IclMode::OneShot;
  return std::nullopt;
}

std::string load_icl_example(const std::string& dir, const std::string& template_name) {
  auto path = dir + "/" + template_name + ".json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "no one-shot example at " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.pop_back();
  return text;
}

namespace {

std::string objective_line(const ExplorerState& s) {
  std::string out = "Objective: minimize " + std::string(to_string(s.objective)) + "\n";
  if (s.strategy_hint && !s.strategy_hint->empty()) out += "Suggested strategy: " + *s.strategy_hint + "\n";
  return out;
}

std::string history_block(const ExplorerState& s) {
  std::string out = "Previous rounds:\n";
  if (s.history.empty()) return out + "  (none)\n";
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    const auto& r = s.history[i];
    out += "  round " + std::to_string(i + 1) + ":";
    if (!r.config.is_null()) out += " config " + r.config.dump() + ";";
    if (r.ppa.passed)
      out += " result passed, power " + metrics::format_fixed(r.ppa.power_mw, 2) + " mW, clock " +
             metrics::format_fixed(r.ppa.clock_ns, 2) + " ns, area " + metrics::format_fixed(r.ppa.area_um2, 2) + " um2";
    else
      out += " result failed";
    if (!r.feedback.empty()) out += "\n    feedback: " + r.feedback;
    out += "\n";
  }
  return out;
}

std::string rule_text(const DesignRule& r, const TemplateDef& t) {
  switch (r.kind) {
    case RuleKind::OpCoverage: {
      if (!r.param.empty()) return "every kernel operator must be listed in " + r.param;
      std::set<Op> ops(r.ops.begin(), r.ops.end());
      return "every kernel operator must be in " + format_op_set(ops);
    }
    case RuleKind::Capacity:
      return r.rows + " * " + r.cols + " >= ceil(operations / " + r.unroll + ")" +
             (r.message.empty() ? "" : " (" + r.message + ")");
    case RuleKind::Linear: {
      std::string lhs;
      for (const auto& [p, c] : r.terms) {
        std::string mag = (c == 1 || c == -1) ? p : std::to_string(c < 0 ? -c : c) + "*" + p;
        lhs += lhs.empty() ? (c < 0 ? "-" : "") + mag : (c < 0 ? " - " : " + ") + mag;
      }
      return lhs + " " + r.cmp + " " + std::to_string(r.rhs);
    }
  }
  (void)t;
  return {};
}

std::string with_repair(const std::string& base, const std::string& problem) {
  if (problem.empty()) return base;
  return base + "\nYour previous reply could not be used: " + problem + "\nReply again with only the JSON object.\n";
}

}  // namespace

std::string render_config_request(const TemplateDef& t, const KernelDfg& dfg, const ExplorerState& s) {
  std::ostringstream os;
  os << "Template: " << t.name << "\n";
  if (!t.description.empty()) os << t.description << "\n";
  os << "\nApplication kernel:\n";
  os << "  operations: " << dfg.node_count() << "\n";
  os << "  op set: " << format_op_set(dfg.op_set) << "\n";
  os << "  op counts:";
  bool first = true;
  for (auto op : dfg.op_set) {
    os << (first ? " " : ", ") << to_string(op) << " " << dfg.count(op);
    first = false;
  }
  if (first) os << " (none)";
  os << "\n  dependency depth: " << dfg.depth() << "\n";
  os << "  inputs: " << dfg.inputs.size() << "\n";
  os << "\nConfiguration JSON schema:\n" << config_schema(t).dump(2) << "\n";
  os << "\nDesign rules:\n";
  for (const auto& r : t.design_rules) os << "  - " << r.name << ": " << rule_text(r, t) << "\n";
  os << "\n" << objective_line(s);
  os << "\n" << history_block(s);
  if (s.icl_mode == IclMode::OneShot && !s.icl_example.empty())
    os << "\nExample configuration (one shot):\n" << s.icl_example << "\n";
  os << "\nReply with a single JSON object {\"template\": \"" << t.name
     << "\", \"assignment\": {...}} that assigns every parameter.\n";
  return os.str();
}

std::string render_prompt_request(const std::string& description, const ExplorerState& s) {
  std::ostringstream os;
  os << "Design request:\n" << description << "\n\n" << objective_line(s) << "\n" << history_block(s);
  os << "\nReply with a single JSON object {\"design\": str, \"top\": str, \"modules\": [{\"name\": str, "
        "\"description\": str, \"ports\": [{\"name\": str, \"direction\": \"input|output|inout\", \"width\": int}], "
        "\"parameters\": {str: int}, \"instances\": [{\"module_name\": str, \"instance_name\": str, \"count\": int}], "
        "\"level\": int}]} listing the top module first.\n";
  return os.str();
}

std::optional<json> extract_json(std::string_view text) {
  auto try_parse = [](std::string_view s) -> std::optional<json> {
    auto j = json::parse(s.begin(), s.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  };
  auto fence = text.find("```");
  if (fence != std::string_view::npos) {
    auto body = text.find('\n', fence);
    auto end = body == std::string_view::npos ? body : text.find("```", body);
    if (end != std::string_view::npos)
      if (auto j = try_parse(text.substr(body + 1, end - body - 1))) return j;
  }
  auto b = text.find('{');
  auto e = text.rfind('}');
  if (b == std::string_view::npos || e == std::string_view::npos || e < b) return std::nullopt;
  return try_parse(text.substr(b, e - b + 1));
}

Proposal propose_config(const TemplateDef& t, const KernelDfg& dfg, const ExplorerState& s, llm::LlmBackend& llm,
                        const LlmParams& params, int attempts) {
  if (attempts < 1) throw Error(ErrorCode::InvalidArgument, "attempts must be at least 1");
  const auto base = render_config_request(t, dfg, s);
  Proposal out;
  std::string problem;
  for (int a = 1; a <= attempts; ++a) {
    llm::ChatRequest req{kConfigSystemPrompt, with_repair(base, problem), params, "dse", t.name};
    auto resp = llm.complete(req);
    out.usage += resp.usage;
    out.attempts = a;
    out.raw = resp.text;
    auto j = extract_json(resp.text);
    if (!j) {
      problem = "it did not contain a JSON object";
      continue;
    }
    try {
      auto cfg = config_from_json(*j, t);
      std::string missing;
      for (const auto& p : t.parameters)
        if (!cfg.assignment.contains(p.name)) missing += (missing.empty() ? "" : ", ") + p.name;
      if (!missing.empty()) {
        problem = "parameters missing from the assignment: " + missing;
        continue;
      }
      out.config = std::move(cfg);
      out.conflicts = evaluate_config(out.config, t, dfg);
      out.request = req.user;
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidArgument && e.code() != ErrorCode::UnknownParameter) throw;
      problem = e.what();
    }
  }
  throw ProposalFailed("no valid " + t.name + " configuration after " + std::to_string(attempts) +
                           " attempt(s): " + problem,
                       out.raw);
}

HierarchicalPrompt prompt_from_reply(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "hierarchical prompt must be a JSON object");
  json norm = j;
  if (!norm.contains("modules") || !norm.at("modules").is_array())
    throw Error(ErrorCode::InvalidArgument, "hierarchical prompt needs a modules array");
  for (auto& m : norm.at("modules")) {
    if (!m.is_object() || !m.contains("instances")) continue;
    json expanded = json::array();
    for (const auto& i : m.at("instances")) {
      if (i.is_object() && i.contains("count")) {
        auto n = i.at("count").get<int>();
        if (n < 1 || n > 4096) throw Error(ErrorCode::InvalidArgument, "instance count out of range");
        auto base = i.value("instance_name", i.value("module_name", std::string("u")));
        for (int k = 0; k < n; ++k) {
          json one = i;
          one.erase("count");
          one["instance_name"] = n == 1 ? base : base + "_" + std::to_string(k);
          expanded.push_back(one);
        }
      } else {
        expanded.push_back(i);
      }
    }
    m["instances"] = expanded;
  }
  HierarchicalPrompt p;
  try {
    p = norm.get<HierarchicalPrompt>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed hierarchical prompt: ") + e.what());
  }
  if (p.modules.empty()) throw Error(ErrorCode::InvalidArgument, "hierarchical prompt lists no modules");
  for (const auto& m : p.modules) {
    if (!is_identifier(m.name)) throw Error(ErrorCode::InvalidArgument, "bad module name '" + m.name + "'");
    for (const auto& i : m.instances)
      if (!is_identifier(i.module_name) || !is_identifier(i.instance_name))
        throw Error(ErrorCode::InvalidArgument, "bad instance in module " + m.name);
  }
  if (p.top.empty()) p.top = p.modules.front().name;
  if (!p.find(p.top)) throw Error(ErrorCode::InvalidArgument, "top module '" + p.top + "' is not described");
  return p;
}

PromptProposal propose_prompt(const std::string& description, const ExplorerState& s, llm::LlmBackend& llm,
                              const LlmParams& params, int attempts) {
  if (description.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "design description is empty");
  if (attempts < 1) throw Error(ErrorCode::InvalidArgument, "attempts must be at least 1");
  const auto base = render_prompt_request(description, s);
  PromptProposal out;
  std::string problem;
  for (int a = 1; a <= attempts; ++a) {
    llm::ChatRequest req{kPromptSystemPrompt, with_repair(base, problem), params, "prompt", "design"};
    auto resp = llm.complete(req);
    out.usage += resp.usage;
    out.attempts = a;
    out.raw = resp.text;
    auto j = extract_json(resp.text);
    if (!j) {
      problem = "it did not contain a JSON object";
      continue;
    }
    try {
      out.prompt = prompt_from_reply(*j);
      out.request = req.user;
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidArgument) throw;
      problem = e.what();
    }
  }
  throw ProposalFailed("no valid hierarchical prompt after " + std::to_string(attempts) + " attempt(s): " + problem,
                       out.raw);
}

json to_json(const PpaFeedback& p) {
  return {{"power_mw", p.power_mw}, {"clock_ns", p.clock_ns}, {"area_um2", p.area_um2}, {"passed", p.passed}};
}

PpaFeedback ppa_from_json(const json& j) {
  return {j.value("power_mw", 0.0), j.value("clock_ns", 0.0), j.value("area_um2", 0.0), j.value("passed", false)};
}

json to_json(const RoundRecord& r) { return {{"config", r.config}, {"ppa", to_json(r.ppa)}, {"feedback", r.feedback}}; }

RoundRecord round_from_json(const json& j) {
  return {j.value("config", json()), ppa_from_json(j.value("ppa", json::object())), j.value("feedback", "")};
}

}  // namespace hivegen::dse

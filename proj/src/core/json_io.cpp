#include "hivegen/core/json_io.hpp"

#include "hivegen/core/error.hpp"

namespace hivegen {

using nlohmann::json;

void to_json(json& j, const PortDecl& p) {
  j = json{{"name", p.name}, {"direction", std::string(to_string(p.direction))}, {"width", p.width}};
}

void from_json(const json& j, PortDecl& p) {
  p.name = j.at("name").get<std::string>();
  auto dir = parse_direction(j.value("direction", std::string("input")));
  if (!dir) throw Error(ErrorCode::InvalidArgument, "bad port direction for " + p.name);
  p.direction = *dir;
  p.width = j.value("width", 1);
}

void to_json(json& j, const InstanceRef& i) {
  j = json{{"module_name", i.module_name},
           {"instance_name", i.instance_name},
           {"connections", i.connections}};
}

void from_json(const json& j, InstanceRef& i) {
  i.module_name = j.at("module_name").get<std::string>();
  i.instance_name = j.at("instance_name").get<std::string>();
  i.connections = j.value("connections", std::map<std::string, std::string>{});
}

void to_json(json& j, const ModuleSpec& m) {
  j = json{{"name", m.name},
           {"ports", m.ports},
           {"parameters", m.parameters},
           {"instances", m.instances},
           {"body_state", m.body_state == BodyState::Filled ? "filled" : "placeholder"}};
}

void from_json(const json& j, ModuleSpec& m) {
  m.name = j.at("name").get<std::string>();
  m.ports = j.value("ports", std::vector<PortDecl>{});
  m.parameters = j.value("parameters", std::map<std::string, std::int64_t>{});
  m.instances = j.value("instances", std::vector<InstanceRef>{});
  m.body_state = j.value("body_state", std::string("placeholder")) == "filled"
                     ? BodyState::Filled
                     : BodyState::Placeholder;
}

void to_json(json& j, const DesignHierarchy& h) {
  j = json{{"root", h.root}, {"modules", h.modules}};
}

void from_json(const json& j, DesignHierarchy& h) {
  h.root = j.at("root").get<std::string>();
  h.modules = j.at("modules").get<std::map<std::string, ModuleSpec>>();
}

void to_json(json& j, const CodeBlock& b) {
  j = json{{"id", b.id},
           {"module_name", b.module_name},
           {"source", b.source},
           {"content_hash", to_hex(b.content_hash)},
           {"verified", b.verified}};
}

void from_json(const json& j, CodeBlock& b) {
  b.id = j.value("id", std::uint64_t{0});
  b.module_name = j.at("module_name").get<std::string>();
  b.source = j.at("source").get<std::string>();
  auto hex = j.at("content_hash").get<std::string>();
  auto d = digest_from_hex(hex);
  if (!d) throw Error(ErrorCode::InvalidArgument, "bad content_hash " + hex);
  b.content_hash = *d;
  b.verified = j.value("verified", false);
}

void to_json(json& j, const TokenUsage& u) {
  j = json{{"prompt_tokens", u.prompt_tokens},
           {"completion_tokens", u.completion_tokens},
           {"total_tokens", u.total_tokens}};
}

void from_json(const json& j, TokenUsage& u) {
  u.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
  u.completion_tokens = j.value("completion_tokens", std::int64_t{0});
  u.total_tokens = j.value("total_tokens", u.prompt_tokens + u.completion_tokens);
}

void to_json(json& j, const LlmParams& p) {
  j = json{{"model_id", p.model_id},
           {"temperature", p.temperature},
           {"top_p", p.top_p},
           {"max_output_tokens", p.max_output_tokens}};
}

void from_json(const json& j, LlmParams& p) {
  LlmParams d;
  p.model_id = j.value("model_id", d.model_id);
  p.temperature = j.value("temperature", d.temperature);
  p.top_p = j.value("top_p", d.top_p);
  p.max_output_tokens = j.value("max_output_tokens", d.max_output_tokens);
}

void to_json(json& j, const GenerationConfig& c) {
  j = json{{"max_retries", c.max_retries},
           {"second_chance_trigger", c.second_chance_trigger},
           {"garbage_mark", c.garbage_mark},
           {"retrieval_threshold", c.retrieval_threshold},
           {"llm_params", c.llm_params},
           {"worker_count", c.worker_count},
           {"deterministic_mode", c.deterministic_mode},
           {"round_budget", c.round_budget}};
}

void from_json(const json& j, GenerationConfig& c) {
  GenerationConfig d;
  c.max_retries = j.value("max_retries", d.max_retries);
  c.second_chance_trigger = j.value("second_chance_trigger", d.second_chance_trigger);
  c.garbage_mark = j.value("garbage_mark", d.garbage_mark);
  c.retrieval_threshold = j.value("retrieval_threshold", d.retrieval_threshold);
  c.llm_params = j.value("llm_params", d.llm_params);
  c.worker_count = j.value("worker_count", d.worker_count);
  c.deterministic_mode = j.value("deterministic_mode", d.deterministic_mode);
  c.round_budget = j.value("round_budget", d.round_budget);
}

}  // namespace hivegen

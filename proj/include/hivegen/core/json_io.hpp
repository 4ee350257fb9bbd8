#pragma once
// JSON schema for the core model. Field names here are the stable names used by
// the CLI, the HTTP service and library persistence.

#include <nlohmann/json.hpp>

#include "hivegen/core/model.hpp"

namespace hivegen {

void to_json(nlohmann::json& j, const PortDecl& p);
void from_json(const nlohmann::json& j, PortDecl& p);
void to_json(nlohmann::json& j, const InstanceRef& i);
void from_json(const nlohmann::json& j, InstanceRef& i);
void to_json(nlohmann::json& j, const ModuleSpec& m);
void from_json(const nlohmann::json& j, ModuleSpec& m);
void to_json(nlohmann::json& j, const DesignHierarchy& h);
void from_json(const nlohmann::json& j, DesignHierarchy& h);
void to_json(nlohmann::json& j, const CodeBlock& b);
void from_json(const nlohmann::json& j, CodeBlock& b);
void to_json(nlohmann::json& j, const TokenUsage& u);
void from_json(const nlohmann::json& j, TokenUsage& u);
void to_json(nlohmann::json& j, const LlmParams& p);
void from_json(const nlohmann::json& j, LlmParams& p);
void to_json(nlohmann::json& j, const GenerationConfig& c);
void from_json(const nlohmann::json& j, GenerationConfig& c);

}  // namespace hivegen

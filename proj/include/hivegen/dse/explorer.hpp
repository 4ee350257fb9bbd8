#pragma once
// LLM-driven design-space exploration: configuration proposals for template
// designs and direct hierarchical prompts for simple designs. Every
// configuration leaving propose_config has already been evaluated.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/error.hpp"
#include "hivegen/core/prompt.hpp"
#include "hivegen/dse/dfg.hpp"
#include "hivegen/dse/template.hpp"
#include "hivegen/llm/backend.hpp"

namespace hivegen::dse {

struct PpaFeedback {
  double power_mw = 0;
  double clock_ns = 0;
  double area_um2 = 0;
  bool passed = false;
  friend bool operator==(const PpaFeedback&, const PpaFeedback&) = default;
};

enum class Objective { Power, Clock, Area };
std::string_view to_string(Objective o);
std::optional<Objective> parse_objective(std::string_view s);

enum class IclMode { None, OneShot };
std::string_view to_string(IclMode m);
std::optional<IclMode> parse_icl_mode(std::string_view s);

struct RoundRecord {
  nlohmann::json config;  // null for prompt-mode rounds
  PpaFeedback ppa;
  std::string feedback;   // conflicts or failure text, quoted verbatim in later prompts
};

struct ExplorerState {
  std::vector<RoundRecord> history;
  Objective objective = Objective::Clock;
  std::optional<std::string> strategy_hint;
  IclMode icl_mode = IclMode::None;
  std::string icl_example;  // one-shot configuration text, used when icl_mode is OneShot
};

/// Reads `<dir>/<template>.json`; throws Error(NotFound).
std::string load_icl_example(const std::string& dir, const std::string& template_name);

class ProposalFailed : public Error {
 public:
  ProposalFailed(const std::string& message, std::string raw)
      : Error(ErrorCode::ProposalFailed, message), raw_(std::move(raw)) {}
  [[nodiscard]] const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

extern const char* const kConfigSystemPrompt;
extern const char* const kPromptSystemPrompt;

std::string render_config_request(const TemplateDef& t, const KernelDfg& dfg, const ExplorerState& s);
std::string render_prompt_request(const std::string& description, const ExplorerState& s);

/// First JSON object in an LLM reply (fenced block preferred).
std::optional<nlohmann::json> extract_json(std::string_view text);

struct Proposal {
  DesignConfig config;
  std::vector<Conflict> conflicts;  // evaluate_config verdict; empty means ok
  std::string request;              // user prompt of the accepted attempt
  std::string raw;
  int attempts = 0;
  TokenUsage usage;
};

/// Up to `attempts` LLM calls; a reply that is not a schema-valid config
/// triggers a repair request quoting the problem. Throws ProposalFailed.
Proposal propose_config(const TemplateDef& t, const KernelDfg& dfg, const ExplorerState& s, llm::LlmBackend& llm,
                        const LlmParams& params = {}, int attempts = 3);

struct PromptProposal {
  HierarchicalPrompt prompt;
  std::string request;
  std::string raw;
  int attempts = 0;
  TokenUsage usage;
};

/// Throws Error(InvalidArgument) for an empty description before any call.
PromptProposal propose_prompt(const std::string& description, const ExplorerState& s, llm::LlmBackend& llm,
                              const LlmParams& params = {}, int attempts = 3);

/// Accepts the prompt JSON shape emitted by the model, expanding
/// `{"module_name": m, "instance_name": p, "count": n}` into p_0..p_{n-1}.
HierarchicalPrompt prompt_from_reply(const nlohmann::json& j);

nlohmann::json to_json(const PpaFeedback& p);
PpaFeedback ppa_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RoundRecord& r);
RoundRecord round_from_json(const nlohmann::json& j);

}  // namespace hivegen::dse

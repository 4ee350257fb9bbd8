#pragma once
// Session document: everything one generation run produces. Plain data; the
// orchestrator is its only writer while the run is live.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/prompt.hpp"
#include "hivegen/dse/explorer.hpp"
#include "hivegen/orchestrator/ppa.hpp"
#include "hivegen/orchestrator/verify.hpp"
#include "hivegen/parse/sketch.hpp"
#include "hivegen/parse/tasks.hpp"

namespace hivegen {

enum class SessionMode { Simple, Template };
enum class SessionStatus { Running, AwaitingUser, Succeeded, Failed };

std::string_view to_string(SessionMode m);
std::string_view to_string(SessionStatus s);
std::optional<SessionStatus> parse_session_status(std::string_view s);

struct ModuleRecord {
  std::string module;
  std::string source_kind;  // "library", "llm", "assembled", "template"
  int attempts = 0;         // LLM attempts that produced a candidate block
  int verified = 0;         // of those, how many passed verification
  int llm_calls = 0;        // including testbench requests
  std::optional<std::uint64_t> retrieved_id;
  std::vector<std::uint64_t> rejected_ids;
  std::optional<std::uint64_t> library_id;
  VerificationResult verification;
  std::string error;
  std::int64_t started_tick = 0;   // logical clock, shared by the session
  std::int64_t finished_tick = 0;
};

struct EditRecord {
  std::string sentence;
  nlohmann::json command;
  std::int64_t revision = 0;
};

struct GenerationSession {
  std::string id;
  SessionMode mode = SessionMode::Simple;
  SessionStatus status = SessionStatus::Running;
  std::string failed_stage;
  std::string error;

  std::string description;
  std::string kernel;
  std::string template_name;

  HierarchicalPrompt prompt;
  parse::TaskList tasks;
  parse::SketchSet sketches;
  std::map<std::string, CodeBlock> blocks;
  std::vector<dse::RoundRecord> rounds;
  std::map<std::string, ModuleRecord> modules;
  std::optional<PpaEstimate> ppa;
  std::vector<EditRecord> edits;
  std::int64_t revision = 0;  // bumped on every accepted edit
  // (entry id, success) batches handed to the library; one per terminated run
  std::vector<std::vector<std::pair<std::uint64_t, bool>>> outcome_batches;

  TokenUsage usage;
  int llm_calls = 0;
  std::int64_t wall_time_ms = 0;
  std::map<std::string, std::int64_t> stage_ms;

  [[nodiscard]] bool terminal() const {
    return status == SessionStatus::Succeeded || status == SessionStatus::Failed;
  }
  /// LLM-producing attempts (n) and verified ones (c) over all modules.
  [[nodiscard]] int attempts() const;
  [[nodiscard]] int verified_attempts() const;
};

nlohmann::json to_json(const ModuleRecord& r);
ModuleRecord module_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenerationSession& s);
GenerationSession session_from_json(const nlohmann::json& j);

/// Read-only projection served to clients:
/// {id, status, mode, failed_stage, error, revision, tasks: [{module, status}],
///  rounds: [{index, config, passed, feedback, power_mw, clock_ns, area_um2}],
///  usage, ppa}
nlohmann::json api_view(const GenerationSession& s);

/// metrics.json body for one session.
nlohmann::json session_metrics(const GenerationSession& s);

}  // namespace hivegen

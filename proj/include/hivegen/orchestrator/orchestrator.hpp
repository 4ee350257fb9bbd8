#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hivegen/library/library.hpp"
#include "hivegen/llm/backend.hpp"
#include "hivegen/orchestrator/session.hpp"

namespace hivegen {

struct SessionRequest {
  SessionMode mode = SessionMode::Simple;
  std::string id;  // generated when empty

  // simple mode: a ready prompt, or a description for the prompt engine
  std::optional<HierarchicalPrompt> prompt;
  std::string description;

  // template mode
  std::string kernel_source;
  std::string kernel_name;
  std::string template_name;
  dse::Objective objective = dse::Objective::Clock;
  std::optional<std::string> strategy_hint;
  dse::IclMode icl_mode = dse::IclMode::None;

  bool interactive = false;  // pause at awaiting_user after the first task list
};

nlohmann::json to_json(const SessionRequest& r);
/// Accepts {"prompt": {...}} | {"description": ".."} | {"kernel": "..",
/// "template": ".."} plus optional id, objective, strategy, icl, interactive.
/// Throws Error(InvalidArgument).
SessionRequest session_request_from_json(const nlohmann::json& j);

struct OrchestratorOptions {
  GenerationConfig config;
  std::string data_dir = HIVEGEN_DATA_DIR;  // templates/, icl/, ppa_calibration.json
  std::string sessions_dir;                   // artifacts when non-empty
  std::optional<SimulatorConfig> simulator;
  std::optional<PpaCalibration> calibration;  // default: data_dir/ppa_calibration.json
};

struct SessionEvent {
  std::int64_t seq = 0;
  std::string type;  // status, task, revision, round, edit
  nlohmann::json data;
};

nlohmann::json to_json(const SessionEvent& e);

struct EditResponse {
  bool accepted = false;
  nlohmann::json command;  // null unless accepted
  nlohmann::json ls_tree;  // null when parsing failed
  std::string error_code;
  std::string error;
  std::optional<std::int64_t> new_revision;
};

nlohmann::json to_json(const EditResponse& r);

class Orchestrator;

/// Live handle on one run. All mutations go through the session's lock; the
/// pipeline thread is the only writer of stage results.
class Session {
 public:
  static constexpr std::size_t kEventCapacity = 1024;  // oldest events are dropped beyond this

  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] GenerationSession snapshot() const;
  [[nodiscard]] SessionStatus status() const;

  /// Throws Error(Conflict) unless the session is awaiting_user.
  EditResponse edit(const std::string& sentence);
  /// Leaves awaiting_user; throws Error(Conflict) in any other state.
  void approve();
  /// Stops scheduling, marks unfinished tasks failed and records outcomes.
  void abort();

  /// Events with seq > since; blocks up to `wait` for a new one when none.
  std::vector<SessionEvent> events_since(std::int64_t since,
                                         std::chrono::milliseconds wait = std::chrono::milliseconds{0}) const;
  /// Blocks until terminal (or timeout); returns the terminal state flag.
  bool wait_done(std::chrono::milliseconds timeout = std::chrono::hours{24}) const;
  /// Blocks until the session is awaiting_user or terminal.
  bool wait_ready(std::chrono::milliseconds timeout = std::chrono::hours{24}) const;
  /// True once the run ended and its artifacts were written.
  [[nodiscard]] bool finished() const;

 private:
  friend class Orchestrator;
  friend class Pipeline;
  Session(std::string id, GenerationSession doc);

  void emit(const std::string& type, nlohmann::json data);  // caller holds mu_
  void set_status(SessionStatus s);                          // caller holds mu_
  void set_task(const std::string& module, parse::TaskStatus s);  // caller holds mu_

  std::string id_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  GenerationSession doc_;
  std::deque<SessionEvent> events_;
  std::int64_t next_seq_ = 1;
  bool approved_ = false;
  bool finished_ = false;
  std::atomic<bool> aborted_{false};
  std::thread worker_;
};

class Orchestrator {
 public:
  Orchestrator(OrchestratorOptions options, std::shared_ptr<llm::LlmBackend> backend,
               std::shared_ptr<library::CodeLibrary> library, std::shared_ptr<library::Embedder> embedder);

  /// Starts a run on a background thread.
  std::shared_ptr<Session> start(SessionRequest request);
  /// Runs to completion on the calling thread (non-interactive).
  GenerationSession run(SessionRequest request);

  [[nodiscard]] const OrchestratorOptions& options() const { return options_; }
  [[nodiscard]] const std::shared_ptr<library::CodeLibrary>& library() const { return library_; }
  [[nodiscard]] const std::shared_ptr<llm::LlmBackend>& backend() const { return backend_; }

  /// Writes design/*.v, session.json and metrics.json under sessions_dir/<id>.
  void write_artifacts(const GenerationSession& s) const;

 private:
  friend class Pipeline;
  std::shared_ptr<Session> make_session(const SessionRequest& request);
  void execute(Session& session, const SessionRequest& request);

  OrchestratorOptions options_;
  PpaCalibration calibration_;
  std::shared_ptr<llm::LlmBackend> backend_;
  std::shared_ptr<library::CodeLibrary> library_;
  std::shared_ptr<library::Embedder> embedder_;
  std::mutex embed_mu_;
  std::atomic<std::uint64_t> counter_{0};
};

extern const char* const kModuleSystemPrompt;
extern const char* const kAssembleSystemPrompt;
extern const char* const kTestbenchSystemPrompt;

/// Text embedded for retrieval: description, then the rendered header.
std::string retrieval_text(const std::string& description, const ModuleSpec& spec);

extern const char* const kRefineSystemPrompt;

/// Collection-time refiner: asks `llm` (purpose "refine") to repair a marked
/// entry, keeping its interface. The result must pass the structural check
/// against the marked block's own header; it keeps the marked embedding and
/// testbench.
library::Refiner make_refiner(llm::LlmBackend& llm, LlmParams params = {});

}  // namespace hivegen

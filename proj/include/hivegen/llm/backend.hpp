#pragma once
// Uniform completion interface and its implementations:
//   ReplayBackend    - deterministic lookup in a JSON-lines fixture file
//   MockBackend      - scripted responses, errors and handlers for tests
//   RemoteBackend    - OpenAI-compatible chat/completions over HTTP
//   RecordingBackend - wraps another backend and captures a fixture file
//
// Fixture line: {"digest": hex, "response_text": str, "prompt_tokens": int,
//                "completion_tokens": int}
// digest = hash_block(system + "\n<<USER>>\n" + user); parameters excluded.

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <variant>
#include <string>
#include <vector>

#include "hivegen/core/error.hpp"
#include "hivegen/core/http.hpp"
#include "hivegen/core/model.hpp"

namespace hivegen::llm {

struct ChatRequest {
  std::string system;
  std::string user;
  LlmParams params;
  // routing hints for scripted backends; not part of the digest
  std::string purpose;  // "module", "testbench", "assemble", "dse", "prompt", "refine"
  std::string subject;  // module or template name
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  double latency_ms = 0;
};

/// Deterministic word-plus-symbol estimate: whitespace-separated words plus
/// non-alphanumeric, non-space characters.
std::int64_t count_tokens(std::string_view text);

Digest request_digest(const ChatRequest& req);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

struct FixtureRecord {
  std::string digest;  // hex
  std::string response_text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

/// Loads a fixture file. Duplicate digests resolve last-write-wins; each
/// duplicate is reported through `warnings` when non-null.
std::map<std::string, FixtureRecord> load_fixtures(const std::string& path,
                                                   std::vector<std::string>* warnings = nullptr);
/// Writes records in order (one JSON object per line). Throws Error(Storage).
void write_fixtures(const std::string& path, const std::vector<FixtureRecord>& records);

class ReplayBackend final : public LlmBackend {
 public:
  explicit ReplayBackend(const std::string& fixture_path);
  explicit ReplayBackend(std::map<std::string, FixtureRecord> records);
  ChatResponse complete(const ChatRequest& req) override;  // Error(FixtureMiss) on miss
  [[nodiscard]] std::string name() const override { return "replay"; }
  [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }

 private:
  std::map<std::string, FixtureRecord> records_;
  std::vector<std::string> warnings_;
};

/// Scripted backend. Resolution order per call: queued error, queued reply,
/// purpose/subject rules (sequential replies, last one sticky), handler.
class MockBackend final : public LlmBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  void push_reply(std::string text);
  void push_error(ErrorCode code, std::string message = "scripted failure");
  /// Replies for requests matching purpose (and subject when non-empty).
  void on(std::string purpose, std::string subject, std::vector<std::string> replies);
  void set_handler(Handler h);
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "mock"; }

  [[nodiscard]] int calls() const { return calls_.load(); }
  [[nodiscard]] int calls_for(const std::string& purpose, const std::string& subject = "") const;
  [[nodiscard]] std::vector<ChatRequest> history() const;

 private:
  struct Rule {
    std::string purpose, subject;
    std::vector<std::string> replies;
    std::size_t next = 0;
  };
  mutable std::mutex mu_;
  std::deque<std::variant<std::string, std::pair<ErrorCode, std::string>>> queue_;
  std::vector<Rule> rules_;
  Handler handler_;
  std::vector<ChatRequest> history_;
  std::atomic<int> calls_{0};
  std::chrono::milliseconds latency_{0};
};

struct RemoteOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  int max_attempts = 3;  // HTTP round trips per complete()
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff{500};

  /// Reads HIVEGEN_BASE_URL and HIVEGEN_API_KEY when set.
  static RemoteOptions from_env();
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, bool exhausted)
      : Error(ErrorCode::Transport, message), exhausted_(exhausted) {}
  [[nodiscard]] bool retry_budget_exhausted() const noexcept { return exhausted_; }

 private:
  bool exhausted_;
};

class RemoteBackend final : public LlmBackend {
 public:
  explicit RemoteBackend(RemoteOptions opts);
  RemoteBackend(RemoteOptions opts, std::shared_ptr<HttpTransport> transport);
  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "remote"; }

  /// Request body sent to /chat/completions.
  static std::string encode_request(const ChatRequest& req);

 private:
  RemoteOptions opts_;
  std::shared_ptr<HttpTransport> transport_;
};

/// Forwards to `inner` and keeps every (digest, response) pair in call order.
class RecordingBackend final : public LlmBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<LlmBackend> inner) : inner_(std::move(inner)) {}
  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "recording(" + inner_->name() + ")"; }
  [[nodiscard]] std::vector<FixtureRecord> transcript() const;
  void write(const std::string& path) const { write_fixtures(path, transcript()); }

 private:
  std::shared_ptr<LlmBackend> inner_;
  mutable std::mutex mu_;
  std::vector<FixtureRecord> records_;
};

/// Wraps a backend and keeps the running token/call totals.
class MeteredBackend final : public LlmBackend {
 public:
  explicit MeteredBackend(std::shared_ptr<LlmBackend> inner) : inner_(std::move(inner)) {}
  ChatResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return inner_->name(); }
  [[nodiscard]] TokenUsage usage() const;
  [[nodiscard]] int calls() const;
  [[nodiscard]] std::map<std::string, int> calls_by_subject() const;

 private:
  std::shared_ptr<LlmBackend> inner_;
  mutable std::mutex mu_;
  TokenUsage usage_;
  int calls_ = 0;
  std::map<std::string, int> by_subject_;
};

}  // namespace hivegen::llm

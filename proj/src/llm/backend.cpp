#include "hivegen/llm/backend.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "hivegen/core/hash.hpp"

namespace hivegen::llm {

using Clock = std::chrono::steady_clock;

namespace {

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

TokenUsage make_usage(std::int64_t prompt, std::int64_t completion) {
  return TokenUsage{prompt, completion, prompt + completion};
}

}  // namespace

std::int64_t count_tokens(std::string_view text) {
  std::int64_t words = 0, symbols = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
      continue;
    }
    if (!in_word) {
      ++words;
      in_word = true;
    }
    if (!std::isalnum(c)) ++symbols;
  }
  return words + symbols;
}

Digest request_digest(const ChatRequest& req) {
  return hash_block(req.system + "\n<<USER>>\n" + req.user);
}

std::map<std::string, FixtureRecord> load_fixtures(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Storage, "cannot open fixture file " + path);
  std::map<std::string, FixtureRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    FixtureRecord r;
    try {
      auto j = nlohmann::json::parse(line);
      r.digest = j.at("digest").get<std::string>();
      r.response_text = j.at("response_text").get<std::string>();
      r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
      r.completion_tokens = j.value("completion_tokens", std::int64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Storage, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (out.contains(r.digest) && warnings)
      warnings->push_back("duplicate fixture digest " + r.digest + " at line " + std::to_string(lineno) +
                          "; last entry wins");
    out[r.digest] = std::move(r);
  }
  return out;
}

void write_fixtures(const std::string& path, const std::vector<FixtureRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Storage, "cannot write fixture file " + path);
  for (const auto& r : records) {
    nlohmann::json j{{"digest", r.digest},
                     {"response_text", r.response_text},
                     {"prompt_tokens", r.prompt_tokens},
                     {"completion_tokens", r.completion_tokens}};
    out << j.dump() << "\n";
  }
  out.flush();
  if (!out) throw Error(ErrorCode::Storage, "write failed for fixture file " + path);
}

// ---- replay -----------------------------------------------------------------

ReplayBackend::ReplayBackend(const std::string& fixture_path) {
  records_ = load_fixtures(fixture_path, &warnings_);
}

ReplayBackend::ReplayBackend(std::map<std::string, FixtureRecord> records) : records_(std::move(records)) {}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
  auto start = Clock::now();
  auto hex = to_hex(request_digest(req));
  auto it = records_.find(hex);
  if (it == records_.end())
    throw Error(ErrorCode::FixtureMiss, "no fixture for request digest " + hex +
                                            (req.subject.empty() ? "" : " (" + req.purpose + " " + req.subject + ")"));
  ChatResponse r;
  r.text = it->second.response_text;
  r.usage = make_usage(it->second.prompt_tokens, it->second.completion_tokens);
  r.latency_ms = elapsed_ms(start);
  return r;
}

// ---- mock -------------------------------------------------------------------

void MockBackend::push_reply(std::string text) {
  std::lock_guard lock(mu_);
  queue_.emplace_back(std::move(text));
}

void MockBackend::push_error(ErrorCode code, std::string message) {
  std::lock_guard lock(mu_);
  queue_.emplace_back(std::make_pair(code, std::move(message)));
}

void MockBackend::on(std::string purpose, std::string subject, std::vector<std::string> replies) {
  std::lock_guard lock(mu_);
  rules_.push_back({std::move(purpose), std::move(subject), std::move(replies), 0});
}

void MockBackend::set_handler(Handler h) {
  std::lock_guard lock(mu_);
  handler_ = std::move(h);
}

ChatResponse MockBackend::complete(const ChatRequest& req) {
  auto start = Clock::now();
  ++calls_;
  std::string text;
  Handler handler;
  {
    std::lock_guard lock(mu_);
    history_.push_back(req);
    bool resolved = false;
    if (!queue_.empty()) {
      auto item = std::move(queue_.front());
      queue_.pop_front();
      if (auto* err = std::get_if<std::pair<ErrorCode, std::string>>(&item)) {
        if (err->first == ErrorCode::Transport) throw TransportError(err->second, false);
        throw Error(err->first, err->second);
      }
      text = std::get<std::string>(item);
      resolved = true;
    }
    if (!resolved) {
      for (auto& rule : rules_) {
        if (rule.purpose != req.purpose || (!rule.subject.empty() && rule.subject != req.subject)) continue;
        if (rule.replies.empty()) continue;
        text = rule.replies[std::min(rule.next, rule.replies.size() - 1)];
        ++rule.next;
        resolved = true;
        break;
      }
    }
    if (!resolved) {
      if (!handler_) throw Error(ErrorCode::FixtureMiss, "mock backend has no reply for " + req.purpose + " " + req.subject);
      handler = handler_;
    }
  }
  if (handler) text = handler(req);
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  ChatResponse r;
  r.text = std::move(text);
  r.usage = make_usage(count_tokens(req.system) + count_tokens(req.user), count_tokens(r.text));
  r.latency_ms = elapsed_ms(start);
  return r;
}

int MockBackend::calls_for(const std::string& purpose, const std::string& subject) const {
  std::lock_guard lock(mu_);
  int n = 0;
  for (const auto& r : history_)
    if (r.purpose == purpose && (subject.empty() || r.subject == subject)) ++n;
  return n;
}

std::vector<ChatRequest> MockBackend::history() const {
  std::lock_guard lock(mu_);
  return history_;
}

// ---- remote -----------------------------------------------------------------

RemoteOptions RemoteOptions::from_env() {
  RemoteOptions o;
  if (const char* url = std::getenv("HIVEGEN_BASE_URL"); url && *url) o.base_url = url;
  if (const char* key = std::getenv("HIVEGEN_API_KEY"); key && *key) o.api_key = key;
  return o;
}

RemoteBackend::RemoteBackend(RemoteOptions opts)
    : opts_(std::move(opts)), transport_(make_http_transport(opts_.base_url, opts_.timeout)) {}

RemoteBackend::RemoteBackend(RemoteOptions opts, std::shared_ptr<HttpTransport> transport)
    : opts_(std::move(opts)), transport_(std::move(transport)) {}

std::string RemoteBackend::encode_request(const ChatRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  messages.push_back({{"role", "user"}, {"content", req.user}});
  nlohmann::json body{{"model", req.params.model_id},
                      {"messages", messages},
                      {"temperature", req.params.temperature},
                      {"top_p", req.params.top_p},
                      {"max_tokens", req.params.max_output_tokens}};
  return body.dump();
}

ChatResponse RemoteBackend::complete(const ChatRequest& req) {
  validate(req.params);
  auto start = Clock::now();
  std::map<std::string, std::string> headers;
  if (!opts_.api_key.empty()) headers["Authorization"] = "Bearer " + opts_.api_key;
  auto body = encode_request(req);
  std::string last_error;
  int attempts = std::max(1, opts_.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = transport_->post_json("/chat/completions", body, headers);
    if (res.status == 200) {
      try {
        auto j = nlohmann::json::parse(res.body);
        ChatResponse out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage") && j["usage"].is_object()) {
          out.usage = make_usage(j["usage"].value("prompt_tokens", std::int64_t{0}),
                                 j["usage"].value("completion_tokens", std::int64_t{0}));
        } else {
          out.usage = make_usage(count_tokens(req.system) + count_tokens(req.user), count_tokens(out.text));
        }
        out.latency_ms = elapsed_ms(start);
        return out;
      } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed completion response: ") + e.what(), false);
      }
    }
    bool retryable = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
    last_error = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200);
    if (!retryable) throw TransportError(last_error, false);
    if (attempt < attempts && opts_.backoff.count() > 0) std::this_thread::sleep_for(opts_.backoff * attempt);
  }
  throw TransportError("completion failed after " + std::to_string(attempts) + " attempt(s): " + last_error, true);
}

// ---- recording / metering ---------------------------------------------------

ChatResponse RecordingBackend::complete(const ChatRequest& req) {
  auto res = inner_->complete(req);
  std::lock_guard lock(mu_);
  records_.push_back({to_hex(request_digest(req)), res.text, res.usage.prompt_tokens, res.usage.completion_tokens});
  return res;
}

std::vector<FixtureRecord> RecordingBackend::transcript() const {
  std::lock_guard lock(mu_);
  return records_;
}

ChatResponse MeteredBackend::complete(const ChatRequest& req) {
  auto res = inner_->complete(req);
  std::lock_guard lock(mu_);
  usage_ += res.usage;
  ++calls_;
  ++by_subject_[req.subject];
  return res;
}

TokenUsage MeteredBackend::usage() const {
  std::lock_guard lock(mu_);
  return usage_;
}

int MeteredBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::map<std::string, int> MeteredBackend::calls_by_subject() const {
  std::lock_guard lock(mu_);
  return by_subject_;
}

}  // namespace hivegen::llm

#pragma once
// HTTP + server-sent-event facade over an Orchestrator.
//
//   POST /sessions                    SessionRequest -> {id, status}        201
//   GET  /sessions                    {sessions: [id...]}
//   GET  /sessions/:id                api_view                              404
//   GET  /sessions/:id/sketch/:module {module, revision, text, sketch}      404
//   POST /sessions/:id/edits          {sentence} -> EditResponse            404 409
//   POST /sessions/:id/approve        api_view                              404 409
//   GET  /sessions/:id/events?since=N text/event-stream                     404
//   GET  /library                     {size, entries: [...]}
//   POST /library/gc                  {refined, removed, deferred}
//
// Errors are {code, message}. Sessions not live in this process are served
// from <sessions_dir>/<id>/session.json. Each event-stream subscriber reads
// the session's bounded event log (oldest events dropped past capacity).

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "hivegen/orchestrator/orchestrator.hpp"

namespace hivegen::service {

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

nlohmann::json error_body(ErrorCode code, const std::string& message);

class Service {
 public:
  Service(Orchestrator& orchestrator, std::string sessions_dir);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Request dispatch without sockets (everything except the event stream).
  Reply handle(const std::string& method, const std::string& path, const std::string& body);

  /// Binds (port 0 picks a free one) and serves on a background thread.
  /// Returns the bound port; throws Error(Storage) when binding fails.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

  std::shared_ptr<Session> live(const std::string& id) const;
  /// Live snapshot, else the persisted document.
  std::optional<GenerationSession> lookup(const std::string& id) const;

 private:
  struct Impl;
  Reply create_session(const std::string& body);
  Reply library_view() const;
  Reply run_gc();

  Orchestrator& orch_;
  std::string sessions_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

int http_status(ErrorCode code);

}  // namespace hivegen::service

#include "hivegen/service/service.hpp"

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hivegen/core/error.hpp"

namespace hivegen::service {

namespace fs = std::filesystem;
using nlohmann::json;

json error_body(ErrorCode code, const std::string& message) {
  return {{"code", std::string(to_string(code))}, {"message", message}};
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Storage:
    case ErrorCode::Tool:
    case ErrorCode::Transport: return 500;
    default: return 400;
  }
}

namespace {

Reply ok(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

Reply fail(ErrorCode code, const std::string& message) {
  return {http_status(code), error_body(code, message).dump(), "application/json"};
}

std::vector<std::string> segments(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  auto q = path.find('?');
  for (char c : path.substr(0, q)) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

json library_entry_view(const library::LibraryEntry& e) {
  return {{"id", e.block.id},
          {"module_name", e.block.module_name},
          {"weight", e.weight},
          {"verified", e.block.verified},
          {"second_chance", e.second_chance},
          {"retrieval_count", e.retrieval_count},
          {"sibling_skip_count", e.sibling_skip_count},
          {"gc_marked", e.gc_marked},
          {"has_testbench", e.testbench.has_value()},
          {"content_hash", to_hex(e.block.content_hash)}};
}

}  // namespace

struct Service::Impl {
  httplib::Server server;
};

Service::Service(Orchestrator& orchestrator, std::string sessions_dir)
    : orch_(orchestrator), sessions_dir_(std::move(sessions_dir)), impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  svr.Get(R"(/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = live(req.matches[1]);
    if (!s) {
      res.status = 404;
      res.set_content(error_body(ErrorCode::NotFound, "no live event stream for session " + std::string(req.matches[1]))
                          .dump(),
                      "application/json");
      return;
    }
    std::int64_t since = 0;
    try {
      if (req.has_param("since")) since = std::stoll(req.get_param_value("since"));
      else if (req.has_header("Last-Event-ID")) since = std::stoll(req.get_header_value("Last-Event-ID"));
    } catch (const std::exception&) {
      res.status = 400;
      res.set_content(error_body(ErrorCode::InvalidArgument, "since must be an integer").dump(), "application/json");
      return;
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [s, since](std::size_t, httplib::DataSink& sink) mutable {
      auto events = s->events_since(since, std::chrono::milliseconds(250));
      for (const auto& e : events) {
        std::string frame = "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
        if (!sink.write(frame.data(), frame.size())) return false;
        since = e.seq;
      }
      if (events.empty() && s->finished()) sink.done();
      return true;
    });
  });
  auto dispatch = [this](const std::string& method) {
    return [this, method](const httplib::Request& req, httplib::Response& res) {
      auto r = handle(method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
  };
  svr.Get(".*", dispatch("GET"));
  svr.Post(".*", dispatch("POST"));
}

Service::~Service() { stop(); }

std::shared_ptr<Session> Service::live(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::optional<GenerationSession> Service::lookup(const std::string& id) const {
  if (auto s = live(id)) return s->snapshot();
  if (sessions_dir_.empty() || id.find_first_of("/\\.") != std::string::npos) return std::nullopt;
  auto path = fs::path(sessions_dir_) / id / "session.json";
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return session_from_json(json::parse(in));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Reply Service::create_session(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return fail(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
  SessionRequest req;
  try {
    req = session_request_from_json(j);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  }
  if (!j.contains("interactive")) req.interactive = true;
  if (!req.id.empty() && (live(req.id) || lookup(req.id)))
    return fail(ErrorCode::Conflict, "session " + req.id + " already exists");
  std::shared_ptr<Session> s;
  try {
    s = orch_.start(req);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  }
  {
    std::lock_guard lock(mu_);
    sessions_[s->id()] = s;
  }
  return ok({{"id", s->id()}, {"status", std::string(to_string(s->status()))}}, 201);
}

Reply Service::library_view() const {
  json entries = json::array();
  std::size_t size = 0;
  if (const auto& lib = orch_.library()) {
    for (const auto& e : lib->entries()) entries.push_back(library_entry_view(e));
    size = lib->size();
  }
  return ok({{"size", size}, {"entries", entries}});
}

Reply Service::run_gc() {
  const auto& lib = orch_.library();
  if (!lib) return ok({{"refined", json::array()}, {"removed", json::array()}, {"deferred", json::array()}});
  auto report = lib->run_gc(make_refiner(*orch_.backend(), orch_.options().config.llm_params));
  return ok({{"refined", report.refined}, {"removed", report.removed}, {"deferred", report.deferred}});
}

Reply Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    auto seg = segments(path);
    if (seg.size() == 1 && seg[0] == "sessions") {
      if (method == "POST") return create_session(body);
      if (method == "GET") {
        json ids = json::array();
        std::lock_guard lock(mu_);
        for (const auto& [id, _] : sessions_) ids.push_back(id);
        return ok({{"sessions", ids}});
      }
    }
    if (seg.size() >= 2 && seg[0] == "sessions") {
      const auto& id = seg[1];
      if (seg.size() == 2 && method == "GET") {
        auto doc = lookup(id);
        if (!doc) return fail(ErrorCode::NotFound, "unknown session " + id);
        return ok(api_view(*doc));
      }
      if (seg.size() == 4 && seg[2] == "sketch" && method == "GET") {
        auto doc = lookup(id);
        if (!doc) return fail(ErrorCode::NotFound, "unknown session " + id);
        auto it = doc->sketches.find(seg[3]);
        if (it == doc->sketches.end()) return fail(ErrorCode::NotFound, "session " + id + " has no module " + seg[3]);
        return ok({{"module", seg[3]},
                   {"revision", it->second.revision},
                   {"text", parse::render_sketch(it->second)},
                   {"sketch", parse::to_json(it->second)}});
      }
      if (seg.size() == 3 && seg[2] == "edits" && method == "POST") {
        auto s = live(id);
        if (!s) {
          if (lookup(id)) return fail(ErrorCode::Conflict, "session " + id + " is no longer running");
          return fail(ErrorCode::NotFound, "unknown session " + id);
        }
        json j;
        try {
          j = json::parse(body);
        } catch (const json::exception&) {
          return fail(ErrorCode::InvalidArgument, "request body is not JSON");
        }
        if (!j.is_object() || !j.contains("sentence") || !j["sentence"].is_string())
          return fail(ErrorCode::InvalidArgument, "edit request needs a \"sentence\" string");
        return ok(to_json(s->edit(j["sentence"].get<std::string>())));
      }
      if (seg.size() == 3 && seg[2] == "approve" && method == "POST") {
        auto s = live(id);
        if (!s) {
          if (lookup(id)) return fail(ErrorCode::Conflict, "session " + id + " is no longer running");
          return fail(ErrorCode::NotFound, "unknown session " + id);
        }
        s->approve();
        return ok(api_view(s->snapshot()));
      }
    }
    if (seg.size() == 1 && seg[0] == "library" && method == "GET") return library_view();
    if (seg.size() == 2 && seg[0] == "library" && seg[1] == "gc" && method == "POST") return run_gc();
    return fail(ErrorCode::NotFound, "no route for " + method + " " + path);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return {500, error_body(ErrorCode::Storage, e.what()).dump(), "application/json"};
  }
}

int Service::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Storage, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  return bound;
}

void Service::listen(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorCode::Storage, "cannot bind " + host + ":" + std::to_string(port));
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hivegen::service

#pragma once
// Minimal JSON-over-HTTP client used by the remote LLM backend and the remote
// embedder. `http://` and `https://` base URLs are both accepted.

#include <chrono>
#include <map>
#include <memory>
#include <string>

namespace hivegen {

struct HttpResponse {
  int status = 0;  // 0 when no response was received
  std::string body;
  std::string error;  // transport-level failure description
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& path, const std::string& body,
                                 const std::map<std::string, std::string>& headers) = 0;
};

/// `base_url` like "https://api.openai.com/v1" or "http://127.0.0.1:8080".
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::milliseconds timeout);

}  // namespace hivegen

#include "hivegen/core/http.hpp"

#include <httplib.h>

#include "hivegen/core/error.hpp"

namespace hivegen {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::milliseconds timeout) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "base URL needs a scheme: " + base_url);
    auto host_end = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, host_end);
    prefix_ = host_end == std::string::npos ? "" : base_url.substr(host_end);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(origin_);
    auto secs = timeout.count() / 1000;
    auto usecs = (timeout.count() % 1000) * 1000;
    client_->set_connection_timeout(secs, usecs);
    client_->set_read_timeout(secs, usecs);
    client_->set_write_timeout(secs, usecs);
  }

  HttpResponse post_json(const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& headers) override {
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client_->Post(prefix_ + path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::milliseconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

}  // namespace hivegen

#include "hivegen/library/embedding.hpp"

#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hivegen/core/error.hpp"

namespace hivegen::library {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (std::isalnum(c) || c == '_' || c == '$') {
      std::size_t s = i;
      while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) ||
                                 text[i] == '_' || text[i] == '$'))
        ++i;
      out.push_back(text.substr(s, i - s));
    } else {
      out.push_back(text.substr(i, 1));
      ++i;
    }
  }
  return out;
}

}  // namespace

double dot(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "embedding dimension mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const Embedding& a, const Embedding& b) {
  double na = std::sqrt(dot(a, a));
  double nb = std::sqrt(dot(b, b));
  if (na == 0 || nb == 0) return 0;
  return dot(a, b) / (na * nb);
}

void normalize(Embedding& v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0) {
    if (!v.empty()) v[0] = 1;
    return;
  }
  for (double& x : v) x /= n;
}

Embedding HashEmbedder::embed(std::string_view text) {
  Embedding v(dim_, 0.0);
  auto toks = tokenize(text);
  auto add = [&](std::uint64_t h) {
    double sign = (h >> 63) ? -1.0 : 1.0;
    v[(h >> 1) % dim_] += sign;
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    add(fnv1a(toks[i]));
    if (i + 1 < toks.size()) add(fnv1a(toks[i + 1], fnv1a(toks[i]) ^ 0x9e3779b97f4a7c15ull));
  }
  normalize(v);
  return v;
}

RemoteEmbedder::RemoteEmbedder(std::shared_ptr<HttpTransport> transport, std::string model,
                               std::string api_key, std::size_t dimension)
    : transport_(std::move(transport)), model_(std::move(model)), api_key_(std::move(api_key)),
      dim_(dimension) {}

Embedding RemoteEmbedder::embed(std::string_view text) {
  nlohmann::json body{{"model", model_}, {"input", std::string(text)}};
  std::map<std::string, std::string> headers;
  if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;
  auto res = transport_->post_json("/embeddings", body.dump(), headers);
  if (res.status != 200)
    throw Error(ErrorCode::EmbedUnavailable,
                "embedding request failed: " + (res.status ? "HTTP " + std::to_string(res.status) : res.error));
  try {
    auto j = nlohmann::json::parse(res.body);
    auto raw = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    Embedding v(dim_, 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) v[i % dim_] += raw[i];
    normalize(v);
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::EmbedUnavailable, std::string("malformed embedding response: ") + e.what());
  }
}

FallbackEmbedder::FallbackEmbedder(std::shared_ptr<Embedder> primary, std::shared_ptr<Embedder> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)) {
  if (primary_->dimension() != fallback_->dimension())
    throw Error(ErrorCode::InvalidArgument, "fallback embedder dimension mismatch");
}

Embedding FallbackEmbedder::embed(std::string_view text) {
  try {
    return primary_->embed(text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmbedUnavailable) throw;
    return fallback_->embed(text);
  }
}

}  // namespace hivegen::library

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hivegen/core/http.hpp"

namespace hivegen::library {

/// Fixed-dimension, L2-normalized vector.
using Embedding = std::vector<double>;

double dot(const Embedding& a, const Embedding& b);
double cosine(const Embedding& a, const Embedding& b);
/// Scales to unit length; the zero vector maps to the first basis vector.
void normalize(Embedding& v);

class Embedder {
 public:
  virtual ~Embedder() = default;
  [[nodiscard]] virtual std::size_t dimension() const = 0;
  /// Throws Error(EmbedUnavailable) when a remote provider cannot be reached.
  virtual Embedding embed(std::string_view text) = 0;
};

/// Deterministic bag of hashed token unigrams and bigrams projected to
/// `dimension` buckets with signed (+1/-1) hashing.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dimension = 64) : dim_(dimension) {}
  [[nodiscard]] std::size_t dimension() const override { return dim_; }
  Embedding embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

/// OpenAI-compatible `/embeddings` client. Vectors whose length differs from
/// `dimension` are folded (index mod dimension) before normalization.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::shared_ptr<HttpTransport> transport, std::string model,
                 std::string api_key, std::size_t dimension = 64);
  [[nodiscard]] std::size_t dimension() const override { return dim_; }
  Embedding embed(std::string_view text) override;

 private:
  std::shared_ptr<HttpTransport> transport_;
  std::string model_;
  std::string api_key_;
  std::size_t dim_;
};

/// Uses `primary`, falling back to `fallback` on EmbedUnavailable.
class FallbackEmbedder final : public Embedder {
 public:
  FallbackEmbedder(std::shared_ptr<Embedder> primary, std::shared_ptr<Embedder> fallback);
  [[nodiscard]] std::size_t dimension() const override { return primary_->dimension(); }
  Embedding embed(std::string_view text) override;

 private:
  std::shared_ptr<Embedder> primary_;
  std::shared_ptr<Embedder> fallback_;
};

}  // namespace hivegen::library

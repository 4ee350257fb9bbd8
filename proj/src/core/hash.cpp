#include "hivegen/core/hash.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <memory>
#include <stdexcept>

namespace hivegen {

std::string canonicalize_source(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  bool pending_space = false;

  auto emit = [&](char c) {
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  };

  std::size_t i = 0;
  const std::size_t n = source.size();
  while (i < n) {
    const char c = source[i];
    if (c == '/' && i + 1 < n && source[i + 1] == '/') {
      while (i < n && source[i] != '\n') ++i;
      pending_space = true;
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '*') {
      i += 2;
      while (i + 1 < n && !(source[i] == '*' && source[i + 1] == '/')) ++i;
      i = (i + 1 < n) ? i + 2 : n;
      pending_space = true;
      continue;
    }
    if (c == '"') {
      emit(c);
      ++i;
      while (i < n && source[i] != '"') {
        if (source[i] == '\\' && i + 1 < n) out.push_back(source[i++]);
        out.push_back(source[i++]);
      }
      if (i < n) out.push_back(source[i++]);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      ++i;
      continue;
    }
    emit(c);
    ++i;
  }
  return out;
}

Digest sha256(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  Digest digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1 || len != digest.size()) {
    throw std::runtime_error("sha256: libcrypto digest failed");
  }
  return digest;
}

Digest hash_block(std::string_view source) { return sha256(canonicalize_source(source)); }

}  // namespace hivegen

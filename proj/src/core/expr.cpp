#include "hivegen/core/expr.hpp"

#include <cctype>

#include "hivegen/core/error.hpp"

namespace hivegen::expr {

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Lookup* lookup, std::vector<std::string>* idents)
      : text_(text), lookup_(lookup), idents_(idents) {}

  std::int64_t parse() {
    auto v = ternary();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::Syntax,
                "expression '" + std::string(text_) + "': " + what + " at offset " +
                    std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      // keep `<` from swallowing the first half of `<=` and friends
      if (tok.size() == 1 && pos_ + 1 < text_.size()) {
        char next = text_[pos_ + 1];
        if ((tok == "<" || tok == ">" || tok == "!" || tok == "=") && next == '=') return false;
        if (tok == "&" && next == '&') return false;
        if (tok == "|" && next == '|') return false;
      }
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  std::int64_t ternary() {
    auto cond = logical_or();
    if (accept("?")) {
      auto a = ternary();
      if (!accept(":")) fail("expected ':'");
      auto b = ternary();
      return cond ? a : b;
    }
    return cond;
  }

  std::int64_t logical_or() {
    auto v = logical_and();
    while (accept("||")) {
      auto r = logical_and();
      v = (v || r) ? 1 : 0;
    }
    return v;
  }

  std::int64_t logical_and() {
    auto v = equality();
    while (accept("&&")) {
      auto r = equality();
      v = (v && r) ? 1 : 0;
    }
    return v;
  }

  std::int64_t equality() {
    auto v = relational();
    for (;;) {
      if (accept("==")) v = (v == relational());
      else if (accept("!=")) v = (v != relational());
      else return v;
    }
  }

  std::int64_t relational() {
    auto v = additive();
    for (;;) {
      if (accept("<=")) v = (v <= additive());
      else if (accept(">=")) v = (v >= additive());
      else if (accept("<")) v = (v < additive());
      else if (accept(">")) v = (v > additive());
      else return v;
    }
  }

  std::int64_t additive() {
    auto v = multiplicative();
    for (;;) {
      if (accept("+")) v += multiplicative();
      else if (accept("-")) v -= multiplicative();
      else return v;
    }
  }

  std::int64_t multiplicative() {
    auto v = unary();
    for (;;) {
      if (accept("*")) {
        v *= unary();
      } else if (accept("/")) {
        auto d = unary();
        if (d == 0) throw Error(ErrorCode::Domain, "division by zero in '" + std::string(text_) + "'");
        v /= d;
      } else if (accept("%")) {
        auto d = unary();
        if (d == 0) throw Error(ErrorCode::Domain, "modulo by zero in '" + std::string(text_) + "'");
        v %= d;
      } else {
        return v;
      }
    }
  }

  std::int64_t unary() {
    if (accept("-")) return -unary();
    if (accept("+")) return unary();
    if (accept("!")) return unary() ? 0 : 1;
    return primary();
  }

  std::int64_t call(const std::string& fn) {
    std::vector<std::int64_t> args;
    if (!accept(")")) {
      do {
        args.push_back(ternary());
      } while (accept(","));
      if (!accept(")")) fail("expected ')'");
    }
    auto want = [&](std::size_t n) {
      if (args.size() != n) fail(fn + " expects " + std::to_string(n) + " argument(s)");
    };
    if (fn == "clog2" || fn == "$clog2") {
      want(1);
      std::int64_t r = 0;
      while ((std::int64_t{1} << r) < args[0]) ++r;
      return r;
    }
    if (fn == "min") {
      want(2);
      return std::min(args[0], args[1]);
    }
    if (fn == "max") {
      want(2);
      return std::max(args[0], args[1]);
    }
    fail("unknown function " + fn);
  }

  std::int64_t primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end");
    if (accept("(")) {
      auto v = ternary();
      if (!accept(")")) fail("expected ')'");
      return v;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::int64_t v = 0;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        if (text_[pos_] != '_') v = v * 10 + (text_[pos_] - '0');
        ++pos_;
      }
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t start = pos_++;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      if (accept("(")) return call(name);
      if (idents_) {
        idents_->push_back(name);
        return 1;
      }
      auto v = (*lookup_)(name);
      if (!v) throw Error(ErrorCode::UnassignedPlaceholder, "unassigned placeholder '" + name + "'");
      return *v;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  const Lookup* lookup_;
  std::vector<std::string>* idents_;
  std::size_t pos_ = 0;
};

}  // namespace

std::int64_t evaluate(std::string_view text, const Lookup& lookup) {
  return Parser(text, &lookup, nullptr).parse();
}

std::vector<std::string> identifiers(std::string_view text) {
  std::vector<std::string> out;
  try {
    Parser(text, nullptr, &out).parse();
  } catch (const Error& e) {
    // division by a placeholder valued 1 cannot fail; syntax errors propagate
    if (e.code() != ErrorCode::Domain) throw;
  }
  return out;
}

}  // namespace hivegen::expr

#include "hivegen/core/verilog.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hivegen/core/error.hpp"
#include "hivegen/core/expr.hpp"

namespace hivegen::verilog {

namespace {

enum class Tok { Ident, Number, String, Op, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 0;
  int col = 0;
};

const std::unordered_set<std::string>& keywords() {
  static const std::unordered_set<std::string> kw = {
      "module", "macromodule", "endmodule", "input", "output", "inout", "wire", "reg",
      "logic", "integer", "genvar", "parameter", "localparam", "assign", "always",
      "always_ff", "always_comb", "always_latch", "initial", "begin", "end", "if", "else",
      "case", "casez", "casex", "endcase", "for", "while", "repeat", "forever", "generate",
      "endgenerate", "function", "endfunction", "task", "endtask", "posedge", "negedge",
      "or", "signed", "unsigned", "default", "fork", "join", "tri", "supply0", "supply1",
      "real", "time", "defparam", "specify", "endspecify", "wait", "disable"};
  return kw;
}

bool is_keyword(const std::string& s) { return keywords().contains(s); }

struct Lexed {
  std::vector<Token> tokens;
  std::vector<Diagnostic> errors;
};

Lexed lex(std::string_view src) {
  Lexed out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto advance = [&](std::size_t count) {
    for (std::size_t k = 0; k < count && i < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  static const char* kOps[] = {"<<<", ">>>", "===", "!==", "<=", ">=", "==", "!=", "&&",
                               "||",  "<<",  ">>",  "~&",  "~|", "~^", "^~", "+:", "-:",
                               "**",  "->",  "::"};
  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      int l0 = line, c0 = col;
      advance(2);
      while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
      if (i + 1 >= n) {
        out.errors.push_back({l0, c0, "unterminated block comment"});
        i = n;
        break;
      }
      advance(2);
      continue;
    }
    if (c == '(' && i + 1 < n && src[i + 1] == '*' && !(i + 2 < n && src[i + 2] == ')')) {
      // attribute instance (* ... *)
      advance(2);
      while (i + 1 < n && !(src[i] == '*' && src[i + 1] == ')')) advance(1);
      advance(2);
      continue;
    }
    if (c == '`') {
      while (i < n && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (c == '"') {
      std::size_t start = i;
      advance(1);
      while (i < n && src[i] != '"' && src[i] != '\n') advance(src[i] == '\\' ? 2 : 1);
      if (i >= n || src[i] != '"') {
        out.errors.push_back({t.line, t.col, "unterminated string literal"});
        continue;
      }
      advance(1);
      t.kind = Tok::String;
      t.text = std::string(src.substr(start, i - start));
      out.tokens.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t start = i;
      while (i < n && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_' ||
                       src[i] == '$'))
        advance(1);
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(start, i - start));
      out.tokens.push_back(std::move(t));
      continue;
    }
    if (c == '\\') {
      std::size_t start = i;
      while (i < n && !std::isspace(static_cast<unsigned char>(src[i]))) advance(1);
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(start, i - start));
      out.tokens.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '\'' && i + 1 < n)) {
      std::size_t start = i;
      while (i < n && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '_'))
        advance(1);
      if (i < n && src[i] == '\'') {
        advance(1);
        if (i < n && (src[i] == 's' || src[i] == 'S')) advance(1);
        if (i < n && std::isalpha(static_cast<unsigned char>(src[i]))) advance(1);
        while (i < n && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_' ||
                         src[i] == '?'))
          advance(1);
      } else if (i < n && src[i] == '.') {
        advance(1);
        while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(start, i - start));
      out.tokens.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    for (const char* op : kOps) {
      std::string_view sv(op);
      if (src.substr(i, sv.size()) == sv) {
        t.kind = Tok::Op;
        t.text = std::string(sv);
        advance(sv.size());
        matched = true;
        break;
      }
    }
    if (!matched) {
      t.kind = Tok::Op;
      t.text = std::string(1, c);
      advance(1);
    }
    out.tokens.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.tokens.push_back(end);
  return out;
}

bool word_like(const Token& t) { return t.kind == Tok::Ident || t.kind == Tok::Number; }

std::string join_tokens(const std::vector<Token>& toks, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t k = b; k < e; ++k) {
    if (k > b && word_like(toks[k]) && word_like(toks[k - 1])) out.push_back(' ');
    out += toks[k].text;
  }
  return out;
}

struct ParseAbort {};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  ParseResult run() {
    while (peek().kind != Tok::End) {
      if (is("module") || is("macromodule")) {
        try {
          parse_module();
        } catch (const ParseAbort&) {
          // resync at the next module keyword
          while (peek().kind != Tok::End && !is("module") && !is("macromodule")) ++p_;
        }
      } else {
        error(peek(), "unexpected '" + peek().text + "' outside of a module");
        ++p_;
        while (peek().kind != Tok::End && !is("module") && !is("macromodule")) ++p_;
      }
    }
    return std::move(result_);
  }

 private:
  using Scope = std::map<std::string, std::int64_t>;

  const Token& peek(std::size_t ahead = 0) const {
    return t_[std::min(p_ + ahead, t_.size() - 1)];
  }
  bool is(std::string_view text, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind != Tok::End && t.kind != Tok::String && t.text == text;
  }
  const Token& next() {
    const Token& t = peek();
    if (p_ < t_.size() - 1) ++p_;
    return t;
  }
  bool accept(std::string_view text) {
    if (is(text)) {
      next();
      return true;
    }
    return false;
  }

  [[noreturn]] void fatal(const Token& at, const std::string& msg) {
    error(at, msg);
    throw ParseAbort{};
  }
  void error(const Token& at, const std::string& msg) {
    result_.errors.push_back({at.line, at.col, msg});
  }

  void expect(std::string_view text, const std::string& context) {
    if (!accept(text)) {
      const auto& t = peek();
      std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
      fatal(t, "expected '" + std::string(text) + "' " + context + ", found " + got);
    }
  }

  std::string expect_ident(const std::string& context) {
    const auto& t = peek();
    if (t.kind != Tok::Ident || is_keyword(t.text)) {
      std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
      fatal(t, "expected identifier " + context + ", found " + got);
    }
    return next().text;
  }

  // Skips a balanced group starting at an opening token; returns [begin, end)
  // of the inner tokens.
  std::pair<std::size_t, std::size_t> balanced(std::string_view open, std::string_view close) {
    const Token& start = peek();
    expect(open, "");
    std::size_t b = p_;
    int depth = 1;
    while (true) {
      const auto& t = peek();
      if (t.kind == Tok::End) fatal(start, "unbalanced '" + std::string(open) + "'");
      if (t.kind == Tok::Ident && (t.text == "endmodule") && open != "begin")
        fatal(t, "unbalanced '" + std::string(open) + "' before endmodule");
      if (t.kind == Tok::Op || t.kind == Tok::Ident) {
        if (t.text == open) ++depth;
        else if (t.text == close && --depth == 0) break;
      }
      next();
    }
    std::size_t e = p_;
    next();
    return {b, e};
  }

  std::optional<std::int64_t> eval(std::size_t b, std::size_t e, const Scope& scope) {
    std::string text;
    for (std::size_t k = b; k < e; ++k) {
      if (k > b) text.push_back(' ');
      text += t_[k].text;
    }
    try {
      return expr::evaluate(text, [&](std::string_view name) -> std::optional<std::int64_t> {
        auto it = scope.find(std::string(name));
        if (it == scope.end()) return std::nullopt;
        return it->second;
      });
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  // Parses `[msb:lsb]` if present; returns width (0 = unknown) or 1 if absent.
  int parse_range(const Scope& scope, bool* known) {
    if (!is("[")) return 1;
    auto [b, e] = balanced("[", "]");
    std::size_t colon = e;
    int depth = 0;
    for (std::size_t k = b; k < e; ++k) {
      if (t_[k].text == "(" || t_[k].text == "[") ++depth;
      if (t_[k].text == ")" || t_[k].text == "]") --depth;
      if (depth == 0 && t_[k].text == ":") {
        colon = k;
        break;
      }
    }
    if (colon == e) {
      if (known) *known = false;
      return 0;
    }
    auto msb = eval(b, colon, scope);
    auto lsb = eval(colon + 1, e, scope);
    if (!msb || !lsb) {
      if (known) *known = false;
      return 0;
    }
    return static_cast<int>((*msb > *lsb ? *msb - *lsb : *lsb - *msb) + 1);
  }

  void skip_net_type(bool* is_reg) {
    while (is("wire") || is("reg") || is("logic") || is("signed") || is("unsigned") ||
           is("tri") || is("integer")) {
      if ((is("reg") || is("logic") || is("integer")) && is_reg) *is_reg = true;
      next();
    }
  }

  // Parses `name = expr` pairs up to `;` or `)`/`,` at depth 0 (header form).
  void parse_param_list(Module& m, bool in_header) {
    for (;;) {
      accept("parameter");
      accept("localparam");
      while (is("integer") || is("signed") || is("unsigned") || is("real") || is("logic"))
        next();
      if (is("[")) balanced("[", "]");
      std::string name = expect_ident("in parameter declaration");
      expect("=", "after parameter " + name);
      std::size_t b = p_;
      int depth = 0;
      while (true) {
        const auto& t = peek();
        if (t.kind == Tok::End) fatal(t, "unterminated parameter declaration");
        if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
        if (t.text == ")" || t.text == "]" || t.text == "}") {
          if (depth == 0) break;
          --depth;
        }
        if (depth == 0 && (t.text == "," || t.text == ";")) break;
        next();
      }
      if (auto v = eval(b, p_, m.parameters)) m.parameters[name] = *v;
      if (accept(",")) continue;
      if (in_header && is(")")) return;
      if (!in_header && accept(";")) return;
      fatal(peek(), "malformed parameter list");
    }
  }

  void parse_module() {
    const Token& kw = next();
    Module m;
    m.line = kw.line;
    m.name = expect_ident("after 'module'");
    if (accept("#")) {
      expect("(", "after '#'");
      if (!is(")")) parse_param_list(m, true);
      expect(")", "closing parameter list");
    }
    if (accept("(")) {
      if (!is(")")) parse_port_list(m);
      expect(")", "closing port list of " + m.name);
    }
    expect(";", "after module header of " + m.name);
    regs_.clear();
    module_ = &m;
    while (!accept("endmodule")) {
      if (peek().kind == Tok::End) fatal(peek(), "missing 'endmodule' for module " + m.name);
      parse_item(m, "endmodule");
    }
    for (const auto& name : assigned_regs_) {
      int w = 1;
      if (auto it = regs_.find(name); it != regs_.end()) w = it->second;
      else if (auto* p = m.find_port(name); p && p->width_known) w = p->width;
      m.register_bits += w;
    }
    assigned_regs_.clear();
    for (const auto& p : m.ports) {
      if (!p.width_known && p.width == -1) error(kw, "port " + p.name + " has no direction");
    }
    module_ = nullptr;
    result_.modules.push_back(std::move(m));
  }

  void parse_port_list(Module& m) {
    bool ansi = is("input") || is("output") || is("inout");
    Direction dir = Direction::Input;
    bool is_reg = false;
    int width = 1;
    bool known = true;
    for (;;) {
      if (ansi) {
        if (auto d = parse_direction(peek().text); d && peek().kind == Tok::Ident) {
          next();
          dir = *d;
          is_reg = false;
          known = true;
          skip_net_type(&is_reg);
          width = parse_range(m.parameters, &known);
        } else if (is("wire") || is("reg") || is("logic") || is("[")) {
          is_reg = false;
          known = true;
          skip_net_type(&is_reg);
          width = parse_range(m.parameters, &known);
        }
        std::string name = expect_ident("in port list of " + m.name);
        if (m.find_port(name)) error(peek(), "duplicate port " + name);
        m.ports.push_back({name, dir, width, known, is_reg});
      } else {
        std::string name = expect_ident("in port list of " + m.name);
        // direction filled by a body declaration; width -1 marks "undeclared"
        m.ports.push_back({name, Direction::Input, -1, false, false});
      }
      if (!accept(",")) break;
    }
  }

  Port* find_port_mut(Module& m, const std::string& name) {
    for (auto& p : m.ports)
      if (p.name == name) return &p;
    return nullptr;
  }

  void parse_item(Module& m, std::string_view terminator) {
    const Token& t = peek();
    if (t.kind == Tok::End) fatal(t, "unexpected end of input, expected '" + std::string(terminator) + "'");
    if (t.kind != Tok::Ident) {
      if (accept(";")) return;
      fatal(t, "unexpected '" + t.text + "' in module " + m.name);
    }
    const std::string& w = t.text;
    if (auto d = parse_direction(w)) {
      next();
      bool is_reg = false;
      bool known = true;
      skip_net_type(&is_reg);
      int width = parse_range(m.parameters, &known);
      do {
        std::string name = expect_ident("in port declaration");
        Port* p = find_port_mut(m, name);
        if (!p) {
          error(t, "port " + name + " declared but not in the port list of " + m.name);
          continue;
        }
        p->direction = *d;
        p->width = width;
        p->width_known = known;
        p->is_reg = p->is_reg || is_reg;
        if (is_reg) regs_[name] = width;
      } while (accept(","));
      expect(";", "after port declaration");
      return;
    }
    if (w == "parameter" || w == "localparam") {
      parse_param_list(m, false);
      return;
    }
    if (w == "wire" || w == "reg" || w == "logic" || w == "integer" || w == "genvar" ||
        w == "tri" || w == "real" || w == "time" || w == "supply0" || w == "supply1") {
      bool is_reg = (w == "reg" || w == "logic" || w == "integer");
      next();
      bool known = true;
      skip_net_type(&is_reg);
      int width = parse_range(m.parameters, &known);
      do {
        std::string name = expect_ident("in declaration");
        while (is("[")) balanced("[", "]");
        if (is_reg) regs_[name] = known ? width : 1;
        if (accept("=")) {
          auto [b, e] = until_delims();
          count_ops(m, b, e);
          if (!is_reg) m.assigns.push_back({name, join_tokens(t_, b, e)});
        }
        if (auto* p = find_port_mut(m, name); p && is_reg) p->is_reg = true;
      } while (accept(","));
      expect(";", "after declaration");
      return;
    }
    if (w == "assign") {
      next();
      do {
        auto [lb, le] = until_token("=");
        expect("=", "in continuous assignment");
        auto [rb, re] = until_delims();
        count_ops(m, rb, re);
        m.assigns.push_back({join_tokens(t_, lb, le), join_tokens(t_, rb, re)});
      } while (accept(","));
      expect(";", "after continuous assignment");
      return;
    }
    if (w == "always" || w == "always_ff" || w == "always_comb" || w == "always_latch" ||
        w == "initial") {
      bool seq = (w == "always_ff");
      bool initial = (w == "initial");
      next();
      if (accept("@")) {
        if (is("(")) {
          auto [b, e] = balanced("(", ")");
          for (std::size_t k = b; k < e; ++k)
            if (t_[k].text == "posedge" || t_[k].text == "negedge") seq = true;
        } else {
          next();  // @*
        }
      }
      if (seq) m.sequential = true;
      parse_statement(m, seq, !initial);
      return;
    }
    if (w == "generate") {
      next();
      while (!accept("endgenerate")) parse_item(m, "endgenerate");
      return;
    }
    if (w == "for" || w == "if") {
      next();
      balanced("(", ")");
      parse_generate_body(m);
      if (w == "if" && accept("else")) {
        if (is("if")) parse_item(m, terminator);
        else parse_generate_body(m);
      }
      return;
    }
    if (w == "begin") {
      parse_generate_body(m);
      return;
    }
    if (w == "function" || w == "task") {
      std::string end = (w == "function") ? "endfunction" : "endtask";
      next();
      while (!accept(end)) {
        if (peek().kind == Tok::End || is("endmodule")) fatal(t, "missing '" + end + "'");
        next();
      }
      return;
    }
    if (w == "defparam") {
      while (!accept(";")) {
        if (peek().kind == Tok::End) fatal(t, "unterminated defparam");
        next();
      }
      return;
    }
    if (w == "specify") {
      while (!accept("endspecify")) {
        if (peek().kind == Tok::End) fatal(t, "missing endspecify");
        next();
      }
      return;
    }
    if (w == "endmodule" || w == "end" || w == "endgenerate" || w == "endcase") {
      fatal(t, "unexpected '" + w + "', expected '" + std::string(terminator) + "'");
    }
    if (is_keyword(w)) fatal(t, "unexpected keyword '" + w + "' in module " + m.name);
    parse_instance(m);
  }

  void parse_generate_body(Module& m) {
    if (accept("begin")) {
      if (accept(":")) expect_ident("as block label");
      while (!accept("end")) parse_item(m, "end");
      if (accept(":")) expect_ident("as block label");
    } else {
      parse_item(m, "end");
    }
  }

  void parse_instance(Module& m) {
    const Token& first = peek();
    std::string module_name = next().text;
    if (accept("#")) {
      if (is("(")) balanced("(", ")");
      else next();
    }
    do {
      const Token& at = peek();
      std::string inst = expect_ident("as instance name of " + module_name);
      while (is("[")) balanced("[", "]");
      Instance ins;
      ins.module = module_name;
      ins.name = inst;
      ins.line = at.line;
      if (!is("(")) fatal(peek(), "expected '(' after instance " + inst);
      auto [b, e] = balanced("(", ")");
      parse_connections(ins, b, e);
      m.instances.push_back(std::move(ins));
    } while (accept(","));
    if (!accept(";")) fatal(peek(), "expected ';' after instance of " + module_name +
                                        " (line " + std::to_string(first.line) + ")");
  }

  void parse_connections(Instance& ins, std::size_t b, std::size_t e) {
    std::size_t k = b;
    auto split_commas = [&](std::size_t from, std::size_t to) {
      std::vector<std::pair<std::size_t, std::size_t>> parts;
      int depth = 0;
      std::size_t s = from;
      for (std::size_t q = from; q < to; ++q) {
        const auto& x = t_[q].text;
        if (x == "(" || x == "[" || x == "{") ++depth;
        if (x == ")" || x == "]" || x == "}") --depth;
        if (depth == 0 && x == ",") {
          parts.emplace_back(s, q);
          s = q + 1;
        }
      }
      if (s < to) parts.emplace_back(s, to);
      return parts;
    };
    for (auto [s, f] : split_commas(k, e)) {
      if (s == f) continue;
      if (t_[s].text == ".") {
        if (s + 1 >= f) {
          error(t_[s], "dangling '.' in connections of " + ins.name);
          continue;
        }
        if (t_[s + 1].text == "*") continue;
        std::string port = t_[s + 1].text;
        std::string expr;
        if (s + 2 < f) {
          if (t_[s + 2].text != "(" || t_[f - 1].text != ")") {
            error(t_[s + 2], "malformed named connection for port " + port);
            continue;
          }
          expr = join_tokens(t_, s + 3, f - 1);
        } else {
          expr = port;
        }
        ins.connections.push_back({port, expr});
      } else {
        ins.connections.push_back({"", join_tokens(t_, s, f)});
      }
    }
  }

  // Tokens up to (not including) the first `tok` at depth 0 on this statement.
  std::pair<std::size_t, std::size_t> until_token(std::string_view tok) {
    std::size_t b = p_;
    int depth = 0;
    while (true) {
      const auto& t = peek();
      if (t.kind == Tok::End || (t.kind == Tok::Ident && is_keyword(t.text) && depth == 0 &&
                                 t.text != "signed"))
        fatal(t, "expected '" + std::string(tok) + "'");
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
      if (depth == 0 && t.text == tok) break;
      if (depth == 0 && t.text == ";") fatal(t, "expected '" + std::string(tok) + "' before ';'");
      next();
    }
    return {b, p_};
  }

  // Tokens up to the first `,` or `;` at depth 0.
  std::pair<std::size_t, std::size_t> until_delims() {
    std::size_t b = p_;
    int depth = 0;
    while (true) {
      const auto& t = peek();
      if (t.kind == Tok::End) fatal(t, "unterminated expression");
      if (t.kind == Tok::Ident && (t.text == "endmodule" || t.text == "end" ||
                                   t.text == "assign" || t.text == "always"))
        fatal(t, "missing ';' before '" + t.text + "'");
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") {
        if (--depth < 0) fatal(t, "unbalanced '" + t.text + "'");
      }
      if (depth == 0 && (t.text == "," || t.text == ";")) break;
      next();
    }
    return {b, p_};
  }

  void count_ops(Module& m, std::size_t b, std::size_t e) {
    int bracket = 0;
    for (std::size_t k = b; k < e; ++k) {
      const auto& t = t_[k];
      if (t.kind != Tok::Op) continue;
      const auto& x = t.text;
      if (x == "[") ++bracket;
      else if (x == "]") --bracket;
      if (bracket > 0) continue;
      if (x == "+") ++m.ops.add;
      else if (x == "-") ++m.ops.sub;
      else if (x == "*") ++m.ops.mul;
      else if (x == "<<" || x == ">>" || x == "<<<" || x == ">>>") ++m.ops.shift;
      else if (x == "<" || x == ">" || x == "<=" || x == ">=" || x == "==" || x == "!=" ||
               x == "===" || x == "!==")
        ++m.ops.cmp;
      else if (x == "?") ++m.ops.mux;
      else if (x == "&" || x == "|" || x == "^" || x == "~" || x == "~&" || x == "~|" ||
               x == "~^" || x == "^~" || x == "&&" || x == "||" || x == "!")
        ++m.ops.logic;
    }
  }

  void parse_statement(Module& m, bool seq, bool count) {
    const Token& t = peek();
    if (t.kind == Tok::End) fatal(t, "unexpected end of input in procedural block");
    if (accept(";")) return;
    if (accept("begin")) {
      if (accept(":")) expect_ident("as block label");
      while (!accept("end")) {
        if (is("endmodule") || peek().kind == Tok::End)
          fatal(peek(), "missing 'end' for 'begin' at line " + std::to_string(t.line));
        parse_statement(m, seq, count);
      }
      return;
    }
    if (accept("fork")) {
      while (!accept("join")) {
        if (is("endmodule") || peek().kind == Tok::End) fatal(peek(), "missing 'join'");
        parse_statement(m, seq, count);
      }
      return;
    }
    if (accept("if")) {
      auto [b, e] = balanced("(", ")");
      if (count) {
        count_ops(m, b, e);
        ++m.ops.mux;
      }
      parse_statement(m, seq, count);
      if (accept("else")) parse_statement(m, seq, count);
      return;
    }
    if (is("case") || is("casez") || is("casex")) {
      next();
      auto [b, e] = balanced("(", ")");
      if (count) count_ops(m, b, e);
      while (!accept("endcase")) {
        if (is("endmodule") || peek().kind == Tok::End)
          fatal(peek(), "missing 'endcase' for case at line " + std::to_string(t.line));
        if (accept("default")) {
          accept(":");
        } else {
          int depth = 0;
          while (true) {
            const auto& x = peek();
            if (x.kind == Tok::End || x.text == "endmodule") fatal(x, "malformed case item");
            if (x.text == "(" || x.text == "[" || x.text == "{") ++depth;
            if (x.text == ")" || x.text == "]" || x.text == "}") --depth;
            if (depth == 0 && x.text == ":") break;
            next();
          }
          next();
        }
        if (count) ++m.ops.mux;
        parse_statement(m, seq, count);
      }
      return;
    }
    if (is("for") || is("while") || is("repeat")) {
      next();
      balanced("(", ")");
      parse_statement(m, seq, count);
      return;
    }
    if (accept("forever")) {
      parse_statement(m, seq, count);
      return;
    }
    if (accept("@")) {
      if (is("(")) balanced("(", ")");
      else next();
      parse_statement(m, seq, count);
      return;
    }
    if (accept("#")) {
      if (is("(")) balanced("(", ")");
      else next();
      parse_statement(m, seq, count);
      return;
    }
    if (t.kind == Tok::Ident && is_keyword(t.text) && t.text != "wait" && t.text != "disable")
      fatal(t, "unexpected '" + t.text + "' in procedural block");
    // simple statement: assignment or task call
    std::size_t b = p_;
    int depth = 0;
    std::size_t assign_at = 0;
    bool has_assign = false;
    while (true) {
      const auto& x = peek();
      if (x.kind == Tok::End) fatal(x, "unterminated statement");
      if (x.kind == Tok::Ident && (x.text == "end" || x.text == "endmodule" ||
                                   x.text == "endcase" || x.text == "else"))
        fatal(x, "missing ';' before '" + x.text + "'");
      if (x.text == "(" || x.text == "[" || x.text == "{") ++depth;
      if (x.text == ")" || x.text == "]" || x.text == "}") --depth;
      if (depth == 0 && x.text == ";") break;
      if (depth == 0 && !has_assign && (x.text == "=" || x.text == "<=")) {
        has_assign = true;
        assign_at = p_;
      }
      next();
    }
    std::size_t e = p_;
    next();
    if (!has_assign) return;
    if (count) count_ops(m, assign_at + 1, e);
    if (seq) {
      for (std::size_t k = b; k < assign_at; ++k) {
        if (t_[k].text == "[") {  // skip index expressions
          int d = 0;
          for (; k < assign_at; ++k) {
            if (t_[k].text == "[") ++d;
            if (t_[k].text == "]" && --d == 0) break;
          }
          continue;
        }
        if (t_[k].kind == Tok::Ident && !is_keyword(t_[k].text)) assigned_regs_.insert(t_[k].text);
      }
    }
  }

  std::vector<Token> t_;
  std::size_t p_ = 0;
  ParseResult result_;
  Module* module_ = nullptr;
  std::map<std::string, int> regs_;
  std::set<std::string> assigned_regs_;
};

}  // namespace

const Port* Module::find_port(std::string_view port) const {
  for (const auto& p : ports)
    if (p.name == port) return &p;
  return nullptr;
}

ModuleSpec Module::to_spec() const {
  ModuleSpec spec;
  spec.name = name;
  for (const auto& p : ports) spec.ports.push_back({p.name, p.direction, std::max(p.width, 1)});
  spec.parameters = parameters;
  for (const auto& i : instances) {
    InstanceRef ref;
    ref.module_name = i.module;
    ref.instance_name = i.name;
    for (const auto& c : i.connections)
      if (!c.port.empty()) ref.connections[c.port] = c.expr;
    spec.instances.push_back(std::move(ref));
  }
  spec.body_state = BodyState::Filled;
  return spec;
}

const Module* ParseResult::find(std::string_view name) const {
  for (const auto& m : modules)
    if (m.name == name) return &m;
  return nullptr;
}

std::string ParseResult::error_text() const {
  std::ostringstream os;
  for (const auto& d : errors) os << "line " << d.line << ":" << d.column << ": " << d.message << "\n";
  return os.str();
}

ParseResult parse(std::string_view source) {
  auto lexed = lex(source);
  ParseResult result = Parser(std::move(lexed.tokens)).run();
  result.errors.insert(result.errors.begin(), lexed.errors.begin(), lexed.errors.end());
  for (const auto& m : result.modules) {
    for (const auto& p : m.ports) {
      if (p.width == -1)
        result.errors.push_back({m.line, 1, "port " + p.name + " of " + m.name + " has no direction declaration"});
    }
  }
  return result;
}

std::vector<std::string> referenced_nets(std::string_view text) {
  auto lexed = lex(text);
  std::vector<std::string> out;
  int bracket = 0;
  for (const auto& t : lexed.tokens) {
    if (t.text == "[") ++bracket;
    if (t.text == "]") --bracket;
    if (bracket > 0) continue;
    if (t.kind == Tok::Ident && !is_keyword(t.text) && t.text.front() != '$' &&
        std::find(out.begin(), out.end(), t.text) == out.end())
      out.push_back(t.text);
  }
  return out;
}

std::string render_header(const ModuleSpec& spec) {
  std::string out = "module " + spec.name;
  if (!spec.parameters.empty()) {
    out += " #(";
    bool first = true;
    for (const auto& [k, v] : spec.parameters) {
      if (!first) out += ", ";
      first = false;
      out += "parameter " + k + " = " + std::to_string(v);
    }
    out += ")";
  }
  if (!spec.ports.empty()) {
    out += " (";
    for (std::size_t i = 0; i < spec.ports.size(); ++i) {
      const auto& p = spec.ports[i];
      if (i) out += ", ";
      out += std::string(to_string(p.direction));
      if (p.width > 1) out += " [" + std::to_string(p.width - 1) + ":0]";
      out += " " + p.name;
    }
    out += ")";
  }
  out += ";";
  return out;
}

std::string extract_code(std::string_view text) {
  auto fence = text.find("```");
  if (fence != std::string_view::npos) {
    auto line_end = text.find('\n', fence);
    if (line_end != std::string_view::npos) {
      auto close = text.find("```", line_end + 1);
      auto body = text.substr(line_end + 1, close == std::string_view::npos
                                                ? std::string_view::npos
                                                : close - line_end - 1);
      return std::string(body);
    }
  }
  auto is_word_at = [&](std::size_t pos, std::string_view w) {
    if (text.substr(pos, w.size()) != w) return false;
    bool left = pos == 0 || !(std::isalnum(static_cast<unsigned char>(text[pos - 1])) || text[pos - 1] == '_');
    std::size_t r = pos + w.size();
    bool right = r >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[r])) || text[r] == '_');
    return left && right;
  };
  std::size_t first = std::string_view::npos;
  for (std::size_t p = text.find("module"); p != std::string_view::npos; p = text.find("module", p + 1)) {
    if (is_word_at(p, "module")) {
      first = p;
      break;
    }
  }
  std::size_t last = text.rfind("endmodule");
  if (first != std::string_view::npos && last != std::string_view::npos && last > first)
    return std::string(text.substr(first, last + 9 - first)) + "\n";
  std::string s(text);
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace hivegen::verilog

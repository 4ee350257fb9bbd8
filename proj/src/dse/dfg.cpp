#include "hivegen/dse/dfg.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "hivegen/core/error.hpp"

namespace hivegen::dse {

namespace {

constexpr std::pair<Op, std::string_view> kOpNames[] = {
    {Op::Pass, "PASS"}, {Op::Add, "ADD"}, {Op::Sub, "SUB"}, {Op::Mul, "MUL"}, {Op::Shift, "SHIFT"}, {Op::Cmp, "CMP"}};

struct Token {
  enum Kind { Ident, Int, Sym, End } kind;
  std::string text;
  int line, col;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t s = i;
      int l = line, cl = col;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) advance(1);
      out.push_back({Token::Ident, std::string(src.substr(s, i - s)), l, cl});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t s = i;
      int l = line, cl = col;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      out.push_back({Token::Int, std::string(src.substr(s, i - s)), l, cl});
    } else {
      int l = line, cl = col;
      auto two = src.substr(i, 2);
      if (two == "<<" || two == ">>") {
        out.push_back({Token::Sym, std::string(two), l, cl});
        advance(2);
      } else if (std::string_view("=+-*<;").find(c) != std::string_view::npos) {
        out.push_back({Token::Sym, std::string(1, c), l, cl});
        advance(1);
      } else {
        throw Error(ErrorCode::Syntax, "line " + std::to_string(l) + ", column " + std::to_string(cl) +
                                           ": unexpected character '" + std::string(1, c) + "'");
      }
    }
  }
  out.push_back({Token::End, "", line, col});
  return out;
}

[[noreturn]] void syntax(const Token& t, const std::string& what) {
  throw Error(ErrorCode::Syntax, "line " + std::to_string(t.line) + ", column " + std::to_string(t.col) + ": " + what +
                                     (t.kind == Token::End ? " at end of input" : ", found '" + t.text + "'"));
}

struct Operand {
  std::string ident;  // empty for literals
  bool negated = false;
  Token where;
};

struct Statement {
  Token target;
  std::optional<Operand> lhs, rhs;
  std::string op;  // empty for copies
};

}  // namespace

std::string_view to_string(Op op) {
  for (const auto& [o, n] : kOpNames)
    if (o == op) return n;
  return "?";
}

std::optional<Op> parse_op(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& [o, n] : kOpNames)
    if (n == up) return o;
  return std::nullopt;
}

int KernelDfg::count(Op op) const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.op == op; }));
}

int KernelDfg::depth() const {
  std::vector<int> d(nodes.size(), 1);
  // edges are emitted in def-use order, so src < dst and one sweep suffices
  auto sorted = edges;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [s, t] : sorted) d[t] = std::max(d[t], d[s] + 1);
  return nodes.empty() ? 0 : *std::max_element(d.begin(), d.end());
}

KernelDfg extract_dfg(std::string_view source) {
  auto toks = lex(source);
  std::size_t p = 0;
  auto peek = [&]() -> const Token& { return toks[p]; };
  auto is_sym = [&](std::string_view s) { return peek().kind == Token::Sym && peek().text == s; };

  std::vector<Statement> stmts;
  auto operand = [&]() {
    Operand o{"", false, peek()};
    while (is_sym("-")) {
      o.negated = !o.negated;
      ++p;
    }
    if (peek().kind == Token::Ident) {
      if (peek().text == "pass") syntax(peek(), "expected operand");
      o.ident = peek().text;
    } else if (peek().kind != Token::Int) {
      syntax(peek(), "expected operand");
    }
    o.where = peek();
    ++p;
    return o;
  };
  while (peek().kind != Token::End) {
    if (peek().kind == Token::Ident && peek().text == "pass") {
      ++p;
      if (!is_sym(";")) syntax(peek(), "expected ';'");
      ++p;
      continue;
    }
    if (peek().kind != Token::Ident) syntax(peek(), "expected assignment target");
    Statement s{peek(), std::nullopt, std::nullopt, ""};
    ++p;
    if (!is_sym("=")) syntax(peek(), "expected '='");
    ++p;
    s.lhs = operand();
    if (peek().kind == Token::Sym && peek().text != ";" && peek().text != "=") {
      s.op = peek().text;
      ++p;
      s.rhs = operand();
    }
    if (!is_sym(";")) syntax(peek(), "expected ';'");
    ++p;
    stmts.push_back(std::move(s));
  }

  std::map<std::string, std::size_t> first_def;
  for (std::size_t i = 0; i < stmts.size(); ++i) first_def.emplace(stmts[i].target.text, i);

  KernelDfg g;
  std::map<std::string, int> producer;  // variable -> node currently holding its value
  auto new_node = [&](Op op, const std::string& target, int line) {
    int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({id, op, target, line});
    g.op_set.insert(op);
    return id;
  };
  auto use = [&](const Operand& o, std::size_t stmt, int consumer) {
    if (o.ident.empty()) return;
    auto it = producer.find(o.ident);
    if (it != producer.end()) {
      if (std::find(g.edges.begin(), g.edges.end(), std::pair{it->second, consumer}) == g.edges.end())
        g.edges.emplace_back(it->second, consumer);
      return;
    }
    auto def = first_def.find(o.ident);
    if (def != first_def.end() && def->second >= stmt)
      throw Error(ErrorCode::UseBeforeDef, "line " + std::to_string(o.where.line) + ", column " +
                                               std::to_string(o.where.col) + ": '" + o.ident +
                                               "' is used before its assignment on line " +
                                               std::to_string(stmts[def->second].target.line));
    if (std::find(g.inputs.begin(), g.inputs.end(), o.ident) == g.inputs.end()) g.inputs.push_back(o.ident);
  };
  // a negated operand becomes its own SUB node feeding the consumer
  auto operand_node = [&](const Operand& o, std::size_t stmt, int line) -> std::optional<int> {
    if (!o.negated) return std::nullopt;
    int n = new_node(Op::Sub, "", line);
    use(o, stmt, n);
    return n;
  };

  for (std::size_t i = 0; i < stmts.size(); ++i) {
    const auto& s = stmts[i];
    int line = s.target.line;
    Op op = Op::Pass;
    if (s.op == "+") op = Op::Add;
    else if (s.op == "-") op = Op::Sub;
    else if (s.op == "*") op = Op::Mul;
    else if (s.op == "<<" || s.op == ">>") op = Op::Shift;
    else if (s.op == "<") op = Op::Cmp;

    if (s.op.empty() && s.lhs->negated) {
      int n = new_node(Op::Sub, s.target.text, line);
      use(*s.lhs, i, n);
      producer[s.target.text] = n;
      continue;
    }
    auto neg_l = operand_node(*s.lhs, i, line);
    std::optional<int> neg_r;
    if (s.rhs) neg_r = operand_node(*s.rhs, i, line);
    int n = new_node(op, s.target.text, line);
    if (neg_l) g.edges.emplace_back(*neg_l, n);
    else use(*s.lhs, i, n);
    if (s.rhs) {
      if (neg_r) g.edges.emplace_back(*neg_r, n);
      else use(*s.rhs, i, n);
    }
    producer[s.target.text] = n;
  }
  return g;
}

std::string format_op_set(const std::set<Op>& ops) {
  std::string out = "{";
  for (auto op : ops) out += (out.size() > 1 ? ", " : "") + std::string(to_string(op));
  return out + "}";
}

nlohmann::json to_json(const KernelDfg& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"id", n.id}, {"op", to_string(n.op)}, {"target", n.target}});
  nlohmann::json ops = nlohmann::json::array();
  for (auto op : g.op_set) ops.push_back(to_string(op));
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [s, t] : g.edges) edges.push_back({s, t});
  return {{"nodes", nodes}, {"edges", edges}, {"op_set", ops}, {"node_count", g.node_count()}, {"inputs", g.inputs},
          {"depth", g.depth()}};
}

}  // namespace hivegen::dse

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "hivegen/core/error.hpp"
#include "hivegen/dse/explorer.hpp"
#include "hivegen/llm/backend.hpp"

using namespace hivegen;
using namespace hivegen::dse;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kData = HIVEGEN_DATA_DIR;

TemplateDef cgra() { return load_template_named(kData + "/templates", "cgra"); }
TemplateDef systolic() { return load_template_named(kData + "/templates", "systolic_array"); }

DesignConfig cgra_cfg(std::int64_t rows, std::int64_t cols, std::vector<std::string> ops, bool pipe = false) {
  json j = {{"template", "cgra"},
            {"assignment", {{"rows", rows}, {"cols", cols}, {"alu_ops", ops}, {"pipelining", pipe}}}};
  return config_from_json(j, cgra());
}

DesignConfig systolic_cfg(std::int64_t rows, std::int64_t cols, std::int64_t width, std::int64_t depth, bool pipe) {
  return DesignConfig{"systolic_array",
                      {{"rows", rows}, {"cols", cols}, {"data_width", width}, {"buffer_depth", depth}, {"pipelining", pipe}}};
}

// n independent ADD nodes
KernelDfg chain_free(int n, const std::string& op = "+") {
  std::string src;
  for (int i = 0; i < n; ++i) src += "y" + std::to_string(i) + " = a " + op + " b;\n";
  return extract_dfg(src);
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Dfg, DefUseExample) {
  auto g = extract_dfg("c = a + b; d = c - a;");
  ASSERT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.nodes[0].op, Op::Add);
  EXPECT_EQ(g.nodes[1].op, Op::Sub);
  EXPECT_EQ(g.edges, (std::vector<std::pair<int, int>>{{0, 1}}));
  EXPECT_EQ(g.op_set, (std::set<Op>{Op::Add, Op::Sub}));
  EXPECT_EQ(g.inputs, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(g.depth(), 2);
}

TEST(Dfg, EmptyKernel) {
  auto g = extract_dfg("");
  EXPECT_EQ(g.node_count(), 0u);
  EXPECT_TRUE(g.op_set.empty());
  EXPECT_EQ(g.depth(), 0);
  EXPECT_EQ(extract_dfg("# only a comment\npass;\n").node_count(), 0u);
}

TEST(Dfg, FftFixtureMatchesHandCount) {
  auto src = slurp(kData + "/kernels/fft4.kdsl");
  auto g = extract_dfg(src);
  // counted by reading the fixture: stage 1 has 4 ADD + 4 SUB, the twiddle
  // has 4 MUL + 1 SUB + 1 ADD, stage 2 has 4 ADD + 4 SUB
  EXPECT_EQ(g.count(Op::Add), 9);
  EXPECT_EQ(g.count(Op::Sub), 9);
  EXPECT_EQ(g.count(Op::Mul), 4);
  EXPECT_EQ(g.node_count(), 22u);
  EXPECT_EQ(g.op_set, (std::set<Op>{Op::Add, Op::Sub, Op::Mul}));
  EXPECT_EQ(g.depth(), 4);

  // second opinion: count binary operator characters on code lines
  int plus = 0, minus = 0, star = 0;
  std::istringstream lines(src);
  for (std::string line; std::getline(lines, line);) {
    line = line.substr(0, line.find('#'));
    plus += static_cast<int>(std::count(line.begin(), line.end(), '+'));
    minus += static_cast<int>(std::count(line.begin(), line.end(), '-'));
    star += static_cast<int>(std::count(line.begin(), line.end(), '*'));
  }
  EXPECT_EQ(plus, g.count(Op::Add));
  EXPECT_EQ(minus, g.count(Op::Sub));
  EXPECT_EQ(star, g.count(Op::Mul));

  for (const auto& [s, d] : g.edges) {
    EXPECT_LT(s, d);
    EXPECT_LT(d, static_cast<int>(g.node_count()));
  }
}

TEST(Dfg, OperatorsAndErrors) {
  auto g = extract_dfg("x = a << 2;\ny = x < b;\nz = -y;\nw = x;\n");
  EXPECT_EQ(g.op_set, (std::set<Op>{Op::Shift, Op::Cmp, Op::Sub, Op::Pass}));
  EXPECT_EQ(g.depth(), 3);
  try {
    extract_dfg("a = b +;\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Syntax);
    EXPECT_NE(std::string(e.what()).find("line 1, column 8"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { extract_dfg("a = b + c\nd = a;"); }), ErrorCode::Syntax);
  EXPECT_EQ(code_of([] { extract_dfg("a = x & y;"); }), ErrorCode::Syntax);
  try {
    extract_dfg("d = c + 1;\nc = a + b;\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UseBeforeDef);
    EXPECT_NE(std::string(e.what()).find("'c'"), std::string::npos);
  }
}

TEST(Evaluate, PaperCgraConfigAcceptsAddSubKernel) {
  auto t = cgra();
  auto cfg = cgra_cfg(2, 2, {"PASS", "ADD", "SUB"});
  auto g = extract_dfg("s = a + b; d = a - b; e = s + d; f = s - d;");
  EXPECT_TRUE(evaluate_config(cfg, t, g).empty());
  EXPECT_EQ(describe(cfg, t), "rows=2, cols=2, alu_ops={PASS, ADD, SUB}, pipelining=false");
}

TEST(Evaluate, MissingMultiplierIsANamedConflict) {
  auto t = cgra();
  auto g = extract_dfg(slurp(kData + "/kernels/fft4.kdsl"));
  auto c = evaluate_config(cgra_cfg(2, 2, {"PASS", "ADD", "SUB"}), t, g);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].rule, "alu_op_coverage");
  EXPECT_EQ(c[0].message, "op MUL unsupported by ALU");
  EXPECT_TRUE(evaluate_config(cgra_cfg(2, 2, {"PASS", "ADD", "SUB", "MUL"}), t, g).empty());
}

TEST(Evaluate, CapacityAndDomain) {
  auto t = systolic();
  auto c = evaluate_config(systolic_cfg(5, 5, 8, 8, false), t, chain_free(26, "*"));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].message, "capacity 25 < 26");
  EXPECT_TRUE(evaluate_config(systolic_cfg(5, 5, 8, 8, false), t, chain_free(25, "*")).empty());

  auto d = evaluate_config(systolic_cfg(2, 20, 8, 2, false), t, chain_free(1, "*"));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].rule, "buffer_covers_cols");
  EXPECT_NE(d[0].message.find("buffer_depth - cols = -18 violates >= 0"), std::string::npos) << d[0].message;
  EXPECT_EQ(d[1].rule, "domain");
  EXPECT_EQ(d[1].message, "parameter cols = 20 outside [1, 16]");

  DesignConfig partial{"systolic_array", {{"rows", 2}}};
  auto p = evaluate_config(partial, t, chain_free(1, "*"));
  EXPECT_EQ(std::count_if(p.begin(), p.end(), [](const auto& x) { return x.rule == "domain"; }), 4);

  DesignConfig unknown = systolic_cfg(2, 2, 8, 2, false);
  unknown.assignment["frequency"] = 1;
  EXPECT_EQ(code_of([&] { evaluate_config(unknown, t, chain_free(1)); }), ErrorCode::UnknownParameter);
  EXPECT_EQ(code_of([&] { config_from_json({{"template", "cgra"}, {"assignment", {{"depth", 1}}}}, cgra()); }),
            ErrorCode::UnknownParameter);
  EXPECT_EQ(code_of([&] { evaluate_config(systolic_cfg(2, 2, 8, 2, false), cgra(), chain_free(1)); }),
            ErrorCode::InvalidArgument);
}

TEST(Evaluate, RuleOrderNeverChangesVerdict) {
  std::mt19937 rng(11);
  auto base = cgra();
  auto sys = systolic();
  const std::vector<std::string> kernels{"a = x + y;", "a = x * y; b = a - x;", "a = x << 1; b = a < y;",
                                         slurp(kData + "/kernels/fft4.kdsl")};
  for (int trial = 0; trial < 300; ++trial) {
    auto g = extract_dfg(kernels[rng() % kernels.size()]);
    auto t = (trial % 2) ? base : sys;
    DesignConfig cfg{t.name, {}};
    for (const auto& p : t.parameters) {
      std::int64_t v = 0;
      if (p.kind == ParamKind::Int) v = p.min - 1 + static_cast<std::int64_t>(rng() % (p.max - p.min + 3));
      if (p.kind == ParamKind::Bool) v = rng() % 2;
      if (p.kind == ParamKind::Subset) v = rng() % (1 << p.values.size());
      cfg.assignment[p.name] = v;
    }
    auto want = evaluate_config(cfg, t, g);
    for (int k = 0; k < 5; ++k) {
      auto shuffled = t;
      std::shuffle(shuffled.design_rules.begin(), shuffled.design_rules.end(), rng);
      EXPECT_EQ(evaluate_config(cfg, shuffled, g), want);
    }
  }
}

TEST(Enhance, SystolicGoldenExpansion) {
  auto p = enhance_prompt(systolic_cfg(2, 2, 8, 2, false), systolic());
  auto golden = slurp(std::string(HIVEGEN_TEST_SUPPORT_DIR) + "/golden/systolic2x2_prompt.txt");
  EXPECT_EQ(p.render(), golden);
  std::vector<std::string> names;
  for (const auto& m : p.modules) names.push_back(m.name);
  EXPECT_EQ(names, (std::vector<std::string>{"systolic_top", "row_buffer", "col_buffer", "pe"}));
  EXPECT_EQ(enhance_prompt(systolic_cfg(2, 2, 8, 2, false), systolic()).render(), p.render());
}

TEST(Enhance, PipeliningAddsRegisterStage) {
  auto p = enhance_prompt(systolic_cfg(2, 2, 8, 2, true), systolic());
  ASSERT_NE(p.find("pipe_reg"), nullptr);
  EXPECT_EQ(p.find("pipe_reg")->level, 1);
  const auto* top = p.find("systolic_top");
  EXPECT_EQ(std::count_if(top->instances.begin(), top->instances.end(),
                          [](const auto& i) { return i.module_name == "pipe_reg"; }),
            4);
}

TEST(Enhance, CgraScaleForcesGpeCount) {
  auto p = enhance_prompt(cgra_cfg(2, 2, {"PASS", "ADD", "SUB"}), cgra());
  int gpes = 0, gibs = 0;
  for (const auto& m : p.modules) {
    if (m.name.rfind("GPE_", 0) == 0) {
      ++gpes;
      EXPECT_NE(m.description.find("PASS, ADD, SUB"), std::string::npos);
    }
    if (m.name == "gib") ++gibs;
  }
  EXPECT_EQ(gpes, 4);
  EXPECT_EQ(gibs, 1);
  EXPECT_NE(p.find("GPE_4"), nullptr);
  EXPECT_EQ(p.find("GPE_5"), nullptr);
  EXPECT_EQ(p.find("alu")->level, 2);
  EXPECT_EQ(p.find("pipe_reg"), nullptr);
  auto rendered = p.render();
  EXPECT_NE(rendered.find("module gib\n  Description: Global interconnect block for the 2x2 GPE array"), std::string::npos);

  auto big = enhance_prompt(cgra_cfg(3, 2, {"ADD"}), cgra());
  EXPECT_NE(big.find("GPE_6"), nullptr);
  EXPECT_NE(big.find("GPE_6")->description.find("row 2 and column 1"), std::string::npos);
}

TEST(Enhance, ModulesAreExactlyTheReachableOnes) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    auto cfg = systolic_cfg(1 + rng() % 4, 1 + rng() % 4, 8, 4, rng() % 2);
    auto e = expand(cfg, systolic());
    std::set<std::string> listed, reached{e.root};
    std::vector<std::string> todo{e.root};
    for (const auto& m : e.modules) EXPECT_TRUE(listed.insert(m.prompt.name).second) << "listed twice";
    while (!todo.empty()) {
      auto n = todo.back();
      todo.pop_back();
      for (const auto& i : e.find(n)->prompt.instances)
        if (reached.insert(i.module_name).second) todo.push_back(i.module_name);
    }
    EXPECT_EQ(listed, reached);
  }
}

TEST(Enhance, UnassignedPlaceholderIsAnError) {
  DesignConfig partial{"systolic_array", {{"rows", 2}, {"cols", 2}, {"pipelining", 0}}};
  EXPECT_EQ(code_of([&] { enhance_prompt(partial, systolic()); }), ErrorCode::UnassignedPlaceholder);
}

TEST(Template, PlaceholdersMustNameParameters) {
  json j = json::parse(slurp(kData + "/templates/cgra.json"));
  j["skeleton"]["modules"][2]["description"] = "ALU with {lanes} lanes";
  EXPECT_EQ(code_of([&] { template_from_json(j); }), ErrorCode::UnknownParameter);
  json k = json::parse(slurp(kData + "/templates/cgra.json"));
  k["parameters"][0]["type"] = "float";
  EXPECT_EQ(code_of([&] { template_from_json(k); }), ErrorCode::InvalidArgument);
}

TEST(Template, ConfigJsonRoundTrip) {
  auto t = cgra();
  auto cfg = cgra_cfg(2, 3, {"SUB", "PASS"}, true);
  auto j = to_json(cfg, t);
  EXPECT_EQ(j["assignment"]["alu_ops"], json({"PASS", "SUB"}));
  EXPECT_EQ(j["assignment"]["pipelining"], true);
  EXPECT_EQ(config_from_json(j, t), cfg);
  auto schema = config_schema(t);
  EXPECT_EQ(schema["properties"]["assignment"]["required"].size(), 4u);
}

namespace {

const char* kRound0 = R"({"template": "cgra", "assignment": {"rows": 2, "cols": 2, "alu_ops": ["PASS", "ADD", "SUB"], "pipelining": false}})";

}  // namespace

TEST(Explorer, ProposalIsEvaluated) {
  llm::MockBackend mock;
  mock.on("dse", "cgra", {std::string("Here you go:\n```json\n") + kRound0 + "\n```"});
  ExplorerState st;
  auto g = extract_dfg(slurp(kData + "/kernels/fft4.kdsl"));
  auto p = propose_config(cgra(), g, st, mock);
  EXPECT_EQ(p.config, cgra_cfg(2, 2, {"PASS", "ADD", "SUB"}));
  ASSERT_EQ(p.conflicts.size(), 1u);
  EXPECT_EQ(p.conflicts[0].message, "op MUL unsupported by ALU");
  EXPECT_EQ(p.attempts, 1);
  EXPECT_NE(p.request.find("op set: {ADD, SUB, MUL}"), std::string::npos);
  EXPECT_NE(p.request.find("Objective: minimize clock"), std::string::npos);
  EXPECT_NE(p.request.find("\"alu_ops\""), std::string::npos);
  EXPECT_EQ(p.request.find("one shot"), std::string::npos);
}

TEST(Explorer, ConflictTextReachesNextRound) {
  ExplorerState st;
  st.strategy_hint = "pipelining";
  st.history.push_back({json::parse(kRound0), PpaFeedback{}, "alu_op_coverage: op MUL unsupported by ALU"});
  st.history.push_back({json::parse(kRound0), PpaFeedback{3.5, 0.82, 5196, true}, ""});
  auto text = render_config_request(cgra(), extract_dfg(slurp(kData + "/kernels/fft4.kdsl")), st);
  EXPECT_NE(text.find("feedback: alu_op_coverage: op MUL unsupported by ALU"), std::string::npos) << text;
  EXPECT_NE(text.find("round 2:"), std::string::npos);
  EXPECT_NE(text.find("power 3.50 mW, clock 0.82 ns, area 5196.00 um2"), std::string::npos);
  EXPECT_NE(text.find("Suggested strategy: pipelining"), std::string::npos);
}

TEST(Explorer, OneShotExampleIsIncludedOnRequest) {
  ExplorerState st;
  st.icl_mode = IclMode::OneShot;
  st.icl_example = load_icl_example(kData + "/icl", "cgra");
  auto text = render_config_request(cgra(), extract_dfg("a = b + c;"), st);
  EXPECT_NE(text.find("Example configuration (one shot):\n" + st.icl_example), std::string::npos);
}

TEST(Explorer, NonJsonThriceFails) {
  llm::MockBackend mock;
  mock.on("dse", "cgra", {"I think a 2x2 array is best.", "still prose", "more prose"});
  try {
    propose_config(cgra(), extract_dfg("a = b + c;"), ExplorerState{}, mock, {}, 3);
    FAIL();
  } catch (const ProposalFailed& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProposalFailed);
    EXPECT_EQ(e.raw(), "more prose");
  }
  EXPECT_EQ(mock.calls(), 3);
  auto h = mock.history();
  EXPECT_NE(h[1].user.find("could not be used: it did not contain a JSON object"), std::string::npos);
}

TEST(Explorer, RepairAfterSchemaViolation) {
  llm::MockBackend mock;
  mock.on("dse", "cgra",
          {R"({"template": "cgra", "assignment": {"rows": 2, "cols": 2, "alu_ops": ["PASS", "DIV"], "pipelining": false}})",
           R"({"template": "cgra", "assignment": {"rows": 2, "cols": 2}})", kRound0});
  auto p = propose_config(cgra(), extract_dfg("a = b + c;"), ExplorerState{}, mock);
  EXPECT_EQ(p.attempts, 3);
  EXPECT_TRUE(p.conflicts.empty());
  auto h = mock.history();
  EXPECT_NE(h[1].user.find("unknown value 'DIV'"), std::string::npos);
  EXPECT_NE(h[2].user.find("missing from the assignment: alu_ops, pipelining"), std::string::npos);
}

TEST(Explorer, PromptProposals) {
  llm::MockBackend mock;
  EXPECT_EQ(code_of([&] { propose_prompt("  \n", ExplorerState{}, mock); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(mock.calls(), 0);

  mock.on("prompt", "design",
          {R"({"design": "mux64", "top": "mux_64", "modules": [
               {"name": "mux_64", "ports": [{"name": "in", "direction": "input", "width": 64}],
                "instances": [{"module_name": "mux_4", "instance_name": "m4", "count": 21}]},
               {"name": "mux_4", "instances": [{"module_name": "mux_2", "instance_name": "m2", "count": 3}], "level": 1},
               {"name": "mux_2", "level": 2}]})"});
  auto p = propose_prompt("A 64-to-1 multiplexer", ExplorerState{}, mock);
  ASSERT_EQ(p.prompt.modules.size(), 3u);
  EXPECT_EQ(p.prompt.find("mux_64")->instances.size(), 21u);
  EXPECT_EQ(p.prompt.find("mux_64")->instances[20].instance_name, "m4_20");

  llm::MockBackend one;
  one.push_reply(R"({"design": "inv", "modules": [{"name": "inverter", "description": "y = ~a"}]})");
  auto q = propose_prompt("an inverter", ExplorerState{}, one);
  EXPECT_EQ(q.prompt.top, "inverter");
  EXPECT_EQ(q.prompt.modules.size(), 1u);

  llm::MockBackend empty;
  empty.on("prompt", "", {R"({"design": "x", "modules": []})"});
  EXPECT_THROW(propose_prompt("anything", ExplorerState{}, empty), ProposalFailed);
  EXPECT_EQ(empty.calls(), 3);
}

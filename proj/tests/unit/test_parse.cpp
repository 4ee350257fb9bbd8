#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hivegen/core/error.hpp"
#include "hivegen/parse/command.hpp"
#include "hivegen/parse/sketch.hpp"
#include "hivegen/parse/tasks.hpp"

using namespace hivegen;
using namespace hivegen::parse;

namespace {

PortDecl in(std::string n, int w = 1) { return {std::move(n), Direction::Input, w}; }
PortDecl out(std::string n, int w = 1) { return {std::move(n), Direction::Output, w}; }

InstanceRef inst(std::string module, std::string name) { return {std::move(module), std::move(name), {}}; }

HierarchicalPrompt mux_prompt() {
  HierarchicalPrompt p;
  p.design = "mux64";
  p.top = "mux_64";
  PromptModule top{"mux_64", "64-to-1 multiplexer", {in("in", 64), in("sel", 6), out("out")}, {}, {}, 0};
  for (int i = 0; i < 21; ++i) top.instances.push_back(inst("mux_4", "m4_" + std::to_string(i)));
  PromptModule m4{"mux_4", "4-to-1 multiplexer", {in("in", 4), in("sel", 2), out("out")}, {}, {}, 1};
  for (int i = 0; i < 3; ++i) m4.instances.push_back(inst("mux_2", "m2_" + std::to_string(i)));
  PromptModule m2{"mux_2", "2-to-1 multiplexer", {in("in", 2), in("sel"), out("out")}, {}, {}, 2};
  p.modules = {top, m4, m2};
  return p;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

SketchSet gpe_sketches() {
  SketchSet s;
  SketchDoc gpe;
  gpe.module_name = "GPE_4";
  gpe.ports = {in("a", 8), in("b", 8), out("y", 8)};
  s["GPE_4"] = gpe;
  SketchDoc m4;
  m4.module_name = "mux_4";
  m4.ports = {in("in", 4), in("sel", 2), out("out")};
  s["mux_4"] = m4;
  return s;
}

TaskList gpe_tasks() {
  TaskList t;
  t.tasks = {{"mux_4", TaskStatus::Done}, {"GPE_4", TaskStatus::Done}};
  return t;
}

}  // namespace

TEST(Command, InstanceInsertionSentence) {
  auto pc = parse_command("Add an instance MUX_1 of module mux_4 within GPE_4");
  EXPECT_EQ(pc.rule, "add_instance");
  auto cmd = std::get<AddInstance>(pc.command);
  EXPECT_EQ(cmd.module, "mux_4");
  EXPECT_EQ(cmd.instance, "MUX_1");
  EXPECT_EQ(cmd.parent, "GPE_4");

  const auto& t = pc.tree.tokens;
  ASSERT_EQ(t.size(), 9u);
  std::vector<Role> roles;
  for (const auto& tok : t) roles.push_back(tok.role);
  std::vector<Role> want{Role::RootVerb, Role::Det, Role::Dobj, Role::NpModifier, Role::Prep,
                         Role::Other,    Role::Pobj, Role::Prep, Role::Pobj};
  EXPECT_EQ(roles, want);
  EXPECT_EQ(pc.tree.root().text, "Add");
  EXPECT_EQ(t[0].head, -1);
  EXPECT_EQ(t[2].head, 0);  // instance <- Add
  EXPECT_EQ(t[3].head, 2);  // MUX_1 <- instance
  EXPECT_EQ(t[6].head, 4);  // mux_4 <- of
  EXPECT_EQ(t[8].head, 7);  // GPE_4 <- within
  EXPECT_EQ(pc.tree.first(Role::NpModifier)->text, "MUX_1");

  auto r = apply_edit(gpe_sketches(), gpe_tasks(), pc.command);
  auto text = render_sketch(r.sketches.at("GPE_4"));
  EXPECT_NE(text.find("\n  mux_4 MUX_1 (.port(port));\n"), std::string::npos) << text;
  EXPECT_EQ(r.sketches.at("GPE_4").revision, 1);
  EXPECT_EQ(r.tasks.find("GPE_4")->status, TaskStatus::Pending);
  EXPECT_EQ(r.tasks.find("mux_4")->status, TaskStatus::Done);
}

TEST(Command, RemoveSentences) {
  auto pc = parse_command("remove instance MUX_1 from GPE_4");
  EXPECT_EQ(std::get<RemoveInstance>(pc.command), (RemoveInstance{"MUX_1", "GPE_4"}));
  auto pp = parse_command("Remove the port in from module mux_4.");
  EXPECT_EQ(std::get<RemovePort>(pp.command), (RemovePort{"mux_4", "in"}));
}

TEST(Command, Errors) {
  EXPECT_EQ(code_of([] { parse_command("Frobnicate the widget"); }), ErrorCode::UnrecognizedVerb);
  EXPECT_EQ(code_of([] { parse_command("Add an instance MUX_1 of module mux_4 within"); }), ErrorCode::MissingArgument);
  EXPECT_EQ(code_of([] { parse_command("Add an instance MUX_1 of module mux_4"); }), ErrorCode::MissingArgument);
  EXPECT_EQ(code_of([] { parse_command("remove MUX_1 from GPE_4"); }), ErrorCode::AmbiguousCommand);
  EXPECT_EQ(code_of([] { parse_command("   "); }), ErrorCode::MalformedCommand);
  EXPECT_EQ(code_of([] { parse_command("add instance 3x of mux_4 within top"); }), ErrorCode::MalformedCommand);
  EXPECT_EQ(code_of([] { parse_command("rename module a to b please"); }), ErrorCode::MalformedCommand);
  try {
    parse_command("Add an instance MUX_1 of module mux_4 within");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("parent module"), std::string::npos) << e.what();
  }
}

TEST(Command, OtherForms) {
  auto a = parse_command("add port output data[7:0] to module alu");
  EXPECT_EQ(std::get<AddPort>(a.command), (AddPort{"alu", {"data", Direction::Output, 8}}));
  auto b = parse_command("add a port input en to alu");
  EXPECT_EQ(std::get<AddPort>(b.command).port.width, 1);
  auto c = parse_command("connect u0.out to net sum in module top");
  EXPECT_EQ(std::get<Connect>(c.command), (Connect{"top", "u0", "out", "sum"}));
  auto d = parse_command("RENAME MODULE alu TO alu2");
  EXPECT_EQ(std::get<RenameModule>(d.command), (RenameModule{"alu", "alu2"}));
}

TEST(Command, UnparseRoundTripProperty) {
  std::mt19937 rng(7);
  const std::vector<std::string> names{"a", "in", "to", "from", "module", "instance", "port", "of", "within",
                                       "GPE_4", "mux_4", "x_1", "net", "the", "an", "Add"};
  auto pick = [&] { return names[rng() % names.size()]; };
  for (int i = 0; i < 2000; ++i) {
    EditCommand c;
    switch (rng() % 6) {
      case 0: c = AddInstance{pick(), pick(), pick()}; break;
      case 1: c = RemoveInstance{pick(), pick()}; break;
      case 2: c = RenameModule{pick(), pick()}; break;
      case 3: c = AddPort{pick(), {pick(), static_cast<Direction>(rng() % 3), static_cast<int>(1 + rng() % 64)}}; break;
      case 4: c = RemovePort{pick(), pick()}; break;
      default: c = Connect{pick(), pick(), pick(), pick()}; break;
    }
    auto text = unparse(c);
    ParsedCommand pc;
    ASSERT_NO_THROW(pc = parse_command(text)) << text;
    EXPECT_EQ(pc.command, c) << text;
    EXPECT_EQ(command_from_json(to_json(c)), c);
  }
}

TEST(Tasks, MuxHierarchyOrder) {
  auto t = build_task_list(mux_prompt());
  EXPECT_EQ(t.order(), (std::vector<std::string>{"mux_2", "mux_4", "mux_64"}));
  EXPECT_EQ(build_task_list(mux_prompt()), t);
  auto again = t;
  restore_order(again);
  EXPECT_EQ(again, t);
  EXPECT_EQ(task_list_from_json(to_json(t)), t);
}

TEST(Tasks, RandomDagRespectsEveryEdge) {
  for (unsigned seed = 1; seed <= 50; ++seed) {
    std::mt19937 rng(seed);
    const int n = 12;
    std::vector<PromptModule> mods(n);
    std::set<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < n; ++i) {
      mods[i].name = "m" + std::to_string(i);
      for (int j = 0; j < i; ++j)
        if (rng() % 4 == 0) {
          mods[i].instances.push_back(inst(mods[j].name, "u" + std::to_string(j)));
          edges.insert({mods[i].name, mods[j].name});
        }
    }
    PromptModule top{"top", "", {}, {}, {}, 0};
    for (int i = 0; i < n; ++i) {
      top.instances.push_back(inst(mods[i].name, "t" + std::to_string(i)));
      edges.insert({"top", mods[i].name});
    }
    std::shuffle(mods.begin(), mods.end(), rng);
    HierarchicalPrompt p{"dag", "top", {}};
    p.modules.push_back(top);
    for (auto& m : mods) p.modules.push_back(m);

    auto order = build_task_list(p).order();
    ASSERT_EQ(order.size(), static_cast<std::size_t>(n + 1));
    EXPECT_EQ(order.back(), "top");
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    EXPECT_EQ(pos.size(), order.size());
    for (const auto& [parent, child] : edges) EXPECT_LT(pos[child], pos[parent]) << parent << "->" << child;
  }
}

TEST(Tasks, CycleIsReported) {
  HierarchicalPrompt p{"c", "A", {}};
  p.modules.push_back({"A", "", {}, {}, {inst("B", "b")}, 0});
  p.modules.push_back({"B", "", {}, {}, {inst("A", "a")}, 1});
  try {
    build_task_list(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Cycle);
    EXPECT_NE(std::string(e.what()).find("A"), std::string::npos);
  }
}

TEST(Edit, NotFoundLeavesSketchesUnchanged) {
  auto s = gpe_sketches();
  auto t = gpe_tasks();
  EXPECT_EQ(code_of([&] { apply_edit(s, t, RemoveInstance{"MUX_9", "GPE_4"}); }), ErrorCode::NotFound);
  EXPECT_EQ(s, gpe_sketches());
  EXPECT_EQ(t, gpe_tasks());
  EXPECT_EQ(code_of([&] { apply_edit(s, t, AddInstance{"mux_4", "u", "nowhere"}); }), ErrorCode::UnknownParent);
  auto r = apply_edit(s, t, AddInstance{"mux_4", "u", "GPE_4"});
  EXPECT_EQ(code_of([&] { apply_edit(r.sketches, r.tasks, AddInstance{"mux_4", "u", "GPE_4"}); }),
            ErrorCode::DuplicateInstanceName);
  EXPECT_EQ(code_of([&] { apply_edit(s, t, AddPort{"GPE_4", in("a")}); }), ErrorCode::DuplicatePort);
  EXPECT_EQ(code_of([&] { apply_edit(s, t, RenameModule{"mux_4", "GPE_4"}); }), ErrorCode::DuplicateModule);
}

TEST(Edit, NewModuleBecomesPendingBeforeParent) {
  auto r = apply_edit(gpe_sketches(), gpe_tasks(), AddInstance{"adder", "add0", "GPE_4"});
  ASSERT_TRUE(r.sketches.contains("adder"));
  auto order = r.tasks.order();
  EXPECT_EQ(order, (std::vector<std::string>{"mux_4", "adder", "GPE_4"}));
  EXPECT_EQ(r.tasks.find("adder")->status, TaskStatus::Pending);
  EXPECT_EQ(r.tasks.dependencies_of("GPE_4"), (std::vector<std::string>{"adder"}));

  auto back = apply_edit(r.sketches, r.tasks, RemoveInstance{"add0", "GPE_4"});
  EXPECT_TRUE(back.tasks.dependencies_of("GPE_4").empty());
  EXPECT_TRUE(back.sketches.at("GPE_4").instance_lines.empty());
}

TEST(Edit, SelfInstantiationIsACycle) {
  EXPECT_EQ(code_of([] { apply_edit(gpe_sketches(), gpe_tasks(), AddInstance{"GPE_4", "me", "GPE_4"}); }),
            ErrorCode::Cycle);
}

TEST(Edit, RenameAndConnect) {
  auto r = apply_edit(gpe_sketches(), gpe_tasks(), AddInstance{"mux_4", "MUX_1", "GPE_4"});
  r = apply_edit(r.sketches, r.tasks, Connect{"GPE_4", "MUX_1", "sel", "s"});
  EXPECT_EQ(r.sketches.at("GPE_4").instance_lines[0].connections.at("sel"), "s");
  EXPECT_EQ(code_of([&] { apply_edit(r.sketches, r.tasks, Connect{"GPE_4", "MUX_1", "bogus", "s"}); }),
            ErrorCode::NotFound);
  r = apply_edit(r.sketches, r.tasks, RenameModule{"mux_4", "sel4"});
  EXPECT_FALSE(r.sketches.contains("mux_4"));
  EXPECT_EQ(r.sketches.at("GPE_4").instance_lines[0].module_name, "sel4");
  EXPECT_EQ(r.tasks.order(), (std::vector<std::string>{"sel4", "GPE_4"}));
  EXPECT_EQ(r.tasks.find("sel4")->status, TaskStatus::Pending);
}

TEST(Sketch, RenderLayout) {
  SketchDoc s;
  s.module_name = "m";
  s.ports = {in("a"), out("y")};
  EXPECT_EQ(render_sketch(s), "module m (input a, output y);\n  /* body block */\nendmodule");
  SketchDoc e;
  e.module_name = "leaf";
  EXPECT_EQ(render_sketch(e), "module leaf;\n  /* body block */\nendmodule");
  s.instance_lines.push_back({"sub", "u0", {{"b", "y"}, {"a", "a"}}});
  s.parameters["W"] = 8;
  EXPECT_EQ(render_sketch(s),
            "module m #(parameter W = 8) (input a, output y);\n  sub u0 (.a(a), .b(y));\n  /* body block */\nendmodule");
  EXPECT_EQ(sketch_from_json(to_json(s)), s);
}

TEST(Sketch, FromPromptAndHierarchy) {
  auto p = mux_prompt();
  SketchSet set;
  for (const auto& m : dedup_modules(p)) set[m.name] = make_sketch(m);
  auto h = induced_hierarchy(set, "mux_64");
  EXPECT_EQ(h.modules.size(), 3u);
  EXPECT_EQ(h.modules.at("mux_64").instances.size(), 21u);
  EXPECT_TRUE(validate_hierarchy(h).empty());
}

TEST(Tasks, DedupFoldsRepeatedModules) {
  HierarchicalPrompt p{"d", "top", {}};
  p.modules.push_back({"top", "", {}, {}, {inst("leaf", "a"), inst("ghost", "g")}, 0});
  p.modules.push_back({"leaf", "first", {}, {}, {}, 1});
  p.modules.push_back({"leaf", "second", {in("x")}, {}, {}, 1});
  auto d = dedup_modules(p);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[1].description, "first");
  EXPECT_EQ(d[1].ports.size(), 1u);
  EXPECT_EQ(d[2].name, "ghost");
}

// Acceptance runner: one PASS/FAIL line per primary criterion, exit status 0
// only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "hivegen/core/error.hpp"
#include "hivegen/core/hash.hpp"
#include "hivegen/core/verilog.hpp"
#include "hivegen/dse/dfg.hpp"
#include "hivegen/dse/template.hpp"
#include "hivegen/library/library.hpp"
#include "hivegen/metrics/metrics.hpp"
#include "hivegen/orchestrator/orchestrator.hpp"
#include "hivegen/parse/command.hpp"
#include "hivegen/parse/sketch.hpp"
#include "hivegen/parse/tasks.hpp"
#include "stub_backend.hpp"

using namespace hivegen;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kData = HIVEGEN_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("hivegen-accept-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// ---- pass@k ----------------------------------------------------------------------

Outcome pass_at_k_reproduction() {
  Outcome o;
  auto cell = [&](int n, int c, int k, double want, double tol) {
    double got = metrics::pass_at_k(n, c, k);
    o.require(std::fabs(got - want) <= tol, "pass@" + std::to_string(k) + "(n=" + std::to_string(n) + ", c=" +
                                                std::to_string(c) + ") = " + std::to_string(got));
  };
  cell(10, 1, 1, 0.1, 1e-12);
  cell(10, 1, 5, 0.5, 1e-12);
  cell(10, 4, 5, 0.976, 0.0005);
  cell(20, 1, 5, 0.25, 1e-12);
  cell(20, 2, 5, 0.45, 0.005);
  cell(20, 3, 5, 0.60, 0.005);
  o.require(metrics::format_fixed(metrics::pass_at_k(10, 4, 5), 3) == "0.976", "0.976 rendering");

  // Oracle: walk every k-subset of n attempts (Gosper's hack) and count the
  // subsets holding at least one of the c correct attempts.
  long triples = 0;
  for (int n = 1; n <= 20; ++n) {
    for (int k = 1; k <= std::min(5, n); ++k) {
      std::vector<std::uint64_t> masks;
      for (std::uint64_t s = (1ull << k) - 1; s < (1ull << n);) {
        masks.push_back(s);
        std::uint64_t c = s & -s, r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
      }
      for (int c = 0; c <= n; ++c) {
        std::uint64_t correct = (1ull << c) - 1, hits = 0;
        for (auto m : masks) hits += (m & correct) != 0;
        std::uint64_t total = masks.size();
        auto f = metrics::pass_at_k_exact(n, c, k);
        bool exact = static_cast<unsigned __int128>(f.num) * total == static_cast<unsigned __int128>(hits) * f.den;
        bool fp = std::fabs(metrics::pass_at_k(n, c, k) - static_cast<double>(hits) / total) <= 1e-12;
        o.require(exact && fp, "enumeration mismatch at n=" + std::to_string(n) + " c=" + std::to_string(c) +
                                   " k=" + std::to_string(k));
        ++triples;
      }
    }
  }
  if (o.pass) o.detail = std::to_string(triples) + " (n, c, k) triples match subset enumeration";
  return o;
}

Outcome token_savings_value() {
  Outcome o;
  double v = metrics::token_savings(2089, 1442);
  o.require(std::fabs(v - 30.97) <= 0.005, "token_savings = " + std::to_string(v));
  o.require(metrics::format_fixed(v, 2) == "30.97", "rendering " + metrics::format_fixed(v, 2));
  if (o.pass) o.detail = "token_savings(2089, 1442) = " + metrics::format_fixed(v, 2);
  return o;
}

// ---- library weight policy --------------------------------------------------------

library::Embedding unit(std::mt19937_64& rng, std::size_t dim = 64) {
  std::normal_distribution<double> nd;
  library::Embedding v(dim);
  double s = 0;
  for (auto& x : v) s += (x = nd(rng)) * x;
  s = std::sqrt(s);
  for (auto& x : v) x /= s;
  return v;
}

std::string src(int i) { return "module blk" + std::to_string(i) + " (input a, output y);\n  assign y = ~a;\nendmodule\n"; }

Outcome weight_policy_suite() {
  Outcome o;
  std::mt19937_64 rng(2024);
  int cases = 0;

  // closed form while the second chance cannot fire
  for (int t = 0; t < 10000 && o.pass; ++t) {
    library::CodeLibrary lib;
    auto id = lib.insert(make_block("blk", src(t), true), unit(rng)).id;
    int a = 0, b = 0;
    int len = 1 + static_cast<int>(rng() % 40);
    for (int step = 0; step < len; ++step) {
      bool ok = rng() & 1;
      double before = 0.5 * std::pow(1.06, a) * std::pow(0.9, b);
      if (!ok && before < 0.3) ok = true;
      lib.record_outcome({id}, ok);
      (ok ? a : b) += 1;
      double want = 0.5 * std::pow(1.06, a) * std::pow(0.9, b);
      o.require(std::fabs(lib.get(id)->weight - want) <= 1e-9, "closed form differs in sequence " + std::to_string(t));
    }
    ++cases;
  }

  // reference model: second chance at most once, only on failure below 0.3;
  // marking when the weight drops below 0.2
  for (int t = 0; t < 2000 && o.pass; ++t) {
    library::CodeLibrary lib;
    auto id = lib.insert(make_block("blk", src(t), true), unit(rng)).id;
    double w = 0.5;
    bool chance = true, marked = false;
    int fired = 0;
    int len = 5 + static_cast<int>(rng() % 60);
    double p_fail = 0.45 + 0.5 * std::uniform_real_distribution<double>()(rng);
    for (int step = 0; step < len && o.pass; ++step) {
      bool ok = std::uniform_real_distribution<double>()(rng) >= p_fail;
      bool fire = !ok && w < 0.3 && chance;
      if (ok) w *= 1.06;
      else if (fire) w = 0.5, chance = false, ++fired;
      else w *= 0.9;
      marked = w < 0.2;
      lib.record_outcome({id}, ok);
      auto e = lib.get(id);
      o.require(e.has_value(), "entry vanished");
      if (!e) break;
      o.require(std::fabs(e->weight - w) <= 1e-9, "weight differs from the reference model");
      o.require(e->second_chance == chance, "second_chance flag differs");
      o.require(e->gc_marked == marked, "gc_marked differs at w=" + std::to_string(w));
    }
    o.require(fired <= 1, "second chance fired twice");
    ++cases;
  }

  // removal puts the hash on the avoidance list for good, including cosmetic
  // variants and across a reload
  TempDir dir;
  for (int t = 0; t < 200 && o.pass; ++t) {
    auto path = (dir.path / ("lib" + std::to_string(t) + ".jsonl")).string();
    {
      auto lib = library::CodeLibrary::open(path);
      auto id = lib.insert(make_block("blk", src(t), true), unit(rng)).id;
      lib.set_state(id, 0.1 + 0.09 * std::uniform_real_distribution<double>()(rng), false);
      o.require(lib.get(id)->gc_marked, "weight below 0.2 not marked");
      auto rep = lib.run_gc([](const library::LibraryEntry&, const library::LibraryEntry*) { return library::Refinement{}; });
      o.require(rep.removed == std::vector<std::uint64_t>{id}, "gc did not remove the marked entry");
      o.require(lib.insert(make_block("blk", src(t), true), unit(rng)).status == library::InsertStatus::Avoided,
                "re-insertion not blocked");
    }
    auto reopened = library::CodeLibrary::open(path);
    std::string cosmetic = "// regenerated\n" + src(t) + "\n\n";
    o.require(reopened.insert(make_block("blk", cosmetic, true), unit(rng)).status == library::InsertStatus::Avoided,
              "avoidance lost after reload");
    ++cases;
  }
  if (o.pass) o.detail = std::to_string(cases) + " generated cases";
  return o;
}

Outcome retrieval_oracle() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> wd(0.2, 1.5);
  int hits = 0, misses = 0, queries = 0;
  for (int t = 0; t < 500 && o.pass; ++t) {
    library::CodeLibrary lib;
    int n = 1 + static_cast<int>(rng() % 200);
    std::vector<std::tuple<std::uint64_t, library::Embedding, double>> truth;
    library::Embedding shared = unit(rng);
    for (int i = 0; i < n; ++i) {
      // a few exact duplicates of one direction exercise the smallest-id tie-break
      auto emb = (i % 17 == 3) ? shared : unit(rng);
      double w = (i % 17 == 3) ? 1.0 : wd(rng);
      auto id = lib.insert(make_block("m" + std::to_string(i), src(t * 1000 + i), true), emb).id;
      lib.set_state(id, w, true);
      truth.emplace_back(id, lib.get(id)->embedding, w);
    }
    for (int q = 0; q < 4; ++q) {
      library::Embedding query;
      if (q == 0 && n > 3) {
        query = shared;
      } else if (q % 2 == 1) {
        query = std::get<1>(truth[rng() % truth.size()]);
        auto noise = unit(rng);
        for (std::size_t d = 0; d < query.size(); ++d) query[d] += 0.3 * noise[d];
        double s = 0;
        for (double x : query) s += x * x;
        for (auto& x : query) x /= std::sqrt(s);
      } else {
        query = unit(rng);
      }
      std::uint64_t best_id = 0;
      long double best = -1e9L;
      for (const auto& [id, emb, w] : truth) {
        long double dot = 0;
        for (std::size_t d = 0; d < emb.size(); ++d) dot += static_cast<long double>(emb[d]) * query[d];
        long double score = dot * w;
        if (score > best) best = score, best_id = id;
      }
      auto hit = lib.retrieve(query, "query");
      ++queries;
      if (best < 0.45L) {
        o.require(!hit.has_value(), "hit below threshold in library " + std::to_string(t));
        ++misses;
      } else {
        o.require(hit.has_value() && hit->entry.block.id == best_id,
                  "winner differs from exhaustive argmax in library " + std::to_string(t));
        ++hits;
      }
    }
  }
  o.require(hits > 0 && misses > 0, "query mix did not cover both hits and misses");
  if (o.pass)
    o.detail = "500 libraries, " + std::to_string(queries) + " queries (" + std::to_string(hits) + " hits, " +
               std::to_string(misses) + " misses)";
  return o;
}

// ---- parser ----------------------------------------------------------------------

Outcome edit_sentence_fidelity() {
  Outcome o;
  auto pc = parse::parse_command("Add an instance MUX_1 of module mux_4 within GPE_4");
  const auto* add = std::get_if<parse::AddInstance>(&pc.command);
  o.require(add != nullptr, "not an AddInstance command");
  if (!add) return o;
  o.require(add->module == "mux_4" && add->instance == "MUX_1" && add->parent == "GPE_4", "wrong command fields");

  auto tpl = dse::load_template_named(kData + "/templates", "cgra");
  auto cfg = dse::config_from_json(
      json{{"template", "cgra"},
           {"assignment", {{"rows", 2}, {"cols", 2}, {"alu_ops", {"PASS", "ADD", "SUB", "MUL"}}, {"pipelining", false}}}},
      tpl);
  auto prompt = dse::enhance_prompt(cfg, tpl);
  parse::SketchSet sketches;
  for (const auto& m : parse::dedup_modules(prompt)) sketches.emplace(m.name, parse::make_sketch(m));
  o.require(sketches.contains("GPE_4"), "expanded CGRA has no GPE_4");
  if (!o.pass) return o;
  auto r = parse::apply_edit(sketches, parse::build_task_list(prompt), pc.command);
  auto text = parse::render_sketch(r.sketches.at("GPE_4"));
  o.require(text.find("\n  mux_4 MUX_1 (.port(port));\n") != std::string::npos, "instance line missing:\n" + text);
  if (o.pass) o.detail = "AddInstance{mux_4, MUX_1, GPE_4}; GPE_4 sketch has `mux_4 MUX_1 (.port(port));`";
  return o;
}

// ---- scheduling ------------------------------------------------------------------

HierarchicalPrompt random_hierarchy(std::mt19937& rng, int n) {
  HierarchicalPrompt p;
  p.design = "dag";
  p.top = "m0";
  std::vector<std::vector<int>> kids(n);
  for (int j = 1; j < n; ++j) {
    kids[std::uniform_int_distribution<int>(0, j - 1)(rng)].push_back(j);
    for (int i = 0; i < j; ++i)
      if (std::uniform_int_distribution<int>(0, 4)(rng) == 0 &&
          std::find(kids[i].begin(), kids[i].end(), j) == kids[i].end())
        kids[i].push_back(j);
  }
  for (int i = 0; i < n; ++i) {
    PromptModule m;
    m.name = "m" + std::to_string(i);
    m.description = "block " + std::to_string(i);
    m.ports = {{"a", Direction::Input, 4}, {"y", Direction::Output, 4}};
    for (std::size_t k = 0; k < kids[i].size(); ++k)
      m.instances.push_back({"m" + std::to_string(kids[i][k]), "u" + std::to_string(k), {}});
    p.modules.push_back(std::move(m));
  }
  return p;
}

Outcome dependency_order() {
  Outcome o;
  std::mt19937 rng(4242);
  int edges = 0;
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    auto llm = std::make_shared<llm::MockBackend>();
    llm->set_handler(testsupport::stub_reply);
    if (trial % 4 == 0) llm->set_latency(std::chrono::milliseconds(1));
    OrchestratorOptions opts;
    opts.config.worker_count = 1 + trial % 8;
    Orchestrator orch(opts, llm, std::make_shared<library::CodeLibrary>(), std::make_shared<library::HashEmbedder>());
    auto p = random_hierarchy(rng, 1 + static_cast<int>(rng() % 15));
    SessionRequest req;
    req.prompt = p;
    auto s = orch.run(req);
    o.require(s.status == SessionStatus::Succeeded, "trial " + std::to_string(trial) + " failed: " + s.error);
    if (!o.pass) break;
    for (const auto& [m, dep] : s.tasks.dependency_edges) {
      o.require(s.modules.at(dep).finished_tick < s.modules.at(m).started_tick,
                m + " started before " + dep + " finished (trial " + std::to_string(trial) + ")");
      ++edges;
    }
    auto parsed = verilog::parse(s.blocks.at("m0").source);
    const auto* top = parsed.find("m0");
    o.require(top != nullptr, "top block does not define m0");
    if (!top) break;
    for (const auto& i : p.modules[0].instances)
      o.require(std::any_of(top->instances.begin(), top->instances.end(),
                            [&](const auto& x) { return x.module == i.module_name && x.name == i.instance_name; }),
                "assembly misses " + i.instance_name + " of " + i.module_name);
  }
  if (o.pass) o.detail = "200 hierarchies, " + std::to_string(edges) + " dependency edges respected";
  return o;
}

// ---- hermetic end to end ---------------------------------------------------------

struct Mux64Run {
  GenerationSession session;
  std::map<std::string, std::string> artifacts;
};

Mux64Run run_mux64(const TempDir& dir, const std::string& tag, std::optional<SimulatorConfig> sim) {
  const fs::path fx = kData + "/fixtures/mux64";
  auto root = dir.path / tag;
  fs::create_directories(root);
  for (const char* f : {"library.jsonl", "library.jsonl.avoid"})
    if (fs::exists(fx / f)) fs::copy_file(fx / f, root / f);
  OrchestratorOptions opts;
  opts.config.deterministic_mode = true;
  opts.sessions_dir = (root / "sessions").string();
  opts.simulator = std::move(sim);
  auto lib = std::make_shared<library::CodeLibrary>(library::CodeLibrary::open((root / "library.jsonl").string()));
  Orchestrator orch(opts, std::make_shared<llm::ReplayBackend>((fx / "fx.jsonl").string()), lib,
                    std::make_shared<library::HashEmbedder>());
  SessionRequest req;
  req.description = slurp(fx / "description.txt");
  Mux64Run run{orch.run(req), {}};
  auto sdir = root / "sessions" / run.session.id;
  if (fs::exists(sdir))
    for (const auto& f : fs::recursive_directory_iterator(sdir))
      if (f.is_regular_file()) run.artifacts[fs::relative(f.path(), sdir).string()] = slurp(f.path());
  return run;
}

Outcome hermetic_mux64() {
  Outcome o;
  TempDir dir;
  auto sim = detect_simulator();
  auto a = run_mux64(dir, "a", sim);
  auto b = run_mux64(dir, "b", sim);
  o.require(a.session.status == SessionStatus::Succeeded, "session failed: " + a.session.error);
  if (!o.pass) return o;
  o.require(!a.artifacts.empty() && a.artifacts == b.artifacts, "artifacts differ between deterministic runs");
  for (const char* f : {"session.json", "metrics.json", "design/mux_64.v"})
    o.require(a.artifacts.contains(f), std::string("missing artifact ") + f);
  int hits = 0;
  for (const auto& [name, rec] : a.session.modules) {
    if (rec.source_kind != "library") continue;
    ++hits;
    o.require(rec.llm_calls == 0, name + " was a library hit but made LLM calls");
  }
  o.require(hits >= 1, "no task was served from the preloaded library");
  std::string label;
  for (const auto& [name, rec] : a.session.modules) {
    if (sim) {
      o.require(rec.verification.kind == VerificationResult::Kind::Functional && rec.verification.passed,
                name + " testbench did not pass: " + rec.verification.log);
    } else {
      o.require(rec.verification.kind == VerificationResult::Kind::Syntax && rec.verification.passed,
                name + " structural validation did not pass: " + rec.verification.log);
    }
  }
  label = sim ? "testbenches passed in the simulator" : "no simulator found, result is syntax-only";
  if (o.pass)
    o.detail = "succeeded, " + std::to_string(a.artifacts.size()) + " byte-identical artifacts, " +
               std::to_string(hits) + " library hit(s) with 0 calls; " + label;
  return o;
}

// ---- exploration loop ------------------------------------------------------------

std::string fenced_json(const json& j) { return "```json\n" + j.dump() + "\n```"; }

GenerationSession scripted_run(const std::function<void(llm::MockBackend&)>& script, SessionRequest req) {
  auto llm = std::make_shared<llm::MockBackend>();
  llm->set_handler(testsupport::stub_reply);
  script(*llm);
  OrchestratorOptions opts;
  opts.config.deterministic_mode = true;
  Orchestrator orch(opts, llm, std::make_shared<library::CodeLibrary>(), std::make_shared<library::HashEmbedder>());
  return orch.run(std::move(req));
}

Outcome exploration_loop() {
  Outcome o;
  {
    auto tpl = dse::load_template_named(kData + "/templates", "cgra");
    auto dfg = dse::extract_dfg(slurp(kData + "/kernels/fft4.kdsl"));
    json no_mul = {{"template", "cgra"},
                   {"assignment", {{"rows", 2}, {"cols", 2}, {"alu_ops", {"PASS", "ADD", "SUB"}}, {"pipelining", false}}}};
    auto conflicts = dse::evaluate_config(dse::config_from_json(no_mul, tpl), tpl, dfg);
    o.require(std::any_of(conflicts.begin(), conflicts.end(), [](const auto& c) { return c.rule == "alu_op_coverage"; }),
              "op set outside alu_ops not rejected by a named rule");
    json with_mul = no_mul;
    with_mul["assignment"]["alu_ops"] = {"PASS", "ADD", "SUB", "MUL"};

    SessionRequest req;
    req.mode = SessionMode::Template;
    req.template_name = "cgra";
    req.kernel_name = "fft4";
    req.kernel_source = slurp(kData + "/kernels/fft4.kdsl");
    auto s = scripted_run([&](llm::MockBackend& m) { m.on("dse", "cgra", {fenced_json(no_mul), fenced_json(with_mul)}); },
                          req);
    o.require(s.status == SessionStatus::Succeeded, "CGRA session failed: " + s.error);
    o.require(s.rounds.size() == 2 && s.rounds[0].feedback.rfind("alu_op_coverage:", 0) == 0,
              "first round did not record the named conflict");
    o.require(s.blocks.contains("GPE_4") && s.blocks.contains("cgra_top"), "generation did not produce the array");
  }
  std::optional<PpaEstimate> flat, piped;
  for (bool pipelined : {false, true}) {
    const auto dir = kData + "/fixtures/systolic2x2/";
    SessionRequest req;
    req.mode = SessionMode::Template;
    req.template_name = "systolic_array";
    req.kernel_source = slurp(kData + "/kernels/gemm2x2.kdsl");
    auto s = scripted_run(
        [&](llm::MockBackend& m) {
          m.on("dse", "systolic_array", {slurp(dir + (pipelined ? "config_pipelined.json" : "config_unpipelined.json"))});
          for (const char* mod : {"row_buffer", "col_buffer", "pe", "pipe_reg"})
            m.on("module", mod, {testsupport::fence(slurp(dir + mod + ".v"))});
        },
        req);
    o.require(s.status == SessionStatus::Succeeded && s.ppa.has_value(), "systolic session failed: " + s.error);
    (pipelined ? piped : flat) = s.ppa;
  }
  if (flat && piped) {
    o.require(piped->clock_ns < flat->clock_ns, "pipelined proxy clock is not lower");
    o.require(flat->method == "proxy" && piped->method == "proxy", "estimate not labeled proxy");
  }
  if (o.pass)
    o.detail = "CGRA conflict alu_op_coverage then success; proxy clock " + metrics::format_fixed(piped->clock_ns, 2) +
               " ns pipelined < " + metrics::format_fixed(flat->clock_ns, 2) + " ns unpipelined";
  return o;
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"pass@k reproduction", 1, pass_at_k_reproduction},
      {"token savings", 1, token_savings_value},
      {"library weight policy suite", 10, weight_policy_suite},
      {"retrieval argmax oracle", 30, retrieval_oracle},
      {"edit sentence parser fidelity", 5, edit_sentence_fidelity},
      {"dependency order", 120, dependency_order},
      {"hermetic mux64 end to end", 60, hermetic_mux64},
      {"exploration loop", 30, exploration_loop},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (o.pass && secs >= c.budget_s) {
      o.pass = false;
      o.detail = "took " + metrics::format_fixed(secs, 2) + " s, budget " + metrics::format_fixed(c.budget_s, 0) + " s";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " (" << metrics::format_fixed(secs, 2) << " s): " << o.detail
              << "\n";
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}

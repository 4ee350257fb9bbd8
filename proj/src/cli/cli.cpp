#include "hivegen/cli/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hivegen/core/error.hpp"
#include "hivegen/core/verilog.hpp"
#include "hivegen/dse/dfg.hpp"
#include "hivegen/dse/explorer.hpp"
#include "hivegen/dse/template.hpp"
#include "hivegen/metrics/metrics.hpp"
#include "hivegen/orchestrator/orchestrator.hpp"
#include "hivegen/service/service.hpp"

namespace hivegen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BackendOptions {
  std::string backend = "replay";
  std::string fixtures;
  std::string script;
};

struct RunOptions {
  BackendOptions be;
  std::string config_file;
  std::string library;
  std::string sessions = "sessions";
  std::string simulator;
  bool no_simulator = false;
  GenerationConfig gen;
};

void add_backend_options(CLI::App* app, BackendOptions& o) {
  app->add_option("--backend", o.backend, "LLM backend")->check(CLI::IsMember({"replay", "mock", "remote"}));
  app->add_option("--fixtures", o.fixtures, "Replay fixture file (JSON lines)");
  app->add_option("--script", o.script, "Mock backend script (JSON rules)");
}

void add_run_options(CLI::App* app, RunOptions& o) {
  add_backend_options(app, o.be);
  app->add_option("--config", o.config_file, "key = value configuration file");
  app->add_option("--library", o.library, "Library file (JSON lines); in-memory when omitted");
  app->add_option("--sessions", o.sessions, "Directory for session artifacts");
  app->add_option("--simulator", o.simulator, "Simulator command with {out} {files} {top} {dir} placeholders");
  app->add_flag("--no-simulator", o.no_simulator, "Structural verification only");
  app->add_option("--worker-count,--workers", o.gen.worker_count, "Parallel module workers");
  app->add_option("--max-retries", o.gen.max_retries, "Attempts per module (k)");
  app->add_option("--round-budget", o.gen.round_budget, "Exploration rounds");
  app->add_option("--retrieval-threshold", o.gen.retrieval_threshold, "Minimum cos*w for a library hit");
  app->add_option("--second-chance-trigger", o.gen.second_chance_trigger, "Sibling retrievals before forced use (m)");
  app->add_option("--garbage-mark", o.gen.garbage_mark, "Retrievals before a poor entry is marked (j)");
  app->add_option("--model", o.gen.llm_params.model_id, "Model identifier");
  app->add_option("--temperature", o.gen.llm_params.temperature, "Sampling temperature");
  app->add_flag("--deterministic,!--no-deterministic", o.gen.deterministic_mode, "Single worker, stable ids, zero wall time");
}

// Values from the configuration file fill options not given on the command line.
void apply_config_file(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read configuration file " + path);
  CLI::ConfigTOML parser;
  for (const auto& item : parser.from_config(in)) {
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    auto* opt = app->get_option_no_throw("--" + key);
    if (!opt) throw UsageError("unknown configuration key " + item.name);
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

std::shared_ptr<llm::MockBackend> load_script(const std::string& path) {
  auto mock = std::make_shared<llm::MockBackend>();
  json doc = json::parse(slurp(path));
  auto base = fs::path(path).parent_path();
  for (const auto& rule : doc.at("rules")) {
    std::vector<std::string> replies;
    auto push_file = [&](const std::string& file) {
      auto text = slurp((base / file).string());
      auto ext = fs::path(file).extension().string();
      if (ext == ".v") text = "```verilog\n" + text + "```";
      else if (ext == ".json") text = "```json\n" + text + "```";
      replies.push_back(text);
    };
    if (rule.contains("reply")) replies.push_back(rule["reply"].get<std::string>());
    if (rule.contains("reply_file")) push_file(rule["reply_file"].get<std::string>());
    for (const auto& f : rule.value("reply_files", json::array())) push_file(f.get<std::string>());
    if (replies.empty()) throw Error(ErrorCode::InvalidArgument, "script rule without a reply: " + rule.dump());
    mock->on(rule.at("purpose").get<std::string>(), rule.value("subject", std::string()), std::move(replies));
  }
  return mock;
}

std::shared_ptr<llm::LlmBackend> make_backend(const BackendOptions& o) {
  if (o.backend == "replay") {
    if (o.fixtures.empty()) throw UsageError("--backend replay needs --fixtures");
    return std::make_shared<llm::ReplayBackend>(o.fixtures);
  }
  if (o.backend == "mock") {
    if (o.script.empty()) throw UsageError("--backend mock needs --script");
    return load_script(o.script);
  }
  return std::make_shared<llm::RemoteBackend>(llm::RemoteOptions::from_env());
}

std::shared_ptr<library::CodeLibrary> open_library(const std::string& path, const GenerationConfig& gen) {
  auto policy = library::LibraryPolicy::from(gen);
  if (path.empty()) return std::make_shared<library::CodeLibrary>(policy);
  return std::make_shared<library::CodeLibrary>(library::CodeLibrary::open(path, policy));
}

OrchestratorOptions orchestrator_options(const RunOptions& o) {
  OrchestratorOptions opts;
  opts.config = o.gen;
  opts.sessions_dir = o.sessions;
  if (!o.simulator.empty()) opts.simulator = SimulatorConfig{o.simulator};
  else if (!o.no_simulator) opts.simulator = detect_simulator();
  return opts;
}

struct GenerateInputs {
  std::string prompt;
  std::string kernel;
  std::string template_name;
  std::string objective = "clock";
  std::string strategy;
  std::string icl = "none";
  std::string id;
  bool no_interact = false;
};

void add_generate_inputs(CLI::App* app, GenerateInputs& g) {
  app->add_option("--prompt", g.prompt, "Prompt file: hierarchical prompt JSON, request JSON or a plain description");
  app->add_option("--kernel", g.kernel, "Kernel source file (template mode)");
  app->add_option("--template", g.template_name, "Template name (template mode)");
  app->add_option("--objective", g.objective, "Exploration objective");
  app->add_option("--strategy", g.strategy, "Strategy hint for configuration proposals");
  app->add_option("--icl", g.icl, "In-context example mode")->check(CLI::IsMember({"none", "one-shot", "one_shot"}));
  app->add_option("--id", g.id, "Session id");
  app->add_flag("--no-interact", g.no_interact, "Skip the edit window");
}

SessionRequest build_request(const GenerateInputs& g) {
  json j = json::object();
  if (!g.prompt.empty() && (!g.kernel.empty() || !g.template_name.empty()))
    throw UsageError("--prompt cannot be combined with --kernel/--template");
  if (!g.kernel.empty() || !g.template_name.empty()) {
    if (g.kernel.empty() || g.template_name.empty()) throw UsageError("template mode needs --kernel and --template");
    j["kernel"] = slurp(g.kernel);
    j["kernel_name"] = fs::path(g.kernel).stem().string();
    j["template"] = g.template_name;
  } else if (!g.prompt.empty()) {
    auto text = slurp(g.prompt);
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_object() && parsed.contains("modules")) j["prompt"] = parsed;
    else if (parsed.is_object()) j = parsed;
    else j["description"] = text;
  } else {
    throw UsageError("generate needs --prompt or --kernel with --template");
  }
  if (!j.contains("objective")) j["objective"] = g.objective;
  if (!g.strategy.empty()) j["strategy"] = g.strategy;
  if (!j.contains("icl")) j["icl"] = g.icl == "none" ? "none" : "one_shot";
  if (!g.id.empty()) j["id"] = g.id;
  auto req = session_request_from_json(j);
  req.interactive = !g.no_interact;
  return req;
}

// Runs one session; in interactive mode edit sentences are read from `in`
// until "approve" or end of input.
GenerationSession drive(Orchestrator& orch, const SessionRequest& req, std::istream& in, std::ostream& out) {
  auto session = orch.start(req);
  if (req.interactive) {
    session->wait_ready();
    std::string line;
    while (session->status() == SessionStatus::AwaitingUser) {
      if (!std::getline(in, line) || line == "approve") {
        session->approve();
        break;
      }
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out << to_json(session->edit(line)).dump() << "\n";
    }
  }
  session->wait_done();
  return session->snapshot();
}

int cmd_generate(const RunOptions& ro, const GenerateInputs& g, std::istream& in, std::ostream& out,
                 std::ostream& err) {
  auto req = build_request(g);
  auto backend = make_backend(ro.be);
  Orchestrator orch(orchestrator_options(ro), backend, open_library(ro.library, ro.gen),
                    std::make_shared<library::HashEmbedder>());
  auto s = drive(orch, req, in, out);
  out << api_view(s).dump(2) << "\n";
  if (s.status != SessionStatus::Succeeded) {
    err << "session " << s.id << " failed in " << s.failed_stage << ": " << s.error << "\n";
    return 1;
  }
  if (!ro.sessions.empty()) err << "artifacts: " << (fs::path(ro.sessions) / s.id).string() << "\n";
  return 0;
}

int cmd_record(RunOptions ro, const GenerateInputs& g, const std::string& out_path, std::istream& in,
               std::ostream& out, std::ostream& err) {
  if (ro.be.backend == "replay") ro.be.backend = "mock";
  auto req = build_request(g);
  auto recorder = std::make_shared<llm::RecordingBackend>(make_backend(ro.be));
  GenerationSession s;
  {
    Orchestrator orch(orchestrator_options(ro), recorder, open_library(ro.library, ro.gen),
                      std::make_shared<library::HashEmbedder>());
    s = drive(orch, req, in, out);
  }
  recorder->write(out_path);
  err << "recorded " << recorder->transcript().size() << " call(s) to " << out_path << "\n";
  if (s.status != SessionStatus::Succeeded) {
    err << "session " << s.id << " failed in " << s.failed_stage << ": " << s.error << "\n";
    return 1;
  }
  return 0;
}

int cmd_dse(const RunOptions& ro, const GenerateInputs& g, std::ostream& out, std::ostream& err) {
  if (g.kernel.empty() || g.template_name.empty()) throw UsageError("dse needs --kernel and --template");
  auto tpl = dse::load_template_named(std::string(HIVEGEN_DATA_DIR) + "/templates", g.template_name);
  auto dfg = dse::extract_dfg(slurp(g.kernel));
  dse::ExplorerState state;
  auto obj = dse::parse_objective(g.objective);
  if (!obj) throw UsageError("unknown objective " + g.objective);
  state.objective = *obj;
  if (!g.strategy.empty()) state.strategy_hint = g.strategy;
  state.icl_mode = g.icl == "none" ? dse::IclMode::None : dse::IclMode::OneShot;
  if (state.icl_mode == dse::IclMode::OneShot)
    state.icl_example = dse::load_icl_example(std::string(HIVEGEN_DATA_DIR) + "/icl", g.template_name);
  auto backend = make_backend(ro.be);
  json rounds = json::array();
  for (int r = 0; r < std::max(1, ro.gen.round_budget); ++r) {
    dse::RoundRecord rec;
    try {
      auto p = dse::propose_config(tpl, dfg, state, *backend, ro.gen.llm_params, ro.gen.max_retries);
      rec.config = dse::to_json(p.config, tpl);
      if (p.conflicts.empty()) {
        rounds.push_back(dse::to_json(rec));
        out << json{{"template", g.template_name},
                    {"config", rec.config},
                    {"description", dse::describe(p.config, tpl)},
                    {"rounds", rounds}}
                   .dump(2)
            << "\n";
        return 0;
      }
      std::string fb;
      for (const auto& c : p.conflicts) fb += (fb.empty() ? "" : "; ") + c.rule + ": " + c.message;
      rec.feedback = fb;
    } catch (const dse::ProposalFailed& e) {
      rec.feedback = std::string("proposal failed: ") + e.what();
    }
    rounds.push_back(dse::to_json(rec));
    state.history.push_back(rec);
  }
  out << json{{"template", g.template_name}, {"config", nullptr}, {"rounds", rounds}}.dump(2) << "\n";
  err << "no conflict-free configuration within " << ro.gen.round_budget << " round(s)\n";
  return 1;
}

int cmd_library_ls(const std::string& path, std::ostream& out) {
  auto lib = library::CodeLibrary::open(path);
  out << std::left << std::setw(6) << "id" << std::setw(20) << "module" << std::setw(10) << "weight" << std::setw(10)
      << "verified" << std::setw(8) << "marked" << "retrievals\n";
  for (const auto& e : lib.entries()) {
    out << std::left << std::setw(6) << e.block.id << std::setw(20) << e.block.module_name << std::setw(10)
        << metrics::format_fixed(e.weight, 4) << std::setw(10) << (e.block.verified ? "yes" : "no") << std::setw(8)
        << (e.gc_marked ? "yes" : "no") << e.retrieval_count << "\n";
  }
  return 0;
}

int cmd_library_gc(const std::string& path, const BackendOptions& be, std::ostream& out) {
  auto lib = library::CodeLibrary::open(path);
  std::shared_ptr<llm::LlmBackend> backend;
  if (be.fixtures.empty() && be.script.empty() && be.backend != "remote") backend = std::make_shared<llm::MockBackend>();
  else backend = make_backend(be);
  auto report = lib.run_gc(make_refiner(*backend));
  out << json{{"refined", report.refined}, {"removed", report.removed}, {"deferred", report.deferred}}.dump() << "\n";
  return 0;
}

int cmd_library_verify(const std::string& path, std::ostream& out, std::ostream& err) {
  auto lib = library::CodeLibrary::open(path);
  auto problems = lib.integrity_problems();
  for (const auto& p : problems) err << p << "\n";
  if (!problems.empty()) return 1;
  out << "ok: " << lib.size() << " entr" << (lib.size() == 1 ? "y" : "ies") << "\n";
  return 0;
}

struct AddInputs {
  std::string source;
  std::string testbench;
  std::string description;
  std::string module;
  std::string simulator;
};

int cmd_library_add(const std::string& path, const AddInputs& a, std::ostream& out, std::ostream& err) {
  auto source = slurp(a.source);
  auto parsed = verilog::parse(source);
  if (!parsed.ok()) throw Error(ErrorCode::Syntax, "cannot parse " + a.source + ": " + parsed.error_text());
  const verilog::Module* m = a.module.empty() ? (parsed.modules.empty() ? nullptr : &parsed.modules.front())
                                              : parsed.find(a.module);
  if (!m) throw Error(ErrorCode::NotFound, "module " + (a.module.empty() ? std::string("(any)") : a.module) +
                                               " not found in " + a.source);
  auto spec = m->to_spec();
  std::optional<std::string> tb;
  if (!a.testbench.empty()) tb = slurp(a.testbench);
  std::optional<SimulatorConfig> sim;
  if (!a.simulator.empty()) sim = SimulatorConfig{a.simulator};
  auto check = verify_block(source, spec, {}, sim, tb);
  if (!check.passed) {
    err << "verification failed: " << check.log << "\n";
    return 1;
  }
  auto lib = library::CodeLibrary::open(path);
  library::HashEmbedder emb(lib.dimension());
  auto r = lib.insert(make_block(spec.name, source, true), emb.embed(retrieval_text(a.description, spec)), tb);
  out << json{{"status", std::string(library::to_string(r.status))}, {"id", r.id}}.dump() << "\n";
  return r.accepted() || r.status == library::InsertStatus::Duplicate ? 0 : 1;
}

int cmd_remote(const std::string& server, const std::string& path, const json& body, bool need_accept,
               std::ostream& out, std::ostream& err) {
  httplib::Client cli(server);
  cli.set_read_timeout(60, 0);
  auto res = cli.Post(path.c_str(), body.dump(), "application/json");
  if (!res) {
    err << "cannot reach " << server << ": " << httplib::to_string(res.error()) << "\n";
    return 1;
  }
  out << res->body << "\n";
  if (res->status < 200 || res->status >= 300) return 1;
  if (need_accept) {
    auto j = json::parse(res->body, nullptr, false);
    if (!j.is_object() || !j.value("accepted", false)) return 1;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical hardware generation with a reusable code library", "hivegen"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hivegen 0.1.0");

  RunOptions ro;
  GenerateInputs gi;

  auto* generate = app.add_subcommand("generate", "Run a generation session");
  add_run_options(generate, ro);
  add_generate_inputs(generate, gi);

  auto* dse_cmd = app.add_subcommand("dse", "Run configuration exploration only");
  add_run_options(dse_cmd, ro);
  add_generate_inputs(dse_cmd, gi);

  std::string lib_path;
  BackendOptions gc_backend;
  AddInputs add;
  auto* lib_cmd = app.add_subcommand("library", "Inspect and maintain a code library");
  lib_cmd->require_subcommand(1);
  auto* lib_ls = lib_cmd->add_subcommand("ls", "List entries");
  lib_ls->add_option("--library", lib_path, "Library file")->required();
  auto* lib_gc = lib_cmd->add_subcommand("gc", "Refine or remove marked entries");
  lib_gc->add_option("--library", lib_path, "Library file")->required();
  add_backend_options(lib_gc, gc_backend);
  auto* lib_verify = lib_cmd->add_subcommand("verify", "Check stored hashes and flags");
  lib_verify->add_option("--library", lib_path, "Library file")->required();
  auto* lib_add = lib_cmd->add_subcommand("add", "Insert a verified module");
  lib_add->add_option("--library", lib_path, "Library file")->required();
  lib_add->add_option("--source", add.source, "Verilog source")->required();
  lib_add->add_option("--description", add.description, "Module description used for retrieval")->required();
  lib_add->add_option("--testbench", add.testbench, "Testbench stored with the entry");
  lib_add->add_option("--module", add.module, "Module to insert (default: first in the source)");
  lib_add->add_option("--simulator", add.simulator, "Simulator command for the testbench");

  int n = 0, c = 0, k = 1;
  double baseline = 0, ours = 0;
  std::vector<std::string> metric_files;
  auto* met = app.add_subcommand("metrics", "Evaluation metrics");
  met->require_subcommand(1);
  auto* pak = met->add_subcommand("pass-at-k", "Unbiased pass@k estimate");
  pak->add_option("--n", n, "Attempts")->required()->check(CLI::NonNegativeNumber);
  pak->add_option("--c", c, "Correct attempts")->required()->check(CLI::NonNegativeNumber);
  pak->add_option("--k", k, "Sample size")->required()->check(CLI::PositiveNumber);
  auto* sav = met->add_subcommand("savings", "Token savings percentage");
  sav->add_option("--baseline", baseline, "Baseline tokens")->required();
  sav->add_option("--ours", ours, "Tokens with the library")->required();
  auto* agg = met->add_subcommand("aggregate", "Mean and median time over metrics.json files");
  agg->add_option("files", metric_files, "metrics.json files")->required()->check(CLI::ExistingFile);

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP and event-stream API");
  add_run_options(serve, ro);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));

  std::string record_out;
  auto* replay = app.add_subcommand("replay", "Record fixture files");
  replay->require_subcommand(1);
  auto* record = replay->add_subcommand("record", "Run a session against a scripted or remote backend and record it");
  add_run_options(record, ro);
  add_generate_inputs(record, gi);
  record->add_option("--out", record_out, "Fixture file to write")->required();

  std::string session_id, server = "http://127.0.0.1:8080", sentence;
  auto* edit = app.add_subcommand("edit", "Send an edit sentence to a running service");
  edit->add_option("--session", session_id, "Session id")->required();
  edit->add_option("--server", server, "Service URL");
  edit->add_option("sentence", sentence, "Edit sentence")->required();
  auto* approve = app.add_subcommand("approve", "Approve the sketch of a session awaiting input");
  approve->add_option("--session", session_id, "Session id")->required();
  approve->add_option("--server", server, "Service URL");

  try {
    app.parse(argc, argv);
    for (auto* sub : {generate, dse_cmd, serve, record})
      if (sub->parsed()) apply_config_file(sub, ro.config_file);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    auto* failing = &app;
    for (auto* sub = &app; sub;) {
      auto subs = sub->get_subcommands();
      sub = subs.empty() ? nullptr : subs.front();
      if (sub) failing = sub;
    }
    err << failing->help();
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(ro, gi, in, out, err);
    if (dse_cmd->parsed()) return cmd_dse(ro, gi, out, err);
    if (record->parsed()) return cmd_record(ro, gi, record_out, in, out, err);
    if (lib_ls->parsed()) return cmd_library_ls(lib_path, out);
    if (lib_gc->parsed()) return cmd_library_gc(lib_path, gc_backend, out);
    if (lib_verify->parsed()) return cmd_library_verify(lib_path, out, err);
    if (lib_add->parsed()) return cmd_library_add(lib_path, add, out, err);
    if (pak->parsed()) {
      if (c > n) throw UsageError("--c cannot exceed --n");
      out << metrics::format_fixed(metrics::pass_at_k(n, c, k), 3) << "\n";
      return 0;
    }
    if (sav->parsed()) {
      out << metrics::format_fixed(metrics::token_savings(baseline, ours), 2) << "\n";
      return 0;
    }
    if (agg->parsed()) {
      std::vector<metrics::TrialRecord> records;
      for (const auto& f : metric_files) records.push_back(metrics::from_metrics_json(json::parse(slurp(f))));
      out << metrics::to_json(metrics::aggregate_times(records)).dump(2) << "\n";
      return 0;
    }
    if (serve->parsed()) {
      Orchestrator orch(orchestrator_options(ro), make_backend(ro.be), open_library(ro.library, ro.gen),
                        std::make_shared<library::HashEmbedder>());
      service::Service svc(orch, ro.sessions);
      err << "serving on http://" << host << ":" << port << "\n";
      svc.listen(host, port);
      return 0;
    }
    if (edit->parsed())
      return cmd_remote(server, "/sessions/" + session_id + "/edits", json{{"sentence", sentence}}, true, out, err);
    if (approve->parsed())
      return cmd_remote(server, "/sessions/" + session_id + "/approve", json::object(), false, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace hivegen::cli

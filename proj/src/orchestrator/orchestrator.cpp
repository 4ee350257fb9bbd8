#include "hivegen/orchestrator/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hivegen/core/error.hpp"
#include "hivegen/core/hash.hpp"
#include "hivegen/core/json_io.hpp"
#include "hivegen/core/verilog.hpp"
#include "hivegen/dse/dfg.hpp"
#include "hivegen/parse/command.hpp"

namespace hivegen {

namespace fs = std::filesystem;
using nlohmann::json;
using parse::TaskStatus;
using Clock = std::chrono::steady_clock;

const char* const kModuleSystemPrompt =
    "You are an expert RTL designer. Complete the Verilog module sketch you are given. Keep the module header "
    "and every instance line as written, replace the body placeholder with synthesizable logic, and answer "
    "with the full module in a ```verilog fenced block.";

const char* const kAssembleSystemPrompt =
    "You are an expert RTL designer. Write the top-level Verilog module of a design from its sketch and the "
    "interfaces of its submodules. Instantiate each submodule exactly as many times as the sketch lists, connect "
    "the pins, and answer with the full module in a ```verilog fenced block.";

const char* const kTestbenchSystemPrompt =
    "You are a verification engineer. Write a self-checking Verilog testbench for the module described. Print "
    "ALL TESTS PASSED when every check succeeds, then call $finish. Answer in a ```verilog fenced block.";

const char* const kRefineSystemPrompt =
    "You are an expert RTL designer. The Verilog module below keeps failing in use. Rewrite it so it is correct "
    "and synthesizable without changing its name or ports, and answer with the full module in a ```verilog fenced "
    "block.";

library::Refiner make_refiner(llm::LlmBackend& llm, LlmParams params) {
  return [&llm, params](const library::LibraryEntry& marked, const library::LibraryEntry* nearest) {
    std::string user = "Module to repair:\n```verilog\n" + marked.block.source + "\n```\n";
    if (nearest) user += "\nA related module that works:\n```verilog\n" + nearest->block.source + "\n```\n";
    auto resp = llm.complete({kRefineSystemPrompt, user, params, "refine", marked.block.module_name});
    auto code = verilog::extract_code(resp.text);
    library::Refinement out;
    out.embedding = marked.embedding;
    out.testbench = marked.testbench;
    auto own = verilog::parse(marked.block.source);
    const auto* m = own.find(marked.block.module_name);
    if (!m) return out;
    auto spec = m->to_spec();
    if (check_structure(code, spec).passed) out.block = make_block(marked.block.module_name, code, true);
    return out;
  };
}

std::string retrieval_text(const std::string& description, const ModuleSpec& spec) {
  return description + "\n" + verilog::render_header(spec);
}

// ---- request JSON ---------------------------------------------------------

json to_json(const SessionRequest& r) {
  json j{{"mode", std::string(to_string(r.mode))}, {"interactive", r.interactive}};
  if (!r.id.empty()) j["id"] = r.id;
  if (r.prompt) j["prompt"] = *r.prompt;
  if (!r.description.empty()) j["description"] = r.description;
  if (r.mode == SessionMode::Template) {
    j["kernel"] = r.kernel_source;
    j["kernel_name"] = r.kernel_name;
    j["template"] = r.template_name;
    j["objective"] = std::string(dse::to_string(r.objective));
    j["icl"] = std::string(dse::to_string(r.icl_mode));
    if (r.strategy_hint) j["strategy"] = *r.strategy_hint;
  }
  return j;
}

SessionRequest session_request_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "session request must be a JSON object");
  SessionRequest r;
  try {
    r.id = j.value("id", std::string());
    r.interactive = j.value("interactive", false);
    if (j.contains("template") || j.contains("kernel")) {
      r.mode = SessionMode::Template;
      r.template_name = j.value("template", std::string());
      r.kernel_source = j.value("kernel", std::string());
      r.kernel_name = j.value("kernel_name", std::string());
      if (r.template_name.empty() || r.kernel_source.empty())
        throw Error(ErrorCode::InvalidArgument, "template sessions need both \"kernel\" and \"template\"");
      auto obj = dse::parse_objective(j.value("objective", std::string("clock")));
      if (!obj) throw Error(ErrorCode::InvalidArgument, "unknown objective " + j.value("objective", std::string()));
      r.objective = *obj;
      auto icl = dse::parse_icl_mode(j.value("icl", std::string("none")));
      if (!icl) throw Error(ErrorCode::InvalidArgument, "unknown icl mode " + j.value("icl", std::string()));
      r.icl_mode = *icl;
      if (j.contains("strategy") && j["strategy"].is_string()) r.strategy_hint = j["strategy"].get<std::string>();
    } else {
      r.mode = SessionMode::Simple;
      if (j.contains("prompt")) r.prompt = j["prompt"].get<HierarchicalPrompt>();
      r.description = j.value("description", std::string());
      if (!r.prompt && r.description.empty())
        throw Error(ErrorCode::InvalidArgument, "simple sessions need \"prompt\" or \"description\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed session request: ") + e.what());
  }
  return r;
}

json to_json(const SessionEvent& e) { return {{"seq", e.seq}, {"type", e.type}, {"data", e.data}}; }

json to_json(const EditResponse& r) {
  json j{{"accepted", r.accepted}, {"command", r.command}, {"ls_tree", r.ls_tree}};
  if (r.accepted) {
    j["new_revision"] = *r.new_revision;
  } else {
    j["error"] = r.error;
    j["code"] = r.error_code;
  }
  return j;
}

// ---- Session ----------------------------------------------------------------

Session::Session(std::string id, GenerationSession doc) : id_(std::move(id)), doc_(std::move(doc)) {}

Session::~Session() {
  abort();
  if (worker_.joinable()) worker_.join();
}

GenerationSession Session::snapshot() const {
  std::lock_guard lock(mu_);
  return doc_;
}

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return doc_.status;
}

void Session::emit(const std::string& type, json data) {
  events_.push_back({next_seq_++, type, std::move(data)});
  while (events_.size() > kEventCapacity) events_.pop_front();
  cv_.notify_all();
}

void Session::set_status(SessionStatus s) {
  if (doc_.status == s) return;
  doc_.status = s;
  emit("status", {{"status", std::string(to_string(s))}, {"failed_stage", doc_.failed_stage}, {"error", doc_.error}});
}

void Session::set_task(const std::string& module, TaskStatus s) {
  const auto* t = doc_.tasks.find(module);
  if (!t || t->status == s) return;
  doc_.tasks.set_status(module, s);
  emit("task", {{"module", module}, {"status", std::string(parse::to_string(s))}});
}

EditResponse Session::edit(const std::string& sentence) {
  std::lock_guard lock(mu_);
  if (doc_.status != SessionStatus::AwaitingUser)
    throw Error(ErrorCode::Conflict, "session " + id_ + " is " + std::string(to_string(doc_.status)) +
                                         "; edits are accepted only while awaiting_user");
  EditResponse resp;
  parse::ParsedCommand parsed;
  try {
    parsed = parse::parse_command(sentence);
  } catch (const Error& e) {
    resp.error_code = std::string(to_string(e.code()));
    resp.error = e.what();
    return resp;
  }
  resp.ls_tree = parse::to_json(parsed.tree);
  parse::EditResult res;
  try {
    res = parse::apply_edit(doc_.sketches, doc_.tasks, parsed.command);
  } catch (const Error& e) {
    resp.error_code = std::string(to_string(e.code()));
    resp.error = e.what();
    return resp;
  }
  std::set<std::string> old_tasks;
  for (const auto& t : doc_.tasks.tasks) old_tasks.insert(t.module_name);
  doc_.sketches = std::move(res.sketches);
  doc_.tasks = std::move(res.tasks);
  if (const auto* rn = std::get_if<parse::RenameModule>(&parsed.command); rn && rn->old_name == doc_.prompt.top)
    doc_.prompt.top = rn->new_name;
  ++doc_.revision;
  auto cmd = parse::to_json(parsed.command);
  doc_.edits.push_back({sentence, cmd, doc_.revision});
  emit("edit", {{"sentence", sentence}, {"command", cmd}, {"revision", doc_.revision}});
  for (const auto& t : doc_.tasks.tasks)
    if (!old_tasks.contains(t.module_name))
      emit("task", {{"module", t.module_name}, {"status", std::string(parse::to_string(t.status))}});
  for (const auto& m : res.touched)
    if (auto it = doc_.sketches.find(m); it != doc_.sketches.end())
      emit("revision", {{"module", m}, {"sketch_revision", it->second.revision}, {"revision", doc_.revision}});
  resp.accepted = true;
  resp.command = cmd;
  resp.new_revision = doc_.revision;
  return resp;
}

void Session::approve() {
  std::lock_guard lock(mu_);
  if (doc_.status != SessionStatus::AwaitingUser)
    throw Error(ErrorCode::Conflict, "session " + id_ + " is " + std::string(to_string(doc_.status)) +
                                         ", not awaiting_user");
  approved_ = true;
  cv_.notify_all();
}

void Session::abort() {
  std::lock_guard lock(mu_);
  aborted_ = true;
  cv_.notify_all();
}

std::vector<SessionEvent> Session::events_since(std::int64_t since, std::chrono::milliseconds wait) const {
  std::unique_lock lock(mu_);
  auto ready = [&] { return (!events_.empty() && events_.back().seq > since) || finished_; };
  if (wait.count() > 0) cv_.wait_for(lock, wait, ready);
  std::vector<SessionEvent> out;
  for (const auto& e : events_)
    if (e.seq > since) out.push_back(e);
  return out;
}

bool Session::wait_done(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return finished_; });
}

bool Session::wait_ready(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return finished_ || doc_.status == SessionStatus::AwaitingUser; });
}

bool Session::finished() const {
  std::lock_guard lock(mu_);
  return finished_;
}

// ---- pipeline ---------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string fenced(const std::string& code) {
  std::string body = code;
  if (body.empty() || body.back() != '\n') body += '\n';
  return "```verilog\n" + body + "```\n";
}

struct JobInput {
  std::string module;
  std::string design;
  std::string description;
  ModuleSpec spec;
  std::string sketch_text;
  bool assemble = false;                 // top with children
  std::optional<std::string> rendered;   // template-mode top source
  std::map<std::string, verilog::Module> children;
  std::set<std::string> missing_children;
  std::map<std::string, std::string> dependency_sources;
};

struct JobOutcome {
  std::string module;
  bool ok = false;
  ErrorCode code = ErrorCode::ModuleFailed;
  CodeBlock block;
  ModuleRecord record;
};

class AssemblyError : public Error {
 public:
  explicit AssemblyError(const std::string& m) : Error(ErrorCode::Assembly, m) {}
};

enum class RoundResult { Success, Retry, Fatal };

}  // namespace

class Pipeline {
 public:
  Pipeline(Orchestrator& o, Session& s, const SessionRequest& req)
      : o_(o), s_(s), req_(req), llm_(std::make_shared<llm::MeteredBackend>(o.backend_)) {
    const auto& cfg = o.options_.config;
    deterministic_ = cfg.deterministic_mode;
    workers_ = deterministic_ ? 1 : std::max(1, cfg.worker_count);
    k_ = std::max(1, cfg.max_retries);
  }

  void run() {
    auto t0 = Clock::now();
    std::string stage = req_.mode == SessionMode::Template ? "dse" : "prompt";
    bool done = false;
    try {
      if (req_.mode == SessionMode::Template) {
        tpl_ = dse::load_template_named(o_.options_.data_dir + "/templates", req_.template_name);
        stage = "kernel";
        dfg_ = dse::extract_dfg(req_.kernel_source);
        explorer_.objective = req_.objective;
        explorer_.strategy_hint = req_.strategy_hint;
        explorer_.icl_mode = req_.icl_mode;
        if (req_.icl_mode == dse::IclMode::OneShot)
          explorer_.icl_example = dse::load_icl_example(o_.options_.data_dir + "/icl", req_.template_name);
      }
      const int budget = std::max(1, o_.options_.config.round_budget);
      for (int r = 0; r < budget && !done; ++r) {
        if (s_.aborted_) break;
        auto res = run_round(r, stage);
        if (res == RoundResult::Success || res == RoundResult::Fatal) done = true;
      }
      if (!done && !s_.aborted_) {
        std::lock_guard lock(s_.mu_);
        std::string last = s_.doc_.rounds.empty() ? std::string() : s_.doc_.rounds.back().feedback;
        fail_locked(stage, "round budget of " + std::to_string(budget) + " exhausted; last feedback: " + last);
      }
    } catch (const Error& e) {
      std::lock_guard lock(s_.mu_);
      fail_locked(stage, e.what());
    } catch (const std::exception& e) {
      std::lock_guard lock(s_.mu_);
      fail_locked(stage, e.what());
    }
    if (s_.aborted_) {
      std::lock_guard lock(s_.mu_);
      if (!s_.doc_.terminal()) {
        for (const auto& t : s_.doc_.tasks.tasks)
          if (t.status == TaskStatus::Pending || t.status == TaskStatus::Generating)
            s_.set_task(t.module_name, TaskStatus::Failed);
        fail_locked("aborted", "aborted by user");
      }
    }
    finalize(t0);
  }

 private:
  void fail_locked(const std::string& stage, const std::string& message) {
    if (s_.doc_.terminal()) return;
    s_.doc_.failed_stage = stage;
    s_.doc_.error = message;
    s_.set_status(SessionStatus::Failed);
  }

  std::int64_t elapsed_ms(Clock::time_point since) const {
    if (deterministic_) return 0;
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
  }

  void add_stage_time(const std::string& stage, Clock::time_point since) {
    auto ms = elapsed_ms(since);
    std::lock_guard lock(s_.mu_);
    s_.doc_.stage_ms[stage] += ms;
  }

  void add_round(json config, dse::PpaFeedback ppa, std::string feedback) {
    std::lock_guard lock(s_.mu_);
    dse::RoundRecord rec{std::move(config), ppa, std::move(feedback)};
    s_.doc_.rounds.push_back(rec);
    s_.emit("round", {{"index", s_.doc_.rounds.size() - 1}, {"round", dse::to_json(rec)}});
  }

  std::vector<dse::RoundRecord> history() {
    std::lock_guard lock(s_.mu_);
    return s_.doc_.rounds;
  }

  RoundResult run_round(int r, std::string& stage) {
    HierarchicalPrompt prompt;
    json config = nullptr;
    expansion_.reset();
    const auto& params = o_.options_.config.llm_params;

    if (req_.mode == SessionMode::Template) {
      stage = "dse";
      auto t = Clock::now();
      explorer_.history = history();
      dse::Proposal p;
      try {
        p = dse::propose_config(*tpl_, *dfg_, explorer_, *llm_, params, k_);
      } catch (const dse::ProposalFailed& e) {
        add_stage_time("dse", t);
        add_round(nullptr, {}, std::string("proposal failed: ") + e.what());
        return RoundResult::Retry;
      }
      add_stage_time("dse", t);
      config = dse::to_json(p.config, *tpl_);
      if (!p.conflicts.empty()) {
        std::vector<std::string> parts;
        for (const auto& c : p.conflicts) parts.push_back(c.rule + ": " + c.message);
        add_round(config, {}, join(parts, "; "));
        return RoundResult::Retry;
      }
      prompt = dse::enhance_prompt(p.config, *tpl_);
      expansion_ = dse::expand(p.config, *tpl_);
    } else if (req_.prompt && (r == 0 || req_.description.empty())) {
      prompt = *req_.prompt;
    } else {
      stage = "prompt";
      auto t = Clock::now();
      explorer_.history = history();
      try {
        prompt = dse::propose_prompt(req_.description, explorer_, *llm_, params, k_).prompt;
      } catch (const dse::ProposalFailed& e) {
        add_stage_time("prompt", t);
        add_round(nullptr, {}, std::string("proposal failed: ") + e.what());
        return RoundResult::Retry;
      }
      add_stage_time("prompt", t);
    }

    stage = "parse";
    {
      auto t = Clock::now();
      parse::TaskList tasks;
      parse::SketchSet sketches;
      try {
        tasks = parse::build_task_list(prompt);
        for (const auto& m : parse::dedup_modules(prompt)) sketches.emplace(m.name, parse::make_sketch(m));
      } catch (const Error& e) {
        add_stage_time("parse", t);
        add_round(config, {}, std::string("hierarchy rejected: ") + e.what());
        return RoundResult::Retry;
      }
      std::lock_guard lock(s_.mu_);
      s_.doc_.prompt = prompt;
      s_.doc_.tasks = std::move(tasks);
      s_.doc_.sketches = std::move(sketches);
      s_.doc_.blocks.clear();
      for (const auto& task : s_.doc_.tasks.tasks)
        s_.emit("task", {{"module", task.module_name}, {"status", std::string(parse::to_string(task.status))}});
      s_.doc_.stage_ms["parse"] += elapsed_ms(t);
    }

    if (r == 0 && req_.interactive) {
      std::unique_lock lock(s_.mu_);
      s_.set_status(SessionStatus::AwaitingUser);
      s_.cv_.wait(lock, [&] { return s_.approved_ || s_.aborted_.load(); });
      if (s_.aborted_) return RoundResult::Fatal;
      s_.set_status(SessionStatus::Running);
    }

    stage = "generate";
    auto t = Clock::now();
    auto failure = schedule(stage);
    add_stage_time("generate", t);
    if (s_.aborted_) return RoundResult::Fatal;
    if (failure) {
      std::lock_guard lock(s_.mu_);
      fail_locked(stage, *failure);
      return RoundResult::Fatal;
    }

    stage = "validate";
    t = Clock::now();
    std::string top;
    std::map<std::string, std::string> sources;
    {
      std::lock_guard lock(s_.mu_);
      top = root_locked();
      for (const auto& [name, b] : s_.doc_.blocks) sources[name] = b.source;
    }
    auto problems = validate(sources, top);
    add_stage_time("validate", t);
    if (!problems.empty()) {
      add_round(config, {}, "validation failed: " + join(problems, "; "));
      return RoundResult::Retry;
    }

    stage = "ppa";
    t = Clock::now();
    auto est = estimate_ppa(sources, top, o_.calibration_);
    add_stage_time("ppa", t);
    {
      std::lock_guard lock(s_.mu_);
      s_.doc_.ppa = est;
    }
    add_round(config, {est.power_mw, est.clock_ns, est.area_um2, true}, "");
    std::lock_guard lock(s_.mu_);
    s_.set_status(SessionStatus::Succeeded);
    return RoundResult::Success;
  }

  std::string root_locked() const {
    const auto& d = s_.doc_;
    if (d.tasks.find(d.prompt.top)) return d.prompt.top;
    return d.tasks.tasks.empty() ? std::string() : d.tasks.tasks.back().module_name;
  }

  static std::vector<std::string> validate(const std::map<std::string, std::string>& sources, const std::string& top) {
    std::vector<std::string> problems;
    std::string all;
    for (const auto& [_, text] : sources) all += text + "\n";
    auto parsed = verilog::parse(all);
    if (!parsed.ok()) {
      problems.push_back("combined design does not parse: " + parsed.error_text());
      return problems;
    }
    std::map<std::string, int> defined;
    for (const auto& m : parsed.modules) ++defined[m.name];
    for (const auto& [name, n] : defined)
      if (n > 1) problems.push_back("module " + name + " is defined " + std::to_string(n) + " times");
    for (const auto& m : parsed.modules)
      for (const auto& i : m.instances)
        if (!defined.contains(i.module))
          problems.push_back("module " + m.name + " instantiates undefined module " + i.module);
    if (!defined.contains(top)) problems.push_back("top module " + top + " is not defined");
    return problems;
  }

  // Dependency-ordered parallel generation. Returns the failure message, if any.
  std::optional<std::string> schedule(std::string& stage) {
    std::mutex cq_mu;
    std::condition_variable cq_cv;
    std::deque<JobOutcome> completed;
    std::map<std::string, std::thread> running;
    std::optional<std::string> failure;

    for (;;) {
      {
        std::lock_guard lock(s_.mu_);
        bool stop = failure.has_value() || s_.aborted_;
        const auto root = root_locked();
        for (const auto& task : s_.doc_.tasks.tasks) {
          if (stop || running.size() >= static_cast<std::size_t>(workers_)) break;
          if (task.status != TaskStatus::Pending) continue;
          bool ready = true;
          for (const auto& dep : s_.doc_.tasks.dependencies_of(task.module_name)) {
            const auto* d = s_.doc_.tasks.find(dep);
            if (!d || d->status != TaskStatus::Done) ready = false;
          }
          if (!ready) continue;
          auto input = make_input_locked(task.module_name, task.module_name == root);
          s_.set_task(task.module_name, TaskStatus::Generating);
          auto& rec = s_.doc_.modules[task.module_name];
          rec.module = task.module_name;
          rec.started_tick = ++tick_;
          running.emplace(task.module_name, std::thread([this, input = std::move(input), &cq_mu, &cq_cv, &completed] {
            auto out = execute_job(input);
            std::lock_guard l(cq_mu);
            completed.push_back(std::move(out));
            cq_cv.notify_all();
          }));
        }
        if (running.empty()) {
          if (!failure && !s_.aborted_) {
            std::vector<std::string> stuck;
            for (const auto& t : s_.doc_.tasks.tasks)
              if (t.status != TaskStatus::Done) stuck.push_back(t.module_name);
            if (!stuck.empty()) failure = "tasks could not be scheduled: " + join(stuck, ", ");
          }
          break;
        }
      }
      JobOutcome out;
      {
        std::unique_lock l(cq_mu);
        cq_cv.wait(l, [&] { return !completed.empty(); });
        out = std::move(completed.front());
        completed.pop_front();
      }
      running.at(out.module).join();
      running.erase(out.module);
      apply_outcome(out, failure, stage);
    }
    return failure;
  }

  void apply_outcome(JobOutcome& out, std::optional<std::string>& failure, std::string& stage) {
    std::lock_guard lock(s_.mu_);
    auto& rec = s_.doc_.modules[out.module];
    auto prev_attempts = rec.attempts, prev_verified = rec.verified, prev_calls = rec.llm_calls;
    auto started = rec.started_tick;
    rec = out.record;
    rec.attempts += prev_attempts;
    rec.verified += prev_verified;
    rec.llm_calls += prev_calls;
    rec.started_tick = started;
    rec.finished_tick = ++tick_;
    if (out.record.retrieved_id) used_.insert(*out.record.retrieved_id);
    for (auto id : out.record.rejected_ids) rejected_.insert(id);
    if (out.ok) {
      s_.doc_.blocks[out.module] = out.block;
      s_.set_task(out.module, TaskStatus::Done);
    } else {
      s_.set_task(out.module, TaskStatus::Failed);
      if (!failure) {
        failure = out.record.error;
        if (out.code == ErrorCode::Assembly) stage = "assemble";
      }
    }
  }

  JobInput make_input_locked(const std::string& module, bool is_root) const {
    const auto& d = s_.doc_;
    JobInput in;
    in.module = module;
    in.design = d.prompt.design;
    if (const auto* pm = d.prompt.find(module)) in.description = pm->description;
    const auto& sketch = d.sketches.at(module);
    in.spec = sketch.to_spec();
    in.sketch_text = parse::render_sketch(sketch);
    for (const auto& inst : sketch.instance_lines) {
      auto b = d.blocks.find(inst.module_name);
      if (b == d.blocks.end()) {
        in.missing_children.insert(inst.module_name);
        continue;
      }
      auto parsed = verilog::parse(b->second.source);
      if (const auto* m = parsed.find(inst.module_name)) in.children.emplace(inst.module_name, *m);
    }
    std::set<std::string> seen;
    std::vector<std::string> stack = d.tasks.dependencies_of(module);
    while (!stack.empty()) {
      auto dep = stack.back();
      stack.pop_back();
      if (!seen.insert(dep).second) continue;
      if (auto b = d.blocks.find(dep); b != d.blocks.end()) in.dependency_sources[dep] = b->second.source;
      for (const auto& dd : d.tasks.dependencies_of(dep)) stack.push_back(dd);
    }
    in.assemble = is_root && !sketch.instance_lines.empty();
    if (in.assemble && expansion_) in.rendered = render_template_top(sketch, expansion_->find(module));
    return in;
  }

  static std::string render_template_top(const parse::SketchDoc& s, const dse::ExpandedModule* em) {
    std::string out = verilog::render_header(s.to_spec()) + "\n";
    if (em) {
      for (const auto& [name, width] : em->nets)
        out += width > 1 ? "  wire [" + std::to_string(width - 1) + ":0] " + name + ";\n" : "  wire " + name + ";\n";
      for (const auto& [lhs, rhs] : em->assigns) out += "  assign " + lhs + " = " + rhs + ";\n";
    }
    for (const auto& i : s.instance_lines) {
      std::vector<std::string> conns;
      for (const auto& [port, net] : i.connections) conns.push_back("." + port + "(" + net + ")");
      out += "  " + i.module_name + " " + i.instance_name + " (" + join(conns, ", ") + ");\n";
    }
    out += "endmodule\n";
    return out;
  }

  llm::ChatResponse call(const std::string& system, const std::string& user, const std::string& purpose,
                         const std::string& subject, ModuleRecord& rec) {
    llm::ChatRequest req{system, user, o_.options_.config.llm_params, purpose, subject};
    ++rec.llm_calls;
    return llm_->complete(req);
  }

  std::string child_interfaces(const JobInput& in, bool ports_only) const {
    std::vector<std::string> lines;
    for (const auto& [name, m] : in.children) {
      auto spec = m.to_spec();
      lines.push_back(ports_only ? "- " + name + ": " + render_ports(spec.ports) : verilog::render_header(spec));
    }
    return lines.empty() ? "(none)\n" : join(lines, "\n") + "\n";
  }

  std::string module_request(const JobInput& in, const std::string& previous_log) const {
    std::string u = "Design: " + in.design + "\nModule: " + in.module + "\nDescription: " +
                    (in.description.empty() ? "(none)" : in.description) + "\n\nSketch:\n" + fenced(in.sketch_text) +
                    "\nSubmodule interfaces:\n" + child_interfaces(in, false);
    if (!previous_log.empty()) u += "\nThe previous attempt failed verification:\n" + previous_log + "\n";
    u += "\nReturn the complete module in a ```verilog fenced block.";
    return u;
  }

  std::string assemble_request(const JobInput& in, const std::string& previous_log) const {
    std::string u = "Design: " + in.design + "\nTop module: " + in.module + "\nDescription: " +
                    (in.description.empty() ? "(none)" : in.description) + "\n\nTop-level sketch:\n" +
                    fenced(in.sketch_text) + "\nSubmodules and their pins:\n" + child_interfaces(in, true);
    if (!previous_log.empty()) u += "\nThe previous attempt failed verification:\n" + previous_log + "\n";
    u += "\nReturn the complete top module in a ```verilog fenced block.";
    return u;
  }

  std::string testbench_request(const JobInput& in) const {
    return "Module under test:\n" + fenced(verilog::render_header(in.spec)) + "Description: " +
           (in.description.empty() ? "(none)" : in.description) + "\n\nWrite a self-checking testbench that prints " +
           std::string(kPassSentinel) + " when every check succeeds.";
  }

  library::Embedding embed(const std::string& text) {
    std::lock_guard lock(o_.embed_mu_);
    return o_.embedder_->embed(text);
  }

  JobOutcome execute_job(const JobInput& in) {
    JobOutcome out;
    out.module = in.module;
    out.record.module = in.module;
    try {
      if (in.assemble) assemble(in, out);
      else generate_module(in, out);
    } catch (const Error& e) {
      out.ok = false;
      out.code = e.code();
      out.record.error = e.what();
    } catch (const std::exception& e) {
      out.ok = false;
      out.record.error = e.what();
    }
    return out;
  }

  bool have_library() const { return o_.library_ && o_.embedder_; }

  std::optional<std::string> fetch_testbench(const JobInput& in, ModuleRecord& rec) {
    if (!o_.options_.simulator) return std::nullopt;
    auto resp = call(kTestbenchSystemPrompt, testbench_request(in), "testbench", in.module, rec);
    auto code = verilog::extract_code(resp.text);
    if (code.empty()) return std::nullopt;
    return code;
  }

  // Returns true when the block was accepted; false means treat as a failed attempt.
  bool bind(const JobInput& in, JobOutcome& out, const std::string& code, const library::Embedding* query,
            const std::optional<std::string>& tb, std::string& log) {
    auto block = make_block(in.module, code, true);
    if (have_library() && query) {
      auto ins = o_.library_->insert(block, *query, tb);
      if (ins.status == library::InsertStatus::Avoided) {
        log = "block matches an entry on the avoidance list";
        return false;
      }
      block.id = ins.id;
      out.record.library_id = ins.id;
    }
    out.block = std::move(block);
    out.ok = true;
    return true;
  }

  void generate_module(const JobInput& in, JobOutcome& out) {
    auto& rec = out.record;
    const auto& sim = o_.options_.simulator;
    std::optional<library::Embedding> query;
    std::string log;
    if (have_library()) {
      query = embed(retrieval_text(in.description, in.spec));
      auto hit = o_.library_->retrieve(*query, in.module);
      if (hit && hit->entry.block.module_name == in.module) {
        auto tb = hit->entry.testbench;
        if (sim && !tb) tb = fetch_testbench(in, rec);
        auto v = verify_block(hit->entry.block.source, in.spec, in.children, sim, tb, in.dependency_sources);
        if (v.passed) {
          rec.source_kind = "library";
          rec.retrieved_id = hit->entry.block.id;
          rec.verification = v;
          out.block = hit->entry.block;
          out.ok = true;
          return;
        }
        rec.rejected_ids.push_back(hit->entry.block.id);
      }
    }
    auto tb = fetch_testbench(in, rec);
    rec.source_kind = "llm";
    for (int attempt = 0; attempt < k_; ++attempt) {
      if (s_.aborted_) throw Error(ErrorCode::ModuleFailed, "aborted");
      auto resp = call(kModuleSystemPrompt, module_request(in, log), "module", in.module, rec);
      ++rec.attempts;
      auto code = verilog::extract_code(resp.text);
      auto v = verify_block(code, in.spec, in.children, sim, tb, in.dependency_sources);
      rec.verification = v;
      log = v.log;
      if (!v.passed) continue;
      if (bind(in, out, code, query ? &*query : nullptr, tb, log)) {
        ++rec.verified;
        return;
      }
      rec.verification.passed = false;
      rec.verification.log = log;
    }
    throw Error(ErrorCode::ModuleFailed,
                "module " + in.module + " failed after " + std::to_string(k_) + " attempt(s): " + log);
  }

  void assemble(const JobInput& in, JobOutcome& out) {
    auto& rec = out.record;
    if (!in.missing_children.empty())
      throw AssemblyError("cannot assemble " + in.module + ": no block for " +
                          join({in.missing_children.begin(), in.missing_children.end()}, ", "));
    for (const auto& [name, m] : in.children)
      if (m.ports.empty()) throw AssemblyError("cannot assemble " + in.module + ": child " + name + " has no ports");
    for (const auto& inst : in.spec.instances)
      if (!in.children.contains(inst.module_name))
        throw AssemblyError("cannot assemble " + in.module + ": block for " + inst.module_name +
                            " does not define that module");

    std::optional<library::Embedding> query;
    if (have_library()) query = embed(retrieval_text(in.description, in.spec));
    std::string log;
    if (in.rendered) {
      rec.source_kind = "template";
      auto v = check_structure(*in.rendered, in.spec, in.children);
      rec.verification = v;
      if (!v.passed) throw AssemblyError("expanded top " + in.module + " is inconsistent: " + v.log);
      if (!bind(in, out, *in.rendered, query ? &*query : nullptr, std::nullopt, log)) throw AssemblyError(log);
      return;
    }
    const auto& sim = o_.options_.simulator;
    auto tb = fetch_testbench(in, rec);
    rec.source_kind = "assembled";
    for (int attempt = 0; attempt < k_; ++attempt) {
      if (s_.aborted_) throw AssemblyError("aborted");
      auto resp = call(kAssembleSystemPrompt, assemble_request(in, log), "assemble", in.module, rec);
      ++rec.attempts;
      auto code = verilog::extract_code(resp.text);
      auto v = verify_block(code, in.spec, in.children, sim, tb, in.dependency_sources);
      rec.verification = v;
      log = v.log;
      if (!v.passed) continue;
      if (bind(in, out, code, query ? &*query : nullptr, tb, log)) {
        ++rec.verified;
        return;
      }
      rec.verification.passed = false;
      rec.verification.log = log;
    }
    throw AssemblyError("top module " + in.module + " failed assembly after " + std::to_string(k_) +
                        " attempt(s): " + log);
  }

  void finalize(Clock::time_point t0) {
    std::vector<std::pair<std::uint64_t, bool>> batch;
    GenerationSession copy;
    {
      std::lock_guard lock(s_.mu_);
      bool success = s_.doc_.status == SessionStatus::Succeeded;
      std::set<std::uint64_t> ids(used_.begin(), used_.end());
      ids.insert(rejected_.begin(), rejected_.end());
      for (auto id : ids) batch.emplace_back(id, rejected_.contains(id) ? false : success);
    }
    if (o_.library_) {
      std::vector<std::pair<std::uint64_t, bool>> live;
      for (const auto& p : batch)
        if (o_.library_->get(p.first)) live.push_back(p);
      if (!live.empty()) o_.library_->record_outcomes(live);
    }
    {
      std::lock_guard lock(s_.mu_);
      s_.doc_.outcome_batches.push_back(batch);
      s_.doc_.usage = llm_->usage();
      s_.doc_.llm_calls = llm_->calls();
      s_.doc_.wall_time_ms = elapsed_ms(t0);
      if (!s_.doc_.terminal()) fail_locked("unknown", "pipeline ended without a verdict");
      copy = s_.doc_;
    }
    try {
      o_.write_artifacts(copy);
    } catch (const Error& e) {
      std::lock_guard lock(s_.mu_);
      s_.doc_.error += (s_.doc_.error.empty() ? "" : "; ") + std::string("artifacts: ") + e.what();
    }
    std::lock_guard lock(s_.mu_);
    s_.finished_ = true;
    s_.cv_.notify_all();
  }

  Orchestrator& o_;
  Session& s_;
  const SessionRequest& req_;
  std::shared_ptr<llm::MeteredBackend> llm_;
  bool deterministic_ = false;
  int workers_ = 1;
  int k_ = 3;
  std::int64_t tick_ = 0;  // guarded by the session lock
  std::optional<dse::TemplateDef> tpl_;
  std::optional<dse::KernelDfg> dfg_;
  std::optional<dse::Expansion> expansion_;
  dse::ExplorerState explorer_;
  std::set<std::uint64_t> used_, rejected_;  // written under the session lock
};

// ---- Orchestrator -----------------------------------------------------------

Orchestrator::Orchestrator(OrchestratorOptions options, std::shared_ptr<llm::LlmBackend> backend,
                           std::shared_ptr<library::CodeLibrary> library, std::shared_ptr<library::Embedder> embedder)
    : options_(std::move(options)),
      backend_(std::move(backend)),
      library_(std::move(library)),
      embedder_(std::move(embedder)) {
  validate(options_.config);
  if (!backend_) throw Error(ErrorCode::InvalidArgument, "orchestrator needs an LLM backend");
  if (options_.calibration) {
    calibration_ = *options_.calibration;
  } else {
    auto path = options_.data_dir + "/ppa_calibration.json";
    if (fs::exists(path)) calibration_ = PpaCalibration::load(path);
  }
}

std::shared_ptr<Session> Orchestrator::make_session(const SessionRequest& request) {
  std::string id = request.id;
  if (id.empty()) {
    auto seed = to_json(request).dump();
    if (!options_.config.deterministic_mode)
      seed += "#" + std::to_string(counter_++) + "#" +
              std::to_string(std::chrono::system_clock::now().time_since_epoch().count());
    id = "s-" + to_hex(sha256(seed)).substr(0, 12);
  }
  if (id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "session id may contain only letters, digits, '-' and '_'");
  GenerationSession doc;
  doc.id = id;
  doc.mode = request.mode;
  doc.description = request.description;
  doc.kernel = request.kernel_name;
  doc.template_name = request.template_name;
  if (request.prompt) doc.prompt = *request.prompt;
  auto s = std::shared_ptr<Session>(new Session(id, std::move(doc)));
  std::lock_guard lock(s->mu_);
  s->emit("status", {{"status", "running"}, {"failed_stage", ""}, {"error", ""}});
  return s;
}

void Orchestrator::execute(Session& session, const SessionRequest& request) {
  Pipeline(*this, session, request).run();
}

std::shared_ptr<Session> Orchestrator::start(SessionRequest request) {
  auto s = make_session(request);
  s->worker_ = std::thread([this, raw = s.get(), req = std::move(request)] { execute(*raw, req); });
  return s;
}

GenerationSession Orchestrator::run(SessionRequest request) {
  request.interactive = false;
  auto s = make_session(request);
  execute(*s, request);
  return s->snapshot();
}

void Orchestrator::write_artifacts(const GenerationSession& s) const {
  if (options_.sessions_dir.empty()) return;
  auto dir = fs::path(options_.sessions_dir) / s.id;
  std::error_code ec;
  fs::create_directories(dir / "design", ec);
  if (ec) throw Error(ErrorCode::Storage, "cannot create " + (dir / "design").string() + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(dir / "design", ec))
    if (entry.path().extension() == ".v") fs::remove(entry.path(), ec);
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Storage, "cannot write " + p.string());
    out << text;
  };
  for (const auto& [name, b] : s.blocks) {
    auto text = b.source;
    if (text.empty() || text.back() != '\n') text += '\n';
    write(dir / "design" / (name + ".v"), text);
  }
  write(dir / "session.json", to_json(s).dump(2) + "\n");
  write(dir / "metrics.json", session_metrics(s).dump(2) + "\n");
}

}  // namespace hivegen

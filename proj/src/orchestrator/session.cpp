#include "hivegen/orchestrator/session.hpp"

#include "hivegen/core/error.hpp"
#include "hivegen/core/json_io.hpp"
#include "hivegen/metrics/metrics.hpp"

namespace hivegen {

using nlohmann::json;

std::string_view to_string(SessionMode m) { return m == SessionMode::Template ? "template" : "simple"; }

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Running: return "running";
    case SessionStatus::AwaitingUser: return "awaiting_user";
    case SessionStatus::Succeeded: return "succeeded";
    case SessionStatus::Failed: return "failed";
  }
  return "running";
}

std::optional<SessionStatus> parse_session_status(std::string_view s) {
  for (auto v : {SessionStatus::Running, SessionStatus::AwaitingUser, SessionStatus::Succeeded, SessionStatus::Failed})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

int GenerationSession::attempts() const {
  int n = 0;
  for (const auto& [_, r] : modules) n += r.attempts;
  return n;
}

int GenerationSession::verified_attempts() const {
  int c = 0;
  for (const auto& [_, r] : modules) c += r.verified;
  return c;
}

json to_json(const ModuleRecord& r) {
  json j{{"module", r.module},
         {"source_kind", r.source_kind},
         {"attempts", r.attempts},
         {"verified", r.verified},
         {"llm_calls", r.llm_calls},
         {"retrieved_id", r.retrieved_id ? json(*r.retrieved_id) : json(nullptr)},
         {"rejected_ids", r.rejected_ids},
         {"library_id", r.library_id ? json(*r.library_id) : json(nullptr)},
         {"verification", to_json(r.verification)},
         {"error", r.error},
         {"started_tick", r.started_tick},
         {"finished_tick", r.finished_tick}};
  return j;
}

ModuleRecord module_record_from_json(const json& j) {
  ModuleRecord r;
  r.module = j.at("module").get<std::string>();
  r.source_kind = j.value("source_kind", std::string());
  r.attempts = j.value("attempts", 0);
  r.verified = j.value("verified", 0);
  r.llm_calls = j.value("llm_calls", 0);
  if (j.contains("retrieved_id") && !j["retrieved_id"].is_null()) r.retrieved_id = j["retrieved_id"].get<std::uint64_t>();
  r.rejected_ids = j.value("rejected_ids", std::vector<std::uint64_t>{});
  if (j.contains("library_id") && !j["library_id"].is_null()) r.library_id = j["library_id"].get<std::uint64_t>();
  if (j.contains("verification")) r.verification = verification_from_json(j["verification"]);
  r.error = j.value("error", std::string());
  r.started_tick = j.value("started_tick", std::int64_t{0});
  r.finished_tick = j.value("finished_tick", std::int64_t{0});
  return r;
}

namespace {

json ppa_json(const std::optional<PpaEstimate>& p) { return p ? to_json(*p) : json(nullptr); }

std::optional<PpaEstimate> ppa_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  PpaEstimate p;
  p.power_mw = j.value("power_mw", 0.0);
  p.clock_ns = j.value("clock_ns", 0.0);
  p.area_um2 = j.value("area_um2", 0.0);
  p.method = j.value("method", std::string("proxy"));
  p.logic_depth = j.value("logic_depth", 0);
  p.register_bits = j.value("register_bits", std::int64_t{0});
  p.instances = j.value("instances", std::int64_t{0});
  return p;
}

}  // namespace

json to_json(const GenerationSession& s) {
  json sketches = json::object();
  for (const auto& [name, doc] : s.sketches) sketches[name] = parse::to_json(doc);
  json blocks = json::object();
  for (const auto& [name, b] : s.blocks) blocks[name] = b;
  json rounds = json::array();
  for (const auto& r : s.rounds) rounds.push_back(dse::to_json(r));
  json modules = json::object();
  for (const auto& [name, r] : s.modules) modules[name] = to_json(r);
  json edits = json::array();
  for (const auto& e : s.edits) edits.push_back({{"sentence", e.sentence}, {"command", e.command}, {"revision", e.revision}});
  json batches = json::array();
  for (const auto& b : s.outcome_batches) {
    json batch = json::array();
    for (const auto& [id, ok] : b) batch.push_back({{"id", id}, {"success", ok}});
    batches.push_back(batch);
  }
  return json{{"id", s.id},
              {"mode", std::string(to_string(s.mode))},
              {"status", std::string(to_string(s.status))},
              {"failed_stage", s.failed_stage},
              {"error", s.error},
              {"description", s.description},
              {"kernel", s.kernel},
              {"template", s.template_name},
              {"prompt", s.prompt},
              {"tasks", parse::to_json(s.tasks)},
              {"sketches", sketches},
              {"blocks", blocks},
              {"rounds", rounds},
              {"modules", modules},
              {"ppa", ppa_json(s.ppa)},
              {"edits", edits},
              {"revision", s.revision},
              {"outcome_batches", batches},
              {"usage", s.usage},
              {"llm_calls", s.llm_calls},
              {"wall_time_ms", s.wall_time_ms},
              {"stage_ms", s.stage_ms}};
}

GenerationSession session_from_json(const json& j) {
  try {
    GenerationSession s;
    s.id = j.at("id").get<std::string>();
    s.mode = j.value("mode", std::string("simple")) == "template" ? SessionMode::Template : SessionMode::Simple;
    auto st = parse_session_status(j.value("status", std::string("running")));
    if (!st) throw Error(ErrorCode::InvalidArgument, "bad session status");
    s.status = *st;
    s.failed_stage = j.value("failed_stage", std::string());
    s.error = j.value("error", std::string());
    s.description = j.value("description", std::string());
    s.kernel = j.value("kernel", std::string());
    s.template_name = j.value("template", std::string());
    if (j.contains("prompt")) s.prompt = j["prompt"].get<HierarchicalPrompt>();
    if (j.contains("tasks")) s.tasks = parse::task_list_from_json(j["tasks"]);
    if (j.contains("sketches"))
      for (const auto& [name, doc] : j["sketches"].items()) s.sketches[name] = parse::sketch_from_json(doc);
    if (j.contains("blocks"))
      for (const auto& [name, b] : j["blocks"].items()) s.blocks[name] = b.get<CodeBlock>();
    if (j.contains("rounds"))
      for (const auto& r : j["rounds"]) s.rounds.push_back(dse::round_from_json(r));
    if (j.contains("modules"))
      for (const auto& [name, r] : j["modules"].items()) s.modules[name] = module_record_from_json(r);
    if (j.contains("ppa")) s.ppa = ppa_from(j["ppa"]);
    if (j.contains("edits"))
      for (const auto& e : j["edits"])
        s.edits.push_back({e.value("sentence", std::string()), e.value("command", json()), e.value("revision", std::int64_t{0})});
    s.revision = j.value("revision", std::int64_t{0});
    if (j.contains("outcome_batches"))
      for (const auto& b : j["outcome_batches"]) {
        std::vector<std::pair<std::uint64_t, bool>> batch;
        for (const auto& o : b) batch.emplace_back(o.at("id").get<std::uint64_t>(), o.at("success").get<bool>());
        s.outcome_batches.push_back(std::move(batch));
      }
    if (j.contains("usage")) s.usage = j["usage"].get<TokenUsage>();
    s.llm_calls = j.value("llm_calls", 0);
    s.wall_time_ms = j.value("wall_time_ms", std::int64_t{0});
    s.stage_ms = j.value("stage_ms", std::map<std::string, std::int64_t>{});
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed session document: ") + e.what());
  }
}

json api_view(const GenerationSession& s) {
  json tasks = json::array();
  for (const auto& t : s.tasks.tasks)
    tasks.push_back({{"module", t.module_name}, {"status", std::string(parse::to_string(t.status))}});
  json rounds = json::array();
  for (std::size_t i = 0; i < s.rounds.size(); ++i) {
    const auto& r = s.rounds[i];
    rounds.push_back({{"index", i},
                      {"config", r.config},
                      {"passed", r.ppa.passed},
                      {"feedback", r.feedback},
                      {"power_mw", r.ppa.power_mw},
                      {"clock_ns", r.ppa.clock_ns},
                      {"area_um2", r.ppa.area_um2}});
  }
  return json{{"id", s.id},
              {"status", std::string(to_string(s.status))},
              {"mode", std::string(to_string(s.mode))},
              {"failed_stage", s.failed_stage},
              {"error", s.error},
              {"revision", s.revision},
              {"tasks", tasks},
              {"rounds", rounds},
              {"usage", s.usage},
              {"ppa", ppa_json(s.ppa)}};
}

json session_metrics(const GenerationSession& s) {
  metrics::TrialRecord r;
  r.design = s.prompt.design.empty() ? s.id : s.prompt.design;
  r.n = s.attempts();
  r.c = s.verified_attempts();
  r.times = {static_cast<double>(s.wall_time_ms) / 1000.0};
  for (const auto& [stage, ms] : s.stage_ms) r.stages[stage] = static_cast<double>(ms) / 1000.0;
  r.tokens = s.usage;
  return metrics::to_metrics_json(r);
}

}  // namespace hivegen

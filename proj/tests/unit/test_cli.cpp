#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hivegen/cli/cli.hpp"
#include "hivegen/library/library.hpp"
#include "hivegen/orchestrator/orchestrator.hpp"
#include "hivegen/service/service.hpp"
#include "stub_backend.hpp"

using namespace hivegen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kData = HIVEGEN_DATA_DIR;
const std::string kMux = kData + "/fixtures/mux64";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "hivegen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("hivegen-cli-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string fresh_library(const TempDir& dir) {
  fs::copy_file(kMux + "/library.jsonl", dir / "library.jsonl");
  if (fs::exists(kMux + "/library.jsonl.avoid"))
    fs::copy_file(kMux + "/library.jsonl.avoid", dir / "library.jsonl.avoid");
  return dir / "library.jsonl";
}

std::vector<std::string> mux64_args(const TempDir& dir) {
  return {"generate",  "--prompt",   kMux + "/description.txt", "--backend",      "replay",
          "--fixtures", kMux + "/fx.jsonl", "--no-interact",    "--deterministic", "--no-simulator",
          "--library", fresh_library(dir),  "--sessions",       dir / "sessions"};
}

}  // namespace

TEST(Cli, NoSubcommandIsAUsageError) {
  auto r = run({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("subcommand"), std::string::npos);
}

TEST(Cli, UnknownFlagIsAUsageErrorWithHelp) {
  auto r = run({"generate", "--frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--prompt"), std::string::npos);
  EXPECT_EQ(run({"metrics", "pass-at-k", "--n", "3", "--c", "5", "--k", "1"}).code, 2);
  EXPECT_EQ(run({"generate", "--backend", "replay", "--kernel", "x.kdsl"}).code, 2);
}

TEST(Cli, HelpExitsZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("generate"), std::string::npos);
}

TEST(Cli, PassAtKAndSavings) {
  auto r = run({"metrics", "pass-at-k", "--n", "10", "--c", "4", "--k", "5"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.976\n");
  EXPECT_EQ(run({"metrics", "pass-at-k", "--n", "10", "--c", "1", "--k", "1"}).out, "0.100\n");
  EXPECT_EQ(run({"metrics", "savings", "--baseline", "2089", "--ours", "1442"}).out, "30.97\n");
}

TEST(Cli, Mux64FixtureRunSucceedsWithArtifacts) {
  TempDir dir;
  auto r = run(mux64_args(dir));
  ASSERT_EQ(r.code, 0) << r.err;
  auto view = json::parse(r.out);
  EXPECT_EQ(view["status"], "succeeded");
  auto sdir = dir.path / "sessions" / view["id"].get<std::string>();
  for (const char* f : {"session.json", "metrics.json", "design/mux_2.v", "design/mux_4.v", "design/mux_64.v"})
    EXPECT_TRUE(fs::exists(sdir / f)) << f;
  auto session = session_from_json(json::parse(slurp(sdir / "session.json")));
  EXPECT_EQ(session.modules.at("mux_2").source_kind, "library");
  EXPECT_EQ(session.modules.at("mux_2").llm_calls, 0);
  EXPECT_EQ(session.modules.at("mux_2").verification.log, "structure ok");

  auto agg = run({"metrics", "aggregate", (sdir / "metrics.json").string()});
  EXPECT_EQ(agg.code, 0) << agg.err;
  EXPECT_EQ(json::parse(agg.out)["trials"], 1);
}

TEST(Cli, InteractiveGenerateReadsEditsFromInput) {
  TempDir dir;
  auto args = mux64_args(dir);
  args.erase(std::find(args.begin(), args.end(), "--no-interact"));
  auto r = run(args, "frobnicate the widget\napprove\n");
  ASSERT_EQ(r.code, 0) << r.err;
  auto first = r.out.substr(0, r.out.find('\n'));
  auto edit = json::parse(first);
  EXPECT_FALSE(edit["accepted"]);
  EXPECT_EQ(edit["code"], "unrecognized_verb");
}

TEST(Cli, FailedSessionExitsOne) {
  TempDir dir;
  std::ofstream(dir / "empty.jsonl").close();
  auto args = mux64_args(dir);
  *std::next(std::find(args.begin(), args.end(), "--fixtures")) = dir / "empty.jsonl";
  auto r = run(args);
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, ConfigFileFillsUnsetOptions) {
  TempDir dir;
  auto lib = fresh_library(dir);
  {
    std::ofstream cfg(dir / "hivegen.toml");
    cfg << "# run settings\nbackend = \"replay\"\nfixtures = \"" << kMux << "/fx.jsonl\"\nworker_count = 1\n"
        << "deterministic = true\nno_simulator = true\nsessions = \"" << (dir / "sessions") << "\"\n";
  }
  auto r = run({"generate", "--config", dir / "hivegen.toml", "--prompt", kMux + "/description.txt", "--no-interact",
                "--library", lib});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir.path / "sessions"));

  std::ofstream(dir / "bad.toml") << "no_such_key = 3\n";
  EXPECT_EQ(run({"generate", "--config", dir / "bad.toml", "--prompt", kMux + "/description.txt"}).code, 2);
}

TEST(Cli, LibraryLsVerifyAddAndGc) {
  TempDir dir;
  auto lib = fresh_library(dir);
  auto ls = run({"library", "ls", "--library", lib});
  EXPECT_EQ(ls.code, 0);
  EXPECT_NE(ls.out.find("mux_2"), std::string::npos);
  EXPECT_NE(ls.out.find("0.5000"), std::string::npos);
  auto ok = run({"library", "verify", "--library", lib});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.out, "ok: 1 entry\n");

  auto add = run({"library", "add", "--library", lib, "--source", kMux + "/src/mux_4.v", "--description", "mux"});
  EXPECT_EQ(add.code, 0) << add.err;
  EXPECT_EQ(json::parse(add.out)["status"], "accepted");
  EXPECT_EQ(library::CodeLibrary::open(lib).size(), 2u);
  auto dup = run({"library", "add", "--library", lib, "--source", kMux + "/src/mux_4.v", "--description", "mux"});
  EXPECT_EQ(json::parse(dup.out)["status"], "duplicate");

  auto gc = run({"library", "gc", "--library", lib});
  EXPECT_EQ(gc.code, 0) << gc.err;
  EXPECT_EQ(json::parse(gc.out), (json{{"refined", json::array()}, {"removed", json::array()}, {"deferred", json::array()}}));

  auto text = slurp(lib);
  auto pos = text.find("assign out");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "assign OUT");
  std::ofstream(lib, std::ios::trunc) << text;
  auto bad = run({"library", "verify", "--library", lib});
  EXPECT_EQ(bad.code, 1);
  EXPECT_FALSE(bad.err.empty());
}

TEST(Cli, DseFindsAConflictFreeConfiguration) {
  TempDir dir;
  json bad = {{"template", "cgra"},
              {"assignment", {{"rows", 2}, {"cols", 2}, {"alu_ops", {"PASS", "ADD", "SUB"}}, {"pipelining", false}}}};
  json good = bad;
  good["assignment"]["alu_ops"] = {"PASS", "ADD", "SUB", "MUL"};
  std::ofstream(dir / "bad.json") << bad.dump();
  std::ofstream(dir / "good.json") << good.dump();
  json script = {{"rules", {{{"purpose", "dse"}, {"subject", "cgra"}, {"reply_files", {"bad.json", "good.json"}}}}}};
  std::ofstream(dir / "script.json") << script.dump();
  auto r = run({"dse", "--kernel", kData + "/kernels/fft4.kdsl", "--template", "cgra", "--backend", "mock",
                "--script", dir / "script.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  ASSERT_EQ(j["rounds"].size(), 2u);
  EXPECT_EQ(j["rounds"][0]["feedback"], "alu_op_coverage: op MUL unsupported by ALU");
  EXPECT_EQ(j["config"], good);

  std::ofstream(dir / "script2.json") << json{{"rules", {{{"purpose", "dse"}, {"reply_file", "bad.json"}}}}}.dump();
  auto fail = run({"dse", "--kernel", kData + "/kernels/fft4.kdsl", "--template", "cgra", "--backend", "mock",
                   "--script", dir / "script2.json", "--round-budget", "2"});
  EXPECT_EQ(fail.code, 1);
  EXPECT_EQ(json::parse(fail.out)["rounds"].size(), 2u);
}

TEST(Cli, ReplayRecordThenReplayReproducesTheSession) {
  TempDir dir;
  auto rec = run({"replay", "record", "--backend", "mock", "--script", kMux + "/script.json", "--prompt",
                  kMux + "/description.txt", "--no-interact", "--deterministic", "--no-simulator", "--library",
                  fresh_library(dir), "--sessions", dir / "rec-sessions", "--out", dir / "fx.jsonl"});
  ASSERT_EQ(rec.code, 0) << rec.err;
  // prompt, mux_4 module and mux_64 assembly; no simulator means no testbench requests
  EXPECT_EQ(llm::load_fixtures(dir / "fx.jsonl").size(), 3u);

  TempDir second;
  auto args = mux64_args(second);
  *std::next(std::find(args.begin(), args.end(), "--fixtures")) = dir / "fx.jsonl";
  auto r = run(args);
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, EditAndApproveAgainstALiveService) {
  TempDir dir;
  OrchestratorOptions opts;
  opts.config.deterministic_mode = true;
  opts.sessions_dir = dir / "sessions";
  auto llm = std::make_shared<llm::MockBackend>();
  llm->set_handler(testsupport::stub_reply);
  json cfg = {{"template", "cgra"},
              {"assignment", {{"rows", 2}, {"cols", 2}, {"alu_ops", {"PASS", "ADD", "SUB", "MUL"}}, {"pipelining", false}}}};
  llm->on("dse", "cgra", {"```json\n" + cfg.dump() + "\n```"});
  Orchestrator orch(opts, llm, std::make_shared<library::CodeLibrary>(), std::make_shared<library::HashEmbedder>());
  service::Service svc(orch, opts.sessions_dir);
  int port = svc.start("127.0.0.1", 0);
  std::string url = "http://127.0.0.1:" + std::to_string(port);

  json body = {{"template", "cgra"}, {"kernel_name", "fft4"}, {"kernel", slurp(kData + "/kernels/fft4.kdsl")}};
  auto created = svc.handle("POST", "/sessions", body.dump());
  ASSERT_EQ(created.status, 201);
  std::string id = json::parse(created.body)["id"];
  ASSERT_TRUE(svc.live(id)->wait_ready(std::chrono::seconds(30)));

  auto bad = run({"edit", "--session", id, "--server", url, "frobnicate the widget"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(json::parse(bad.out)["code"], "unrecognized_verb");
  auto good = run({"edit", "--session", id, "--server", url, "Add an instance MUX_1 of module mux_4 within GPE_4"});
  EXPECT_EQ(good.code, 0) << good.out;
  EXPECT_EQ(json::parse(good.out)["new_revision"], 1);
  auto ap = run({"approve", "--session", id, "--server", url});
  EXPECT_EQ(ap.code, 0) << ap.out;
  ASSERT_TRUE(svc.live(id)->wait_done(std::chrono::seconds(30)));
  EXPECT_EQ(run({"approve", "--session", id, "--server", url}).code, 1);
  EXPECT_EQ(run({"edit", "--session", "nope", "--server", url, "x"}).code, 1);
  svc.stop();
}

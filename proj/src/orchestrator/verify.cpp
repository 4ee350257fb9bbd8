#include "hivegen/orchestrator/verify.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hivegen/core/error.hpp"

namespace hivegen {

namespace fs = std::filesystem;

std::string_view to_string(VerificationResult::Kind k) {
  return k == VerificationResult::Kind::Functional ? "functional" : "syntax";
}

nlohmann::json to_json(const VerificationResult& v) {
  return {{"kind", std::string(to_string(v.kind))}, {"passed", v.passed}, {"log", v.log}};
}

VerificationResult verification_from_json(const nlohmann::json& j) {
  VerificationResult v;
  v.kind = j.value("kind", std::string("syntax")) == "functional" ? VerificationResult::Kind::Functional
                                                                  : VerificationResult::Kind::Syntax;
  v.passed = j.value("passed", false);
  v.log = j.value("log", std::string());
  return v;
}

namespace {

VerificationResult fail(std::string log) { return {VerificationResult::Kind::Syntax, false, std::move(log)}; }

}  // namespace

VerificationResult check_structure(const std::string& source, const ModuleSpec& spec,
                                   const std::map<std::string, verilog::Module>& children) {
  if (source.find_first_not_of(" \t\r\n") == std::string::npos) return fail("empty source");
  auto parsed = verilog::parse(source);
  if (!parsed.ok()) return fail("parse error: " + parsed.error_text());
  const auto* m = parsed.find(spec.name);
  if (!m) return fail("module " + spec.name + " not defined");

  std::ostringstream log;
  bool ok = true;
  if (!spec.ports.empty()) {
    for (const auto& want : spec.ports) {
      const auto* got = m->find_port(want.name);
      if (!got) {
        log << "port " << want.name << " missing\n";
        ok = false;
        continue;
      }
      if (got->direction != want.direction) {
        log << "port " << want.name << " is " << to_string(got->direction) << ", expected "
            << to_string(want.direction) << "\n";
        ok = false;
      }
      if (got->width_known && got->width != want.width) {
        log << "port " << want.name << " has width " << got->width << ", expected " << want.width << "\n";
        ok = false;
      }
    }
    for (const auto& got : m->ports)
      if (!spec.find_port(got.name)) {
        log << "port " << got.name << " not in spec\n";
        ok = false;
      }
  }

  std::map<std::string, int> want_count, got_count;
  for (const auto& i : spec.instances) ++want_count[i.module_name];
  for (const auto& i : m->instances) ++got_count[i.module];
  for (const auto& [child, n] : want_count)
    if (got_count[child] != n) {
      log << "expected " << n << " instance(s) of " << child << ", found " << got_count[child] << "\n";
      ok = false;
    }
  for (const auto& [child, n] : got_count)
    if (n > 0 && !want_count.contains(child)) {
      log << "unexpected instance(s) of " << child << "\n";
      ok = false;
    }
  for (const auto& inst : m->instances) {
    auto it = children.find(inst.module);
    if (it == children.end()) continue;
    for (const auto& c : inst.connections)
      if (!c.port.empty() && !it->second.find_port(c.port)) {
        log << "instance " << inst.name << " connects unknown port " << c.port << " of " << inst.module << "\n";
        ok = false;
      }
  }
  if (!ok) return fail(log.str());
  return {VerificationResult::Kind::Syntax, true, "structure ok"};
}

std::optional<SimulatorConfig> detect_simulator() {
  if (std::system("command -v iverilog >/dev/null 2>&1") == 0) return SimulatorConfig{};
  return std::nullopt;
}

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

std::string quote(const std::string& s) { return "'" + replace_all(s, "'", "'\\''") + "'"; }

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    auto base = fs::temp_directory_path();
    for (int i = 0; i < 100; ++i) {
      auto p = base / ("hivegen-sim-" + std::to_string(rd()));
      std::error_code ec;
      if (fs::create_directory(p, ec)) {
        path_ = p;
        return;
      }
    }
    throw Error(ErrorCode::Tool, "cannot create a scratch directory for simulation");
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

SimulationRun run_simulator(const SimulatorConfig& sim, const std::map<std::string, std::string>& files,
                            const std::string& top) {
  ScratchDir dir;
  std::string file_list;
  for (const auto& [name, text] : files) {
    auto p = dir.path() / name;
    std::ofstream(p) << text;
    if (!file_list.empty()) file_list += ' ';
    file_list += quote(p.string());
  }
  auto cmd = sim.command;
  cmd = replace_all(cmd, "{out}", quote((dir.path() / "sim.out").string()));
  cmd = replace_all(cmd, "{files}", file_list);
  cmd = replace_all(cmd, "{top}", top);
  cmd = replace_all(cmd, "{dir}", quote(dir.path().string()));
  auto full = "cd " + quote(dir.path().string()) + " && { " + cmd + " ; } 2>&1";

  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) throw Error(ErrorCode::Tool, "cannot launch simulator: " + sim.command);
  SimulationRun run;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) run.output.append(buf.data(), n);
  int status = ::pclose(pipe);
  if (status == -1) throw Error(ErrorCode::Tool, "simulator did not terminate cleanly: " + sim.command);
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  if (run.exit_code == 127)
    throw Error(ErrorCode::Tool, "simulator command not found: " + sim.command + "\n" + run.output);
  run.sentinel = run.output.find(kPassSentinel) != std::string::npos;
  return run;
}

VerificationResult verify_block(const std::string& source, const ModuleSpec& spec,
                                const std::map<std::string, verilog::Module>& children,
                                const std::optional<SimulatorConfig>& sim,
                                const std::optional<std::string>& testbench,
                                const std::map<std::string, std::string>& dependency_sources) {
  auto structural = check_structure(source, spec, children);
  if (!structural.passed || !sim || !testbench) return structural;

  auto tb = verilog::parse(*testbench);
  std::string top = tb.modules.empty() ? "tb" : tb.modules.front().name;
  std::map<std::string, std::string> files;
  for (const auto& [name, text] : dependency_sources) files[name + ".v"] = text;
  files[spec.name + ".v"] = source;
  files["tb_" + spec.name + ".v"] = *testbench;
  auto run = run_simulator(*sim, files, top);
  VerificationResult v{VerificationResult::Kind::Functional, run.passed(), run.output};
  if (!v.passed && run.exit_code == 0) v.log += "\n(missing \"" + std::string(kPassSentinel) + "\" sentinel)";
  return v;
}

}  // namespace hivegen

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/model.hpp"
#include "hivegen/core/verilog.hpp"

namespace hivegen {

struct VerificationResult {
  enum class Kind { Syntax, Functional };
  Kind kind = Kind::Syntax;
  bool passed = false;
  std::string log;
};

std::string_view to_string(VerificationResult::Kind k);
nlohmann::json to_json(const VerificationResult& v);
VerificationResult verification_from_json(const nlohmann::json& j);

/// Built-in check of one block against its spec:
///  - the source parses and defines a module named spec.name
///  - ports match spec.ports by name, direction and width (skipped when the
///    spec declares no ports yet)
///  - the module instantiates each child exactly as often as spec.instances
///  - named connections refer to ports that exist on children in `children`
VerificationResult check_structure(const std::string& source, const ModuleSpec& spec,
                                   const std::map<std::string, verilog::Module>& children = {});

struct SimulatorConfig {
  /// Placeholders: {out} output binary, {files} space-separated sources,
  /// {top} testbench module, {dir} scratch directory.
  std::string command = "iverilog -o {out} {files} && vvp {out}";
};

/// Default simulator when `iverilog` is on PATH.
std::optional<SimulatorConfig> detect_simulator();

struct SimulationRun {
  int exit_code = 0;
  std::string output;
  bool sentinel = false;  // "ALL TESTS PASSED" seen
  [[nodiscard]] bool passed() const { return exit_code == 0 && sentinel; }
};

inline constexpr std::string_view kPassSentinel = "ALL TESTS PASSED";

/// Writes `files` (file name -> text) into a scratch directory and runs the
/// configured command there. Throws Error(Tool) when the command cannot be
/// launched (shell failure or exit status 127).
SimulationRun run_simulator(const SimulatorConfig& sim, const std::map<std::string, std::string>& files,
                            const std::string& top);

/// Structural check, then (with a simulator and a testbench) a functional
/// run over `sources` + block + testbench. Without a simulator or testbench
/// the result stays kind=syntax. Throws Error(Tool) from run_simulator.
VerificationResult verify_block(const std::string& source, const ModuleSpec& spec,
                                const std::map<std::string, verilog::Module>& children,
                                const std::optional<SimulatorConfig>& sim,
                                const std::optional<std::string>& testbench,
                                const std::map<std::string, std::string>& dependency_sources = {});

}  // namespace hivegen

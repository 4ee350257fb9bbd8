#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "hivegen/core/error.hpp"
#include "hivegen/core/hash.hpp"
#include "hivegen/core/json_io.hpp"
#include "hivegen/core/verilog.hpp"
#include "hivegen/llm/backend.hpp"
#include "hivegen/metrics/metrics.hpp"
#include "hivegen/orchestrator/orchestrator.hpp"
#include "hivegen/parse/command.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

std::string parse_verilog_json(const std::string& source) {
  auto parsed = hivegen::verilog::parse(source);
  json modules = json::array();
  for (const auto& m : parsed.modules) modules.push_back(m.to_spec());
  return json{{"ok", parsed.ok()}, {"errors", parsed.error_text()}, {"modules", modules}}.dump();
}

std::string parse_command_json(const std::string& text) {
  try {
    auto p = hivegen::parse::parse_command(text);
    return json{{"ok", true},
                {"rule", p.rule},
                {"command", hivegen::parse::to_json(p.command)},
                {"ls_tree", hivegen::parse::to_json(p.tree)}}
        .dump();
  } catch (const hivegen::Error& e) {
    return json{{"ok", false}, {"code", std::string(hivegen::to_string(e.code()))}, {"message", e.what()}}.dump();
  }
}

// options: {fixtures, library, sessions_dir, deterministic, simulator, worker_count}
std::string run_session_json(const std::string& request, const std::string& options) {
  auto opts_json = json::parse(options);
  hivegen::OrchestratorOptions opts;
  opts.config.deterministic_mode = opts_json.value("deterministic", true);
  opts.config.worker_count = opts_json.value("worker_count", 1);
  opts.sessions_dir = opts_json.value("sessions_dir", std::string());
  if (opts_json.contains("simulator") && opts_json["simulator"].is_string())
    opts.simulator = hivegen::SimulatorConfig{opts_json["simulator"].get<std::string>()};
  auto backend = std::make_shared<hivegen::llm::ReplayBackend>(opts_json.at("fixtures").get<std::string>());
  auto lib_path = opts_json.value("library", std::string());
  auto policy = hivegen::library::LibraryPolicy::from(opts.config);
  auto lib = lib_path.empty() ? std::make_shared<hivegen::library::CodeLibrary>(policy)
                              : std::make_shared<hivegen::library::CodeLibrary>(
                                    hivegen::library::CodeLibrary::open(lib_path, policy));
  hivegen::Orchestrator orch(opts, backend, lib, std::make_shared<hivegen::library::HashEmbedder>());
  auto req = hivegen::session_request_from_json(json::parse(request));
  hivegen::GenerationSession s;
  {
    py::gil_scoped_release release;
    s = orch.run(req);
  }
  return hivegen::to_json(s).dump();
}

}  // namespace

PYBIND11_MODULE(_hivegen, m) {
  m.doc() = "Native core of the hivegen hardware generation toolkit";

  static py::exception<hivegen::Error> error(m, "HivegenError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const hivegen::Error& e) {
      py::set_error(error, (std::string(hivegen::to_string(e.code())) + ": " + e.what()).c_str());
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("count_tokens", [](const std::string& text) { return hivegen::llm::count_tokens(text); }, py::arg("text"));
  m.def("pass_at_k", &hivegen::metrics::pass_at_k, py::arg("n"), py::arg("c"), py::arg("k"));
  m.def(
      "pass_at_k_exact",
      [](int n, int c, int k) {
        auto f = hivegen::metrics::pass_at_k_exact(n, c, k);
        return py::make_tuple(f.num, f.den);
      },
      py::arg("n"), py::arg("c"), py::arg("k"));
  m.def("token_savings", &hivegen::metrics::token_savings, py::arg("baseline_tokens"), py::arg("ours_tokens"));
  m.def("format_fixed", &hivegen::metrics::format_fixed, py::arg("value"), py::arg("decimals"));
  m.def("canonicalize_source", [](const std::string& s) { return hivegen::canonicalize_source(s); });
  m.def("hash_block", [](const std::string& s) { return hivegen::to_hex(hivegen::hash_block(s)); });
  m.def("_parse_verilog", &parse_verilog_json);
  m.def("_parse_command", &parse_command_json);
  m.def("_run_session", &run_session_json);
  m.attr("DATA_DIR") = HIVEGEN_DATA_DIR;
}

#pragma once
// Proxy PPA estimator over the structural parse of a design. The numbers are
// plumbing for ordinal comparisons; every estimate carries method "proxy".
//
//   area  = sum over flattened instances of (instance overhead
//           + op counts x op area + register bits x bit area)
//   power = alpha * area + beta * register bits
//   clock = gamma * logic depth
//
// Logic depth of a module with instances is the longest path through its
// instance/net graph, each instance contributing its own depth. Instances of
// pure register modules (sequential, no arithmetic or logic operators, no
// children) start a new path. A leaf has depth 1 when it contains any logic.

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/verilog.hpp"

namespace hivegen {

struct PpaCalibration {
  std::map<std::string, double> op_area_um2{{"add", 28}, {"sub", 28}, {"mul", 210}, {"shift", 22},
                                            {"cmp", 18},  {"mux", 9},  {"logic", 2.5}};
  double register_bit_area_um2 = 4.6;
  double instance_area_um2 = 6;
  double alpha_mw_per_um2 = 0.00035;
  double beta_mw_per_register_bit = 0.0021;
  double gamma_ns_per_level = 0.42;

  static PpaCalibration from_json(const nlohmann::json& j);
  /// Throws Error(NotFound) or Error(Syntax).
  static PpaCalibration load(const std::string& path);
};

struct PpaEstimate {
  double power_mw = 0;
  double clock_ns = 0;
  double area_um2 = 0;
  std::string method = "proxy";
  int logic_depth = 0;
  std::int64_t register_bits = 0;
  std::int64_t instances = 0;  // flattened, including the top
};

nlohmann::json to_json(const PpaEstimate& p);

/// `top` empty or absent from `design` yields the zero estimate.
PpaEstimate estimate_ppa(const std::vector<verilog::Module>& design, const std::string& top, const PpaCalibration& cal);

/// Parses `sources` (module name -> text). Throws Error(Tool) when a source
/// does not parse.
PpaEstimate estimate_ppa(const std::map<std::string, std::string>& sources, const std::string& top,
                         const PpaCalibration& cal);

}  // namespace hivegen

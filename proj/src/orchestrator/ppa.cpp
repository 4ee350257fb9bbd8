#include "hivegen/orchestrator/ppa.hpp"

#include <fstream>
#include <functional>
#include <set>

#include "hivegen/core/error.hpp"

namespace hivegen {

PpaCalibration PpaCalibration::from_json(const nlohmann::json& j) {
  PpaCalibration c;
  if (j.contains("op_area_um2"))
    for (const auto& [k, v] : j.at("op_area_um2").items()) c.op_area_um2[k] = v.get<double>();
  c.register_bit_area_um2 = j.value("register_bit_area_um2", c.register_bit_area_um2);
  c.instance_area_um2 = j.value("instance_area_um2", c.instance_area_um2);
  c.alpha_mw_per_um2 = j.value("alpha_mw_per_um2", c.alpha_mw_per_um2);
  c.beta_mw_per_register_bit = j.value("beta_mw_per_register_bit", c.beta_mw_per_register_bit);
  c.gamma_ns_per_level = j.value("gamma_ns_per_level", c.gamma_ns_per_level);
  return c;
}

PpaCalibration PpaCalibration::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open calibration file " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Syntax, "calibration file " + path + ": " + e.what());
  }
}

nlohmann::json to_json(const PpaEstimate& p) {
  return {{"power_mw", p.power_mw},   {"clock_ns", p.clock_ns},           {"area_um2", p.area_um2},
          {"method", p.method},       {"logic_depth", p.logic_depth},     {"register_bits", p.register_bits},
          {"instances", p.instances}};
}

namespace {

class Estimator {
 public:
  Estimator(const std::vector<verilog::Module>& design, const PpaCalibration& cal) : cal_(cal) {
    for (const auto& m : design) by_name_.emplace(m.name, &m);
  }

  bool has(const std::string& name) const { return by_name_.contains(name); }

  struct Totals {
    double area = 0;
    std::int64_t reg_bits = 0;
    std::int64_t instances = 0;
  };

  Totals totals(const std::string& name) {
    if (auto it = totals_.find(name); it != totals_.end()) return it->second;
    guard(name);
    const auto& m = *by_name_.at(name);
    Totals t;
    t.instances = 1;
    t.area = cal_.instance_area_um2 + m.register_bits * cal_.register_bit_area_um2;
    const std::pair<const char*, int> ops[] = {{"add", m.ops.add},     {"sub", m.ops.sub}, {"mul", m.ops.mul},
                                               {"shift", m.ops.shift}, {"cmp", m.ops.cmp}, {"mux", m.ops.mux},
                                               {"logic", m.ops.logic}};
    for (const auto& [k, n] : ops)
      if (auto a = cal_.op_area_um2.find(k); a != cal_.op_area_um2.end()) t.area += n * a->second;
    t.reg_bits = m.register_bits;
    for (const auto& inst : m.instances) {
      if (!has(inst.module)) continue;
      auto c = totals(inst.module);
      t.area += c.area;
      t.reg_bits += c.reg_bits;
      t.instances += c.instances;
    }
    active_.erase(name);
    totals_[name] = t;
    return t;
  }

  int depth(const std::string& name) {
    if (auto it = depth_.find(name); it != depth_.end()) return it->second;
    guard(name);
    const auto& m = *by_name_.at(name);
    int d = 0;
    if (m.instances.empty()) {
      d = (m.ops.total() > 0 || !m.assigns.empty()) ? 1 : 0;
    } else {
      d = graph_depth(m);
      if (d == 0 && m.ops.total() > 0) d = 1;
    }
    active_.erase(name);
    depth_[name] = d;
    return d;
  }

 private:
  void guard(const std::string& name) {
    if (!active_.insert(name).second) throw Error(ErrorCode::Cycle, "module " + name + " instantiates itself");
  }

  bool register_only(const verilog::Module& m) const {
    const auto& o = m.ops;
    return m.sequential && m.instances.empty() && o.add + o.sub + o.mul + o.shift + o.cmp + o.logic == 0;
  }

  // Nodes: instances [0, n) and nets [n, ...). Weighted longest path, with
  // back edges dropped at the first revisit.
  int graph_depth(const verilog::Module& m) {
    const std::size_t n = m.instances.size();
    std::map<std::string, std::size_t> net_id;
    auto net = [&](const std::string& s) {
      auto [it, fresh] = net_id.emplace(s, n + net_id.size());
      return it->second;
    };
    std::vector<int> weight(n, 0);
    std::vector<bool> cut(n, false);
    std::map<std::size_t, std::vector<std::size_t>> succ;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& inst = m.instances[i];
      auto it = by_name_.find(inst.module);
      const verilog::Module* child = it == by_name_.end() ? nullptr : it->second;
      if (child) {
        weight[i] = std::max(1, depth(inst.module));
        cut[i] = register_only(*child);
      } else {
        weight[i] = 1;
      }
      for (std::size_t k = 0; k < inst.connections.size(); ++k) {
        const auto& c = inst.connections[k];
        const verilog::Port* port = nullptr;
        if (child) {
          if (!c.port.empty()) port = child->find_port(c.port);
          else if (k < child->ports.size()) port = &child->ports[k];
        }
        Direction dir = port ? port->direction : Direction::Inout;
        for (const auto& s : verilog::referenced_nets(c.expr)) {
          auto id = net(s);
          if (dir != Direction::Input) succ[i].push_back(id);
          if (dir != Direction::Output) succ[id].push_back(i);
        }
      }
    }
    for (const auto& a : m.assigns) {
      auto lhs = verilog::referenced_nets(a.lhs);
      for (const auto& r : verilog::referenced_nets(a.rhs))
        for (const auto& l : lhs) succ[net(r)].push_back(net(l));
    }
    const std::size_t total = n + net_id.size();
    std::vector<int> memo(total, -1);
    std::vector<bool> on_stack(total, false);
    // longest weighted path starting at node v (v's own weight included)
    std::function<int(std::size_t)> from = [&](std::size_t v) -> int {
      if (memo[v] >= 0) return memo[v];
      on_stack[v] = true;
      int best = 0;
      for (auto w : succ[v]) {
        if (on_stack[w]) continue;
        if (w < n && cut[w]) continue;  // a register captures the path
        best = std::max(best, from(w));
      }
      on_stack[v] = false;
      int self = v < n ? weight[v] : 0;
      if (v < n && cut[v]) self = 0;
      return memo[v] = self + best;
    };
    int d = 0;
    for (std::size_t v = 0; v < n; ++v) {
      // a path may start at any instance; a register instance launches a fresh path
      d = std::max(d, from(v));
    }
    return d;
  }

  const PpaCalibration& cal_;
  std::map<std::string, const verilog::Module*> by_name_;
  std::map<std::string, Totals> totals_;
  std::map<std::string, int> depth_;
  std::set<std::string> active_;
};

}  // namespace

PpaEstimate estimate_ppa(const std::vector<verilog::Module>& design, const std::string& top, const PpaCalibration& cal) {
  PpaEstimate out;
  Estimator est(design, cal);
  if (top.empty() || !est.has(top)) return out;
  auto t = est.totals(top);
  out.area_um2 = t.area;
  out.register_bits = t.reg_bits;
  out.instances = t.instances;
  out.logic_depth = est.depth(top);
  out.power_mw = cal.alpha_mw_per_um2 * t.area + cal.beta_mw_per_register_bit * static_cast<double>(t.reg_bits);
  out.clock_ns = cal.gamma_ns_per_level * out.logic_depth;
  return out;
}

PpaEstimate estimate_ppa(const std::map<std::string, std::string>& sources, const std::string& top,
                         const PpaCalibration& cal) {
  std::string all;
  for (const auto& [name, text] : sources) all += text + "\n";
  auto parsed = verilog::parse(all);
  if (!parsed.ok()) throw Error(ErrorCode::Tool, "cannot estimate PPA: " + parsed.error_text());
  return estimate_ppa(parsed.modules, top, cal);
}

}  // namespace hivegen

#include "hivegen/parse/tasks.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "hivegen/core/error.hpp"

namespace hivegen::parse {

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::Pending: return "pending";
    case TaskStatus::Generating: return "generating";
    case TaskStatus::Done: return "done";
    case TaskStatus::Failed: return "failed";
  }
  return "?";
}

std::optional<TaskStatus> parse_task_status(std::string_view s) {
  if (s == "pending") return TaskStatus::Pending;
  if (s == "generating") return TaskStatus::Generating;
  if (s == "done") return TaskStatus::Done;
  if (s == "failed") return TaskStatus::Failed;
  return std::nullopt;
}

const Task* TaskList::find(std::string_view module) const {
  for (const auto& t : tasks)
    if (t.module_name == module) return &t;
  return nullptr;
}

std::optional<std::size_t> TaskList::index_of(std::string_view module) const {
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (tasks[i].module_name == module) return i;
  return std::nullopt;
}

std::vector<std::string> TaskList::order() const {
  std::vector<std::string> out;
  for (const auto& t : tasks) out.push_back(t.module_name);
  return out;
}

std::vector<std::string> TaskList::dependencies_of(std::string_view module) const {
  std::vector<std::string> out;
  for (const auto& [m, dep] : dependency_edges)
    if (m == module && std::find(out.begin(), out.end(), dep) == out.end()) out.push_back(dep);
  return out;
}

void TaskList::set_status(std::string_view module, TaskStatus s) {
  for (auto& t : tasks)
    if (t.module_name == module) {
      t.status = s;
      return;
    }
  throw Error(ErrorCode::NotFound, "no task for module " + std::string(module));
}

std::vector<PromptModule> dedup_modules(const HierarchicalPrompt& prompt) {
  std::vector<PromptModule> out;
  std::map<std::string, std::size_t> pos;
  for (const auto& m : prompt.modules) {
    auto it = pos.find(m.name);
    if (it == pos.end()) {
      pos[m.name] = out.size();
      out.push_back(m);
      continue;
    }
    auto& first = out[it->second];
    if (first.ports.empty() && !m.ports.empty()) first.ports = m.ports;
    if (first.description.empty()) first.description = m.description;
    for (const auto& inst : m.instances) {
      bool known = std::any_of(first.instances.begin(), first.instances.end(),
                               [&](const InstanceRef& x) { return x.instance_name == inst.instance_name; });
      if (!known) first.instances.push_back(inst);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (const auto& inst : out[i].instances) {
      if (pos.contains(inst.module_name)) continue;
      pos[inst.module_name] = out.size();
      PromptModule stub;
      stub.name = inst.module_name;
      stub.level = out[i].level + 1;
      out.push_back(std::move(stub));
    }
  }
  return out;
}

namespace {

[[noreturn]] void throw_cycle(const std::vector<std::string>& stack, const std::string& again) {
  auto it = std::find(stack.begin(), stack.end(), again);
  std::string text = "cycle ";
  for (; it != stack.end(); ++it) text += *it + "→";
  text += again;
  throw Error(ErrorCode::Cycle, text);
}

}  // namespace

TaskList build_task_list(const HierarchicalPrompt& prompt) {
  auto modules = dedup_modules(prompt);
  if (modules.empty()) throw Error(ErrorCode::InvalidArgument, "prompt names no modules");
  std::map<std::string, const PromptModule*> by_name;
  for (const auto& m : modules) by_name[m.name] = &m;

  std::string top = prompt.top;
  if (top.empty() || !by_name.contains(top)) {
    std::set<std::string> used;
    for (const auto& m : modules)
      for (const auto& i : m.instances) used.insert(i.module_name);
    top.clear();
    for (const auto& m : modules)
      if (!used.contains(m.name)) {
        top = m.name;
        break;
      }
    if (top.empty()) top = modules.front().name;
  }

  TaskList out;
  std::set<std::string> done, active;
  std::vector<std::string> stack;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    if (done.contains(name)) return;
    if (active.contains(name)) throw_cycle(stack, name);
    active.insert(name);
    stack.push_back(name);
    for (const auto& inst : by_name.at(name)->instances) {
      std::pair<std::string, std::string> edge{name, inst.module_name};
      if (std::find(out.dependency_edges.begin(), out.dependency_edges.end(), edge) == out.dependency_edges.end())
        out.dependency_edges.push_back(edge);
      visit(inst.module_name);
    }
    stack.pop_back();
    active.erase(name);
    done.insert(name);
    out.tasks.push_back({name, TaskStatus::Pending});
  };
  for (const auto& m : modules)
    if (m.name != top) visit(m.name);
  visit(top);
  return out;
}

void restore_order(TaskList& tl) {
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < tl.tasks.size(); ++i) rank[tl.tasks[i].module_name] = i;
  std::map<std::string, std::vector<std::string>> deps;
  for (const auto& [m, d] : tl.dependency_edges)
    if (rank.contains(m) && rank.contains(d)) deps[m].push_back(d);

  std::vector<Task> out;
  std::set<std::string> done, active;
  std::vector<std::string> stack;
  std::map<std::string, Task> by_name;
  for (const auto& t : tl.tasks) by_name[t.module_name] = t;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    if (done.contains(name)) return;
    if (active.contains(name)) throw_cycle(stack, name);
    active.insert(name);
    stack.push_back(name);
    auto ds = deps[name];
    std::sort(ds.begin(), ds.end(), [&](const auto& a, const auto& b) { return rank[a] < rank[b]; });
    for (const auto& d : ds) visit(d);
    stack.pop_back();
    active.erase(name);
    done.insert(name);
    out.push_back(by_name[name]);
  };
  for (const auto& t : tl.tasks) visit(t.module_name);
  tl.tasks = std::move(out);
}

nlohmann::json to_json(const TaskList& t) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& x : t.tasks) tasks.push_back({{"module_name", x.module_name}, {"status", to_string(x.status)}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [m, d] : t.dependency_edges) edges.push_back({m, d});
  return {{"tasks", tasks}, {"dependency_edges", edges}};
}

TaskList task_list_from_json(const nlohmann::json& j) {
  TaskList t;
  for (const auto& x : j.at("tasks")) {
    auto st = parse_task_status(x.at("status").get<std::string>());
    if (!st) throw Error(ErrorCode::InvalidArgument, "bad task status " + x.at("status").dump());
    t.tasks.push_back({x.at("module_name").get<std::string>(), *st});
  }
  for (const auto& e : j.value("dependency_edges", nlohmann::json::array()))
    t.dependency_edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  return t;
}

}  // namespace hivegen::parse

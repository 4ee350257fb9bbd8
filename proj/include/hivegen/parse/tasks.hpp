#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/prompt.hpp"

namespace hivegen::parse {

enum class TaskStatus { Pending, Generating, Done, Failed };
std::string_view to_string(TaskStatus s);
std::optional<TaskStatus> parse_task_status(std::string_view s);

struct Task {
  std::string module_name;
  TaskStatus status = TaskStatus::Pending;
  friend bool operator==(const Task&, const Task&) = default;
};

struct TaskList {
  std::vector<Task> tasks;
  // (module, depends_on)
  std::vector<std::pair<std::string, std::string>> dependency_edges;

  [[nodiscard]] const Task* find(std::string_view module) const;
  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view module) const;
  [[nodiscard]] std::vector<std::string> order() const;
  [[nodiscard]] std::vector<std::string> dependencies_of(std::string_view module) const;
  void set_status(std::string_view module, TaskStatus s);

  friend bool operator==(const TaskList&, const TaskList&) = default;
};

/// Prompt modules with duplicates folded into their first mention. A later
/// mention contributes its ports when the first had none and any instances
/// whose names are new. Modules that are instantiated but never described
/// are appended as port-less entries.
std::vector<PromptModule> dedup_modules(const HierarchicalPrompt& prompt);

/// Leaf-first order: depth-first post-order over modules in first-mention
/// order, top module last. Throws Error(Cycle) naming the cycle.
TaskList build_task_list(const HierarchicalPrompt& prompt);

/// Re-sorts `tasks` so dependencies precede dependents while keeping the
/// existing relative order wherever possible. Throws Error(Cycle).
void restore_order(TaskList& tasks);

nlohmann::json to_json(const TaskList& t);
TaskList task_list_from_json(const nlohmann::json& j);

}  // namespace hivegen::parse

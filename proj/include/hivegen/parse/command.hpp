#pragma once
// Natural-language edit commands.
//
// Grammar (case-insensitive keywords, optional words in brackets):
//   add [a|an|the] instance <NAME> of [module] <MODULE> (within|in|into) [module] <PARENT>
//   add [a|an|the] port <DIR> <NAME>[<width>|<msb>:<lsb>] to [module] <PARENT>
//   remove [the] [instance] <NAME> from [module] <PARENT>
//   remove [the] [port] <NAME> from [module] <PARENT>
//   rename module <OLD> to <NEW>
//   connect [port] <INSTANCE>.<PORT> to [net] <NET> in [module] <PARENT>
//
// "remove X from Y" matches both remove rules and is reported as ambiguous.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/model.hpp"
#include "hivegen/parse/sketch.hpp"
#include "hivegen/parse/tasks.hpp"

namespace hivegen::parse {

struct AddInstance {
  std::string module, instance, parent;
  friend bool operator==(const AddInstance&, const AddInstance&) = default;
};
struct RemoveInstance {
  std::string instance, parent;
  friend bool operator==(const RemoveInstance&, const RemoveInstance&) = default;
};
struct RenameModule {
  std::string old_name, new_name;
  friend bool operator==(const RenameModule&, const RenameModule&) = default;
};
struct AddPort {
  std::string parent;
  PortDecl port;
  friend bool operator==(const AddPort&, const AddPort&) = default;
};
struct RemovePort {
  std::string parent, name;
  friend bool operator==(const RemovePort&, const RemovePort&) = default;
};
struct Connect {
  std::string parent, instance, port, net;
  friend bool operator==(const Connect&, const Connect&) = default;
};

using EditCommand = std::variant<AddInstance, RemoveInstance, RenameModule, AddPort, RemovePort, Connect>;

enum class Role { RootVerb, Dobj, Prep, Pobj, NpModifier, Det, Other };
std::string_view to_string(Role r);
/// Short label for display: "root", "dobj", "prep", "pobj", "NP", "det", "other".
std::string_view role_label(Role r);

struct LsToken {
  std::string text;
  Role role = Role::Other;
  int head = -1;  // index of the governing token, -1 for the root
  friend bool operator==(const LsToken&, const LsToken&) = default;
};

struct LsTree {
  std::vector<LsToken> tokens;
  [[nodiscard]] const LsToken& root() const;
  /// First token carrying `role`, if any.
  [[nodiscard]] const LsToken* first(Role role) const;
};

struct ParsedCommand {
  LsTree tree;
  EditCommand command;
  std::string rule;  // grammar rule name
};

/// Throws Error(UnrecognizedVerb | MissingArgument | AmbiguousCommand | MalformedCommand).
ParsedCommand parse_command(std::string_view text);

/// Canonical sentence; parse_command(unparse(c)).command == c.
std::string unparse(const EditCommand& c);

std::string_view command_kind(const EditCommand& c);
/// Module whose sketch the command edits (old name for renames).
std::string command_target(const EditCommand& c);

nlohmann::json to_json(const EditCommand& c);
EditCommand command_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LsTree& t);

struct EditResult {
  SketchSet sketches;
  TaskList tasks;
  std::vector<std::string> touched;  // sketches whose revision moved
};

/// Pure: inputs are never modified. Throws Error(UnknownParent |
/// DuplicateInstanceName | DuplicatePort | DuplicateModule | NotFound |
/// InvalidArgument | Cycle); on error nothing changes.
EditResult apply_edit(const SketchSet& sketches, const TaskList& tasks, const EditCommand& cmd);

}  // namespace hivegen::parse

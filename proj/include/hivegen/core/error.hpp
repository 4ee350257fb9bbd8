#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hivegen {

/// Machine-readable error category. The string form is what the CLI and the
/// HTTP service report in `{code, message}` bodies.
enum class ErrorCode {
  InvalidArgument,
  NotFound,
  Cycle,
  Syntax,
  UseBeforeDef,
  UnknownParameter,
  UnassignedPlaceholder,
  UnrecognizedVerb,
  MissingArgument,
  AmbiguousCommand,
  MalformedCommand,
  UnknownParent,
  DuplicateInstanceName,
  DuplicatePort,
  DuplicateModule,
  FixtureMiss,
  Transport,
  ProposalFailed,
  EmbedUnavailable,
  Storage,
  Tool,
  Assembly,
  ModuleFailed,
  Domain,
  Conflict,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hivegen

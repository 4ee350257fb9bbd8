#pragma once
// Shared data model: ports, instances, module specs, hierarchies, code blocks
// and run configuration. Everything here is a plain value type.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hivegen {

/// Legal HDL identifier: `[A-Za-z_][A-Za-z0-9_]*`.
bool is_identifier(std::string_view text);

enum class Direction { Input, Output, Inout };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

struct PortDecl {
  std::string name;
  Direction direction = Direction::Input;
  int width = 1;

  friend bool operator==(const PortDecl&, const PortDecl&) = default;
};

struct InstanceRef {
  std::string module_name;
  std::string instance_name;
  // port name -> net name; empty means the port mapping is still unknown
  std::map<std::string, std::string> connections;

  friend bool operator==(const InstanceRef&, const InstanceRef&) = default;
};

enum class BodyState { Placeholder, Filled };

struct ModuleSpec {
  std::string name;
  std::vector<PortDecl> ports;
  std::map<std::string, std::int64_t> parameters;
  std::vector<InstanceRef> instances;
  BodyState body_state = BodyState::Placeholder;

  [[nodiscard]] const PortDecl* find_port(std::string_view port) const;
  [[nodiscard]] const InstanceRef* find_instance(std::string_view instance) const;

  friend bool operator==(const ModuleSpec&, const ModuleSpec&) = default;
};

struct DesignHierarchy {
  std::string root;
  std::map<std::string, ModuleSpec> modules;

  friend bool operator==(const DesignHierarchy&, const DesignHierarchy&) = default;
};

using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(const Digest& d);
std::optional<Digest> digest_from_hex(std::string_view hex);

struct CodeBlock {
  std::uint64_t id = 0;
  std::string module_name;
  std::string source;
  Digest content_hash{};
  bool verified = false;

  friend bool operator==(const CodeBlock&, const CodeBlock&) = default;
};

/// Builds a block whose hash is computed from `source`.
CodeBlock make_block(std::string module_name, std::string source, bool verified);

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    total_tokens += o.total_tokens;
    return *this;
  }
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct LlmParams {
  std::string model_id = "gpt-4";
  double temperature = 0.5;
  double top_p = 0.9;
  int max_output_tokens = 2048;

  friend bool operator==(const LlmParams&, const LlmParams&) = default;
};

/// Throws Error(InvalidArgument) when temperature/top_p are out of range.
void validate(const LlmParams& params);

struct GenerationConfig {
  int max_retries = 3;             // k
  int second_chance_trigger = 10;  // m
  int garbage_mark = 30;           // j
  double retrieval_threshold = 0.45;
  LlmParams llm_params;
  int worker_count = 1;
  bool deterministic_mode = false;
  int round_budget = 5;

  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

void validate(const GenerationConfig& config);

// ---- hierarchy validation -------------------------------------------------

struct Violation {
  enum class Kind {
    MissingRoot,
    BadIdentifier,
    BadWidth,
    DuplicatePort,
    DuplicateInstance,
    UnresolvedModule,
    NameMismatch,
    Cycle,
  };
  Kind kind;
  std::string module;
  std::string instance;
  std::string message;
};

/// Empty result means the hierarchy is valid.
std::vector<Violation> validate_hierarchy(const DesignHierarchy& h);

/// Leaf-first order (every module after all modules it instantiates).
/// Throws Error(Cycle) if the instantiation graph has a cycle.
std::vector<std::string> topological_order(const DesignHierarchy& h);

}  // namespace hivegen

#pragma once
// Weighted code library.
//
// Retrieval score of an entry is cos(query, entry.embedding) * entry.weight.
// Weights start at 0.5 and move multiplicatively with outcomes (x1.06 on
// success, x0.9 on failure). A failing entry already below 0.3 gets one reset
// back to 0.5 (its "second chance"). Entries below 0.2, or still below 0.3
// after `garbage_mark` retrievals, are marked for collection; collection gives
// each marked entry one LLM refinement (the "third chance") before removal.
// Hashes of removed entries go to a permanent avoidance table.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/model.hpp"
#include "hivegen/library/embedding.hpp"

namespace hivegen::library {

struct LibraryPolicy {
  double success_factor = 1.06;
  double failure_factor = 0.9;
  double reset_weight = 0.5;
  double second_chance_floor = 0.3;
  double gc_floor = 0.2;
  double retrieval_threshold = 0.45;
  int m = 10;  // sibling retrievals before forced inclusion
  int j = 30;  // retrievals after which a still-poor entry is marked

  static LibraryPolicy from(const GenerationConfig& cfg);
  void validate() const;
};

struct LibraryEntry {
  CodeBlock block;
  Embedding embedding;
  double weight = 0.5;
  bool second_chance = true;
  int retrieval_count = 0;
  int sibling_skip_count = 0;
  bool gc_marked = false;
  bool forced_used = false;  // forced inclusion already granted
  std::optional<std::string> testbench;

  friend bool operator==(const LibraryEntry&, const LibraryEntry&) = default;
};

nlohmann::json to_json(const LibraryEntry& e);
LibraryEntry entry_from_json(const nlohmann::json& j);

enum class InsertStatus { Accepted, Unverified, Avoided, Duplicate };
std::string_view to_string(InsertStatus s);

struct InsertResult {
  InsertStatus status = InsertStatus::Accepted;
  std::uint64_t id = 0;  // assigned id when accepted, existing id on Duplicate
  [[nodiscard]] bool accepted() const { return status == InsertStatus::Accepted; }
};

struct RetrievalHit {
  LibraryEntry entry;  // snapshot after the counter updates
  double score = 0;    // cos * w
  double cosine = 0;
  bool forced = false;
};

/// Result of one refinement attempt during collection. An empty `block`
/// means the refinement failed verification.
struct Refinement {
  std::optional<CodeBlock> block;
  Embedding embedding;
  std::optional<std::string> testbench;
};

/// Called once per marked entry with the most similar unmarked same-module
/// entry (or nullptr). Throwing hivegen::Error defers the entry.
using Refiner = std::function<Refinement(const LibraryEntry& marked, const LibraryEntry* nearest)>;

struct GcReport {
  std::vector<std::uint64_t> refined;
  std::vector<std::uint64_t> removed;
  std::vector<std::uint64_t> deferred;
};

class CodeLibrary {
 public:
  explicit CodeLibrary(LibraryPolicy policy = {}, std::size_t dimension = 64);

  /// File-backed library; loads `path` (and `path + ".avoid"`) if present.
  /// Every successful mutation atomically rewrites both files.
  static CodeLibrary open(const std::string& path, LibraryPolicy policy = {},
                          std::size_t dimension = 64);

  CodeLibrary(CodeLibrary&& other) noexcept;
  CodeLibrary& operator=(CodeLibrary&&) = delete;
  CodeLibrary(const CodeLibrary&) = delete;

  InsertResult insert(const CodeBlock& block, const Embedding& embedding,
                      std::optional<std::string> testbench = std::nullopt);

  /// Highest cos*w over unmarked entries, or nullopt below the threshold.
  std::optional<RetrievalHit> retrieve(const Embedding& query, std::string_view module_name);

  /// Applies one outcome to every id; all ids must exist (Error(NotFound)).
  void record_outcome(const std::vector<std::uint64_t>& ids, bool success);
  /// Ordered batch of (id, success) pairs applied as one transaction.
  void record_outcomes(const std::vector<std::pair<std::uint64_t, bool>>& outcomes);

  GcReport run_gc(const Refiner& refiner);

  [[nodiscard]] std::vector<LibraryEntry> entries() const;
  [[nodiscard]] std::optional<LibraryEntry> get(std::uint64_t id) const;
  [[nodiscard]] std::set<Digest> avoidance() const;
  [[nodiscard]] bool is_avoided(const Digest& d) const;
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] const LibraryPolicy& policy() const { return policy_; }
  [[nodiscard]] std::size_t dimension() const { return dim_; }
  [[nodiscard]] const std::optional<std::string>& path() const { return path_; }

  /// Entries whose stored hash or flags are inconsistent with their source.
  [[nodiscard]] std::vector<std::string> integrity_problems() const;

  /// Writes the JSON-lines file and its avoidance sidecar.
  void save(const std::string& path) const;

  /// Test hook: replaces an entry's mutable state verbatim.
  void set_state(std::uint64_t id, double weight, bool second_chance, int retrieval_count = 0,
                 int sibling_skip_count = 0);

 private:
  using EntryMap = std::map<std::uint64_t, LibraryEntry>;
  using AvoidSet = std::set<Digest>;

  template <class F>
  auto transact(F&& fn);
  void persist(const EntryMap& entries, const AvoidSet& avoid) const;
  void apply_outcome(LibraryEntry& e, bool success) const;
  void refresh_mark(LibraryEntry& e) const;

  LibraryPolicy policy_;
  std::size_t dim_;
  std::optional<std::string> path_;
  mutable std::shared_mutex mu_;
  EntryMap entries_;
  AvoidSet avoid_;
  std::uint64_t next_id_ = 1;
};

}  // namespace hivegen::library

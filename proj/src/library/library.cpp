#include "hivegen/library/library.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "hivegen/core/error.hpp"
#include "hivegen/core/hash.hpp"
#include "hivegen/core/json_io.hpp"

namespace hivegen::library {

namespace fs = std::filesystem;

LibraryPolicy LibraryPolicy::from(const GenerationConfig& cfg) {
  LibraryPolicy p;
  p.retrieval_threshold = cfg.retrieval_threshold;
  p.m = cfg.second_chance_trigger;
  p.j = cfg.garbage_mark;
  return p;
}

void LibraryPolicy::validate() const {
  if (!(0 < gc_floor && gc_floor < second_chance_floor && second_chance_floor < reset_weight))
    throw Error(ErrorCode::InvalidArgument, "library policy requires 0 < gc_floor < second_chance_floor < reset_weight");
  if (!(failure_factor < 1 && 1 < success_factor && failure_factor > 0))
    throw Error(ErrorCode::InvalidArgument, "library policy requires 0 < failure_factor < 1 < success_factor");
  if (retrieval_threshold < 0 || retrieval_threshold > 1)
    throw Error(ErrorCode::InvalidArgument, "retrieval_threshold must lie in [0, 1]");
  if (m < 1 || j < 1) throw Error(ErrorCode::InvalidArgument, "m and j must be >= 1");
}

std::string_view to_string(InsertStatus s) {
  switch (s) {
    case InsertStatus::Accepted: return "accepted";
    case InsertStatus::Unverified: return "unverified";
    case InsertStatus::Avoided: return "avoided";
    case InsertStatus::Duplicate: return "duplicate";
  }
  return "?";
}

nlohmann::json to_json(const LibraryEntry& e) {
  nlohmann::json j{{"id", e.block.id},
                   {"block", e.block},
                   {"embedding", e.embedding},
                   {"weight", e.weight},
                   {"second_chance", e.second_chance},
                   {"retrieval_count", e.retrieval_count},
                   {"sibling_skip_count", e.sibling_skip_count},
                   {"gc_marked", e.gc_marked},
                   {"forced_used", e.forced_used}};
  if (e.testbench) j["testbench"] = *e.testbench;
  return j;
}

LibraryEntry entry_from_json(const nlohmann::json& j) {
  LibraryEntry e;
  e.block = j.at("block").get<CodeBlock>();
  e.block.id = j.value("id", e.block.id);
  e.embedding = j.at("embedding").get<Embedding>();
  e.weight = j.at("weight").get<double>();
  e.second_chance = j.value("second_chance", true);
  e.retrieval_count = j.value("retrieval_count", 0);
  e.sibling_skip_count = j.value("sibling_skip_count", 0);
  e.gc_marked = j.value("gc_marked", false);
  e.forced_used = j.value("forced_used", false);
  if (j.contains("testbench") && !j["testbench"].is_null()) e.testbench = j["testbench"].get<std::string>();
  return e;
}

CodeLibrary::CodeLibrary(LibraryPolicy policy, std::size_t dimension)
    : policy_(policy), dim_(dimension) {
  policy_.validate();
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

CodeLibrary::CodeLibrary(CodeLibrary&& o) noexcept
    : policy_(o.policy_),
      dim_(o.dim_),
      path_(std::move(o.path_)),
      entries_(std::move(o.entries_)),
      avoid_(std::move(o.avoid_)),
      next_id_(o.next_id_) {}

CodeLibrary CodeLibrary::open(const std::string& path, LibraryPolicy policy, std::size_t dimension) {
  CodeLibrary lib(policy, dimension);
  if (fs::exists(path)) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Storage, "cannot read library " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto e = entry_from_json(nlohmann::json::parse(line));
        if (e.embedding.size() != dimension)
          throw Error(ErrorCode::Storage, "embedding dimension mismatch");
        lib.next_id_ = std::max(lib.next_id_, e.block.id + 1);
        lib.entries_.emplace(e.block.id, std::move(e));
      } catch (const std::exception& ex) {
        throw Error(ErrorCode::Storage, path + ":" + std::to_string(lineno) + ": " + ex.what());
      }
    }
  }
  std::string side = path + ".avoid";
  if (fs::exists(side)) {
    std::ifstream in(side);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto d = digest_from_hex(line);
      if (!d) throw Error(ErrorCode::Storage, "bad digest in " + side + ": " + line);
      lib.avoid_.insert(*d);
    }
  }
  lib.path_ = path;
  return lib;
}

template <class F>
auto CodeLibrary::transact(F&& fn) {
  std::unique_lock lock(mu_);
  if (!path_) return fn(entries_, avoid_);
  EntryMap entries = entries_;
  AvoidSet avoid = avoid_;
  auto result = fn(entries, avoid);
  persist(entries, avoid);
  entries_.swap(entries);
  avoid_.swap(avoid);
  return result;
}

void CodeLibrary::persist(const EntryMap& entries, const AvoidSet& avoid) const {
  auto write_atomic = [](const std::string& target, const std::string& content) {
    std::string tmp = target + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::Storage, "cannot write " + tmp);
      out << content;
      out.flush();
      if (!out) throw Error(ErrorCode::Storage, "write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot replace " + target + ": " + ec.message());
  };
  std::ostringstream lines;
  for (const auto& [id, e] : entries) lines << to_json(e).dump() << "\n";
  std::ostringstream hexes;
  for (const auto& d : avoid) hexes << to_hex(d) << "\n";
  write_atomic(*path_ + ".avoid", hexes.str());
  write_atomic(*path_, lines.str());
}

void CodeLibrary::save(const std::string& path) const {
  std::shared_lock lock(mu_);
  CodeLibrary tmp(policy_, dim_);
  tmp.path_ = path;
  tmp.persist(entries_, avoid_);
}

InsertResult CodeLibrary::insert(const CodeBlock& block_in, const Embedding& embedding,
                                 std::optional<std::string> testbench) {
  if (embedding.size() != dim_)
    throw Error(ErrorCode::InvalidArgument, "embedding has dimension " + std::to_string(embedding.size()) +
                                                ", library uses " + std::to_string(dim_));
  CodeBlock block = block_in;
  block.content_hash = hash_block(block.source);
  if (!block.verified) return {InsertStatus::Unverified, 0};
  {
    std::shared_lock lock(mu_);
    if (avoid_.contains(block.content_hash)) return {InsertStatus::Avoided, 0};
    for (const auto& [id, e] : entries_)
      if (e.block.content_hash == block.content_hash) return {InsertStatus::Duplicate, id};
  }
  return transact([&](EntryMap& entries, AvoidSet& avoid) -> InsertResult {
    // re-check under the writer lock
    if (avoid.contains(block.content_hash)) return {InsertStatus::Avoided, 0};
    for (const auto& [id, e] : entries)
      if (e.block.content_hash == block.content_hash) return {InsertStatus::Duplicate, id};
    LibraryEntry e;
    e.block = block;
    e.block.id = next_id_;
    e.embedding = embedding;
    normalize(e.embedding);
    e.weight = policy_.reset_weight;
    e.testbench = std::move(testbench);
    auto id = e.block.id;
    entries.emplace(id, std::move(e));
    ++next_id_;
    return {InsertStatus::Accepted, id};
  });
}

std::optional<RetrievalHit> CodeLibrary::retrieve(const Embedding& query, std::string_view module_name) {
  if (query.size() != dim_) throw Error(ErrorCode::InvalidArgument, "query dimension mismatch");
  Embedding q = query;
  normalize(q);
  return transact([&](EntryMap& entries, AvoidSet&) -> std::optional<RetrievalHit> {
    LibraryEntry* best = nullptr;
    double best_score = 0, best_cos = 0;
    for (auto& [id, e] : entries) {
      if (e.gc_marked) continue;
      double c = dot(q, e.embedding);
      double s = c * e.weight;
      if (!best || s > best_score) {
        best = &e;
        best_score = s;
        best_cos = c;
      }
    }
    if (!best || best_score < policy_.retrieval_threshold) return std::nullopt;

    // An entry of the requested module that has been passed over m times
    // while its siblings were retrieved gets one forced win, provided it is
    // still relevant on raw similarity.
    LibraryEntry* forced = nullptr;
    double forced_score = 0, forced_cos = 0;
    for (auto& [id, e] : entries) {
      if (e.gc_marked || &e == best || e.forced_used || !e.second_chance) continue;
      if (e.block.module_name != module_name || e.sibling_skip_count < policy_.m) continue;
      double c = dot(q, e.embedding);
      if (c < policy_.retrieval_threshold) continue;
      double s = c * e.weight;
      if (!forced || s > forced_score) {
        forced = &e;
        forced_score = s;
        forced_cos = c;
      }
    }
    RetrievalHit hit;
    LibraryEntry* winner = best;
    hit.score = best_score;
    hit.cosine = best_cos;
    if (forced) {
      winner = forced;
      hit.score = forced_score;
      hit.cosine = forced_cos;
      hit.forced = true;
      forced->forced_used = true;
      forced->sibling_skip_count = 0;
    }
    winner->retrieval_count += 1;
    for (auto& [id, e] : entries)
      if (&e != winner && e.block.module_name == winner->block.module_name) e.sibling_skip_count += 1;
    refresh_mark(*winner);
    hit.entry = *winner;
    return hit;
  });
}

void CodeLibrary::refresh_mark(LibraryEntry& e) const {
  e.gc_marked = e.weight < policy_.gc_floor ||
                (e.retrieval_count >= policy_.j && e.weight < policy_.second_chance_floor);
}

void CodeLibrary::apply_outcome(LibraryEntry& e, bool success) const {
  if (success) {
    e.weight *= policy_.success_factor;
  } else if (e.weight < policy_.second_chance_floor && e.second_chance) {
    e.weight = policy_.reset_weight;
    e.second_chance = false;
  } else {
    e.weight *= policy_.failure_factor;
  }
  refresh_mark(e);
}

void CodeLibrary::record_outcome(const std::vector<std::uint64_t>& ids, bool success) {
  std::vector<std::pair<std::uint64_t, bool>> batch;
  batch.reserve(ids.size());
  for (auto id : ids) batch.emplace_back(id, success);
  record_outcomes(batch);
}

void CodeLibrary::record_outcomes(const std::vector<std::pair<std::uint64_t, bool>>& outcomes) {
  transact([&](EntryMap& entries, AvoidSet&) {
    for (const auto& [id, ok] : outcomes)
      if (!entries.contains(id)) throw Error(ErrorCode::NotFound, "no library entry with id " + std::to_string(id));
    for (const auto& [id, ok] : outcomes) apply_outcome(entries.at(id), ok);
    return 0;
  });
}

GcReport CodeLibrary::run_gc(const Refiner& refiner) {
  struct Pending {
    LibraryEntry marked;
    std::optional<LibraryEntry> nearest;
  };
  std::vector<Pending> work;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, e] : entries_) {
      if (!e.gc_marked) continue;
      Pending p{e, std::nullopt};
      double best = -2;
      for (const auto& [oid, o] : entries_) {
        if (o.gc_marked || o.block.module_name != e.block.module_name) continue;
        double c = dot(e.embedding, o.embedding);
        if (c > best) {
          best = c;
          p.nearest = o;
        }
      }
      work.push_back(std::move(p));
    }
  }
  GcReport report;
  if (work.empty()) return report;

  std::vector<std::pair<std::uint64_t, std::optional<Refinement>>> outcomes;
  for (const auto& p : work) {
    try {
      outcomes.emplace_back(p.marked.block.id, refiner(p.marked, p.nearest ? &*p.nearest : nullptr));
    } catch (const Error&) {
      report.deferred.push_back(p.marked.block.id);
    }
  }
  transact([&](EntryMap& entries, AvoidSet& avoid) {
    for (auto& [id, ref] : outcomes) {
      auto it = entries.find(id);
      if (it == entries.end() || !it->second.gc_marked) continue;
      LibraryEntry& e = it->second;
      bool ok = ref && ref->block && ref->block->verified && ref->embedding.size() == dim_;
      Digest fresh{};
      if (ok) {
        fresh = hash_block(ref->block->source);
        if (avoid.contains(fresh)) ok = false;
        for (const auto& [oid, o] : entries)
          if (oid != id && o.block.content_hash == fresh) ok = false;
      }
      if (ok) {
        avoid.insert(e.block.content_hash);
        e.block.source = ref->block->source;
        e.block.content_hash = fresh;
        e.block.verified = true;
        e.embedding = ref->embedding;
        normalize(e.embedding);
        e.weight = policy_.reset_weight;
        e.retrieval_count = 0;
        e.sibling_skip_count = 0;
        e.forced_used = false;
        e.gc_marked = false;
        if (ref->testbench) e.testbench = ref->testbench;
        report.refined.push_back(id);
      } else {
        avoid.insert(e.block.content_hash);
        entries.erase(it);
        report.removed.push_back(id);
      }
    }
    return 0;
  });
  return report;
}

std::vector<LibraryEntry> CodeLibrary::entries() const {
  std::shared_lock lock(mu_);
  std::vector<LibraryEntry> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

std::optional<LibraryEntry> CodeLibrary::get(std::uint64_t id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::set<Digest> CodeLibrary::avoidance() const {
  std::shared_lock lock(mu_);
  return avoid_;
}

bool CodeLibrary::is_avoided(const Digest& d) const {
  std::shared_lock lock(mu_);
  return avoid_.contains(d);
}

std::size_t CodeLibrary::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<std::string> CodeLibrary::integrity_problems() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) {
    auto tag = "entry " + std::to_string(id) + " (" + e.block.module_name + ")";
    if (hash_block(e.block.source) != e.block.content_hash) out.push_back(tag + ": content_hash does not match source");
    if (!e.block.verified) out.push_back(tag + ": stored unverified");
    if (avoid_.contains(e.block.content_hash)) out.push_back(tag + ": hash is in the avoidance table");
    if (!(e.weight > 0)) out.push_back(tag + ": non-positive weight");
    double n = std::sqrt(dot(e.embedding, e.embedding));
    if (std::abs(n - 1.0) > 1e-6) out.push_back(tag + ": embedding is not unit length");
    bool should_mark = e.weight < policy_.gc_floor ||
                       (e.retrieval_count >= policy_.j && e.weight < policy_.second_chance_floor);
    if (e.gc_marked != should_mark) out.push_back(tag + ": gc mark inconsistent with weight");
  }
  return out;
}

void CodeLibrary::set_state(std::uint64_t id, double weight, bool second_chance, int retrieval_count,
                            int sibling_skip_count) {
  transact([&](EntryMap& entries, AvoidSet&) {
    auto it = entries.find(id);
    if (it == entries.end()) throw Error(ErrorCode::NotFound, "no library entry with id " + std::to_string(id));
    it->second.weight = weight;
    it->second.second_chance = second_chance;
    it->second.retrieval_count = retrieval_count;
    it->second.sibling_skip_count = sibling_skip_count;
    refresh_mark(it->second);
    return 0;
  });
}

}  // namespace hivegen::library

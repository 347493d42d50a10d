#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "symdl/expr.hpp"
#include "symdl/value.hpp"

namespace symdl {

// ---- magic constants ----

// Pool of large constants standing in for universally quantified variables.
// Each is the concatenation of a recognizable 8-hex-digit prefix with
// seed-derived irregular tail nibbles; pairwise distinct, and still pairwise
// distinct (and away from degenerate values) when truncated to 8 bits.
struct MagicPool {
  uint64_t seed = 0;
  std::vector<u256> constants;

  static MagicPool make(uint64_t seed);
  const u256& at(size_t index) const;
  const u256& for_bound_var(size_t position) const {
    return constants[position % constants.size()];
  }
};

// ---- query rendering ----

struct RenderedQuery {
  std::string text;                    // declares + asserts, no check-sat
  std::vector<std::string> free_vars;  // declared order, for get-value
};

// Renders the constraint to SMT-LIB2: declare-consts for free and bound
// variables, the nested let chain (first list element innermost), the
// top-level (assert (= one <constraint>)), and one magic-constant equality
// assert per bound variable. bound_vars is a cons list of name symbols; lets
// a cons list of [name, Expr] pairs.
RenderedQuery render_query(Engine& engine, const Value& constraint, const Value& bound_vars,
                           const Value& lets, const MagicPool& pool, int width);

// SMT-LIB2 fragment for one operator application over rendered operand
// fragments; inlines comparison and division templates.
std::string render_operator(std::string_view op, const std::string& left,
                            const std::string& right, int width);

std::string sha256_hex(std::string_view data);

// ---- results and cache ----

struct SmtResultData {
  std::string status;  // sat | unsat | unknown | timeout
  std::vector<std::pair<std::string, std::string>> model;  // var -> 0x... minimal hex
  std::string diagnostic;  // not cached; solver stderr-ish context
};

class QueryCache {
public:
  // Loads persisted entries when path is non-empty; appends on store.
  explicit QueryCache(const std::string& path = "");
  std::optional<SmtResultData> lookup(const std::string& hash);
  void store(const std::string& hash, const SmtResultData& result);
  uint64_t hits() const { return hits_; }
  size_t size() const;

private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, SmtResultData> entries_;
  std::string path_;
  uint64_t hits_ = 0;
};

// ---- solver subprocess ----

// One external solver over pipes, fed (reset)-delimited SMT-LIB2 requests.
class SolverProcess {
public:
  explicit SolverProcess(std::string command);
  ~SolverProcess();
  SolverProcess(const SolverProcess&) = delete;
  SolverProcess& operator=(const SolverProcess&) = delete;

  // Full round trip: reset, options, logic, query text, check-sat, and
  // get-value over free_vars on sat. Kills and respawns the process on
  // timeout or crash.
  SmtResultData solve(const std::string& text, const std::vector<std::string>& free_vars,
                      const std::string& logic, int timeout_ms);

private:
  void spawn();
  void kill_child();
  bool write_all(const std::string& data);
  enum class ReadStatus { ok, timeout, eof };
  // Reads until `stop` says the accumulated buffer is complete or the
  // deadline passes.
  ReadStatus read_until(std::string& buf, const std::function<bool(const std::string&)>& stop,
                        std::chrono::steady_clock::time_point deadline);

  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

// ---- bridge ----

class SmtBridge {
public:
  struct Options {
    std::string command;      // shell command line for the solver
    std::string cache_path;   // empty = in-memory only
    int timeout_ms = 60'000;
    int processes = 1;
    uint64_t magic_seed = 0;
    std::string logic = "QF_BV";
  };

  struct Stats {
    uint64_t queries = 0;        // lookups through the bridge
    uint64_t solver_calls = 0;   // actual subprocess round trips
    uint64_t cache_hits = 0;
    uint64_t timeouts = 0;
    std::vector<std::string> timeout_hashes;
  };

  explicit SmtBridge(Options options);
  ~SmtBridge();

  // Registers @print_to_smt, @smt_response, @smt_response_with_model and
  // @magic_constant on the engine. The bridge must outlive the engine's use
  // of them.
  void attach(Engine& engine);

  // Cache-through solve of rendered text; deduplicates in-flight identical
  // queries across threads.
  SmtResultData solve_text(const std::string& text, const std::vector<std::string>& free_vars);

  const MagicPool& pool() const { return pool_; }
  const Options& options() const { return options_; }
  Stats stats() const;

  // Errors when any fact-file symbol equals a pool constant (as a hex
  // symbol); run before an analysis starts.
  void check_magic_collisions(const Engine& engine, const class FactDB& db) const;

private:
  SolverProcess* acquire();
  void release(SolverProcess* p);

  Options options_;
  MagicPool pool_;
  QueryCache cache_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<SolverProcess>> procs_;
  std::vector<SolverProcess*> idle_;
  std::unordered_map<std::string, std::shared_future<SmtResultData>> in_flight_;
  Stats stats_;
};

// Builds the [status, model-list] engine record for a result; with_model
// false always produces a nil model list.
Value result_to_value(Engine& engine, const SmtResultData& result, bool with_model);

// ---- forall* soundness harness ----

struct ForallStarReport {
  std::string star_status;    // solver verdict on the magic-instantiated query
  bool true_forall_sat = false;  // exhaustive: exists frees such that all b satisfy
  bool violation = false;        // star unsat but true forall sat
};

// Exhaustively validates the one-sided soundness argument at small width:
// if the forall*-instantiated query is unsat, the genuine universally quantified
// formula must be unsat too.
ForallStarReport check_forall_star_soundness(Engine& engine, SmtBridge& bridge,
                                             const Value& constraint,
                                             const std::string& bound_var, int width);

}  // namespace symdl

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symdl/factdb.hpp"
#include "symdl/value.hpp"

namespace symdl {

// In-process algebraic solver over symbolic bitvector expressions, driven by
// an embedded rule set. Seeds, variable classifications, and extra constants
// go in; run() closes a bounded expression universe and derives the equality
// relation, normal forms, and solved values for free variables.
//
// Expressions are canonicalized on ingestion and on query: constant leaves
// become minimal hex at the engine width and operator aliases resolve to
// their primary names, so equal expressions always intern to the same record.
class NativeSolver {
public:
  explicit NativeSolver(Engine& engine, uint64_t max_size = 10);

  // Rejects seeds whose node count exceeds the size bound.
  void add_seed(const Value& expr);
  void add_constant(std::string_view hex);
  void mark_free(std::string_view name);
  void mark_bound(std::string_view name);

  void run();

  uint64_t max_size() const { return max_size_; }
  bool ran() const { return ran_; }

  // Queries, valid after run().
  bool in_universe(const Value& expr) const;
  // Least equivalent expression; NotInUniverse for expressions the closure
  // never reached.
  Value normal_form(const Value& expr) const;
  bool equal(const Value& a, const Value& b) const;
  // (variable, solved expression) pairs, constant candidates already folded.
  std::vector<std::pair<std::string, Value>> solutions() const;
  const FactDB& results() const;

  Value canon(const Value& expr) const;

private:
  const Relation* out(const std::string& name) const;

  Engine& engine_;
  uint64_t max_size_;
  FactDB edb_;
  FactDB result_;
  bool ran_ = false;
};

// Runs `rounds` isomorphic solver instances in sequence. feed prepares round
// k's inputs on `cur`, reading the previous finished round through `prev`
// (null on round 0). Returns the finished rounds in order; rounds = 0 is the
// degenerate no-solving case and yields an empty vector.
std::vector<std::unique_ptr<NativeSolver>> run_solver_rounds(
    Engine& engine, uint64_t rounds, uint64_t max_size,
    const std::function<void(uint64_t, const NativeSolver*, NativeSolver&)>& feed);

}  // namespace symdl

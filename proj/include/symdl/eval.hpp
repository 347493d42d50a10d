#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "symdl/ast.hpp"
#include "symdl/factdb.hpp"
#include "symdl/stratify.hpp"
#include "symdl/value.hpp"

namespace symdl {

struct EvalOptions {
  uint64_t tuple_limit = 50'000'000;  // per relation
  int workers = 0;                    // 0 = runtime default
  // Overrides for .const declarations, applied before evaluation.
  std::map<std::string, uint64_t> const_overrides;
};

struct EvalStats {
  struct StratumStat {
    std::vector<std::string> relations;
    double seconds = 0.0;
    uint64_t derived = 0;
    uint64_t iterations = 0;
  };
  std::vector<StratumStat> strata;
  uint64_t total_derived = 0;
};

// Least fixpoint of the program over the EDB, stratum by stratum with
// semi-naive deltas. The result holds every declared relation.
FactDB evaluate(Engine& engine, const Program& program, const FactDB& edb,
                const EvalOptions& options = {}, EvalStats* stats = nullptr);

// Reference evaluator: naive re-derivation until fixpoint, sharing only the
// data layer with evaluate. Used as the oracle in tests.
FactDB naive_evaluate(Engine& engine, const Program& program, const FactDB& edb,
                      const EvalOptions& options = {});

}  // namespace symdl

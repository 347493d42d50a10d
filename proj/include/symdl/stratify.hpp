#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "symdl/ast.hpp"

namespace symdl {

class FunctorRegistry;

// One stratum holds exactly one strongly connected component of the positive
// dependency graph over IDB relations. Rules are listed in every stratum that
// contains at least one of their head relations; evaluation of a rule in a
// stratum only populates the heads belonging to it.
struct Stratum {
  std::vector<std::string> relations;
  std::vector<uint32_t> rules;
};

struct StratumPlan {
  std::vector<Stratum> strata;                // bottom-up evaluation order
  std::map<std::string, int> stratum_of;      // IDB name -> index; EDB -> -1
};

// Orders IDB SCCs so every dependency edge points upward and no negative
// edge (negation, or any body dependency of a rule calling a non-monotonic
// functor) stays inside an SCC. `functors` may be null, in which case all
// functors are treated as monotonic.
StratumPlan stratify(const Program& program, const FunctorRegistry* functors = nullptr);

}  // namespace symdl

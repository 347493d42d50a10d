#pragma once

#include <cstdint>

#include "symdl/ast.hpp"
#include "symdl/eval.hpp"
#include "symdl/factdb.hpp"
#include "symdl/value.hpp"

namespace symdl {

// The two bundled analysis programs, parsed from the embedded sources.
Program points_to_program();
Program symexec_program();

// Field-sensitive, context-insensitive points-to with on-the-fly call graph.
FactDB run_points_to(Engine& engine, const FactDB& facts, const EvalOptions& options = {},
                     EvalStats* stats = nullptr);

// Symbolic execution over SSA basic blocks. Satisfiability queries go through
// the @smt_response functors, so an SmtBridge or Dispatcher must be attached
// to the engine first; the dispatcher decides per query which solver answers.
// bound caps the path-condition length.
FactDB run_symexec(Engine& engine, const FactDB& facts, uint64_t bound = 8,
                   EvalOptions options = {}, EvalStats* stats = nullptr);

}  // namespace symdl

#include "symdl/analyses.hpp"

#include <symdl_embedded/points_to.hpp>
#include <symdl_embedded/symexec.hpp>

#include "symdl/parser.hpp"

namespace symdl {

Program points_to_program() { return parse_program(embedded::points_to_dl); }

Program symexec_program() { return parse_program(embedded::symexec_dl); }

FactDB run_points_to(Engine& engine, const FactDB& facts, const EvalOptions& options,
                     EvalStats* stats) {
  Program program = points_to_program();
  return evaluate(engine, program, facts, options, stats);
}

FactDB run_symexec(Engine& engine, const FactDB& facts, uint64_t bound, EvalOptions options,
                   EvalStats* stats) {
  Program program = symexec_program();
  options.const_overrides.emplace("BOUND", bound);
  return evaluate(engine, program, facts, options, stats);
}

}  // namespace symdl

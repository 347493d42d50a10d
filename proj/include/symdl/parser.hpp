#pragma once

#include <string_view>

#include "symdl/ast.hpp"

namespace symdl {

// Parses a program in the .dl dialect: relation declarations, input/output
// directives, named numeric constants, component templates with
// instantiation counts, and rules (multi-head, negation, record patterns,
// wildcards, comparison/arithmetic guards, @functor calls).
//
// Components are flattened before returning. The result has passed static
// validation: known predicates, matching arities, no EDB rule heads, safety
// (every head/negation/guard variable bound by a positive body literal or a
// binding equality), and no functor calls under negation.
Program parse_program(std::string_view source);

// Validation entry point for programs assembled in code.
void validate_program(const Program& program);

}  // namespace symdl

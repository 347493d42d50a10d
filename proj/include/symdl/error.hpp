#pragma once

#include <stdexcept>
#include <string>

namespace symdl {

enum class errc {
  syntax,
  arity,
  type,
  safety,
  stratification,
  unknown_predicate,
  unknown_ordinal,
  unknown_record_ref,
  unknown_operator,
  unbound_variable,
  duplicate_functor,
  functor,
  malformed_list,
  empty_list,
  resource_limit,
  reserved_symbol,
  seed_too_large,
  not_in_universe,
  magic_collision,
  cyclic_lets,
  index_range,
  io,
  usage,
  solver,
};

class Error : public std::runtime_error {
public:
  Error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  errc code() const { return code_; }

private:
  errc code_;
};

// Syntax errors carry a source position so the CLI can point at the offending token.
class SyntaxError : public Error {
public:
  SyntaxError(int line, int col, const std::string& msg)
      : Error(errc::syntax,
              "syntax error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

private:
  int line_;
  int col_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace symdl

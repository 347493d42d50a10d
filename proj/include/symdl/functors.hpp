#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>

#include "symdl/value.hpp"

namespace symdl {

// A functor is a pure host function callable from rule bodies as @name(...).
// The engine may invoke it any number of times in any order, so results must
// be deterministic per argument tuple. Functors flagged non_monotonic are
// treated like negation by the stratifier: relations derived through them may
// not be mutually recursive with their inputs.
using FunctorFn = std::function<Value(Engine&, std::span<const Value>)>;

struct FunctorInfo {
  std::string name;
  size_t arity = 0;
  bool non_monotonic = false;
  FunctorFn fn;
};

class FunctorRegistry {
public:
  void register_functor(const std::string& name, size_t arity, FunctorFn fn,
                        bool non_monotonic = false);
  bool has(const std::string& name) const { return table_.count(name) != 0; }
  const FunctorInfo* find(const std::string& name) const;
  const FunctorInfo& at(const std::string& name) const;
  Value call(Engine& engine, const std::string& name, std::span<const Value> args) const;

private:
  std::map<std::string, FunctorInfo> table_;
};

// Registers the core builtins (@list_length, @cat) plus the expression-domain
// functors. Called once from the Engine constructor.
void register_builtin_functors(Engine& engine);

}  // namespace symdl

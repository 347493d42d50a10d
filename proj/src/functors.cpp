#include "symdl/functors.hpp"

#include "symdl/error.hpp"

namespace symdl {

void register_expr_functors(Engine& engine);  // defined in expr.cpp

void FunctorRegistry::register_functor(const std::string& name, size_t arity,
                                       FunctorFn fn, bool non_monotonic) {
  auto [it, fresh] = table_.emplace(name, FunctorInfo{name, arity, non_monotonic, std::move(fn)});
  if (!fresh) {
    fail(errc::duplicate_functor, "functor @" + name + " is already registered");
  }
}

const FunctorInfo* FunctorRegistry::find(const std::string& name) const {
  auto it = table_.find(name);
  return it == table_.end() ? nullptr : &it->second;
}

const FunctorInfo& FunctorRegistry::at(const std::string& name) const {
  const FunctorInfo* info = find(name);
  if (!info) fail(errc::functor, "unknown functor @" + name);
  return *info;
}

Value FunctorRegistry::call(Engine& engine, const std::string& name,
                            std::span<const Value> args) const {
  const FunctorInfo& info = at(name);
  if (args.size() != info.arity) {
    fail(errc::arity, "functor @" + name + " expects " + std::to_string(info.arity) +
                          " arguments, got " + std::to_string(args.size()));
  }
  return info.fn(engine, args);
}

static Value builtin_list_length(Engine& engine, std::span<const Value> args) {
  uint64_t n = 0;
  Value cur = args[0];
  while (!cur.is_nil()) {
    if (!cur.is_record()) {
      fail(errc::malformed_list, "@list_length applied to a non-list value");
    }
    auto fields = engine.records().unpack(cur.ord());
    if (fields.size() != 2) {
      fail(errc::malformed_list, "@list_length encountered a record of arity " +
                                     std::to_string(fields.size()) + "; lists use 2-field cells");
    }
    ++n;
    cur = fields[1];
  }
  return Value::number(n);
}

static Value builtin_cat(Engine& engine, std::span<const Value> args) {
  if (!args[0].is_symbol() || !args[1].is_symbol()) {
    fail(errc::type, "@cat expects two symbols");
  }
  std::string joined(engine.symbols().resolve(args[0].ord()));
  joined += engine.symbols().resolve(args[1].ord());
  return Value::symbol(engine.symbols().intern(joined));
}

void register_builtin_functors(Engine& engine) {
  FunctorRegistry& reg = engine.functors();
  reg.register_functor("list_length", 1, builtin_list_length);
  reg.register_functor("cat", 2, builtin_cat);
  register_expr_functors(engine);
}

}  // namespace symdl

#include "symdl/dispatch.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>

#include "symdl/error.hpp"
#include "symdl/expr.hpp"
#include "symdl/functors.hpp"
#include "symdl/native_solver.hpp"

namespace symdl {

namespace {

void list_items(const Engine& engine, const Value& list, std::vector<Value>& out) {
  Value cur = list;
  while (!cur.is_nil()) {
    if (!cur.is_record()) fail(errc::malformed_list, "path condition is not a list");
    auto f = engine.unpack(cur);
    if (f.size() != 2) fail(errc::malformed_list, "path condition is not a list");
    out.push_back(f[0]);
    cur = f[1];
  }
}

// Splits the conjunction spine back into conjuncts. Treating nested AND
// nodes as further conjuncts is sound for both verdict directions.
void split_and(const Engine& engine, const Value& e, std::vector<Value>& out) {
  if (is_expr(engine, e) && expr_base(engine, e) == "AND") {
    Value l = expr_left(engine, e);
    Value r = expr_right(engine, e);
    if (!l.is_nil() && !r.is_nil()) {
      split_and(engine, l, out);
      split_and(engine, r, out);
      return;
    }
  }
  out.push_back(e);
}

void collect_leaf_vars(const Engine& engine, const Value& e, std::set<std::string>& out) {
  std::string_view base = expr_base(engine, e);
  Value l = expr_left(engine, e);
  Value r = expr_right(engine, e);
  if (l.is_nil() && r.is_nil()) {
    if (!is_hex_const(base)) out.insert(std::string(base));
    return;
  }
  if (!l.is_nil()) collect_leaf_vars(engine, l, out);
  if (!r.is_nil()) collect_leaf_vars(engine, r, out);
}

std::optional<u256> leaf_const(const Engine& engine, const Value& e) {
  if (!is_expr(engine, e) || !is_leaf(engine, e)) return std::nullopt;
  return parse_hex_const(expr_base(engine, e));
}

// Conjunct-wise native decision. The conjunction holds when the whole
// right-nested AND chain evaluates to exactly 1, so a conjunct with a clear
// low bit kills the chain, a conjunct equal to 1 is neutral, and anything
// else needs a concrete witness.
SmtResultData native_solve(Engine& engine, const std::vector<Value>& conjuncts,
                           const DispatchOptions& options) {
  std::map<std::string, u256, std::less<>> env;
  std::set<std::string> all_vars;

  for (const Value& c : conjuncts) {
    if (!is_expr(engine, c)) {
      return {"unknown", {}, "query conjunct is not an expression"};
    }
    NativeSolver solver(engine, options.native_max_size);
    try {
      solver.add_seed(c);
    } catch (const Error& err) {
      if (err.code() == errc::seed_too_large) {
        return {"unknown", {}, std::string("over native bound: ") + err.what()};
      }
      throw;
    }
    std::set<std::string> vars;
    collect_leaf_vars(engine, c, vars);
    for (const std::string& v : vars) solver.mark_free(v);
    all_vars.insert(vars.begin(), vars.end());
    solver.run();

    Value nf = solver.normal_form(c);
    if (auto k = leaf_const(engine, nf)) {
      if (*k == 1) continue;
      if ((*k & 1) == 0) return {"unsat", {}, ""};
      if (conjuncts.size() == 1) return {"unsat", {}, ""};
      return {"unknown", {}, "conjunct normalizes to a constant other than 0 or 1"};
    }

    // Constant candidate solutions, deterministically ordered.
    std::vector<std::pair<std::string, u256>> candidates;
    for (const auto& [var, sol] : solver.solutions()) {
      if (auto v = leaf_const(engine, sol)) candidates.emplace_back(var, *v);
    }
    std::sort(candidates.begin(), candidates.end());
    bool resolved = false;
    for (const auto& [var, v] : candidates) {
      auto it = env.find(var);
      if (it == env.end()) {
        env.emplace(var, v);
        resolved = true;
        break;
      }
      if (it->second == v) {
        resolved = true;
        break;
      }
    }
    if (!resolved) {
      return {"unknown", {}, "no native solution for a conjunct"};
    }
  }

  for (const std::string& v : all_vars) env.emplace(v, 0);

  // A native sat is only ever reported with a checked witness.
  for (const Value& c : conjuncts) {
    if (eval_concrete(engine, c, env, engine.eval_width()) != 1) {
      return {"unknown", {}, "native model failed verification"};
    }
  }

  SmtResultData result;
  result.status = "sat";
  for (const auto& [var, v] : env) {
    result.model.emplace_back(var, canonical_hex(v));
  }
  return result;
}

SmtResultData smt_solve(Engine& engine, SmtBridge& bridge, const std::vector<Value>& conjuncts) {
  Value chain = conjuncts.back();
  for (size_t i = conjuncts.size() - 1; i-- > 0;) {
    chain = make_binary(engine, "AND", conjuncts[i], chain);
  }
  RenderedQuery q = render_query(engine, chain, Value::nil_value(), Value::nil_value(),
                                 bridge.pool(), engine.eval_width());
  return bridge.solve_text(q.text, q.free_vars);
}

uint64_t conjunction_size(const Engine& engine, const std::vector<Value>& conjuncts) {
  uint64_t total = conjuncts.size() - 1;
  for (const Value& c : conjuncts) total += tree_size(engine, c);
  return total;
}

}  // namespace

SmtResultData dispatch_query(Engine& engine, SmtBridge& bridge, const Value& cond,
                             const Value& path_cond, const DispatchOptions& options) {
  std::vector<Value> conjuncts{cond};
  list_items(engine, path_cond, conjuncts);

  if (options.switch_size > 0 && conjunction_size(engine, conjuncts) <= options.switch_size) {
    SmtResultData res = native_solve(engine, conjuncts, options);
    if (res.status != "unknown" || !options.escalate) return res;
  }
  return smt_solve(engine, bridge, conjuncts);
}

Dispatcher::Dispatcher(SmtBridge& bridge, DispatchOptions options)
    : bridge_(bridge), options_(options) {}

Dispatcher::Stats Dispatcher::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

SmtResultData dispatched_solve(Dispatcher& self, Engine& engine, const Value& arg) {
  auto fields = engine.unpack(arg);

  // Pre-rendered query record: only the text survives, so it always goes to
  // the bridge.
  if (fields.size() == 2 && fields[0].is_symbol()) {
    std::string text = engine.name_of(fields[0]);
    std::vector<std::string> vars;
    Value rest = fields[1];
    while (!rest.is_nil()) {
      auto cell = engine.unpack(rest);
      if (cell.size() != 2 || !cell[0].is_symbol()) {
        fail(errc::malformed_list, "free-variable list of a query record is malformed");
      }
      vars.push_back(engine.name_of(cell[0]));
      rest = cell[1];
    }
    {
      std::lock_guard lock(self.mu_);
      ++self.stats_.smt_queries;
    }
    return self.bridge_.solve_text(text, vars);
  }

  if (fields.size() != 3 || !fields[0].is_symbol()) {
    fail(errc::type, "@smt_response expects a rendered query record or an expression");
  }

  std::vector<Value> conjuncts;
  split_and(engine, arg, conjuncts);

  const DispatchOptions& opt = self.options_;
  if (opt.switch_size > 0 && tree_size(engine, arg) <= opt.switch_size) {
    SmtResultData res = native_solve(engine, conjuncts, opt);
    {
      std::lock_guard lock(self.mu_);
      ++self.stats_.native_queries;
      if (res.status == "sat") ++self.stats_.native_sat;
      else if (res.status == "unsat") ++self.stats_.native_unsat;
      else ++self.stats_.native_unknown;
    }
    if (res.status != "unknown" || !opt.escalate) return res;
    {
      std::lock_guard lock(self.mu_);
      ++self.stats_.escalations;
    }
  }
  {
    std::lock_guard lock(self.mu_);
    ++self.stats_.smt_queries;
  }
  return smt_solve(engine, self.bridge_, conjuncts);
}

void Dispatcher::attach(Engine& engine) {
  Dispatcher* self = this;
  auto& reg = engine.functors();

  reg.register_functor("print_to_smt", 3, [self](Engine& eng, std::span<const Value> args) {
    RenderedQuery q =
        render_query(eng, args[0], args[1], args[2], self->bridge_.pool(), eng.eval_width());
    Value vars = Value::nil_value();
    for (auto it = q.free_vars.rbegin(); it != q.free_vars.rend(); ++it) {
      std::array<Value, 2> cell{eng.sym(*it), vars};
      vars = eng.pack(cell);
    }
    std::array<Value, 2> fields{eng.sym(q.text), vars};
    return eng.pack(fields);
  });

  reg.register_functor("smt_response", 1, [self](Engine& eng, std::span<const Value> args) {
    return result_to_value(eng, dispatched_solve(*self, eng, args[0]), false);
  });

  reg.register_functor("smt_response_with_model", 1,
                       [self](Engine& eng, std::span<const Value> args) {
                         return result_to_value(eng, dispatched_solve(*self, eng, args[0]), true);
                       });

  reg.register_functor("magic_constant", 1, [self](Engine& eng, std::span<const Value> args) {
    if (!args[0].is_number()) {
      fail(errc::type, "@magic_constant expects a numeric index");
    }
    return eng.sym(canonical_hex(self->bridge_.pool().at(args[0].num())));
  });
}

}  // namespace symdl

#include <array>
#include <functional>
#include <future>

#include "symdl/error.hpp"
#include "symdl/expr.hpp"
#include "symdl/factdb.hpp"
#include "symdl/functors.hpp"
#include "symdl/smt.hpp"

namespace symdl {

namespace {

// Accepts either a query record [rendered_text, free-var cons list] as
// produced by @print_to_smt, or a bare 3-field constraint expression, which
// is rendered on the spot with no bound variables and no lets.
SmtResultData solve_query_record(SmtBridge& bridge, Engine& engine, const Value& query) {
  auto fields = engine.unpack(query);
  if (fields.size() == 3 && fields[0].is_symbol()) {
    RenderedQuery q = render_query(engine, query, Value::nil_value(), Value::nil_value(),
                                   bridge.pool(), engine.eval_width());
    return bridge.solve_text(q.text, q.free_vars);
  }
  if (fields.size() != 2 || !fields[0].is_symbol()) {
    fail(errc::type, "@smt_response expects a rendered query record or an expression");
  }
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
  return bridge.solve_text(text, vars);
}

}  // namespace

SmtBridge::SmtBridge(Options options)
    : options_(std::move(options)),
      pool_(MagicPool::make(options_.magic_seed)),
      cache_(options_.cache_path) {
  if (options_.processes < 1) options_.processes = 1;
}

SmtBridge::~SmtBridge() = default;

SolverProcess* SmtBridge::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] {
    return !idle_.empty() || procs_.size() < static_cast<size_t>(options_.processes);
  });
  if (!idle_.empty()) {
    SolverProcess* p = idle_.back();
    idle_.pop_back();
    return p;
  }
  procs_.push_back(std::make_unique<SolverProcess>(options_.command));
  return procs_.back().get();
}

void SmtBridge::release(SolverProcess* p) {
  {
    std::lock_guard lock(mu_);
    idle_.push_back(p);
  }
  cv_.notify_one();
}

SmtResultData SmtBridge::solve_text(const std::string& text,
                                    const std::vector<std::string>& free_vars) {
  std::string hash = sha256_hex(text);
  {
    std::lock_guard lock(mu_);
    ++stats_.queries;
  }
  if (auto hit = cache_.lookup(hash)) {
    std::lock_guard lock(mu_);
    ++stats_.cache_hits;
    return *hit;
  }

  std::promise<SmtResultData> promise;
  std::shared_future<SmtResultData> waiter;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = in_flight_.find(hash);
    if (it != in_flight_.end()) {
      waiter = it->second;
    } else {
      owner = true;
      in_flight_.emplace(hash, promise.get_future().share());
    }
  }
  if (!owner) {
    SmtResultData result = waiter.get();
    std::lock_guard lock(mu_);
    ++stats_.cache_hits;
    return result;
  }

  SolverProcess* proc = acquire();
  SmtResultData result;
  try {
    result = proc->solve(text, free_vars, options_.logic, options_.timeout_ms);
  } catch (...) {
    release(proc);
    {
      std::lock_guard lock(mu_);
      in_flight_.erase(hash);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
  release(proc);

  {
    std::lock_guard lock(mu_);
    ++stats_.solver_calls;
    if (result.status == "timeout") {
      ++stats_.timeouts;
      stats_.timeout_hashes.push_back(hash);
    }
  }
  cache_.store(hash, result);
  {
    std::lock_guard lock(mu_);
    in_flight_.erase(hash);
  }
  promise.set_value(result);
  return result;
}

SmtBridge::Stats SmtBridge::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void SmtBridge::attach(Engine& engine) {
  SmtBridge* self = this;
  auto& reg = engine.functors();

  reg.register_functor(
      "print_to_smt", 3, [self](Engine& eng, std::span<const Value> args) {
        RenderedQuery q =
            render_query(eng, args[0], args[1], args[2], self->pool_, eng.eval_width());
        Value vars = Value::nil_value();
        for (auto it = q.free_vars.rbegin(); it != q.free_vars.rend(); ++it) {
          std::array<Value, 2> cell{eng.sym(*it), vars};
          vars = eng.pack(cell);
        }
        std::array<Value, 2> fields{eng.sym(q.text), vars};
        return eng.pack(fields);
      });

  // Deterministic per query (the cache pins even flaky verdicts for the run),
  // so recursion through these guards is legal; the symbolic-execution rules
  // rely on it.
  reg.register_functor("smt_response", 1, [self](Engine& eng, std::span<const Value> args) {
    return result_to_value(eng, solve_query_record(*self, eng, args[0]), false);
  });

  reg.register_functor("smt_response_with_model", 1,
                       [self](Engine& eng, std::span<const Value> args) {
                         return result_to_value(eng, solve_query_record(*self, eng, args[0]), true);
                       });

  reg.register_functor("magic_constant", 1,
                       [self](Engine& eng, std::span<const Value> args) {
                         if (!args[0].is_number()) {
                           fail(errc::type, "@magic_constant expects a numeric index");
                         }
                         return eng.sym(canonical_hex(self->pool_.at(args[0].num())));
                       });
}

void SmtBridge::check_magic_collisions(const Engine& engine, const FactDB& db) const {
  std::function<void(const Value&)> scan = [&](const Value& v) {
    if (v.is_symbol()) {
      auto num = parse_hex_const(engine.name_of(v));
      if (!num) return;
      for (size_t i = 0; i < pool_.constants.size(); ++i) {
        if (*num == pool_.constants[i]) {
          fail(errc::magic_collision,
               "fact constant " + canonical_hex(*num) + " collides with magic constant " +
                   std::to_string(i) + "; rerun with a different --magic-seed");
        }
      }
    } else if (v.is_record()) {
      for (const Value& f : engine.unpack(v)) scan(f);
    }
  };
  for (const auto& [name, rel] : db.relations) {
    for (const Tuple& row : rel.rows()) {
      for (const Value& cell : row) scan(cell);
    }
  }
}

ForallStarReport check_forall_star_soundness(Engine& engine, SmtBridge& bridge,
                                             const Value& constraint,
                                             const std::string& bound_var, int width) {
  ForallStarReport report;
  std::array<Value, 2> cell{engine.sym(bound_var), Value::nil_value()};
  Value bound_list = engine.pack(cell);
  RenderedQuery q =
      render_query(engine, constraint, bound_list, Value::nil_value(), bridge.pool(), width);
  report.star_status = bridge.solve_text(q.text, q.free_vars).status;

  u256 limit = u256(1) << width;
  std::map<std::string, u256, std::less<>> env;
  bool exists = false;
  std::function<void(size_t)> enumerate = [&](size_t idx) {
    if (exists) return;
    if (idx == q.free_vars.size()) {
      for (u256 b = 0; b < limit; ++b) {
        env[bound_var] = b;
        // True means the asserted form (= 1 constraint), not merely nonzero.
        if (eval_concrete(engine, constraint, env, width) != 1) {
          env.erase(bound_var);
          return;
        }
      }
      env.erase(bound_var);
      exists = true;
      return;
    }
    for (u256 v = 0; v < limit && !exists; ++v) {
      env[q.free_vars[idx]] = v;
      enumerate(idx + 1);
    }
    env.erase(q.free_vars[idx]);
  };
  enumerate(0);
  report.true_forall_sat = exists;
  report.violation = report.star_status == "unsat" && exists;
  return report;
}

}  // namespace symdl

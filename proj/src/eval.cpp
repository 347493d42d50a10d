#include "symdl/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <optional>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "symdl/error.hpp"
#include "symdl/functors.hpp"
#include "symdl/parser.hpp"

namespace symdl {

namespace {

using ConstMap = std::map<std::string, uint64_t, std::less<>>;

ConstMap effective_consts(const Program& program, const EvalOptions& options) {
  ConstMap consts;
  for (const auto& [k, v] : program.consts) consts[k] = v;
  for (const auto& [k, v] : options.const_overrides) consts[k] = v;
  return consts;
}

struct Env {
  std::vector<std::pair<std::string_view, Value>> slots;
  const ConstMap* consts = nullptr;

  std::optional<Value> lookup(std::string_view name) const {
    for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
      if (it->first == name) return it->second;
    }
    if (consts) {
      auto it = consts->find(name);
      if (it != consts->end()) return Value::number(it->second);
    }
    return std::nullopt;
  }
  size_t mark() const { return slots.size(); }
  void rewind(size_t m) { slots.resize(m); }
  void bind(std::string_view name, const Value& v) { slots.emplace_back(name, v); }
};

Value eval_term(Engine& engine, const Term& t, const Env& env) {
  switch (t.kind) {
    case Term::Kind::variable: {
      if (auto v = env.lookup(t.text)) return *v;
      fail(errc::unbound_variable, "variable " + t.text + " is not bound");
    }
    case Term::Kind::wildcard:
      fail(errc::unbound_variable, "cannot evaluate a wildcard");
    case Term::Kind::number:
      return Value::number(t.number);
    case Term::Kind::symbol:
      return engine.sym(t.text);
    case Term::Kind::nil:
      return Value::nil_value();
    case Term::Kind::record: {
      std::vector<Value> fields;
      fields.reserve(t.args.size());
      for (const Term& a : t.args) fields.push_back(eval_term(engine, a, env));
      return engine.pack(fields);
    }
    case Term::Kind::functor: {
      std::vector<Value> args;
      args.reserve(t.args.size());
      for (const Term& a : t.args) args.push_back(eval_term(engine, a, env));
      return engine.functors().call(engine, t.text, args);
    }
    case Term::Kind::binary: {
      Value a = eval_term(engine, t.args[0], env);
      Value b = eval_term(engine, t.args[1], env);
      if (!a.is_number() || !b.is_number()) {
        fail(errc::type, "arithmetic on non-numeric values");
      }
      switch (t.op) {
        case '+': return Value::number(a.num() + b.num());
        case '-': return Value::number(a.num() - b.num());
        case '*': return Value::number(a.num() * b.num());
        case '/':
          if (b.num() == 0) fail(errc::type, "division by zero in rule arithmetic");
          return Value::number(a.num() / b.num());
      }
      fail(errc::type, "unknown arithmetic operator");
    }
  }
  fail(errc::type, "unknown term kind");
}

bool unify(Engine& engine, const Term& pat, const Value& v, Env& env) {
  switch (pat.kind) {
    case Term::Kind::variable: {
      if (auto bound = env.lookup(pat.text)) return *bound == v;
      env.bind(pat.text, v);
      return true;
    }
    case Term::Kind::wildcard:
      return true;
    case Term::Kind::number:
      return v.is_number() && v.num() == pat.number;
    case Term::Kind::symbol:
      return v.is_symbol() && v == engine.sym(pat.text);
    case Term::Kind::nil:
      return v.is_nil();
    case Term::Kind::record: {
      if (pat.args.empty()) return v.is_nil();
      if (!v.is_record()) return false;
      auto fields = engine.records().unpack(v.ord());
      if (fields.size() != pat.args.size()) return false;
      for (size_t i = 0; i < fields.size(); ++i) {
        if (!unify(engine, pat.args[i], fields[i], env)) return false;
      }
      return true;
    }
    case Term::Kind::functor:
    case Term::Kind::binary:
      return eval_term(engine, pat, env) == v;
  }
  return false;
}

// ---- static planning ----

void term_vars(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::variable) out.insert(t.text);
  for (const Term& a : t.args) term_vars(a, out);
}

void binding_vars(const Term& t, std::set<std::string>& out) {
  switch (t.kind) {
    case Term::Kind::variable:
      out.insert(t.text);
      return;
    case Term::Kind::record:
      for (const Term& a : t.args) binding_vars(a, out);
      return;
    default:
      return;  // computed or constant positions bind nothing
  }
}

bool contains_wildcard(const Term& t) {
  if (t.kind == Term::Kind::wildcard) return true;
  for (const Term& a : t.args) {
    if (contains_wildcard(a)) return true;
  }
  return false;
}

bool vars_covered(const Term& t, const std::set<std::string>& bound, const ConstMap& consts) {
  std::set<std::string> vars;
  term_vars(t, vars);
  for (const std::string& v : vars) {
    if (!bound.count(v) && !consts.count(v)) return false;
  }
  return true;
}

bool computable(const Term& t, const std::set<std::string>& bound, const ConstMap& consts) {
  return !contains_wildcard(t) && vars_covered(t, bound, consts);
}

// A pattern can be unified against a value without evaluating unbound
// variables: every functor/arithmetic subterm must be computable.
bool pattern_ready(const Term& t, const std::set<std::string>& bound, const ConstMap& consts) {
  switch (t.kind) {
    case Term::Kind::functor:
    case Term::Kind::binary:
      return vars_covered(t, bound, consts);
    case Term::Kind::record:
      for (const Term& a : t.args) {
        if (!pattern_ready(a, bound, consts)) return false;
      }
      return true;
    default:
      return true;
  }
}

struct Step {
  enum class Kind { scan, guard, negation } kind = Kind::scan;
  uint32_t lit = 0;
  std::vector<uint32_t> key_cols;
  bool bind_left = false;   // eq guard: compute rhs, unify lhs
  bool bind_right = false;  // eq guard: compute lhs, unify rhs
};

struct RulePlan {
  std::vector<Step> steps;
  int delta_lit = -1;
};

std::vector<uint32_t> computable_cols(const Atom& atom, const std::set<std::string>& bound,
                                      const ConstMap& consts) {
  std::vector<uint32_t> cols;
  for (uint32_t i = 0; i < atom.args.size(); ++i) {
    if (computable(atom.args[i], bound, consts)) cols.push_back(i);
  }
  return cols;
}

RulePlan make_plan(const Rule& rule, int delta_lit, const ConstMap& consts) {
  RulePlan plan;
  plan.delta_lit = delta_lit;
  std::set<std::string> bound;
  std::vector<bool> done(rule.body.size(), false);
  size_t remaining = rule.body.size();

  auto add_scan = [&](uint32_t i) {
    const Atom& atom = rule.body[i].atom;
    Step s;
    s.kind = Step::Kind::scan;
    s.lit = i;
    s.key_cols = computable_cols(atom, bound, consts);
    plan.steps.push_back(std::move(s));
    for (const Term& a : atom.args) binding_vars(a, bound);
    done[i] = true;
    --remaining;
  };

  if (delta_lit >= 0) add_scan(static_cast<uint32_t>(delta_lit));

  while (remaining > 0) {
    bool progress = false;
    // Guards and negations fire as soon as their variables are available,
    // keeping their original relative order.
    for (uint32_t i = 0; i < rule.body.size() && !progress; ++i) {
      if (done[i]) continue;
      const Literal& lit = rule.body[i];
      if (lit.kind == Literal::Kind::guard) {
        const Guard& g = lit.guard;
        bool lc = computable(g.lhs, bound, consts);
        bool rc = computable(g.rhs, bound, consts);
        Step s;
        s.kind = Step::Kind::guard;
        s.lit = i;
        if (lc && rc) {
          plan.steps.push_back(s);
        } else if (g.op == CmpOp::eq && lc && pattern_ready(g.rhs, bound, consts)) {
          s.bind_right = true;
          plan.steps.push_back(s);
          binding_vars(g.rhs, bound);
        } else if (g.op == CmpOp::eq && rc && pattern_ready(g.lhs, bound, consts)) {
          s.bind_left = true;
          plan.steps.push_back(s);
          binding_vars(g.lhs, bound);
        } else {
          continue;
        }
        done[i] = true;
        --remaining;
        progress = true;
      } else if (lit.kind == Literal::Kind::negated) {
        bool ready = true;
        for (const Term& a : lit.atom.args) {
          std::set<std::string> vars;
          term_vars(a, vars);
          for (const std::string& v : vars) {
            if (!bound.count(v) && !consts.count(v)) ready = false;
          }
        }
        if (!ready) continue;
        Step s;
        s.kind = Step::Kind::negation;
        s.lit = i;
        s.key_cols = computable_cols(lit.atom, bound, consts);
        plan.steps.push_back(std::move(s));
        done[i] = true;
        --remaining;
        progress = true;
      }
    }
    if (progress) continue;

    // Most-bound eligible positive atom next; body order breaks ties.
    int best = -1;
    size_t best_score = 0;
    for (uint32_t i = 0; i < rule.body.size(); ++i) {
      if (done[i] || rule.body[i].kind != Literal::Kind::atom) continue;
      const Atom& atom = rule.body[i].atom;
      bool eligible = true;
      for (const Term& a : atom.args) {
        if (!pattern_ready(a, bound, consts)) eligible = false;
      }
      if (!eligible) continue;
      size_t score = computable_cols(atom, bound, consts).size();
      if (best < 0 || score > best_score) {
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    if (best < 0) {
      fail(errc::safety, "rule body cannot be scheduled; unbound computed arguments");
    }
    add_scan(static_cast<uint32_t>(best));
  }
  return plan;
}

// ---- runtime firing ----

struct Derivation {
  uint32_t head = 0;  // index into rule.heads
  Tuple tuple;
};

struct FireContext {
  Engine& engine;
  const FactDB& db;
  const Rule& rule;
  const RulePlan& plan;
  const std::vector<uint32_t>& active_heads;
  const ConstMap& consts;
};

void emit_heads(const FireContext& ctx, Env& env, std::vector<Derivation>& out) {
  for (uint32_t h : ctx.active_heads) {
    const Atom& head = ctx.rule.heads[h];
    Tuple t;
    t.reserve(head.args.size());
    for (const Term& a : head.args) t.push_back(eval_term(ctx.engine, a, env));
    out.push_back({h, std::move(t)});
  }
}

bool guard_holds(Engine& engine, const Guard& g, const Step& step, Env& env) {
  if (step.bind_right) {
    Value v = eval_term(engine, g.lhs, env);
    return unify(engine, g.rhs, v, env);
  }
  if (step.bind_left) {
    Value v = eval_term(engine, g.rhs, env);
    return unify(engine, g.lhs, v, env);
  }
  Value a = eval_term(engine, g.lhs, env);
  Value b = eval_term(engine, g.rhs, env);
  switch (g.op) {
    case CmpOp::eq: return a == b;
    case CmpOp::ne: return !(a == b);
    default: break;
  }
  if (!a.is_number() || !b.is_number()) {
    fail(errc::type, "ordered comparison on non-numeric values");
  }
  switch (g.op) {
    case CmpOp::lt: return a.num() < b.num();
    case CmpOp::le: return a.num() <= b.num();
    case CmpOp::gt: return a.num() > b.num();
    case CmpOp::ge: return a.num() >= b.num();
    default: break;
  }
  fail(errc::type, "unknown comparison");
}

const Relation& body_relation(const FireContext& ctx, const Atom& atom) {
  const Relation* rel = ctx.db.find(atom.predicate);
  if (!rel) fail(errc::unknown_predicate, "relation " + atom.predicate + " missing");
  return *rel;
}

void fire_step(const FireContext& ctx, size_t step_idx, Env& env,
               std::vector<Derivation>& out) {
  if (step_idx == ctx.plan.steps.size()) {
    emit_heads(ctx, env, out);
    return;
  }
  const Step& step = ctx.plan.steps[step_idx];
  const Literal& lit = ctx.rule.body[step.lit];

  if (step.kind == Step::Kind::guard) {
    size_t m = env.mark();
    if (guard_holds(ctx.engine, lit.guard, step, env)) {
      fire_step(ctx, step_idx + 1, env, out);
    } else {
      env.rewind(m);
      return;
    }
    if (!step.bind_left && !step.bind_right) env.rewind(m);
    return;
  }

  if (step.kind == Step::Kind::negation) {
    const Relation& rel = body_relation(ctx, lit.atom);
    std::vector<Value> key;
    key.reserve(step.key_cols.size());
    for (uint32_t c : step.key_cols) {
      key.push_back(eval_term(ctx.engine, lit.atom.args[c], env));
    }
    bool found = false;
    if (step.key_cols.size() == lit.atom.args.size()) {
      found = rel.any_match(step.key_cols, key);
    } else {
      std::vector<uint32_t> ids;
      rel.match(step.key_cols, key, ids);
      for (uint32_t id : ids) {
        const Tuple& row = rel.rows()[id];
        size_t m = env.mark();
        bool all = true;
        for (uint32_t i = 0; i < lit.atom.args.size() && all; ++i) {
          all = unify(ctx.engine, lit.atom.args[i], row[i], env);
        }
        env.rewind(m);
        if (all) {
          found = true;
          break;
        }
      }
    }
    if (!found) fire_step(ctx, step_idx + 1, env, out);
    return;
  }

  const Relation& rel = body_relation(ctx, lit.atom);
  std::vector<Value> key;
  key.reserve(step.key_cols.size());
  for (uint32_t c : step.key_cols) {
    key.push_back(eval_term(ctx.engine, lit.atom.args[c], env));
  }
  std::vector<uint32_t> ids;
  rel.match(step.key_cols, key, ids);
  std::vector<bool> is_key(lit.atom.args.size(), false);
  for (uint32_t c : step.key_cols) is_key[c] = true;
  for (uint32_t id : ids) {
    const Tuple& row = rel.rows()[id];
    size_t m = env.mark();
    bool ok = true;
    for (uint32_t i = 0; i < lit.atom.args.size() && ok; ++i) {
      if (is_key[i]) continue;
      ok = unify(ctx.engine, lit.atom.args[i], row[i], env);
    }
    if (ok) fire_step(ctx, step_idx + 1, env, out);
    env.rewind(m);
  }
}

// Runs one rule variant, parallelized over the rows feeding its first scan.
void run_variant(Engine& engine, const FactDB& db, const Rule& rule, const RulePlan& plan,
                 const std::vector<uint32_t>& active_heads, const ConstMap& consts,
                 const std::vector<Tuple>* delta_rows, int workers,
                 std::vector<Derivation>& out) {
  FireContext ctx{engine, db, rule, plan, active_heads, consts};

  // Indexes must exist before the parallel region; building is not
  // thread-safe against itself.
  for (const Step& s : plan.steps) {
    if (s.kind == Step::Kind::guard) continue;
    body_relation(ctx, rule.body[s.lit].atom).prepare_index(s.key_cols);
  }

  if (plan.steps.empty() || plan.steps[0].kind != Step::Kind::scan) {
    Env env;
    env.consts = &consts;
    fire_step(ctx, 0, env, out);
    return;
  }

  const Step& first = plan.steps[0];
  const Atom& atom0 = rule.body[first.lit].atom;

  // Materialize the outer row set.
  std::vector<const Tuple*> rows0;
  if (delta_rows) {
    rows0.reserve(delta_rows->size());
    for (const Tuple& t : *delta_rows) rows0.push_back(&t);
  } else {
    const Relation& rel = body_relation(ctx, atom0);
    Env env0;
    env0.consts = &consts;
    std::vector<Value> key;
    for (uint32_t c : first.key_cols) key.push_back(eval_term(engine, atom0.args[c], env0));
    std::vector<uint32_t> ids;
    rel.match(first.key_cols, key, ids);
    rows0.reserve(ids.size());
    for (uint32_t id : ids) rows0.push_back(&rel.rows()[id]);
  }

  int nthreads = workers;
#ifdef _OPENMP
  if (nthreads <= 0) nthreads = omp_get_max_threads();
#else
  nthreads = 1;
#endif
  std::vector<std::vector<Derivation>> buffers(static_cast<size_t>(std::max(nthreads, 1)));

#ifdef _OPENMP
  // An exception leaving an OpenMP structured block terminates the
  // process, so the first one is captured and rethrown after the join.
  std::exception_ptr worker_error;
  std::atomic<bool> worker_failed{false};
#pragma omp parallel num_threads(std::max(nthreads, 1))
  {
    int tid = omp_get_thread_num();
    Env env;
    env.consts = &consts;
#pragma omp for schedule(dynamic, 16)
    for (long i = 0; i < static_cast<long>(rows0.size()); ++i) {
      if (worker_failed.load(std::memory_order_relaxed)) continue;
      try {
        const Tuple& row = *rows0[static_cast<size_t>(i)];
        env.slots.clear();
        bool ok = true;
        if (delta_rows) {
          for (uint32_t a = 0; a < atom0.args.size() && ok; ++a) {
            ok = unify(engine, atom0.args[a], row[a], env);
          }
        } else {
          std::vector<bool> is_key(atom0.args.size(), false);
          for (uint32_t c : first.key_cols) is_key[c] = true;
          for (uint32_t a = 0; a < atom0.args.size() && ok; ++a) {
            if (is_key[a]) continue;
            ok = unify(engine, atom0.args[a], row[a], env);
          }
        }
        if (ok) fire_step(ctx, 1, env, buffers[static_cast<size_t>(tid)]);
      } catch (...) {
        if (!worker_failed.exchange(true)) worker_error = std::current_exception();
      }
    }
  }
  if (worker_error) std::rethrow_exception(worker_error);
#else
  {
    Env env;
    env.consts = &consts;
    for (const Tuple* rowp : rows0) {
      const Tuple& row = *rowp;
      env.slots.clear();
      bool ok = true;
      if (delta_rows) {
        for (uint32_t a = 0; a < atom0.args.size() && ok; ++a) {
          ok = unify(engine, atom0.args[a], row[a], env);
        }
      } else {
        std::vector<bool> is_key(atom0.args.size(), false);
        for (uint32_t c : first.key_cols) is_key[c] = true;
        for (uint32_t a = 0; a < atom0.args.size() && ok; ++a) {
          if (is_key[a]) continue;
          ok = unify(engine, atom0.args[a], row[a], env);
        }
      }
      if (ok) fire_step(ctx, 1, env, buffers[0]);
    }
  }
#endif

  for (auto& buf : buffers) {
    out.insert(out.end(), std::make_move_iterator(buf.begin()),
               std::make_move_iterator(buf.end()));
  }
}

}  // namespace

FactDB evaluate(Engine& engine, const Program& program, const FactDB& edb,
                const EvalOptions& options, EvalStats* stats) {
  validate_program(program);
  ConstMap consts = effective_consts(program, options);
  StratumPlan splan = stratify(program, &engine.functors());

  FactDB db = edb;
  for (const auto& [name, decl] : program.relations) {
    Relation& rel = db.get(name, decl.arity());
    if (rel.arity() != decl.arity()) {
      fail(errc::arity, "relation " + name + " has arity " + std::to_string(rel.arity()) +
                            ", declared " + std::to_string(decl.arity()));
    }
  }

  if (stats) stats->strata.clear();

  for (size_t si = 0; si < splan.strata.size(); ++si) {
    const Stratum& stratum = splan.strata[si];
    auto t0 = std::chrono::steady_clock::now();
    uint64_t derived = 0;
    uint64_t iterations = 0;

    std::set<std::string> member(stratum.relations.begin(), stratum.relations.end());
    struct ActiveRule {
      uint32_t rule_id;
      std::vector<uint32_t> heads;       // active head indexes
      std::vector<uint32_t> delta_lits;  // body literals over stratum relations
    };
    std::vector<ActiveRule> active;
    for (uint32_t ri : stratum.rules) {
      const Rule& rule = program.rules[ri];
      ActiveRule ar;
      ar.rule_id = ri;
      for (uint32_t h = 0; h < rule.heads.size(); ++h) {
        if (member.count(rule.heads[h].predicate)) ar.heads.push_back(h);
      }
      for (uint32_t li = 0; li < rule.body.size(); ++li) {
        if (rule.body[li].kind == Literal::Kind::atom &&
            member.count(rule.body[li].atom.predicate)) {
          ar.delta_lits.push_back(li);
        }
      }
      active.push_back(std::move(ar));
    }

    std::map<std::pair<uint32_t, int>, RulePlan> plans;
    auto plan_for = [&](uint32_t rule_id, int delta_lit) -> const RulePlan& {
      auto key = std::make_pair(rule_id, delta_lit);
      auto it = plans.find(key);
      if (it == plans.end()) {
        it = plans.emplace(key, make_plan(program.rules[rule_id], delta_lit, consts)).first;
      }
      return it->second;
    };

    auto merge = [&](const std::vector<std::pair<uint32_t, std::vector<Derivation>>>& batches,
                     std::map<std::string, std::vector<Tuple>>& next_delta) {
      for (const auto& [rule_id, ders] : batches) {
        const Rule& rule = program.rules[rule_id];
        for (const Derivation& d : ders) {
          const std::string& pred = rule.heads[d.head].predicate;
          Relation& rel = db.get(pred, d.tuple.size());
          if (rel.insert(d.tuple)) {
            ++derived;
            next_delta[pred].push_back(d.tuple);
            if (rel.size() > options.tuple_limit) {
              fail(errc::resource_limit,
                   "relation " + pred + " exceeded the tuple limit of " +
                       std::to_string(options.tuple_limit));
            }
          }
        }
      }
    };

    // First pass: every rule over the full database.
    std::map<std::string, std::vector<Tuple>> delta;
    {
      std::vector<std::pair<uint32_t, std::vector<Derivation>>> batches;
      for (const ActiveRule& ar : active) {
        std::vector<Derivation> ders;
        run_variant(engine, db, program.rules[ar.rule_id], plan_for(ar.rule_id, -1), ar.heads,
                    consts, nullptr, options.workers, ders);
        batches.emplace_back(ar.rule_id, std::move(ders));
      }
      merge(batches, delta);
      ++iterations;
    }

    // Delta passes: each firing pins one body literal to the fresh tuples.
    while (!delta.empty()) {
      std::vector<std::pair<uint32_t, std::vector<Derivation>>> batches;
      for (const ActiveRule& ar : active) {
        for (uint32_t li : ar.delta_lits) {
          const Rule& rule = program.rules[ar.rule_id];
          auto dit = delta.find(rule.body[li].atom.predicate);
          if (dit == delta.end() || dit->second.empty()) continue;
          std::vector<Derivation> ders;
          run_variant(engine, db, rule, plan_for(ar.rule_id, static_cast<int>(li)), ar.heads,
                      consts, &dit->second, options.workers, ders);
          batches.emplace_back(ar.rule_id, std::move(ders));
        }
      }
      std::map<std::string, std::vector<Tuple>> next_delta;
      merge(batches, next_delta);
      delta = std::move(next_delta);
      ++iterations;
    }

    if (stats) {
      EvalStats::StratumStat st;
      st.relations = stratum.relations;
      st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      st.derived = derived;
      st.iterations = iterations;
      stats->strata.push_back(std::move(st));
      stats->total_derived += derived;
    }
  }
  return db;
}

}  // namespace symdl

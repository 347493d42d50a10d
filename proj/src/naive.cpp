// Reference evaluator. Deliberately shares no join or term machinery with
// evaluate(): brute-force enumeration, environments as plain maps copied on
// branch, no indexes, no deltas.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "symdl/error.hpp"
#include "symdl/eval.hpp"
#include "symdl/functors.hpp"
#include "symdl/parser.hpp"
#include "symdl/stratify.hpp"

namespace symdl {

namespace {

using NEnv = std::map<std::string, Value>;
using NConsts = std::map<std::string, uint64_t>;

Value n_eval(Engine& engine, const Term& t, const NEnv& env, const NConsts& consts) {
  switch (t.kind) {
    case Term::Kind::variable: {
      auto it = env.find(t.text);
      if (it != env.end()) return it->second;
      auto ct = consts.find(t.text);
      if (ct != consts.end()) return Value::number(ct->second);
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
      for (const Term& a : t.args) fields.push_back(n_eval(engine, a, env, consts));
      return engine.pack(fields);
    }
    case Term::Kind::functor: {
      std::vector<Value> args;
      for (const Term& a : t.args) args.push_back(n_eval(engine, a, env, consts));
      return engine.functors().call(engine, t.text, args);
    }
    case Term::Kind::binary: {
      Value a = n_eval(engine, t.args[0], env, consts);
      Value b = n_eval(engine, t.args[1], env, consts);
      if (!a.is_number() || !b.is_number()) fail(errc::type, "arithmetic on non-numbers");
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

bool n_unify(Engine& engine, const Term& pat, const Value& v, NEnv& env, const NConsts& consts) {
  switch (pat.kind) {
    case Term::Kind::variable: {
      auto it = env.find(pat.text);
      if (it != env.end()) return it->second == v;
      auto ct = consts.find(pat.text);
      if (ct != consts.end()) return Value::number(ct->second) == v;
      env.emplace(pat.text, v);
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
        if (!n_unify(engine, pat.args[i], fields[i], env, consts)) return false;
      }
      return true;
    }
    case Term::Kind::functor:
    case Term::Kind::binary:
      return n_eval(engine, pat, env, consts) == v;
  }
  return false;
}

void n_term_vars(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::variable) out.insert(t.text);
  for (const Term& a : t.args) n_term_vars(a, out);
}

bool n_covered(const Term& t, const NEnv& env, const NConsts& consts) {
  std::set<std::string> vars;
  n_term_vars(t, vars);
  for (const std::string& v : vars) {
    if (!env.count(v) && !consts.count(v)) return false;
  }
  return true;
}

bool n_no_wildcard(const Term& t) {
  if (t.kind == Term::Kind::wildcard) return false;
  for (const Term& a : t.args) {
    if (!n_no_wildcard(a)) return false;
  }
  return true;
}

bool n_pattern_ready(const Term& t, const NEnv& env, const NConsts& consts) {
  switch (t.kind) {
    case Term::Kind::functor:
    case Term::Kind::binary:
      return n_covered(t, env, consts);
    case Term::Kind::record:
      for (const Term& a : t.args) {
        if (!n_pattern_ready(a, env, consts)) return false;
      }
      return true;
    default:
      return true;
  }
}

struct NaiveFire {
  Engine& engine;
  const FactDB& db;
  const Rule& rule;
  const std::vector<uint32_t>& active_heads;
  const NConsts& consts;
  std::vector<std::pair<uint32_t, Tuple>>& out;

  void emit(const NEnv& env) {
    for (uint32_t h : active_heads) {
      Tuple t;
      for (const Term& a : rule.heads[h].args) t.push_back(n_eval(engine, a, env, consts));
      out.emplace_back(h, std::move(t));
    }
  }

  void run(std::vector<bool> done, NEnv env) {
    int pick = -1;
    // Guards and negations as soon as ready, in body order; otherwise the
    // first ready positive atom.
    for (size_t i = 0; i < rule.body.size(); ++i) {
      if (done[i]) continue;
      const Literal& lit = rule.body[i];
      if (lit.kind == Literal::Kind::guard) {
        const Guard& g = lit.guard;
        bool lc = n_no_wildcard(g.lhs) && n_covered(g.lhs, env, consts);
        bool rc = n_no_wildcard(g.rhs) && n_covered(g.rhs, env, consts);
        bool bindable = g.op == CmpOp::eq &&
                        ((lc && n_pattern_ready(g.rhs, env, consts)) ||
                         (rc && n_pattern_ready(g.lhs, env, consts)));
        if ((lc && rc) || bindable) {
          pick = static_cast<int>(i);
          break;
        }
      } else if (lit.kind == Literal::Kind::negated) {
        bool ready = true;
        for (const Term& a : lit.atom.args) {
          if (!n_covered(a, env, consts)) ready = false;
        }
        if (ready) {
          pick = static_cast<int>(i);
          break;
        }
      }
    }
    if (pick < 0) {
      for (size_t i = 0; i < rule.body.size(); ++i) {
        if (done[i] || rule.body[i].kind != Literal::Kind::atom) continue;
        bool ready = true;
        for (const Term& a : rule.body[i].atom.args) {
          if (!n_pattern_ready(a, env, consts)) ready = false;
        }
        if (ready) {
          pick = static_cast<int>(i);

          break;
        }
      }
    }
    if (pick < 0) {
      bool all_done = true;
      for (bool d : done) all_done = all_done && d;
      if (all_done) {
        emit(env);
        return;
      }
      fail(errc::safety, "rule body cannot be scheduled");
    }

    done[static_cast<size_t>(pick)] = true;
    const Literal& lit = rule.body[static_cast<size_t>(pick)];

    if (lit.kind == Literal::Kind::guard) {
      const Guard& g = lit.guard;
      bool lc = n_no_wildcard(g.lhs) && n_covered(g.lhs, env, consts);
      bool rc = n_no_wildcard(g.rhs) && n_covered(g.rhs, env, consts);
      if (lc && rc) {
        Value a = n_eval(engine, g.lhs, env, consts);
        Value b = n_eval(engine, g.rhs, env, consts);
        bool ok = false;
        switch (g.op) {
          case CmpOp::eq: ok = a == b; break;
          case CmpOp::ne: ok = !(a == b); break;
          default:
            if (!a.is_number() || !b.is_number()) {
              fail(errc::type, "ordered comparison on non-numbers");
            }
            switch (g.op) {
              case CmpOp::lt: ok = a.num() < b.num(); break;
              case CmpOp::le: ok = a.num() <= b.num(); break;
              case CmpOp::gt: ok = a.num() > b.num(); break;
              case CmpOp::ge: ok = a.num() >= b.num(); break;
              default: break;
            }
        }
        if (ok) run(done, env);
        return;
      }
      if (lc) {
        Value v = n_eval(engine, g.lhs, env, consts);
        NEnv env2 = env;
        if (n_unify(engine, g.rhs, v, env2, consts)) run(done, std::move(env2));
        return;
      }
      Value v = n_eval(engine, g.rhs, env, consts);
      NEnv env2 = env;
      if (n_unify(engine, g.lhs, v, env2, consts)) run(done, std::move(env2));
      return;
    }

    const Relation* rel = db.find(lit.atom.predicate);
    if (!rel) fail(errc::unknown_predicate, "relation " + lit.atom.predicate + " missing");

    if (lit.kind == Literal::Kind::negated) {
      for (const Tuple& row : rel->rows()) {
        NEnv scratch = env;
        bool all = true;
        for (size_t i = 0; i < lit.atom.args.size() && all; ++i) {
          all = n_unify(engine, lit.atom.args[i], row[i], scratch, consts);
        }
        if (all) return;  // witness found, negation fails
      }
      run(done, env);
      return;
    }

    for (const Tuple& row : rel->rows()) {
      NEnv env2 = env;
      bool all = true;
      for (size_t i = 0; i < lit.atom.args.size() && all; ++i) {
        all = n_unify(engine, lit.atom.args[i], row[i], env2, consts);
      }
      if (all) run(done, env2);
    }
  }
};

}  // namespace

FactDB naive_evaluate(Engine& engine, const Program& program, const FactDB& edb,
                      const EvalOptions& options) {
  validate_program(program);
  NConsts consts = program.consts;
  for (const auto& [k, v] : options.const_overrides) consts[k] = v;
  StratumPlan splan = stratify(program, &engine.functors());

  FactDB db = edb;
  for (const auto& [name, decl] : program.relations) {
    Relation& rel = db.get(name, decl.arity());
    if (rel.arity() != decl.arity()) {
      fail(errc::arity, "relation " + name + " has arity " + std::to_string(rel.arity()) +
                            ", declared " + std::to_string(decl.arity()));
    }
  }

  for (const Stratum& stratum : splan.strata) {
    std::set<std::string> member(stratum.relations.begin(), stratum.relations.end());
    bool changed = true;
    while (changed) {
      changed = false;
      for (uint32_t ri : stratum.rules) {
        const Rule& rule = program.rules[ri];
        std::vector<uint32_t> active_heads;
        for (uint32_t h = 0; h < rule.heads.size(); ++h) {
          if (member.count(rule.heads[h].predicate)) active_heads.push_back(h);
        }
        std::vector<std::pair<uint32_t, Tuple>> derived;
        NaiveFire fire{engine, db, rule, active_heads, consts, derived};
        fire.run(std::vector<bool>(rule.body.size(), false), NEnv{});
        for (auto& [h, tuple] : derived) {
          Relation& rel = db.get(rule.heads[h].predicate, tuple.size());
          if (rel.insert(tuple)) {
            changed = true;
            if (rel.size() > options.tuple_limit) {
              fail(errc::resource_limit, "relation " + rule.heads[h].predicate +
                                             " exceeded the tuple limit");
            }
          }
        }
      }
    }
  }
  return db;
}

}  // namespace symdl

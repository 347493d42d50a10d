#include "symdl/native_solver.hpp"

#include <symdl_embedded/solver.hpp>

#include "symdl/error.hpp"
#include "symdl/eval.hpp"
#include "symdl/expr.hpp"
#include "symdl/parser.hpp"

namespace symdl {

namespace {

constexpr const char* kInstance = "solver";

// Every node must be a 3-field record with a symbol base; children are nil or
// nodes, and a unary node leaves only the right child nil.
bool well_formed(const Engine& eng, const Value& v) {
  if (!v.is_record()) return false;
  auto fields = eng.unpack(v);
  if (fields.size() != 3 || !fields[0].is_symbol()) return false;
  const Value& l = fields[1];
  const Value& r = fields[2];
  if (l.is_nil() && !r.is_nil()) return false;
  if (!l.is_nil() && !well_formed(eng, l)) return false;
  if (!r.is_nil() && !well_formed(eng, r)) return false;
  return true;
}

Value canon_node(Engine& eng, const Value& v) {
  if (v.is_nil()) return v;
  auto fields = eng.unpack(v);
  Value l = canon_node(eng, fields[1]);
  Value r = canon_node(eng, fields[2]);
  std::string base = eng.name_of(fields[0]);
  if (l.is_nil() && r.is_nil()) {
    if (auto c = parse_hex_const(base)) {
      base = canonical_hex(mask_width(*c, eng.eval_width()));
    }
  } else if (const OperatorInfo* info = OperatorTable::instance().find(base)) {
    base = info->name;
  }
  Value node[3] = {eng.sym(base), l, r};
  return eng.pack(node);
}

}  // namespace

NativeSolver::NativeSolver(Engine& engine, uint64_t max_size)
    : engine_(engine), max_size_(max_size) {
  std::string prefix = std::string(kInstance) + ".";
  edb_.get(prefix + "SeedExpression", 1);
  edb_.get(prefix + "IsFreeVar", 1);
  edb_.get(prefix + "IsBoundVar", 1);
  edb_.get(prefix + "InitialConstant", 1);
}

Value NativeSolver::canon(const Value& expr) const {
  if (!well_formed(engine_, expr)) {
    fail(errc::type, "malformed expression record");
  }
  return canon_node(engine_, expr);
}

void NativeSolver::add_seed(const Value& expr) {
  Value c = canon(expr);
  uint64_t size = tree_size(engine_, c);
  if (size > max_size_) {
    fail(errc::seed_too_large, "seed expression has " + std::to_string(size) +
                                   " nodes, over the bound of " + std::to_string(max_size_));
  }
  edb_.get(std::string(kInstance) + ".SeedExpression", 1).insert({c});
}

void NativeSolver::add_constant(std::string_view hex) {
  auto v = parse_hex_const(hex);
  if (!v) fail(errc::type, "not a hex constant: " + std::string(hex));
  std::string c = canonical_hex(mask_width(*v, engine_.eval_width()));
  edb_.get(std::string(kInstance) + ".InitialConstant", 1).insert({engine_.sym(c)});
}

void NativeSolver::mark_free(std::string_view name) {
  edb_.get(std::string(kInstance) + ".IsFreeVar", 1).insert({engine_.sym(name)});
}

void NativeSolver::mark_bound(std::string_view name) {
  edb_.get(std::string(kInstance) + ".IsBoundVar", 1).insert({engine_.sym(name)});
}

void NativeSolver::run() {
  std::string src(embedded::solver_dl);
  src +=
      "\n"
      ".init solver = AlgebraicSolver\n"
      ".input solver.SeedExpression\n"
      ".input solver.IsFreeVar\n"
      ".input solver.IsBoundVar\n"
      ".input solver.InitialConstant\n"
      ".output solver.Equals\n"
      ".output solver.NormalForm\n"
      ".output solver.ValueForFreeVariable\n";
  Program program = parse_program(src);
  EvalOptions options;
  options.const_overrides["SOLVER_MAX_SIZE"] = max_size_;
  result_ = evaluate(engine_, program, edb_, options);
  ran_ = true;
}

const Relation* NativeSolver::out(const std::string& name) const {
  if (!ran_) fail(errc::usage, "solver queried before run()");
  return result_.find(std::string(kInstance) + "." + name);
}

bool NativeSolver::in_universe(const Value& expr) const {
  const Relation* eq = out("Equals");
  if (!eq) return false;
  Value c = canon(expr);
  return eq->contains({c, c});
}

Value NativeSolver::normal_form(const Value& expr) const {
  const Relation* nf = out("NormalForm");
  Value c = canon(expr);
  if (nf) {
    for (const Tuple& row : nf->rows()) {
      if (row[0] == c) return row[1];
    }
  }
  fail(errc::not_in_universe, "expression never entered the solver universe");
}

bool NativeSolver::equal(const Value& a, const Value& b) const {
  const Relation* eq = out("Equals");
  return eq && eq->contains({canon(a), canon(b)});
}

std::vector<std::pair<std::string, Value>> NativeSolver::solutions() const {
  std::vector<std::pair<std::string, Value>> res;
  const Relation* vals = out("ValueForFreeVariable");
  if (vals) {
    for (const Tuple& row : vals->rows()) {
      res.emplace_back(engine_.name_of(row[0]), row[1]);
    }
  }
  return res;
}

const FactDB& NativeSolver::results() const {
  if (!ran_) fail(errc::usage, "solver queried before run()");
  return result_;
}

std::vector<std::unique_ptr<NativeSolver>> run_solver_rounds(
    Engine& engine, uint64_t rounds, uint64_t max_size,
    const std::function<void(uint64_t, const NativeSolver*, NativeSolver&)>& feed) {
  std::vector<std::unique_ptr<NativeSolver>> done;
  for (uint64_t k = 0; k < rounds; ++k) {
    auto solver = std::make_unique<NativeSolver>(engine, max_size);
    feed(k, done.empty() ? nullptr : done.back().get(), *solver);
    solver->run();
    done.push_back(std::move(solver));
  }
  return done;
}

}  // namespace symdl

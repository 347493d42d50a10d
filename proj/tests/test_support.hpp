#pragma once

// Shared helpers for the unit and acceptance binaries: expression builders,
// cons-list plumbing, random program families with independent oracles, and
// a small SSA CFG generator whose reachable set is computed by concrete
// enumeration instead of the engine under test.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "symdl/ast.hpp"
#include "symdl/eval.hpp"
#include "symdl/expr.hpp"
#include "symdl/factdb.hpp"
#include "symdl/parser.hpp"
#include "symdl/value.hpp"

namespace tsup {

using symdl::Engine;
using symdl::FactDB;
using symdl::Tuple;
using symdl::Value;
using symdl::u256;

// ---- expression and list builders ----

inline Value leaf(Engine& e, std::string_view base) {
  Value f[3] = {e.sym(base), Value::nil_value(), Value::nil_value()};
  return e.pack(f);
}

inline Value un(Engine& e, std::string_view op, const Value& l) {
  Value f[3] = {e.sym(op), l, Value::nil_value()};
  return e.pack(f);
}

inline Value bin(Engine& e, std::string_view op, const Value& l, const Value& r) {
  Value f[3] = {e.sym(op), l, r};
  return e.pack(f);
}

inline Value hex_leaf(Engine& e, const u256& v) { return leaf(e, symdl::canonical_hex(v)); }

inline Value cons(Engine& e, const Value& head, const Value& tail) {
  Value f[2] = {head, tail};
  return e.pack(f);
}

inline Value list_of(Engine& e, const std::vector<Value>& items) {
  Value l = Value::nil_value();
  for (auto it = items.rbegin(); it != items.rend(); ++it) l = cons(e, *it, l);
  return l;
}

inline std::vector<Value> list_items(const Engine& e, Value l) {
  std::vector<Value> out;
  while (!l.is_nil()) {
    auto f = e.unpack(l);
    out.push_back(f[0]);
    l = f[1];
  }
  return out;
}

inline Tuple row(Engine& e, std::initializer_list<std::string_view> cells) {
  Tuple t;
  for (auto c : cells) t.push_back(e.sym(c));
  return t;
}

// Splits SMT-LIB text into parenthesis and word tokens; whitespace-insensitive
// comparisons go through this.
inline std::vector<std::string> smt_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '(' || c == ')') {
      if (!cur.empty()) { out.push_back(cur); cur.clear(); }
      out.push_back(std::string(1, c));
    } else if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      if (!cur.empty()) { out.push_back(cur); cur.clear(); }
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// ---- random transitive-closure style programs with a BFS oracle ----

struct GraphCase {
  std::string program_text;
  FactDB edb;
  // Expected Path tuples, independently computed.
  std::set<std::pair<uint64_t, uint64_t>> expected_path;
};

inline GraphCase make_graph_case(Engine& engine, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nodes_dist(4, 30);
  int n = nodes_dist(rng);
  std::uniform_int_distribution<int> edges_dist(n / 2, n * 2);
  int m = edges_dist(rng);
  std::uniform_int_distribution<uint64_t> node(0, static_cast<uint64_t>(n) - 1);

  GraphCase c;
  std::set<std::pair<uint64_t, uint64_t>> edges;
  for (int i = 0; i < m; ++i) edges.emplace(node(rng), node(rng));

  auto& edge_rel = c.edb.get("Edge", 2);
  for (auto [a, b] : edges) edge_rel.insert({Value::number(a), Value::number(b)});
  (void)engine;

  // Three recursion shapes for the same closure.
  static const char* kBodies[] = {
      "Path(x, z) :- Path(x, y), Edge(y, z).\n",
      "Path(x, z) :- Edge(x, y), Path(y, z).\n",
      "Path(x, z) :- Path(x, y), Path(y, z).\n",
  };
  std::uniform_int_distribution<int> shape(0, 2);
  c.program_text =
      ".decl Edge(a: number, b: number)\n"
      ".input Edge\n"
      ".decl Path(a: number, b: number)\n"
      ".output Path\n"
      "Path(x, y) :- Edge(x, y).\n";
  c.program_text += kBodies[shape(rng)];

  // Oracle: plain reachability closure over the edge list.
  std::map<uint64_t, std::vector<uint64_t>> adj;
  for (auto [a, b] : edges) adj[a].push_back(b);
  for (auto [a, b] : edges) {
    (void)b;
    std::vector<uint64_t> stack{a};
    std::set<uint64_t> seen;
    while (!stack.empty()) {
      uint64_t v = stack.back();
      stack.pop_back();
      for (uint64_t w : adj[v]) {
        if (seen.insert(w).second) {
          c.expected_path.emplace(a, w);
          stack.push_back(w);
        }
      }
    }
  }
  return c;
}

struct StratifiedCase {
  std::string program_text;
  FactDB edb;
  std::set<uint64_t> expected_reach;
  std::set<uint64_t> expected_unreach;
};

inline StratifiedCase make_stratified_case(Engine& engine, std::mt19937_64& rng) {
  (void)engine;
  std::uniform_int_distribution<int> nodes_dist(3, 20);
  int n = nodes_dist(rng);
  std::uniform_int_distribution<uint64_t> node(0, static_cast<uint64_t>(n) - 1);
  std::uniform_int_distribution<int> edges_dist(n / 2, n * 2);

  StratifiedCase c;
  std::set<std::pair<uint64_t, uint64_t>> edges;
  int m = edges_dist(rng);
  for (int i = 0; i < m; ++i) edges.emplace(node(rng), node(rng));
  uint64_t seed = node(rng);

  auto& node_rel = c.edb.get("Node", 1);
  for (int i = 0; i < n; ++i) node_rel.insert({Value::number(static_cast<uint64_t>(i))});
  auto& edge_rel = c.edb.get("Edge", 2);
  for (auto [a, b] : edges) edge_rel.insert({Value::number(a), Value::number(b)});
  c.edb.get("Seed", 1).insert({Value::number(seed)});

  c.program_text =
      ".decl Node(a: number)\n"
      ".decl Edge(a: number, b: number)\n"
      ".decl Seed(a: number)\n"
      ".input Node\n"
      ".input Edge\n"
      ".input Seed\n"
      ".decl Reach(a: number)\n"
      ".decl Unreach(a: number)\n"
      ".output Reach\n"
      ".output Unreach\n"
      "Reach(x) :- Seed(x).\n"
      "Reach(y) :- Reach(x), Edge(x, y).\n"
      "Unreach(x) :- Node(x), !Reach(x).\n";

  std::map<uint64_t, std::vector<uint64_t>> adj;
  for (auto [a, b] : edges) adj[a].push_back(b);
  std::vector<uint64_t> stack{seed};
  c.expected_reach.insert(seed);
  while (!stack.empty()) {
    uint64_t v = stack.back();
    stack.pop_back();
    for (uint64_t w : adj[v]) {
      if (c.expected_reach.insert(w).second) stack.push_back(w);
    }
  }
  for (int i = 0; i < n; ++i) {
    auto v = static_cast<uint64_t>(i);
    if (!c.expected_reach.count(v)) c.expected_unreach.insert(v);
  }
  return c;
}

// ---- random SSA control-flow graphs with a concrete-trace oracle ----

// Shape: a spine of blocks b0 -> b1 -> ... where every non-terminal spine
// block branches on a comparison; false edges lead to a terminal side block
// or loop back to an earlier spine block. Variable uses respect dominance, so
// every referenced variable is bound on every path that reaches the use.
struct CfgCase {
  FactDB facts;
  int nargs = 1;

  struct BinOp {
    std::string op, left, right, res;
  };
  struct Block {
    std::string name;
    std::vector<std::pair<std::string, std::string>> phis;   // to := pre-block from
    std::vector<std::pair<std::string, u256>> assigns;       // var := constant
    std::vector<BinOp> binops;                               // in order
    bool has_branch = false;
    std::string cond_var, true_target, false_target;
  };
  std::vector<Block> blocks;  // entry first
};

inline CfgCase make_cfg_case(Engine& engine, std::mt19937_64& rng, int width) {
  std::uniform_int_distribution<int> nargs_dist(1, 2);
  std::uniform_int_distribution<int> spine_dist(2, 6);
  std::uniform_int_distribution<int> pct(0, 99);
  u256 mask = (u256(1) << width) - 1;
  auto rnd_const = [&] { return u256(rng()) & mask; };

  CfgCase c;
  c.nargs = nargs_dist(rng);
  int spine = spine_dist(rng);

  std::vector<std::string> vars;  // defined along the spine; dominance-safe
  for (int a = 0; a < c.nargs; ++a) vars.push_back("$fresh_f/a" + std::to_string(a));

  static const char* kCmp[] = {"LT", "GT", "EQ", "SLT"};
  int next_tmp = 0;
  int side_count = 0;

  for (int i = 0; i < spine; ++i) {
    CfgCase::Block b;
    b.name = "b" + std::to_string(i);

    if (i > 0 && pct(rng) < 30) {
      std::uniform_int_distribution<size_t> pick(0, vars.size() - 1);
      std::string to = "p" + std::to_string(next_tmp++);
      b.phis.emplace_back(to, vars[pick(rng)]);
      vars.push_back(to);
    }
    if (pct(rng) < 40) {
      std::string v = "k" + std::to_string(next_tmp++);
      b.assigns.emplace_back(v, rnd_const());
      vars.push_back(v);
    }

    if (i + 1 < spine) {
      std::uniform_int_distribution<size_t> pick(0, vars.size() - 1);
      CfgCase::BinOp op;
      op.op = kCmp[pct(rng) % 4];
      op.left = vars[pick(rng)];
      if (pct(rng) < 60) {
        std::string v = "k" + std::to_string(next_tmp++);
        b.assigns.emplace_back(v, rnd_const());
        vars.push_back(v);
        op.right = v;
      } else {
        op.right = vars[pick(rng)];
      }
      op.res = "c" + std::to_string(next_tmp++);
      b.binops.push_back(op);
      vars.push_back(op.res);

      b.has_branch = true;
      b.cond_var = op.res;
      b.true_target = "b" + std::to_string(i + 1);
      int roll = pct(rng);
      if (roll < 25 && i > 0) {
        std::uniform_int_distribution<int> back(0, i);
        b.false_target = "b" + std::to_string(back(rng));
      } else if (roll < 70) {
        b.false_target = "s" + std::to_string(side_count++);
      } else {
        b.false_target = b.true_target;
      }
    }
    c.blocks.push_back(b);
  }
  for (int s = 0; s < side_count; ++s) {
    CfgCase::Block b;
    b.name = "s" + std::to_string(s);
    c.blocks.push_back(b);
  }

  // Emit the EDB. Argument names drop the fresh prefix: the engine mints
  // "$fresh_" + function + "/" + arg itself.
  auto& fn_arg = c.facts.get("FunctionArg", 2);
  for (int a = 0; a < c.nargs; ++a) {
    fn_arg.insert(row(engine, {"f", std::string("a") + std::to_string(a)}));
  }
  c.facts.get("EntryBlock", 2).insert(row(engine, {"f", "b0"}));
  auto& assign = c.facts.get("Assign", 3);
  auto& phi = c.facts.get("PHI", 3);
  auto& binop = c.facts.get("BinOperation", 5);
  auto& tedge = c.facts.get("TrueEdge", 3);
  auto& fedge = c.facts.get("FalseEdge", 3);
  for (const auto& b : c.blocks) {
    for (const auto& [to, from] : b.phis) {
      phi.insert(row(engine, {b.name, to, from}));
    }
    for (const auto& [v, k] : b.assigns) {
      assign.insert({engine.sym(b.name), engine.sym(v), leaf(engine, symdl::canonical_hex(k))});
    }
    for (const auto& op : b.binops) {
      binop.insert(row(engine, {b.name, op.op, op.left, op.right, op.res}));
    }
    if (b.has_branch) {
      tedge.insert(row(engine, {b.name, b.true_target, b.cond_var}));
      fedge.insert(row(engine, {b.name, b.false_target, b.cond_var}));
    }
  }
  return c;
}

// Concrete enumeration oracle: runs every argument assignment through the
// CFG, following branch decisions, and records each (block, path-condition
// length) the execution visits while the length stays under the bound.
inline std::set<std::pair<std::string, int>> cfg_oracle(const CfgCase& c, int width,
                                                        uint64_t bound) {
  std::map<std::string, const CfgCase::Block*> by_name;
  for (const auto& b : c.blocks) by_name[b.name] = &b;
  u256 limit = u256(1) << width;

  std::set<std::pair<std::string, int>> out;
  std::vector<u256> args(static_cast<size_t>(c.nargs), 0);
  while (true) {
    std::map<std::string, u256> env;
    for (int a = 0; a < c.nargs; ++a) {
      env["$fresh_f/a" + std::to_string(a)] = args[static_cast<size_t>(a)];
    }
    std::string block = "b0";
    int cond_len = 0;
    out.emplace(block, cond_len);
    while (true) {
      const CfgCase::Block* b = by_name.at(block);
      std::map<std::string, u256> pre = env;
      for (const auto& [to, from] : b->phis) env[to] = pre.at(from);
      for (const auto& [v, k] : b->assigns) env[v] = k;
      for (const auto& op : b->binops) {
        env[op.res] = symdl::apply_binop(op.op, env.at(op.left), env.at(op.right), width);
      }
      if (!b->has_branch) break;
      u256 cond = env.at(b->cond_var);
      std::string next;
      if (cond == 1) next = b->true_target;
      else if (cond == 0) next = b->false_target;
      else break;
      if (static_cast<uint64_t>(cond_len) + 1 >= bound) break;
      ++cond_len;
      block = next;
      out.emplace(block, cond_len);
    }

    size_t i = 0;
    while (i < args.size()) {
      args[i] += 1;
      if (args[i] < limit) break;
      args[i] = 0;
      ++i;
    }
    if (i == args.size()) break;
  }
  return out;
}

// Engine-side projection of Reachable to the oracle's (block, length) pairs.
inline std::set<std::pair<std::string, int>> reachable_pairs(const Engine& engine,
                                                             const FactDB& out) {
  std::set<std::pair<std::string, int>> pairs;
  const symdl::Relation* rel = out.find("Reachable");
  if (!rel) return pairs;
  for (const Tuple& t : rel->rows()) {
    int len = 0;
    Value pc = t[1];
    while (!pc.is_nil()) {
      ++len;
      pc = engine.unpack(pc)[1];
    }
    pairs.emplace(engine.name_of(t[2]), len);
  }
  return pairs;
}

}  // namespace tsup

#include "symdl/stratify.hpp"

#include <algorithm>
#include <set>

#include "symdl/error.hpp"
#include "symdl/functors.hpp"

namespace symdl {

namespace {

void collect_functor_names(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::functor) out.insert(t.text);
  for (const Term& a : t.args) collect_functor_names(a, out);
}

bool rule_uses_non_monotonic_functor(const Rule& rule, const FunctorRegistry* functors) {
  if (!functors) return false;
  std::set<std::string> names;
  for (const Atom& h : rule.heads) {
    for (const Term& t : h.args) collect_functor_names(t, names);
  }
  for (const Literal& lit : rule.body) {
    if (lit.kind == Literal::Kind::guard) {
      collect_functor_names(lit.guard.lhs, names);
      collect_functor_names(lit.guard.rhs, names);
    } else {
      for (const Term& t : lit.atom.args) collect_functor_names(t, names);
    }
  }
  for (const std::string& n : names) {
    const FunctorInfo* info = functors->find(n);
    if (info && info->non_monotonic) return true;
  }
  return false;
}

struct Edge {
  int from = 0;
  int to = 0;
  bool negative = false;
  uint32_t rule = 0;
};

}  // namespace

StratumPlan stratify(const Program& program, const FunctorRegistry* functors) {
  // IDB relations only; EDB inputs are always available below stratum 0.
  std::vector<std::string> idb;
  for (const auto& [name, decl] : program.relations) {
    if (!decl.is_input) idb.push_back(name);
  }
  std::map<std::string, int> node_of;
  for (size_t i = 0; i < idb.size(); ++i) node_of[idb[i]] = static_cast<int>(i);

  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(idb.size());
  for (uint32_t ri = 0; ri < program.rules.size(); ++ri) {
    const Rule& rule = program.rules[ri];
    bool strict_all = rule_uses_non_monotonic_functor(rule, functors);
    for (const Atom& head : rule.heads) {
      auto hit = node_of.find(head.predicate);
      if (hit == node_of.end()) continue;
      for (const Literal& lit : rule.body) {
        if (lit.kind == Literal::Kind::guard) continue;
        auto bit = node_of.find(lit.atom.predicate);
        if (bit == node_of.end()) continue;  // EDB dependency
        bool negative = strict_all || lit.kind == Literal::Kind::negated;
        edges.push_back({bit->second, hit->second, negative, ri});
        adj[static_cast<size_t>(bit->second)].push_back(hit->second);
      }
    }
  }

  // Tarjan SCC; nodes visited in sorted-name order so the component order is
  // deterministic. Components are emitted sinks-first, i.e. reverse
  // topological order of the condensation.
  int n = static_cast<int>(idb.size());
  std::vector<int> index(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0);
  std::vector<int> comp(static_cast<size_t>(n), -1);
  std::vector<bool> on_stack(static_cast<size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int counter = 0;

  auto strongconnect = [&](auto&& self, int v) -> void {
    index[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = counter++;
    stack.push_back(v);
    on_stack[static_cast<size_t>(v)] = true;
    for (int w : adj[static_cast<size_t>(v)]) {
      if (index[static_cast<size_t>(w)] < 0) {
        self(self, w);
        low[static_cast<size_t>(v)] = std::min(low[static_cast<size_t>(v)], low[static_cast<size_t>(w)]);
      } else if (on_stack[static_cast<size_t>(w)]) {
        low[static_cast<size_t>(v)] = std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
      }
    }
    if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
      std::vector<int> members;
      while (true) {
        int w = stack.back();
        stack.pop_back();
        on_stack[static_cast<size_t>(w)] = false;
        comp[static_cast<size_t>(w)] = static_cast<int>(components.size());
        members.push_back(w);
        if (w == v) break;
      }
      components.push_back(std::move(members));
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[static_cast<size_t>(v)] < 0) strongconnect(strongconnect, v);
  }

  // Reverse emission order to run dependencies before dependents.
  size_t ncomp = components.size();
  auto stratum_index = [&](int c) { return static_cast<int>(ncomp) - 1 - c; };

  for (const Edge& e : edges) {
    if (e.negative && comp[static_cast<size_t>(e.from)] == comp[static_cast<size_t>(e.to)]) {
      const Rule& rule = program.rules[e.rule];
      fail(errc::stratification,
           "relation " + idb[static_cast<size_t>(e.to)] +
               " depends non-monotonically on " + idb[static_cast<size_t>(e.from)] +
               " inside a recursive component (rule at line " +
               std::to_string(rule.heads.empty() ? 0 : rule.heads[0].line) + ")");
    }
  }

  StratumPlan plan;
  plan.strata.resize(ncomp);
  for (size_t c = 0; c < ncomp; ++c) {
    auto& members = components[c];
    Stratum& s = plan.strata[static_cast<size_t>(stratum_index(static_cast<int>(c)))];
    for (int v : members) s.relations.push_back(idb[static_cast<size_t>(v)]);
    std::sort(s.relations.begin(), s.relations.end());
  }
  for (const auto& [name, decl] : program.relations) {
    if (decl.is_input) {
      plan.stratum_of[name] = -1;
    } else {
      plan.stratum_of[name] = stratum_index(comp[static_cast<size_t>(node_of[name])]);
    }
  }
  for (uint32_t ri = 0; ri < program.rules.size(); ++ri) {
    std::set<int> targets;
    for (const Atom& head : program.rules[ri].heads) {
      auto it = plan.stratum_of.find(head.predicate);
      if (it != plan.stratum_of.end() && it->second >= 0) targets.insert(it->second);
    }
    for (int s : targets) plan.strata[static_cast<size_t>(s)].rules.push_back(ri);
  }
  return plan;
}

}  // namespace symdl

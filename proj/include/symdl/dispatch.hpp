#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "symdl/smt.hpp"
#include "symdl/value.hpp"

namespace symdl {

// Routing policy between the in-process algebraic solver and the external
// SMT process. A satisfiability query whose conjunction tree has at most
// switch_size nodes runs natively, larger ones go to the SMT bridge, so
// switch_size = 0 sends everything to SMT and a huge value keeps everything
// native.
struct DispatchOptions {
  uint64_t switch_size = 0;
  uint64_t native_max_size = 10;
  // When the native path answers unknown, retry the query on the SMT bridge
  // instead of surfacing the unknown.
  bool escalate = false;
};

// One satisfiability query: the branch condition plus the path-condition
// list, routed per the options. The native path examines the conjuncts
// independently and only reports sat after the assembled model has been
// verified by concrete evaluation, and only reports unsat when a conjunct
// normalizes to a constant that forces the conjunction away from true.
SmtResultData dispatch_query(Engine& engine, SmtBridge& bridge, const Value& cond,
                             const Value& path_cond, const DispatchOptions& options);

// Functor provider backed by the routing policy: registers the same functor
// set as SmtBridge::attach, but satisfiability queries that arrive as bare
// expressions are size-routed. Pre-rendered query records always go to the
// bridge since only their text survives.
class Dispatcher {
public:
  Dispatcher(SmtBridge& bridge, DispatchOptions options);

  void attach(Engine& engine);

  struct Stats {
    uint64_t native_queries = 0;
    uint64_t native_sat = 0;
    uint64_t native_unsat = 0;
    uint64_t native_unknown = 0;
    uint64_t escalations = 0;
    uint64_t smt_queries = 0;
  };
  Stats stats() const;
  const DispatchOptions& options() const { return options_; }
  SmtBridge& bridge() { return bridge_; }

private:
  friend SmtResultData dispatched_solve(Dispatcher& self, Engine& engine, const Value& arg);

  SmtBridge& bridge_;
  DispatchOptions options_;
  mutable std::mutex mu_;
  Stats stats_;
};

}  // namespace symdl

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "symdl/value.hpp"

namespace symdl {

using u256 = boost::multiprecision::uint256_t;

// Symbolic expressions are 3-field records [base, left, right]. A leaf has
// left = right = nil and its base is either a hex constant ("0x...") or a
// variable name. Unary operators use the left child only.

// ---- operator metadata ----

enum class SmtRender : uint8_t {
  direct,       // one SMT-LIB function, smt_name
  compare,      // (ite (<cmp> a b) one zero)
  iszero,       // (ite (= a zero) one zero)
  guarded_div,  // (ite (= b zero) zero (bvudiv a b)); same shape for bvurem
  unsupported,  // no SMT rendering (EXP)
};

struct OperatorInfo {
  std::string name;
  int arity = 2;
  SmtRender render = SmtRender::direct;
  std::string smt_name;  // direct function or comparison predicate
  bool associative = false;
  bool commutative = false;
  bool idempotent = false;
  bool canceling = false;     // op(x, x) is a constant
  uint64_t cancel_result = 0;
  bool has_right_identity = false;
  // Right identity as a small integer; for AND it is all-ones, which depends
  // on the evaluation width, flagged separately.
  uint64_t right_identity = 0;
  bool identity_is_all_ones = false;
  bool has_zero = false;  // op(x, z) = z (annihilator), z below
  uint64_t zero_element = 0;
};

class OperatorTable {
public:
  static const OperatorTable& instance();
  // Resolves aliases ("isZero" names the same operator as "ISZERO").
  const OperatorInfo* find(std::string_view name) const;
  const OperatorInfo& at(std::string_view name) const;
  const std::map<std::string, OperatorInfo, std::less<>>& all() const { return ops_; }

private:
  OperatorTable();
  std::map<std::string, OperatorInfo, std::less<>> ops_;
  std::map<std::string, std::string, std::less<>> aliases_;
};

// ---- construction and inspection ----

Value make_leaf(Engine& engine, std::string_view base);
Value make_unary(Engine& engine, std::string_view op, const Value& left);
Value make_binary(Engine& engine, std::string_view op, const Value& left, const Value& right);

bool is_expr(const Engine& engine, const Value& v);  // 3-field record, symbol base
bool is_leaf(const Engine& engine, const Value& v);
std::string_view expr_base(const Engine& engine, const Value& v);
Value expr_left(const Engine& engine, const Value& v);
Value expr_right(const Engine& engine, const Value& v);

uint64_t tree_size(const Engine& engine, const Value& e);
std::vector<Value> subexpressions(const Engine& engine, const Value& e);

// Right-nested application of conj_op over a non-empty cons list of Exprs.
Value flatten(Engine& engine, std::string_view conj_op, const Value& list);

// Deterministic placeholder-variable leaf named kFreshPrefix + context.
Value fresh(Engine& engine, std::string_view context);

// ---- constants ----

bool is_hex_const(std::string_view s);
// Value of a "0x..." literal reduced modulo 2^256. Empty optional when the
// text is not a hex constant.
std::optional<u256> parse_hex_const(std::string_view s);
u256 mask_width(const u256& v, int width);
// Minimal lowercase form, "0x0" for zero.
std::string canonical_hex(const u256& v);
// Exactly width/4 lowercase digits, zero padded, no prefix.
std::string fixed_hex(const u256& v, int width);

// ---- evaluation ----

// Concrete value of e under modular 2^width arithmetic; comparisons yield 0
// or 1. width must be one of {4, 8, 256}.
u256 eval_concrete(const Engine& engine, const Value& e,
                   const std::map<std::string, u256, std::less<>>& env, int width);

u256 apply_binop(std::string_view op_name, const u256& a, const u256& b, int width);
u256 apply_unop(std::string_view op_name, const u256& a, int width);

void check_width(int width);

// ---- ordering ----

// Total order on well-formed Exprs: tree size first, then a canonical
// serialization in which variable leaves sort before constant leaves.
int compare_order(const Engine& engine, const Value& a, const Value& b);

void register_expr_functors(Engine& engine);

}  // namespace symdl

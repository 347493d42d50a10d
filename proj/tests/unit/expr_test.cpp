#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "symdl/expr.hpp"
#include "symdl/value.hpp"
#include "test_support.hpp"

using namespace symdl;

namespace {

using Env = std::map<std::string, u256, std::less<>>;

u256 ev(const Engine& eng, const Value& e, const Env& env, int width) {
  return eval_concrete(eng, e, env, width);
}

// Independent modular exponentiation oracle.
u256 pow_mod(u256 base, u256 exp, int width) {
  u256 mod_mask = width == 256 ? ~u256(0) : (u256(1) << width) - 1;
  u256 result = 1;
  base &= mod_mask;
  while (exp != 0) {
    if ((exp & 1) != 0) result = (result * base) & mod_mask;
    base = (base * base) & mod_mask;
    exp >>= 1;
  }
  return result;
}

}  // namespace

TEST_CASE("construction and inspection") {
  Engine eng;
  Value x = make_leaf(eng, "x");
  Value c = make_leaf(eng, "0x1f");
  Value sum = make_binary(eng, "ADD", x, c);
  Value neg = make_unary(eng, "NOT", sum);

  CHECK(is_expr(eng, x));
  CHECK(is_leaf(eng, x));
  CHECK_FALSE(is_leaf(eng, sum));
  CHECK(expr_base(eng, sum) == "ADD");
  CHECK(expr_left(eng, sum) == x);
  CHECK(expr_right(eng, sum) == c);
  CHECK(expr_base(eng, neg) == "NOT");
  CHECK(expr_right(eng, neg).is_nil());

  CHECK_FALSE(is_expr(eng, Value::number(4)));
  CHECK_FALSE(is_expr(eng, Value::nil_value()));
  Value two[2] = {eng.sym("ADD"), x};
  CHECK_FALSE(is_expr(eng, eng.pack(two)));
}

TEST_CASE("tree size and subexpression enumeration") {
  Engine eng;
  Value x = make_leaf(eng, "x");
  Value y = make_leaf(eng, "y");
  Value e = make_binary(eng, "MUL", make_binary(eng, "ADD", x, y), x);
  CHECK(tree_size(eng, x) == 1);
  CHECK(tree_size(eng, e) == 5);

  auto subs = subexpressions(eng, e);
  std::set<Value> uniq(subs.begin(), subs.end());
  // x appears twice structurally but subexpressions are reported per node.
  CHECK(subs.size() == 5);
  CHECK(uniq.size() == 4);
  CHECK(uniq.count(e) == 1);
  CHECK(uniq.count(x) == 1);

  Value n = make_unary(eng, "ISZERO", x);
  CHECK(tree_size(eng, n) == 2);
}

TEST_CASE("flatten right-nests the conjunction operator") {
  Engine eng;
  Value a = make_leaf(eng, "a");
  Value b = make_leaf(eng, "b");
  Value c = make_leaf(eng, "c");

  CHECK(flatten(eng, "AND", tsup::list_of(eng, {a})) == a);

  Value two = flatten(eng, "AND", tsup::list_of(eng, {a, b}));
  CHECK(two == make_binary(eng, "AND", a, b));

  Value three = flatten(eng, "AND", tsup::list_of(eng, {a, b, c}));
  CHECK(three == make_binary(eng, "AND", a, make_binary(eng, "AND", b, c)));

  Value ors = flatten(eng, "OR", tsup::list_of(eng, {a, b, c}));
  CHECK(expr_base(eng, ors) == "OR");

  try {
    flatten(eng, "AND", Value::nil_value());
    FAIL("expected an error for the empty list");
  } catch (const Error& e) {
    CHECK(e.code() == errc::empty_list);
  }
}

TEST_CASE("fresh variables are deterministic and prefixed") {
  Engine eng;
  Value f1 = fresh(eng, "f/x");
  Value f2 = fresh(eng, "f/x");
  Value g = fresh(eng, "f/y");
  CHECK(f1 == f2);
  CHECK(f1 != g);
  CHECK(is_leaf(eng, f1));
  std::string name(expr_base(eng, f1));
  CHECK(name == std::string(kFreshPrefix) + "f/x");
}

TEST_CASE("hex constant helpers") {
  CHECK(is_hex_const("0x0"));
  CHECK(is_hex_const("0xdeadBEEF"));
  CHECK_FALSE(is_hex_const("x1"));
  CHECK_FALSE(is_hex_const("0x"));
  CHECK_FALSE(is_hex_const("0xg1"));
  CHECK_FALSE(is_hex_const("12"));

  CHECK(parse_hex_const("0xff").value() == 255);
  CHECK(parse_hex_const("0x0").value() == 0);
  CHECK_FALSE(parse_hex_const("zz").has_value());

  CHECK(canonical_hex(u256(0)) == "0x0");
  CHECK(canonical_hex(u256(255)) == "0xff");
  CHECK(canonical_hex(u256(0x1A2B)) == "0x1a2b");

  CHECK(mask_width(u256(0x1f), 4) == 0xf);
  CHECK(mask_width(u256(0x1ff), 8) == 0xff);
  CHECK(mask_width(u256(7), 256) == 7);

  CHECK(fixed_hex(u256(1), 8) == "01");
  CHECK(fixed_hex(u256(0xab), 8) == "ab");
  CHECK(fixed_hex(u256(3), 256) == std::string(63, '0') + "3");

  CHECK_NOTHROW(check_width(4));
  CHECK_NOTHROW(check_width(8));
  CHECK_NOTHROW(check_width(256));
  CHECK_THROWS_AS(check_width(12), Error);
}

TEST_CASE("concrete evaluation basics") {
  Engine eng;
  Env env{{"x", u256(10)}, {"y", u256(3)}};
  Value x = make_leaf(eng, "x");
  Value y = make_leaf(eng, "y");

  CHECK(ev(eng, make_binary(eng, "ADD", x, y), env, 256) == 13);
  CHECK(ev(eng, make_binary(eng, "SUB", x, y), env, 256) == 7);
  CHECK(ev(eng, make_binary(eng, "MUL", x, y), env, 256) == 30);
  CHECK(ev(eng, make_binary(eng, "DIV", x, y), env, 256) == 3);
  CHECK(ev(eng, make_binary(eng, "MOD", x, y), env, 256) == 1);
  CHECK(ev(eng, make_binary(eng, "SHL", y, x), env, 256) == u256(10) << 3);
  CHECK(ev(eng, make_binary(eng, "SHR", y, x), env, 256) == 1);
  CHECK(ev(eng, make_binary(eng, "AND", x, y), env, 256) == 2);
  CHECK(ev(eng, make_binary(eng, "OR", x, y), env, 256) == 11);
  CHECK(ev(eng, make_binary(eng, "XOR", x, y), env, 256) == 9);
  CHECK(ev(eng, make_binary(eng, "EQ", x, y), env, 256) == 0);
  CHECK(ev(eng, make_binary(eng, "EQ", x, x), env, 256) == 1);
  CHECK(ev(eng, make_binary(eng, "LT", y, x), env, 256) == 1);
  CHECK(ev(eng, make_binary(eng, "GT", y, x), env, 256) == 0);
  CHECK(ev(eng, make_unary(eng, "ISZERO", make_leaf(eng, "0x0")), env, 256) == 1);
  CHECK(ev(eng, make_unary(eng, "ISZERO", x), env, 256) == 0);
  CHECK(ev(eng, make_unary(eng, "NOT", make_leaf(eng, "0x0")), env, 8) == 0xff);
  CHECK(ev(eng, make_leaf(eng, "0xff"), env, 256) == 255);
}

TEST_CASE("evaluation wraps at the modulus and guards division") {
  Engine eng;
  Env env;
  Value zero = make_leaf(eng, "0x0");
  Value one = make_leaf(eng, "0x1");
  Value big = make_leaf(eng, "0xff");

  CHECK(ev(eng, make_binary(eng, "ADD", big, one), env, 8) == 0);
  CHECK(ev(eng, make_binary(eng, "SUB", zero, one), env, 8) == 0xff);
  CHECK(ev(eng, make_binary(eng, "MUL", big, big), env, 8) == 1);
  CHECK(ev(eng, make_binary(eng, "DIV", one, zero), env, 8) == 0);
  CHECK(ev(eng, make_binary(eng, "MOD", one, zero), env, 8) == 0);
  // Shift amounts at or over the width produce zero.
  Value k8 = make_leaf(eng, "0x8");
  CHECK(ev(eng, make_binary(eng, "SHL", k8, one), env, 8) == 0);
  CHECK(ev(eng, make_binary(eng, "SHR", k8, big), env, 8) == 0);
  // Hex literals wider than the evaluation width are reduced.
  CHECK(ev(eng, make_leaf(eng, "0x1ff"), env, 8) == 0xff);
}

TEST_CASE("signed comparison respects the width's sign bit") {
  Engine eng;
  Env env;
  auto slt = [&](uint64_t a, uint64_t b, int w) {
    return ev(eng,
              make_binary(eng, "SLT", tsup::hex_leaf(eng, u256(a)), tsup::hex_leaf(eng, u256(b))),
              env, w);
  };
  CHECK(slt(0xf, 0x1, 4) == 1);   // -1 < 1 signed
  CHECK(slt(0x1, 0xf, 4) == 0);
  CHECK(slt(0x8, 0x7, 4) == 1);   // -8 < 7
  CHECK(slt(0x2, 0x3, 4) == 1);
  CHECK(slt(0x3, 0x3, 4) == 0);
  CHECK(slt(0xff, 0x0, 8) == 1);  // -1 < 0 at width 8
  CHECK(slt(0x0, 0xff, 8) == 0);
}

TEST_CASE("exponentiation matches a reference implementation") {
  Engine eng;
  Env env;
  for (uint64_t b = 0; b < 16; ++b) {
    for (uint64_t e = 0; e < 16; ++e) {
      u256 got = ev(eng,
                    make_binary(eng, "EXP", tsup::hex_leaf(eng, u256(b)),
                                tsup::hex_leaf(eng, u256(e))),
                    env, 8);
      CHECK(got == pow_mod(u256(b), u256(e), 8));
    }
  }
  // Convention: zero to the zero is one.
  CHECK(ev(eng,
           make_binary(eng, "EXP", make_leaf(eng, "0x0"), make_leaf(eng, "0x0")),
           env, 8) == 1);
}

TEST_CASE("unbound variables are reported") {
  Engine eng;
  Env env;
  try {
    ev(eng, make_leaf(eng, "nobody"), env, 256);
    FAIL("expected an unbound variable error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::unbound_variable);
  }
}

TEST_CASE("unknown operators are reported") {
  Engine eng;
  Env env{{"x", u256(1)}};
  Value x = make_leaf(eng, "x");
  Value bogus = tsup::bin(eng, "BOGUS", x, x);
  CHECK_THROWS_AS(ev(eng, bogus, env, 256), Error);
}

TEST_CASE("operator table flags hold exhaustively at width 4") {
  Engine eng;
  const auto& table = OperatorTable::instance();
  Env env;
  auto all16 = [] {
    std::vector<u256> v;
    for (uint64_t i = 0; i < 16; ++i) v.emplace_back(i);
    return v;
  };

  for (const auto& [name, info] : table.all()) {
    if (info.arity != 2) continue;
    CAPTURE(name);
    for (const u256& a : all16()) {
      for (const u256& b : all16()) {
        u256 ab = apply_binop(name, a, b, 4);
        if (info.commutative) CHECK(ab == apply_binop(name, b, a, 4));
        if (info.associative) {
          for (const u256& c : all16()) {
            u256 l = apply_binop(name, ab, c, 4);
            u256 r = apply_binop(name, a, apply_binop(name, b, c, 4), 4);
            CHECK(l == r);
          }
        }
      }
      if (info.idempotent) CHECK(apply_binop(name, a, a, 4) == a);
      if (info.canceling) CHECK(apply_binop(name, a, a, 4) == info.cancel_result);
      if (info.has_right_identity) {
        u256 id = info.identity_is_all_ones ? u256(0xf) : u256(info.right_identity);
        CHECK(apply_binop(name, a, id, 4) == a);
      }
      if (info.has_zero) {
        CHECK(apply_binop(name, a, u256(info.zero_element), 4) == info.zero_element);
      }
    }
  }
}

TEST_CASE("operator aliases resolve to the same operator") {
  const auto& table = OperatorTable::instance();
  const OperatorInfo* a = table.find("ISZERO");
  const OperatorInfo* b = table.find("isZero");
  REQUIRE(a != nullptr);
  REQUIRE(b != nullptr);
  CHECK(a == b);
  CHECK(table.find("nothere") == nullptr);
}

TEST_CASE("flatten of an associative operator equals iterated application") {
  Engine eng;
  std::mt19937_64 rng(321);
  Env env{{"v0", u256(5)}, {"v1", u256(9)}, {"v2", u256(12)}, {"v3", u256(2)}};
  const char* assoc_ops[] = {"ADD", "MUL", "AND", "OR", "XOR"};
  for (const char* op : assoc_ops) {
    std::vector<Value> items;
    for (int i = 0; i < 4; ++i) items.push_back(make_leaf(eng, "v" + std::to_string(i)));
    Value flat = flatten(eng, op, tsup::list_of(eng, items));
    u256 expect = env.at("v0");
    for (int i = 1; i < 4; ++i) expect = apply_binop(op, expect, env.at("v" + std::to_string(i)), 4);
    CHECK(ev(eng, flat, env, 4) == expect);
  }
}

TEST_CASE("expression ordering is a total order keyed on size first") {
  Engine eng;
  Value x = make_leaf(eng, "x");
  Value y = make_leaf(eng, "y");
  Value c = make_leaf(eng, "0x3");
  Value small = make_binary(eng, "ADD", x, y);
  Value large = make_binary(eng, "MUL", small, c);

  CHECK(compare_order(eng, x, x) == 0);
  CHECK(compare_order(eng, x, small) < 0);
  CHECK(compare_order(eng, small, large) < 0);
  CHECK(compare_order(eng, large, small) > 0);
  // Antisymmetry on same-size values.
  int xy = compare_order(eng, x, y);
  int yx = compare_order(eng, y, x);
  CHECK(xy == -yx);
  CHECK(xy != 0);
  // Variable leaves sort before constant leaves.
  CHECK(compare_order(eng, x, c) < 0);

  // Transitivity over a shuffled sample.
  std::vector<Value> sample = {x, y, c, small, large, make_unary(eng, "NOT", x),
                               make_binary(eng, "ADD", y, c)};
  std::sort(sample.begin(), sample.end(), [&](const Value& a, const Value& b) {
    return compare_order(eng, a, b) < 0;
  });
  for (size_t i = 0; i + 1 < sample.size(); ++i) {
    CHECK(compare_order(eng, sample[i], sample[i + 1]) < 0);
    CHECK(tree_size(eng, sample[i]) <= tree_size(eng, sample[i + 1]));
  }
}

TEST_CASE("expression functors mirror the C++ helpers") {
  Engine eng;
  auto& reg = eng.functors();
  Value x = make_leaf(eng, "x");
  Value c = make_leaf(eng, "0x4");
  Value e = make_binary(eng, "ADD", x, c);

  Value sz = reg.call(eng, "expr_size", std::vector<Value>{e});
  CHECK(sz == Value::number(3));

  Value less = reg.call(eng, "expr_less", std::vector<Value>{x, e});
  CHECK(less == Value::number(1));

  Value folded =
      reg.call(eng, "fold_binop", std::vector<Value>{eng.sym("ADD"), eng.sym("0x2"), eng.sym("0x3")});
  CHECK(eng.name_of(folded) == "0x5");

  Value fu = reg.call(eng, "fold_unop", std::vector<Value>{eng.sym("ISZERO"), eng.sym("0x0")});
  CHECK(eng.name_of(fu) == "0x1");

  Value hex = reg.call(eng, "is_hex_const", std::vector<Value>{eng.sym("0xab")});
  CHECK(hex == Value::number(1));
  Value nothex = reg.call(eng, "is_hex_const", std::vector<Value>{eng.sym("varname")});
  CHECK(nothex == Value::number(0));

  Value canon = reg.call(eng, "canon_const", std::vector<Value>{eng.sym("0x0000Ff")});
  CHECK(eng.name_of(canon) == "0xff");

  Value ones = reg.call(eng, "all_ones", std::vector<Value>{});
  CHECK(eng.name_of(ones) == canonical_hex(~u256(0)));

  Value p2 = reg.call(eng, "is_pow2", std::vector<Value>{eng.sym("0x8")});
  CHECK(p2 == Value::number(1));
  Value np2 = reg.call(eng, "is_pow2", std::vector<Value>{eng.sym("0x6")});
  CHECK(np2 == Value::number(0));
  Value lg = reg.call(eng, "log2_const", std::vector<Value>{eng.sym("0x8")});
  CHECK(eng.name_of(lg) == "0x3");

  // fold_binop on non-constant input is the error the planner must avoid.
  CHECK_THROWS_AS(
      reg.call(eng, "fold_binop", std::vector<Value>{eng.sym("ADD"), eng.sym("v"), eng.sym("0x1")}),
      Error);
}

TEST_CASE("fold functors respect the engine evaluation width") {
  Engine eng;
  auto& reg = eng.functors();
  eng.set_eval_width(8);
  Value folded =
      reg.call(eng, "fold_binop", std::vector<Value>{eng.sym("ADD"), eng.sym("0xff"), eng.sym("0x2")});
  CHECK(eng.name_of(folded) == "0x1");
  eng.set_eval_width(256);
  Value wide =
      reg.call(eng, "fold_binop", std::vector<Value>{eng.sym("ADD"), eng.sym("0xff"), eng.sym("0x2")});
  CHECK(eng.name_of(wide) == "0x101");
}

#include "symdl/expr.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "symdl/error.hpp"
#include "symdl/functors.hpp"

namespace symdl {

// ---- operator table ----

OperatorTable::OperatorTable() {
  auto add = [&](OperatorInfo info) { ops_.emplace(info.name, std::move(info)); };

  {
    OperatorInfo op;
    op.name = "ADD";
    op.smt_name = "bvadd";
    op.associative = op.commutative = true;
    op.has_right_identity = true;
    op.right_identity = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "SUB";
    op.smt_name = "bvsub";
    op.canceling = true;
    op.cancel_result = 0;
    op.has_right_identity = true;
    op.right_identity = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "MUL";
    op.smt_name = "bvmul";
    op.associative = op.commutative = true;
    op.has_right_identity = true;
    op.right_identity = 1;
    op.has_zero = true;
    op.zero_element = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "DIV";
    op.render = SmtRender::guarded_div;
    op.smt_name = "bvudiv";
    op.has_right_identity = true;
    op.right_identity = 1;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "MOD";
    op.render = SmtRender::guarded_div;
    op.smt_name = "bvurem";
    op.canceling = true;
    op.cancel_result = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "EXP";
    op.render = SmtRender::unsupported;
    op.has_right_identity = true;
    op.right_identity = 1;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "SHL";
    op.smt_name = "bvshl";
    op.has_right_identity = true;
    op.right_identity = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "SHR";
    op.smt_name = "bvlshr";
    op.has_right_identity = true;
    op.right_identity = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "AND";
    op.smt_name = "bvand";
    op.associative = op.commutative = op.idempotent = true;
    op.has_right_identity = true;
    op.identity_is_all_ones = true;
    op.has_zero = true;
    op.zero_element = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "OR";
    op.smt_name = "bvor";
    op.associative = op.commutative = op.idempotent = true;
    op.has_right_identity = true;
    op.right_identity = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "XOR";
    op.smt_name = "bvxor";
    op.associative = op.commutative = true;
    op.canceling = true;
    op.cancel_result = 0;
    op.has_right_identity = true;
    op.right_identity = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "NOT";
    op.arity = 1;
    op.smt_name = "bvnot";
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "EQ";
    op.render = SmtRender::compare;
    op.smt_name = "=";
    op.commutative = true;
    op.canceling = true;
    op.cancel_result = 1;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "LT";
    op.render = SmtRender::compare;
    op.smt_name = "bvult";
    op.canceling = true;
    op.cancel_result = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "GT";
    op.render = SmtRender::compare;
    op.smt_name = "bvugt";
    op.canceling = true;
    op.cancel_result = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "SLT";
    op.render = SmtRender::compare;
    op.smt_name = "bvslt";
    op.canceling = true;
    op.cancel_result = 0;
    add(op);
  }
  {
    OperatorInfo op;
    op.name = "ISZERO";
    op.arity = 1;
    op.render = SmtRender::iszero;
    op.canceling = false;
    add(op);
  }

  aliases_.emplace("isZero", "ISZERO");
}

const OperatorTable& OperatorTable::instance() {
  static const OperatorTable table;
  return table;
}

const OperatorInfo* OperatorTable::find(std::string_view name) const {
  auto it = ops_.find(name);
  if (it != ops_.end()) return &it->second;
  auto al = aliases_.find(name);
  if (al != aliases_.end()) return &ops_.at(al->second);
  return nullptr;
}

const OperatorInfo& OperatorTable::at(std::string_view name) const {
  const OperatorInfo* info = find(name);
  if (!info) fail(errc::unknown_operator, "unknown operator " + std::string(name));
  return *info;
}

// ---- construction and inspection ----

Value make_leaf(Engine& engine, std::string_view base) {
  Value fields[3] = {engine.sym(base), Value::nil_value(), Value::nil_value()};
  return Value::record(engine.records().pack(fields));
}

Value make_unary(Engine& engine, std::string_view op, const Value& left) {
  Value fields[3] = {engine.sym(op), left, Value::nil_value()};
  return Value::record(engine.records().pack(fields));
}

Value make_binary(Engine& engine, std::string_view op, const Value& left, const Value& right) {
  Value fields[3] = {engine.sym(op), left, right};
  return Value::record(engine.records().pack(fields));
}

bool is_expr(const Engine& engine, const Value& v) {
  if (!v.is_record()) return false;
  auto f = engine.records().unpack(v.ord());
  if (f.size() != 3 || !f[0].is_symbol()) return false;
  auto child_ok = [&](const Value& c) { return c.is_nil() || c.is_record(); };
  return child_ok(f[1]) && child_ok(f[2]);
}

static std::span<const Value> expr_fields(const Engine& engine, const Value& v) {
  if (!v.is_record()) fail(errc::type, "value is not an expression record");
  auto f = engine.records().unpack(v.ord());
  if (f.size() != 3) {
    fail(errc::type, "expression records have 3 fields, got " + std::to_string(f.size()));
  }
  if (!f[0].is_symbol()) fail(errc::type, "expression base must be a symbol");
  return f;
}

bool is_leaf(const Engine& engine, const Value& v) {
  auto f = expr_fields(engine, v);
  return f[1].is_nil() && f[2].is_nil();
}

std::string_view expr_base(const Engine& engine, const Value& v) {
  return engine.symbols().resolve(expr_fields(engine, v)[0].ord());
}

Value expr_left(const Engine& engine, const Value& v) { return expr_fields(engine, v)[1]; }
Value expr_right(const Engine& engine, const Value& v) { return expr_fields(engine, v)[2]; }

uint64_t tree_size(const Engine& engine, const Value& e) {
  std::unordered_map<uint64_t, uint64_t> memo;
  auto rec = [&](auto&& self, const Value& v) -> uint64_t {
    if (v.is_nil()) return 0;
    auto it = memo.find(v.bits);
    if (it != memo.end()) return it->second;
    auto f = expr_fields(engine, v);
    uint64_t n = 1 + self(self, f[1]) + self(self, f[2]);
    memo.emplace(v.bits, n);
    return n;
  };
  uint64_t n = rec(rec, e);
  if (n == 0) fail(errc::type, "nil is not an expression");
  return n;
}

std::vector<Value> subexpressions(const Engine& engine, const Value& e) {
  std::vector<Value> out;
  std::unordered_set<uint64_t> seen;
  auto rec = [&](auto&& self, const Value& v) -> void {
    if (v.is_nil()) return;
    if (!seen.insert(v.bits).second) return;
    auto f = expr_fields(engine, v);
    out.push_back(v);
    self(self, f[1]);
    self(self, f[2]);
  };
  rec(rec, e);
  return out;
}

Value flatten(Engine& engine, std::string_view conj_op, const Value& list) {
  std::vector<Value> items;
  Value cur = list;
  while (!cur.is_nil()) {
    if (!cur.is_record()) fail(errc::malformed_list, "flatten applied to a non-list");
    auto f = engine.records().unpack(cur.ord());
    if (f.size() != 2) fail(errc::malformed_list, "flatten applied to a non-list record");
    items.push_back(f[0]);
    cur = f[1];
  }
  if (items.empty()) fail(errc::empty_list, "flatten over an empty list");
  Value acc = items.back();
  for (size_t i = items.size() - 1; i-- > 0;) {
    acc = make_binary(engine, conj_op, items[i], acc);
  }
  return acc;
}

Value fresh(Engine& engine, std::string_view context) {
  std::string name(kFreshPrefix);
  name += context;
  return make_leaf(engine, name);
}

// ---- constants ----

static bool is_hex_digit(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

static unsigned hex_digit(char c) {
  if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
  if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
  return static_cast<unsigned>(c - 'A' + 10);
}

bool is_hex_const(std::string_view s) {
  if (s.size() < 3 || s[0] != '0' || s[1] != 'x') return false;
  for (size_t i = 2; i < s.size(); ++i) {
    if (!is_hex_digit(s[i])) return false;
  }
  return true;
}

std::optional<u256> parse_hex_const(std::string_view s) {
  if (!is_hex_const(s)) return std::nullopt;
  u256 v = 0;
  for (size_t i = 2; i < s.size(); ++i) {
    v <<= 4;
    v += hex_digit(s[i]);
  }
  return v;
}

u256 mask_width(const u256& v, int width) {
  if (width >= 256) return v;
  u256 mask = (u256(1) << width) - 1;
  return v & mask;
}

std::string canonical_hex(const u256& v) {
  if (v == 0) return "0x0";
  std::string digits;
  u256 cur = v;
  while (cur != 0) {
    unsigned d = static_cast<unsigned>(cur & 0xf);
    digits += "0123456789abcdef"[d];
    cur >>= 4;
  }
  std::reverse(digits.begin(), digits.end());
  return "0x" + digits;
}

std::string fixed_hex(const u256& v, int width) {
  int ndigits = width / 4;
  std::string out(static_cast<size_t>(ndigits), '0');
  u256 cur = v;
  for (int i = ndigits - 1; i >= 0 && cur != 0; --i) {
    out[static_cast<size_t>(i)] = "0123456789abcdef"[static_cast<unsigned>(cur & 0xf)];
    cur >>= 4;
  }
  return out;
}

// ---- evaluation ----

void check_width(int width) {
  if (width != 4 && width != 8 && width != 256) {
    fail(errc::type, "unsupported bit width " + std::to_string(width) +
                         " (valid widths: 4, 8, 256)");
  }
}

static bool sign_bit(const u256& v, int width) {
  return boost::multiprecision::bit_test(v, static_cast<unsigned>(width - 1));
}

u256 apply_binop(std::string_view op_name, const u256& a, const u256& b, int width) {
  const OperatorInfo& op = OperatorTable::instance().at(op_name);
  if (op.arity != 2) {
    fail(errc::unknown_operator, std::string(op_name) + " is not a binary operator");
  }
  auto m = [&](const u256& v) { return mask_width(v, width); };
  if (op_name == "ADD") return m(a + b);
  if (op_name == "SUB") return m(a - b);
  if (op_name == "MUL") return m(a * b);
  if (op_name == "DIV") return b == 0 ? u256(0) : u256(a / b);
  if (op_name == "MOD") return b == 0 ? u256(0) : u256(a % b);
  if (op_name == "EXP") {
    u256 result = 1, base = a, e = b;
    while (e != 0) {
      if (boost::multiprecision::bit_test(e, 0)) result = m(result * base);
      base = m(base * base);
      e >>= 1;
    }
    return result;
  }
  if (op_name == "SHL") {
    if (b >= width) return 0;
    return m(a << static_cast<unsigned>(b));
  }
  if (op_name == "SHR") {
    if (b >= width) return 0;
    return a >> static_cast<unsigned>(b);
  }
  if (op_name == "AND") return a & b;
  if (op_name == "OR") return a | b;
  if (op_name == "XOR") return a ^ b;
  if (op_name == "EQ") return a == b ? 1 : 0;
  if (op_name == "LT") return a < b ? 1 : 0;
  if (op_name == "GT") return a > b ? 1 : 0;
  if (op_name == "SLT") {
    bool sa = sign_bit(a, width), sb = sign_bit(b, width);
    if (sa != sb) return sa ? 1 : 0;
    return a < b ? 1 : 0;
  }
  fail(errc::unknown_operator, "unknown binary operator " + std::string(op_name));
}

u256 apply_unop(std::string_view op_name, const u256& a, int width) {
  const OperatorInfo& op = OperatorTable::instance().at(op_name);
  if (op.arity != 1) {
    fail(errc::unknown_operator, std::string(op_name) + " is not a unary operator");
  }
  if (op.name == "NOT") return mask_width(~a, width);
  if (op.name == "ISZERO") return a == 0 ? 1 : 0;
  fail(errc::unknown_operator, "unknown unary operator " + std::string(op_name));
}

u256 eval_concrete(const Engine& engine, const Value& e,
                   const std::map<std::string, u256, std::less<>>& env, int width) {
  check_width(width);
  auto rec = [&](auto&& self, const Value& v) -> u256 {
    auto f = expr_fields(engine, v);
    std::string_view base = engine.symbols().resolve(f[0].ord());
    if (f[1].is_nil() && f[2].is_nil()) {
      if (auto c = parse_hex_const(base)) return mask_width(*c, width);
      auto it = env.find(base);
      if (it == env.end()) {
        fail(errc::unbound_variable, "variable " + std::string(base) + " is not bound");
      }
      return mask_width(it->second, width);
    }
    const OperatorInfo& op = OperatorTable::instance().at(base);
    if (op.arity == 1) {
      if (!f[2].is_nil()) {
        fail(errc::type, "unary operator " + op.name + " with a right child");
      }
      return apply_unop(base, self(self, f[1]), width);
    }
    if (f[1].is_nil() || f[2].is_nil()) {
      fail(errc::type, "binary operator " + op.name + " with a missing child");
    }
    return apply_binop(base, self(self, f[1]), self(self, f[2]), width);
  };
  return rec(rec, e);
}

// ---- ordering ----

static int compare_name(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  int c = a.compare(b);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

static int leaf_rank(std::string_view base) { return is_hex_const(base) ? 2 : 1; }

static int compare_rec(const Engine& engine, const Value& a, const Value& b) {
  if (a == b) return 0;
  bool an = a.is_nil(), bn = b.is_nil();
  if (an || bn) return an ? -1 : 1;
  auto fa = expr_fields(engine, a);
  auto fb = expr_fields(engine, b);
  std::string_view ba = engine.symbols().resolve(fa[0].ord());
  std::string_view bb = engine.symbols().resolve(fb[0].ord());
  bool la = fa[1].is_nil() && fa[2].is_nil();
  bool lb = fb[1].is_nil() && fb[2].is_nil();
  int ra = la ? leaf_rank(ba) : 3;
  int rb = lb ? leaf_rank(bb) : 3;
  if (ra != rb) return ra < rb ? -1 : 1;
  if (int c = compare_name(ba, bb)) return c;
  if (int c = compare_rec(engine, fa[1], fb[1])) return c;
  return compare_rec(engine, fa[2], fb[2]);
}

int compare_order(const Engine& engine, const Value& a, const Value& b) {
  if (a == b) return 0;
  uint64_t sa = tree_size(engine, a), sb = tree_size(engine, b);
  if (sa != sb) return sa < sb ? -1 : 1;
  return compare_rec(engine, a, b);
}

// ---- functors ----

static std::string_view sym_arg(Engine& engine, const Value& v, const char* fname) {
  if (!v.is_symbol()) fail(errc::type, std::string(fname) + " expects a symbol argument");
  return engine.symbols().resolve(v.ord());
}

void register_expr_functors(Engine& engine) {
  FunctorRegistry& reg = engine.functors();

  reg.register_functor("flatten", 2, [](Engine& en, std::span<const Value> args) {
    return flatten(en, sym_arg(en, args[0], "@flatten"), args[1]);
  });

  reg.register_functor("fresh", 1, [](Engine& en, std::span<const Value> args) {
    return fresh(en, sym_arg(en, args[0], "@fresh"));
  });

  reg.register_functor("expr_size", 1, [](Engine& en, std::span<const Value> args) {
    return Value::number(tree_size(en, args[0]));
  });

  reg.register_functor("expr_less", 2, [](Engine& en, std::span<const Value> args) {
    return Value::number(compare_order(en, args[0], args[1]) < 0 ? 1 : 0);
  });

  reg.register_functor("fold_binop", 3, [](Engine& en, std::span<const Value> args) {
    std::string_view op = sym_arg(en, args[0], "@fold_binop");
    auto a = parse_hex_const(sym_arg(en, args[1], "@fold_binop"));
    auto b = parse_hex_const(sym_arg(en, args[2], "@fold_binop"));
    if (!a || !b) fail(errc::type, "@fold_binop expects hex constant operands");
    int w = en.eval_width();
    u256 r = apply_binop(op, mask_width(*a, w), mask_width(*b, w), w);
    return en.sym(canonical_hex(r));
  });

  reg.register_functor("fold_unop", 2, [](Engine& en, std::span<const Value> args) {
    std::string_view op = sym_arg(en, args[0], "@fold_unop");
    auto a = parse_hex_const(sym_arg(en, args[1], "@fold_unop"));
    if (!a) fail(errc::type, "@fold_unop expects a hex constant operand");
    int w = en.eval_width();
    return en.sym(canonical_hex(apply_unop(op, mask_width(*a, w), w)));
  });

  reg.register_functor("canon_const", 1, [](Engine& en, std::span<const Value> args) {
    auto a = parse_hex_const(sym_arg(en, args[0], "@canon_const"));
    if (!a) fail(errc::type, "@canon_const expects a hex constant");
    return en.sym(canonical_hex(mask_width(*a, en.eval_width())));
  });

  reg.register_functor("is_hex_const", 1, [](Engine& en, std::span<const Value> args) {
    if (!args[0].is_symbol()) return Value::number(0);
    return Value::number(is_hex_const(en.symbols().resolve(args[0].ord())) ? 1 : 0);
  });

  reg.register_functor("is_pow2", 1, [](Engine& en, std::span<const Value> args) {
    if (!args[0].is_symbol()) return Value::number(0);
    auto a = parse_hex_const(en.symbols().resolve(args[0].ord()));
    if (!a) return Value::number(0);
    u256 v = mask_width(*a, en.eval_width());
    return Value::number(v != 0 && (v & (v - 1)) == 0 ? 1 : 0);
  });

  reg.register_functor("log2_const", 1, [](Engine& en, std::span<const Value> args) {
    auto a = parse_hex_const(sym_arg(en, args[0], "@log2_const"));
    if (!a) fail(errc::type, "@log2_const expects a hex constant");
    u256 v = mask_width(*a, en.eval_width());
    if (v == 0 || (v & (v - 1)) != 0) {
      fail(errc::functor, "@log2_const expects a power of two");
    }
    unsigned k = 0;
    while ((v & 1) == 0) {
      v >>= 1;
      ++k;
    }
    return en.sym(canonical_hex(u256(k)));
  });

  reg.register_functor("all_ones", 0, [](Engine& en, std::span<const Value>) {
    return en.sym(canonical_hex(mask_width(~u256(0), en.eval_width())));
  });

  reg.register_functor("right_identity", 1, [](Engine& en, std::span<const Value> args) {
    const OperatorInfo& op = OperatorTable::instance().at(sym_arg(en, args[0], "@right_identity"));
    if (!op.has_right_identity) {
      fail(errc::functor, "operator " + op.name + " has no right identity");
    }
    u256 ident = op.identity_is_all_ones ? mask_width(~u256(0), en.eval_width())
                                         : u256(op.right_identity);
    return en.sym(canonical_hex(ident));
  });
}

}  // namespace symdl

#include <openssl/evp.h>

#include <set>

#include "symdl/error.hpp"
#include "symdl/smt.hpp"

namespace symdl {

// ---- magic pool ----

namespace {

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

u256 from_hex_digits(const std::string& digits) {
  u256 v = 0;
  for (char c : digits) {
    v <<= 4;
    if (c >= '0' && c <= '9') v += static_cast<unsigned>(c - '0');
    else v += static_cast<unsigned>(c - 'a' + 10);
  }
  return v;
}

}  // namespace

MagicPool MagicPool::make(uint64_t seed) {
  MagicPool pool;
  pool.seed = seed;
  // The first entry is fixed: a long-standing recognizable pattern.
  pool.constants.push_back(from_hex_digits("1123456789abcdef"
                                           "0123456789abcdef"
                                           "0123456789abcdef"
                                           "0123456789abcdef"));
  uint64_t state = seed * 0x2545f4914f6cdd1dull + 0x9e3779b97f4a7c15ull;
  std::set<unsigned> used_low_bytes;
  used_low_bytes.insert(static_cast<unsigned>(pool.constants[0] & 0xff));
  const std::set<unsigned> forbidden = {0x00, 0x01, 0x7f, 0x81, 0xff};

  for (unsigned i = 1; i < 16; ++i) {
    // Recognizable prefix: an ascending digit run starting at the index.
    std::string prefix;
    for (unsigned k = 0; k < 8; ++k) {
      prefix += "0123456789abcdef"[(i + k) % 16];
    }
    // Irregular tail: 56 seed-derived nibbles.
    std::string tail;
    for (unsigned k = 0; k < 4; ++k) {
      uint64_t chunk = splitmix64(state);
      for (unsigned d = 0; d < 14 && tail.size() < 56; ++d) {
        tail += "0123456789abcdef"[(chunk >> (4 * d)) & 0xf];
      }
    }
    // The low byte must stay clear of degenerate 8-bit values and collisions
    // so the pool remains usable when truncated to width 8.
    unsigned low = 0;
    do {
      low = static_cast<unsigned>(splitmix64(state) & 0xff);
    } while (forbidden.count(low) || used_low_bytes.count(low));
    used_low_bytes.insert(low);
    tail[54] = "0123456789abcdef"[(low >> 4) & 0xf];
    tail[55] = "0123456789abcdef"[low & 0xf];
    pool.constants.push_back(from_hex_digits(prefix + tail));
  }
  return pool;
}

const u256& MagicPool::at(size_t index) const {
  if (index >= constants.size()) {
    fail(errc::index_range, "magic constant index " + std::to_string(index) +
                                " out of range (pool size " +
                                std::to_string(constants.size()) + ")");
  }
  return constants[index];
}

// ---- sha256 ----

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += "0123456789abcdef"[digest[i] >> 4];
    out += "0123456789abcdef"[digest[i] & 0xf];
  }
  return out;
}

// ---- rendering ----

std::string render_operator(std::string_view op, const std::string& left,
                            const std::string& right, int width) {
  const OperatorInfo& info = OperatorTable::instance().at(op);
  std::string one = "#x" + fixed_hex(1, width);
  std::string zero = "#x" + fixed_hex(0, width);
  switch (info.render) {
    case SmtRender::direct:
      if (info.arity == 1) return "(" + info.smt_name + " " + left + ")";
      return "(" + info.smt_name + " " + left + " " + right + ")";
    case SmtRender::compare:
      return "(ite (" + info.smt_name + " " + left + " " + right + ") " + one + " " + zero + ")";
    case SmtRender::iszero:
      return "(ite (= " + left + " " + zero + ") " + one + " " + zero + ")";
    case SmtRender::guarded_div:
      return "(ite (= " + right + " " + zero + ") " + zero + " (" + info.smt_name + " " +
             left + " " + right + "))";
    case SmtRender::unsupported:
      break;
  }
  fail(errc::unknown_operator, "operator " + info.name + " has no SMT rendering");
}

namespace {

struct Renderer {
  Engine& engine;
  int width;

  std::string render(const Value& e) {
    std::string_view base = expr_base(engine, e);
    Value l = expr_left(engine, e), r = expr_right(engine, e);
    if (l.is_nil() && r.is_nil()) {
      if (auto c = parse_hex_const(base)) return "#x" + fixed_hex(mask_width(*c, width), width);
      return std::string(base);
    }
    std::string lt = render(l);
    std::string rt = r.is_nil() ? std::string() : render(r);
    return render_operator(base, lt, rt, width);
  }
};

void list_items(const Engine& engine, const Value& list, std::vector<Value>& out,
                const char* what) {
  Value cur = list;
  while (!cur.is_nil()) {
    if (!cur.is_record()) fail(errc::malformed_list, std::string(what) + " is not a list");
    auto f = engine.records().unpack(cur.ord());
    if (f.size() != 2) fail(errc::malformed_list, std::string(what) + " is not a list");
    out.push_back(f[0]);
    cur = f[1];
  }
}

void collect_vars(const Engine& engine, const Value& e, std::vector<std::string>& order,
                  std::set<std::string>& seen) {
  std::string_view base = expr_base(engine, e);
  Value l = expr_left(engine, e), r = expr_right(engine, e);
  if (l.is_nil() && r.is_nil()) {
    if (!is_hex_const(base) && !seen.count(std::string(base))) {
      seen.insert(std::string(base));
      order.push_back(std::string(base));
    }
    return;
  }
  if (!l.is_nil()) collect_vars(engine, l, order, seen);
  if (!r.is_nil()) collect_vars(engine, r, order, seen);
}

}  // namespace

RenderedQuery render_query(Engine& engine, const Value& constraint, const Value& bound_vars,
                           const Value& lets, const MagicPool& pool, int width) {
  check_width(width);

  std::vector<Value> bound_items;
  list_items(engine, bound_vars, bound_items, "bound variable list");
  std::vector<std::string> bound_names;
  for (const Value& b : bound_items) {
    if (!b.is_symbol()) fail(errc::type, "bound variable entries must be symbols");
    bound_names.push_back(std::string(engine.symbols().resolve(b.ord())));
  }

  std::vector<Value> let_items;
  list_items(engine, lets, let_items, "let binding list");
  std::vector<std::pair<std::string, Value>> bindings;
  for (const Value& item : let_items) {
    if (!item.is_record()) fail(errc::type, "let bindings must be [name, expr] pairs");
    auto f = engine.records().unpack(item.ord());
    if (f.size() != 2 || !f[0].is_symbol()) {
      fail(errc::type, "let bindings must be [name, expr] pairs");
    }
    bindings.emplace_back(std::string(engine.symbols().resolve(f[0].ord())), f[1]);
  }

  std::set<std::string> let_names;
  for (const auto& [name, expr] : bindings) {
    if (!let_names.insert(name).second) {
      fail(errc::cyclic_lets, "variable " + name + " is let-bound twice");
    }
  }
  std::set<std::string> bound_set(bound_names.begin(), bound_names.end());

  // Variables in first-occurrence order over let expressions then the
  // constraint; those neither let-bound nor forall*-bound are free.
  std::vector<std::string> var_order;
  std::set<std::string> seen;
  for (const auto& [name, expr] : bindings) collect_vars(engine, expr, var_order, seen);
  collect_vars(engine, constraint, var_order, seen);

  std::vector<std::string> free_vars;
  for (const std::string& v : var_order) {
    if (!let_names.count(v) && !bound_set.count(v)) free_vars.push_back(v);
  }

  // Scope check: the last list element renders outermost, so walk the list
  // from the end; each binding may use free/bound variables and the ones
  // bound further out.
  {
    std::set<std::string> available(free_vars.begin(), free_vars.end());
    for (const std::string& b : bound_names) available.insert(b);
    for (size_t i = bindings.size(); i-- > 0;) {
      std::vector<std::string> used;
      std::set<std::string> used_seen;
      collect_vars(engine, bindings[i].second, used, used_seen);
      for (const std::string& u : used) {
        if (!available.count(u)) {
          fail(errc::cyclic_lets, "let binding for " + bindings[i].first +
                                      " uses " + u + " before it is bound");
        }
      }
      available.insert(bindings[i].first);
    }
  }

  Renderer renderer{engine, width};
  std::string one = "#x" + fixed_hex(1, width);

  std::string body = "(= " + one + " " + renderer.render(constraint) + ")";
  // First list element is the innermost let.
  for (const auto& [name, expr] : bindings) {
    body = "(let ((" + name + " " + renderer.render(expr) + ")) " + body + ")";
  }

  std::string text;
  std::string bv = "(_ BitVec " + std::to_string(width) + ")";
  for (const std::string& v : free_vars) {
    text += "(declare-const " + v + " " + bv + ")\n";
  }
  for (const std::string& b : bound_names) {
    text += "(declare-const " + b + " " + bv + ")\n";
  }
  text += "(assert " + body + ")\n";
  for (size_t i = 0; i < bound_names.size(); ++i) {
    text += "(assert (= " + bound_names[i] + " #x" +
            fixed_hex(mask_width(pool.for_bound_var(i), width), width) + "))\n";
  }
  return {std::move(text), std::move(free_vars)};
}

Value result_to_value(Engine& engine, const SmtResultData& result, bool with_model) {
  Value model = Value::nil_value();
  if (with_model && result.status == "sat") {
    for (size_t i = result.model.size(); i-- > 0;) {
      Value pair[2] = {engine.sym(result.model[i].first), engine.sym(result.model[i].second)};
      Value cell[2] = {Value::record(engine.records().pack(pair)), model};
      model = Value::record(engine.records().pack(cell));
    }
  }
  Value fields[2] = {engine.sym(result.status), model};
  return Value::record(engine.records().pack(fields));
}

}  // namespace symdl

#include "symdl/factdb.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "symdl/error.hpp"

namespace symdl {

uint64_t tuple_hash(const Tuple& t) {
  uint64_t h = 1469598103934665603ull;
  for (const Value& v : t) {
    h ^= (static_cast<uint64_t>(v.kind) << 60) ^ v.bits;
    h *= 1099511628211ull;
  }
  return h;
}

bool Relation::contains(const Tuple& t) const {
  auto [lo, hi] = dedup_.equal_range(tuple_hash(t));
  for (auto it = lo; it != hi; ++it) {
    if (rows_[it->second] == t) return true;
  }
  return false;
}

bool Relation::insert(const Tuple& t) {
  if (t.size() != arity_) {
    fail(errc::arity, "tuple arity " + std::to_string(t.size()) +
                          " does not match relation arity " + std::to_string(arity_));
  }
  uint64_t h = tuple_hash(t);
  auto [lo, hi] = dedup_.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    if (rows_[it->second] == t) return false;
  }
  uint32_t id = static_cast<uint32_t>(rows_.size());
  rows_.push_back(t);
  dedup_.emplace(h, id);
  return true;
}

const Relation::Index& Relation::index_for(const std::vector<uint32_t>& cols) const {
  Index& idx = indexes_[cols];
  if (idx.built_rows != rows_.size()) {
    idx.order.resize(rows_.size());
    for (uint32_t i = 0; i < rows_.size(); ++i) idx.order[i] = i;
    std::sort(idx.order.begin(), idx.order.end(), [&](uint32_t a, uint32_t b) {
      for (uint32_t c : cols) {
        if (rows_[a][c] != rows_[b][c]) return rows_[a][c] < rows_[b][c];
      }
      return a < b;
    });
    idx.built_rows = rows_.size();
  }
  return idx;
}

void Relation::match(const std::vector<uint32_t>& cols, const std::vector<Value>& key,
                     std::vector<uint32_t>& out) const {
  out.clear();
  if (cols.empty()) {
    out.resize(rows_.size());
    for (uint32_t i = 0; i < rows_.size(); ++i) out[i] = i;
    return;
  }
  const Index& idx = index_for(cols);
  auto cmp_row_key = [&](uint32_t row) {
    // <0 row before key, 0 equal, >0 after
    for (size_t k = 0; k < cols.size(); ++k) {
      const Value& rv = rows_[row][cols[k]];
      if (rv != key[k]) return rv < key[k] ? -1 : 1;
    }
    return 0;
  };
  auto lo = std::partition_point(idx.order.begin(), idx.order.end(),
                                 [&](uint32_t r) { return cmp_row_key(r) < 0; });
  for (auto it = lo; it != idx.order.end() && cmp_row_key(*it) == 0; ++it) {
    out.push_back(*it);
  }
}

bool Relation::any_match(const std::vector<uint32_t>& cols,
                         const std::vector<Value>& key) const {
  if (cols.empty()) return !rows_.empty();
  const Index& idx = index_for(cols);
  auto cmp_row_key = [&](uint32_t row) {
    for (size_t k = 0; k < cols.size(); ++k) {
      const Value& rv = rows_[row][cols[k]];
      if (rv != key[k]) return rv < key[k] ? -1 : 1;
    }
    return 0;
  };
  auto lo = std::partition_point(idx.order.begin(), idx.order.end(),
                                 [&](uint32_t r) { return cmp_row_key(r) < 0; });
  return lo != idx.order.end() && cmp_row_key(*lo) == 0;
}

Relation& FactDB::get(const std::string& name, size_t arity) {
  auto it = relations.find(name);
  if (it == relations.end()) {
    it = relations.emplace(name, Relation(arity)).first;
  }
  return it->second;
}

const Relation* FactDB::find(const std::string& name) const {
  auto it = relations.find(name);
  return it == relations.end() ? nullptr : &it->second;
}

Relation* FactDB::find(const std::string& name) {
  auto it = relations.find(name);
  return it == relations.end() ? nullptr : &it->second;
}

// ---- rendering ----

static void append_quoted(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
}

static void render_record_inner(const Engine& engine, const Value& v, std::string& out) {
  switch (v.kind) {
    case ValueKind::nil:
      out += "nil";
      return;
    case ValueKind::number:
      out += std::to_string(v.num());
      return;
    case ValueKind::symbol:
      append_quoted(out, engine.symbols().resolve(v.ord()));
      return;
    case ValueKind::record: {
      out += '[';
      auto fields = engine.records().unpack(v.ord());
      for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ", ";
        render_record_inner(engine, fields[i], out);
      }
      out += ']';
      return;
    }
  }
}

std::string render_record(const Engine& engine, const Value& v) {
  std::string out;
  render_record_inner(engine, v, out);
  return out;
}

std::string render_cell(const Engine& engine, const Value& v) {
  switch (v.kind) {
    case ValueKind::number:
      return std::to_string(v.num());
    case ValueKind::symbol:
      return std::string(engine.symbols().resolve(v.ord()));
    case ValueKind::nil:
    case ValueKind::record:
      return render_record(engine, v);
  }
  fail(errc::type, "unrenderable value");
}

std::string render_tuple(const Engine& engine, const Tuple& t) {
  std::string out;
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) out += '\t';
    out += render_cell(engine, t[i]);
  }
  return out;
}

// ---- record text parsing ----

namespace {

class RecordParser {
public:
  RecordParser(Engine& engine, std::string_view text) : engine_(engine), text_(text) {}

  Value parse() {
    skip_ws();
    Value v = value();
    skip_ws();
    if (pos_ != text_.size()) {
      fail(errc::type, "trailing characters in record literal: " + std::string(text_));
    }
    return v;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  [[noreturn]] void bad(const std::string& msg) {
    fail(errc::type, msg + " in record literal: " + std::string(text_));
  }

  Value value() {
    if (pos_ >= text_.size()) bad("unexpected end");
    char c = text_[pos_];
    if (c == '[') return record();
    if (c == '"') return symbol();
    if (std::isdigit(static_cast<unsigned char>(c))) return number();
    if (text_.compare(pos_, 3, "nil") == 0) {
      pos_ += 3;
      return Value::nil_value();
    }
    bad("unexpected character");
  }

  Value record() {
    ++pos_;  // consume '['
    std::vector<Value> fields;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return Value::nil_value();
    }
    while (true) {
      fields.push_back(value());
      skip_ws();
      if (pos_ >= text_.size()) bad("unterminated record");
      if (text_[pos_] == ',') {
        ++pos_;
        skip_ws();
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        break;
      }
      bad("expected ',' or ']'");
    }
    return Value::record(engine_.records().pack(fields));
  }

  Value symbol() {
    ++pos_;  // consume '"'
    std::string s;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) bad("unterminated escape");
        s += text_[pos_++];
      } else {
        s += c;
      }
    }
    if (pos_ >= text_.size()) bad("unterminated string");
    ++pos_;  // closing quote
    check_not_reserved(s);
    return Value::symbol(engine_.symbols().intern(s));
  }

  Value number() {
    uint64_t n = 0;
    bool any = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      uint64_t d = static_cast<uint64_t>(text_[pos_] - '0');
      if (n > (UINT64_MAX - d) / 10) bad("numeric overflow");
      n = n * 10 + d;
      ++pos_;
      any = true;
    }
    if (!any) bad("expected number");
    return Value::number(n);
  }

  void check_not_reserved(std::string_view s) {
    if (s.substr(0, kFreshPrefix.size()) == kFreshPrefix) {
      fail(errc::reserved_symbol,
           "symbol '" + std::string(s) + "' uses the reserved fresh prefix");
    }
  }

  Engine& engine_;
  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

Value parse_record_text(Engine& engine, std::string_view text) {
  return RecordParser(engine, text).parse();
}

// ---- file I/O ----

static Value parse_cell(Engine& engine, const std::string& cell, ColumnType type,
                        const std::string& rel, size_t lineno) {
  auto where = [&] { return rel + ".facts line " + std::to_string(lineno); };
  switch (type) {
    case ColumnType::symbol: {
      if (cell.substr(0, kFreshPrefix.size()) == kFreshPrefix) {
        fail(errc::reserved_symbol, "symbol '" + cell + "' uses the reserved fresh prefix (" +
                                        where() + ")");
      }
      return Value::symbol(engine.symbols().intern(cell));
    }
    case ColumnType::number: {
      if (cell.empty()) fail(errc::type, "empty number cell (" + where() + ")");
      uint64_t n = 0;
      for (char c : cell) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
          fail(errc::type, "cell '" + cell + "' is not a number (" + where() + ")");
        }
        uint64_t d = static_cast<uint64_t>(c - '0');
        if (n > (UINT64_MAX - d) / 10) {
          fail(errc::type, "number '" + cell + "' overflows (" + where() + ")");
        }
        n = n * 10 + d;
      }
      return Value::number(n);
    }
    case ColumnType::record: {
      try {
        return parse_record_text(engine, cell);
      } catch (const Error& e) {
        if (e.code() == errc::reserved_symbol) throw;
        fail(errc::type, std::string(e.what()) + " (" + where() + ")");
      }
    }
  }
  fail(errc::type, "unknown column type");
}

FactDB load_facts(Engine& engine, const std::string& dir, const Program& program) {
  FactDB db;
  for (const auto& [name, decl] : program.relations) {
    Relation& rel = db.get(name, decl.arity());
    if (!decl.is_input) continue;
    std::filesystem::path path = std::filesystem::path(dir) / (name + ".facts");
    std::ifstream in(path);
    if (!in) {
      fail(errc::io, "cannot open " + path.string());
    }
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> cells;
      size_t start = 0;
      while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
          cells.push_back(line.substr(start));
          break;
        }
        cells.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
      if (cells.size() != decl.arity()) {
        fail(errc::arity, name + ".facts line " + std::to_string(lineno) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(decl.arity()));
      }
      Tuple t;
      t.reserve(cells.size());
      for (size_t i = 0; i < cells.size(); ++i) {
        t.push_back(parse_cell(engine, cells[i], decl.columns[i].second, name, lineno));
      }
      rel.insert(t);
    }
  }
  return db;
}

void dump_relations(const Engine& engine, const FactDB& db, const std::string& dir,
                    const Program& program) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, decl] : program.relations) {
    if (!decl.is_output) continue;
    const Relation* rel = db.find(name);
    std::filesystem::path path = std::filesystem::path(dir) / (name + ".csv");
    std::ofstream out(path);
    if (!out) fail(errc::io, "cannot write " + path.string());
    std::vector<std::string> lines;
    if (rel) {
      lines = rendered_rows(engine, *rel);
    }
    for (const std::string& l : lines) out << l << '\n';
  }
}

std::vector<std::string> rendered_rows(const Engine& engine, const Relation& rel) {
  std::vector<std::string> lines;
  lines.reserve(rel.size());
  for (const Tuple& t : rel.rows()) lines.push_back(render_tuple(engine, t));
  std::sort(lines.begin(), lines.end());
  return lines;
}

bool db_equal(const Engine& a, const FactDB& da, const Engine& b, const FactDB& db) {
  for (const auto& [name, rel] : da.relations) {
    const Relation* other = db.find(name);
    size_t other_size = other ? other->size() : 0;
    if (rel.size() != other_size) return false;
    if (rel.size() == 0) continue;
    if (rendered_rows(a, rel) != rendered_rows(b, *other)) return false;
  }
  for (const auto& [name, rel] : db.relations) {
    if (rel.size() != 0 && !da.find(name)) return false;
  }
  return true;
}

}  // namespace symdl

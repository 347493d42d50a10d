#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "symdl/error.hpp"

namespace symdl {

enum class ValueKind : uint8_t { number, symbol, record, nil };

// A single engine value: an unsigned 64-bit number, an interned symbol,
// an interned record reference, or the empty-record sentinel nil.
struct Value {
  ValueKind kind = ValueKind::nil;
  uint64_t bits = 0;

  static Value number(uint64_t n) { return {ValueKind::number, n}; }
  static Value symbol(uint32_t ord) { return {ValueKind::symbol, ord}; }
  static Value record(uint32_t ref) { return {ValueKind::record, ref}; }
  static Value nil_value() { return {ValueKind::nil, 0}; }

  bool is_number() const { return kind == ValueKind::number; }
  bool is_symbol() const { return kind == ValueKind::symbol; }
  bool is_record() const { return kind == ValueKind::record; }
  bool is_nil() const { return kind == ValueKind::nil; }

  uint64_t num() const { return bits; }
  uint32_t ord() const { return static_cast<uint32_t>(bits); }

  friend bool operator==(const Value& a, const Value& b) = default;
  // Ordering is by (kind, payload); it is an arbitrary but stable total order
  // used for internal set storage, never exposed in dumps.
  friend auto operator<=>(const Value& a, const Value& b) = default;
};

struct ValueHash {
  size_t operator()(const Value& v) const {
    return std::hash<uint64_t>()(v.bits * 4 + static_cast<uint64_t>(v.kind));
  }
};

// Bijective string <-> ordinal map. Safe for concurrent interning; ordinals are
// assigned first-come but resolution is canonical either way.
class SymbolTable {
public:
  uint32_t intern(std::string_view name);
  const std::string& resolve(uint32_t ord) const;
  bool lookup(std::string_view name, uint32_t* out) const;
  size_t size() const;

private:
  mutable std::shared_mutex mu_;
  std::deque<std::string> names_;  // stable addresses for the index views
  std::unordered_map<std::string_view, uint32_t> index_;
};

// Canonical tuple interning: equal tuples always map to the same reference.
// The empty tuple is not stored; it is represented by Value::nil_value().
class RecordTable {
public:
  uint32_t pack(std::span<const Value> fields);
  std::span<const Value> unpack(uint32_t ref) const;
  size_t size() const;

private:
  uint64_t hash_fields(std::span<const Value> fields) const;

  mutable std::shared_mutex mu_;
  // Deque keeps element addresses stable, so unpack() spans stay valid while
  // other threads keep interning.
  std::deque<std::vector<Value>> entries_;
  std::unordered_multimap<uint64_t, uint32_t> index_;  // hash -> entry id
};

class FunctorRegistry;

// Symbols generated for placeholder variables start with this prefix; input
// fact files must not contain them.
inline constexpr std::string_view kFreshPrefix = "$fresh_";

// One engine instance: shared symbol/record tables, registered functors, and
// the bit width used by width-sensitive functors (constant folding and the
// SMT bridge). Instances are independent; do not share across engines.
class Engine {
public:
  Engine();
  ~Engine();

  SymbolTable& symbols() { return symbols_; }
  const SymbolTable& symbols() const { return symbols_; }
  RecordTable& records() { return records_; }
  const RecordTable& records() const { return records_; }
  FunctorRegistry& functors() { return *functors_; }
  const FunctorRegistry& functors() const { return *functors_; }

  int eval_width() const { return eval_width_; }
  void set_eval_width(int w);

  // Conveniences used all over the codebase.
  Value sym(std::string_view name) { return Value::symbol(symbols_.intern(name)); }
  const std::string& name_of(const Value& v) const;
  Value pack(std::span<const Value> fields);
  std::span<const Value> unpack(const Value& v) const;

private:
  SymbolTable symbols_;
  RecordTable records_;
  std::unique_ptr<FunctorRegistry> functors_;
  int eval_width_ = 256;
};

}  // namespace symdl

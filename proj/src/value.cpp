#include "symdl/value.hpp"

#include <mutex>

#include "symdl/functors.hpp"

namespace symdl {

uint32_t SymbolTable::intern(std::string_view name) {
  {
    std::shared_lock lock(mu_);
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
  }
  std::unique_lock lock(mu_);
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  if (names_.size() > 0xFFFFFFFEu) fail(errc::resource_limit, "symbol table full");
  names_.emplace_back(name);
  uint32_t ord = static_cast<uint32_t>(names_.size() - 1);
  index_.emplace(std::string_view(names_.back()), ord);
  return ord;
}

const std::string& SymbolTable::resolve(uint32_t ord) const {
  std::shared_lock lock(mu_);
  if (ord >= names_.size())
    fail(errc::unknown_ordinal, "unknown symbol ordinal " + std::to_string(ord));
  return names_[ord];
}

bool SymbolTable::lookup(std::string_view name, uint32_t* out) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(name);
  if (it == index_.end()) return false;
  if (out) *out = it->second;
  return true;
}

size_t SymbolTable::size() const {
  std::shared_lock lock(mu_);
  return names_.size();
}

uint64_t RecordTable::hash_fields(std::span<const Value> fields) const {
  uint64_t h = 1469598103934665603ull;
  for (const Value& v : fields) {
    h = (h ^ (static_cast<uint64_t>(v.kind) + 0x9e37)) * 1099511628211ull;
    h = (h ^ v.bits) * 1099511628211ull;
  }
  return h;
}

static bool fields_equal(const std::vector<Value>& entry, std::span<const Value> fields) {
  if (entry.size() != fields.size()) return false;
  for (size_t i = 0; i < entry.size(); ++i)
    if (entry[i] != fields[i]) return false;
  return true;
}

uint32_t RecordTable::pack(std::span<const Value> fields) {
  uint64_t h = hash_fields(fields);
  {
    std::shared_lock lock(mu_);
    auto [lo, hi] = index_.equal_range(h);
    for (auto it = lo; it != hi; ++it)
      if (fields_equal(entries_[it->second], fields)) return it->second;
  }
  std::unique_lock lock(mu_);
  auto [lo, hi] = index_.equal_range(h);
  for (auto it = lo; it != hi; ++it)
    if (fields_equal(entries_[it->second], fields)) return it->second;
  if (entries_.size() > 0xFFFFFFFEu) fail(errc::resource_limit, "record table full");
  entries_.emplace_back(fields.begin(), fields.end());
  uint32_t ref = static_cast<uint32_t>(entries_.size() - 1);
  index_.emplace(h, ref);
  return ref;
}

std::span<const Value> RecordTable::unpack(uint32_t ref) const {
  std::shared_lock lock(mu_);
  if (ref >= entries_.size())
    fail(errc::unknown_record_ref, "unknown record reference " + std::to_string(ref));
  return entries_[ref];
}

size_t RecordTable::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

Engine::Engine() : functors_(std::make_unique<FunctorRegistry>()) {
  register_builtin_functors(*this);
}

Engine::~Engine() = default;

void Engine::set_eval_width(int w) {
  if (w != 4 && w != 8 && w != 256)
    fail(errc::type, "unsupported evaluation width " + std::to_string(w));
  eval_width_ = w;
}

const std::string& Engine::name_of(const Value& v) const {
  if (!v.is_symbol()) fail(errc::type, "value is not a symbol");
  return symbols_.resolve(v.ord());
}

Value Engine::pack(std::span<const Value> fields) {
  if (fields.empty()) return Value::nil_value();
  return Value::record(records_.pack(fields));
}

std::span<const Value> Engine::unpack(const Value& v) const {
  if (v.is_nil()) return {};
  if (!v.is_record()) fail(errc::type, "value is not a record");
  return records_.unpack(v.ord());
}

}  // namespace symdl

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "symdl/ast.hpp"
#include "symdl/value.hpp"

namespace symdl {

using Tuple = std::vector<Value>;

// A set of tuples of fixed arity with on-demand sorted indexes over column
// subsets. Insertion order of rows_ is preserved; indexes are rebuilt lazily
// after growth.
class Relation {
public:
  explicit Relation(size_t arity = 0) : arity_(arity) {}

  size_t arity() const { return arity_; }
  size_t size() const { return rows_.size(); }
  const std::vector<Tuple>& rows() const { return rows_; }

  bool contains(const Tuple& t) const;
  bool insert(const Tuple& t);  // true when the tuple is new

  // Row ids of tuples matching `key` on the columns listed in `cols`
  // (ascending column numbers). An empty `cols` matches every row.
  void match(const std::vector<uint32_t>& cols, const std::vector<Value>& key,
             std::vector<uint32_t>& out) const;
  bool any_match(const std::vector<uint32_t>& cols, const std::vector<Value>& key) const;

  // Builds the index for `cols` now. Concurrent match/any_match calls are
  // only safe once every index they touch has been prepared and no inserts
  // happen in between.
  void prepare_index(const std::vector<uint32_t>& cols) const { index_for(cols); }

private:
  struct Index {
    std::vector<uint32_t> order;  // row ids sorted by the masked columns
    size_t built_rows = 0;
  };
  const Index& index_for(const std::vector<uint32_t>& cols) const;

  size_t arity_ = 0;
  std::vector<Tuple> rows_;
  std::multimap<uint64_t, uint32_t> dedup_;  // tuple hash -> row id
  mutable std::map<std::vector<uint32_t>, Index> indexes_;
};

struct FactDB {
  std::map<std::string, Relation> relations;

  Relation& get(const std::string& name, size_t arity);
  const Relation* find(const std::string& name) const;
  Relation* find(const std::string& name);
};

uint64_t tuple_hash(const Tuple& t);

// ---- value rendering and parsing ----

// Record syntax: ["ADD", ["x", nil, nil], 7]. Symbols inside records are
// double-quoted with \" and \\ escapes; numbers are decimal; nil is the empty
// record.
std::string render_record(const Engine& engine, const Value& v);

// A top-level cell: symbols print verbatim, numbers decimal, records in
// bracket syntax.
std::string render_cell(const Engine& engine, const Value& v);
std::string render_tuple(const Engine& engine, const Tuple& t);

// Parses one record-syntax value (record column cells).
Value parse_record_text(Engine& engine, std::string_view text);

// ---- fact file I/O ----

// Reads <Relation>.facts for every EDB relation of the program from `dir`
// (tab-separated, no header; cells typed by the declaration). Every declared
// relation is present in the result, IDB ones empty. Symbols starting with
// the fresh-variable prefix are rejected.
FactDB load_facts(Engine& engine, const std::string& dir, const Program& program);

// Writes <Relation>.csv for every .output relation, rows rendered as
// tab-separated cells and sorted bytewise.
void dump_relations(const Engine& engine, const FactDB& db, const std::string& dir,
                    const Program& program);

// Sorted rendered rows of one relation; the cross-engine comparison form.
std::vector<std::string> rendered_rows(const Engine& engine, const Relation& rel);

// Set equality relation-by-relation over rendered tuples.
bool db_equal(const Engine& a, const FactDB& da, const Engine& b, const FactDB& db);

}  // namespace symdl

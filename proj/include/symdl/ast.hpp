#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace symdl {

// A term as written in a rule: head argument, body atom argument, or guard
// operand. Variables and record patterns can bind; functor calls and
// arithmetic are computed once their variables are bound.
struct Term {
  enum class Kind : uint8_t { variable, wildcard, number, symbol, nil, record, functor, binary };

  Kind kind = Kind::wildcard;
  std::string text;        // variable name, symbol literal, or functor name
  uint64_t number = 0;     // number literal
  char op = 0;             // binary arithmetic: + - * /
  std::vector<Term> args;  // record fields, functor arguments, or binary operands
  int line = 0, col = 0;

  static Term variable(std::string name) {
    Term t; t.kind = Kind::variable; t.text = std::move(name); return t;
  }
  static Term symbol(std::string s) {
    Term t; t.kind = Kind::symbol; t.text = std::move(s); return t;
  }
  static Term num(uint64_t n) {
    Term t; t.kind = Kind::number; t.number = n; return t;
  }
  static Term nil() { Term t; t.kind = Kind::nil; return t; }
  static Term record(std::vector<Term> fields) {
    Term t; t.kind = Kind::record; t.args = std::move(fields); return t;
  }
  static Term functor(std::string name, std::vector<Term> call_args) {
    Term t; t.kind = Kind::functor; t.text = std::move(name); t.args = std::move(call_args);
    return t;
  }
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;
  int line = 0, col = 0;
};

enum class CmpOp : uint8_t { eq, ne, lt, le, gt, ge };

struct Guard {
  CmpOp op = CmpOp::eq;
  Term lhs, rhs;
  int line = 0, col = 0;
};

struct Literal {
  enum class Kind : uint8_t { atom, negated, guard };
  Kind kind = Kind::atom;
  Atom atom;
  Guard guard;
};

struct Rule {
  std::vector<Atom> heads;
  std::vector<Literal> body;
  int line = 0, col = 0;
};

enum class ColumnType : uint8_t { symbol, number, record };

struct RelationDecl {
  std::string name;
  std::vector<std::pair<std::string, ColumnType>> columns;
  bool is_input = false;
  bool is_output = false;
  size_t arity() const { return columns.size(); }
};

struct ComponentTemplate {
  std::string name;
  std::vector<RelationDecl> decls;
  std::vector<Rule> rules;
};

struct Instantiation {
  std::string instance;
  std::string component;
  int count = 1;  // k > 1 expands to instance.1 ... instance.k
};

// A parsed program with component instantiations already flattened into
// plain relations and rules. Relations declared .input are the EDB; they may
// never appear as rule heads.
struct Program {
  std::map<std::string, RelationDecl> relations;
  std::vector<Rule> rules;
  std::map<std::string, ComponentTemplate> components;
  std::vector<Instantiation> instantiations;
  std::map<std::string, uint64_t> consts;

  bool is_edb(const std::string& rel) const {
    auto it = relations.find(rel);
    return it != relations.end() && it->second.is_input;
  }
  const RelationDecl& decl(const std::string& rel) const;
};

}  // namespace symdl

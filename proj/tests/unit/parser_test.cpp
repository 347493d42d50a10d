#include <string>

#include "doctest.h"
#include "symdl/analyses.hpp"
#include "symdl/error.hpp"
#include "symdl/parser.hpp"

using namespace symdl;

namespace {

errc code_of(const std::string& text) {
  try {
    parse_program(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected the program to be rejected");
  return errc::syntax;
}

}  // namespace

TEST_CASE("transitive closure program parses into the expected shape") {
  Program p = parse_program(
      ".decl Edge(a: number, b: number)\n"
      ".input Edge\n"
      ".decl Path(a: number, b: number)\n"
      ".output Path\n"
      "Path(x, y) :- Edge(x, y).\n"
      "Path(x, z) :- Path(x, y), Edge(y, z).\n");
  CHECK(p.relations.size() == 2);
  CHECK(p.is_edb("Edge"));
  CHECK_FALSE(p.is_edb("Path"));
  CHECK(p.decl("Path").is_output);
  CHECK(p.decl("Edge").columns[0].second == ColumnType::number);
  REQUIRE(p.rules.size() == 2);
  CHECK(p.rules[0].heads.size() == 1);
  CHECK(p.rules[0].heads[0].predicate == "Path");
  REQUIRE(p.rules[1].body.size() == 2);
  CHECK(p.rules[1].body[0].kind == Literal::Kind::atom);
  CHECK(p.rules[1].body[0].atom.predicate == "Path");
  CHECK(p.rules[1].body[1].atom.args[0].kind == Term::Kind::variable);
  CHECK(p.rules[1].body[1].atom.args[0].text == "y");
}

TEST_CASE("multi-head rules keep every head") {
  Program p = parse_program(
      ".decl Edge(a: symbol, b: symbol)\n"
      ".input Edge\n"
      ".decl Fwd(a: symbol, b: symbol)\n"
      ".decl Bwd(a: symbol, b: symbol)\n"
      "Fwd(x, y), Bwd(y, x) :- Edge(x, y).\n");
  REQUIRE(p.rules.size() == 1);
  REQUIRE(p.rules[0].heads.size() == 2);
  CHECK(p.rules[0].heads[0].predicate == "Fwd");
  CHECK(p.rules[0].heads[1].predicate == "Bwd");
}

TEST_CASE("record terms, nil, and wildcards parse") {
  Program p = parse_program(
      ".decl In(a: record)\n"
      ".input In\n"
      ".decl Out(a: record)\n"
      "Out([x, [y, nil]]) :- In([x, y]), In([_, x]).\n");
  const Rule& r = p.rules[0];
  const Term& head = r.heads[0].args[0];
  REQUIRE(head.kind == Term::Kind::record);
  REQUIRE(head.args.size() == 2);
  CHECK(head.args[0].kind == Term::Kind::variable);
  REQUIRE(head.args[1].kind == Term::Kind::record);
  CHECK(head.args[1].args[1].kind == Term::Kind::nil);
  CHECK(r.body[1].atom.args[0].args[0].kind == Term::Kind::wildcard);
}

TEST_CASE("guards, arithmetic, and functor calls parse") {
  Program p = parse_program(
      ".decl N(a: number)\n"
      ".input N\n"
      ".decl Big(a: number)\n"
      ".decl Lbl(a: number, b: symbol)\n"
      "Big(x + 1) :- N(x), x > 3, x != 7.\n"
      "Lbl(x, s) :- N(x), s = @cat(\"n\", \"x\").\n");
  const Rule& r0 = p.rules[0];
  CHECK(r0.heads[0].args[0].kind == Term::Kind::binary);
  CHECK(r0.heads[0].args[0].op == '+');
  REQUIRE(r0.body.size() == 3);
  CHECK(r0.body[1].kind == Literal::Kind::guard);
  CHECK(r0.body[1].guard.op == CmpOp::gt);
  CHECK(r0.body[2].guard.op == CmpOp::ne);
  const Rule& r1 = p.rules[1];
  CHECK(r1.body[1].kind == Literal::Kind::guard);
  CHECK(r1.body[1].guard.op == CmpOp::eq);
  CHECK(r1.body[1].guard.rhs.kind == Term::Kind::functor);
  CHECK(r1.body[1].guard.rhs.text == "cat");
  REQUIRE(r1.body[1].guard.rhs.args.size() == 2);
  CHECK(r1.body[1].guard.rhs.args[0].kind == Term::Kind::symbol);
  CHECK(r1.body[1].guard.rhs.args[0].text == "n");
}

TEST_CASE("named constants are recorded and usable in guards") {
  Program p = parse_program(
      ".const LIMIT = 4\n"
      ".decl N(a: number)\n"
      ".input N\n"
      ".decl Small(a: number)\n"
      "Small(x) :- N(x), x < LIMIT.\n");
  REQUIRE(p.consts.count("LIMIT") == 1);
  CHECK(p.consts.at("LIMIT") == 4);
}

TEST_CASE("negation parses as a negated literal") {
  Program p = parse_program(
      ".decl A(x: number)\n"
      ".decl B(x: number)\n"
      ".input A\n"
      ".input B\n"
      ".decl Only(x: number)\n"
      "Only(x) :- A(x), !B(x).\n");
  REQUIRE(p.rules[0].body.size() == 2);
  CHECK(p.rules[0].body[1].kind == Literal::Kind::negated);
  CHECK(p.rules[0].body[1].atom.predicate == "B");
}

TEST_CASE("component templates flatten under their instance prefix") {
  Program p = parse_program(
      ".comp Closure {\n"
      "  .decl Edge(a: number, b: number)\n"
      "  .decl Path(a: number, b: number)\n"
      "  Path(x, y) :- Edge(x, y).\n"
      "  Path(x, z) :- Path(x, y), Edge(y, z).\n"
      "}\n"
      ".init g = Closure\n"
      ".input g.Edge\n"
      ".output g.Path\n");
  CHECK(p.relations.count("g.Edge") == 1);
  CHECK(p.relations.count("g.Path") == 1);
  CHECK(p.is_edb("g.Edge"));
  REQUIRE(p.rules.size() == 2);
  CHECK(p.rules[0].heads[0].predicate == "g.Path");
  CHECK(p.rules[1].body[1].atom.predicate == "g.Edge");
}

TEST_CASE("counted instantiation expands to numbered instances") {
  Program p = parse_program(
      ".comp C {\n"
      "  .decl R(a: number)\n"
      "  .decl S(a: number)\n"
      "  S(x) :- R(x).\n"
      "}\n"
      ".init many = C * 3\n"
      ".input many.2.R\n");
  CHECK(p.relations.count("many.1.R") == 1);
  CHECK(p.relations.count("many.2.S") == 1);
  CHECK(p.relations.count("many.3.R") == 1);
  CHECK(p.relations.count("many.R") == 0);
  CHECK(p.is_edb("many.2.R"));
  CHECK_FALSE(p.is_edb("many.1.R"));
  CHECK(p.rules.size() == 3);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_program(".decl Edge(a: number\n");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() >= 1);
    CHECK(e.col() >= 1);
    CHECK(std::string(e.what()).find("syntax error at") != std::string::npos);
  }
}

TEST_CASE("static validation rejects the documented error classes") {
  const char* kPrelude =
      ".decl A(x: number)\n"
      ".input A\n"
      ".decl B(x: number)\n";

  SUBCASE("unknown predicate") {
    CHECK(code_of(std::string(kPrelude) + "B(x) :- C(x).\n") == errc::unknown_predicate);
  }
  SUBCASE("arity mismatch in body") {
    CHECK(code_of(std::string(kPrelude) + "B(x) :- A(x, x).\n") == errc::arity);
  }
  SUBCASE("arity mismatch in head") {
    CHECK(code_of(std::string(kPrelude) + "B(x, x) :- A(x).\n") == errc::arity);
  }
  SUBCASE("EDB relation as rule head") {
    CHECK(code_of(std::string(kPrelude) + "A(x) :- B(x).\n") == errc::type);
  }
  SUBCASE("unbound head variable") {
    CHECK(code_of(std::string(kPrelude) + "B(y) :- A(x).\n") == errc::safety);
  }
  SUBCASE("variable bound only under negation") {
    CHECK(code_of(std::string(kPrelude) + "B(x) :- !A(x).\n") == errc::safety);
  }
  SUBCASE("guard over an unbound variable") {
    CHECK(code_of(std::string(kPrelude) + "B(x) :- A(x), y > 2.\n") == errc::safety);
  }
  SUBCASE("functor call under negation") {
    CHECK(code_of(std::string(kPrelude) + "B(x) :- A(x), !A(@list_length(x)).\n") ==
          errc::safety);
  }
  SUBCASE("wildcard in rule head") {
    CHECK(code_of(std::string(kPrelude) + "B(_) :- A(x).\n") == errc::safety);
  }
}

TEST_CASE("binding equalities satisfy safety in either direction") {
  CHECK_NOTHROW(parse_program(
      ".decl A(x: number)\n"
      ".input A\n"
      ".decl B(x: number)\n"
      "B(y) :- A(x), y = x + 1.\n"
      "B(y) :- A(x), x + 1 = y.\n"));
}

TEST_CASE("bundled analysis programs parse and validate") {
  Program pts = points_to_program();
  validate_program(pts);
  size_t multi = 0;
  bool triple = false;
  for (const Rule& r : pts.rules) {
    if (r.heads.size() > 1) ++multi;
    if (r.heads.size() == 3) triple = true;
  }
  CHECK(pts.rules.size() == 9);
  CHECK(multi == 1);
  CHECK(triple);
  CHECK(pts.relations.count("VarPointsTo") == 1);

  Program sym = symexec_program();
  validate_program(sym);
  CHECK(sym.relations.count("Reachable") == 1);
  CHECK(sym.relations.count("Models") == 1);
  CHECK(sym.consts.at("BOUND") == 8);
}

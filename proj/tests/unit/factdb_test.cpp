#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "symdl/factdb.hpp"
#include "symdl/parser.hpp"
#include "symdl/value.hpp"
#include "test_support.hpp"

using namespace symdl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("factdb_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("relation insert, contains, and dedup") {
  Engine eng;
  Relation r(2);
  Tuple t1 = {eng.sym("a"), eng.sym("b")};
  Tuple t2 = {eng.sym("a"), eng.sym("c")};
  CHECK(r.insert(t1));
  CHECK_FALSE(r.insert(t1));
  CHECK(r.insert(t2));
  CHECK(r.size() == 2);
  CHECK(r.contains(t1));
  CHECK(r.contains(t2));
  CHECK_FALSE(r.contains({eng.sym("b"), eng.sym("a")}));
}

TEST_CASE("match retrieves by column subset") {
  Engine eng;
  Relation r(2);
  Value a = eng.sym("a"), b = eng.sym("b"), c = eng.sym("c");
  r.insert({a, b});
  r.insert({a, c});
  r.insert({b, c});

  std::vector<uint32_t> out;
  r.match({0}, {a}, out);
  CHECK(out.size() == 2);
  for (uint32_t id : out) CHECK(r.rows()[id][0] == a);

  out.clear();
  r.match({1}, {c}, out);
  CHECK(out.size() == 2);

  out.clear();
  r.match({0, 1}, {b, c}, out);
  REQUIRE(out.size() == 1);
  CHECK(r.rows()[out[0]] == Tuple{b, c});

  out.clear();
  r.match({}, {}, out);
  CHECK(out.size() == 3);

  CHECK(r.any_match({0}, {b}));
  CHECK_FALSE(r.any_match({0}, {c}));
}

TEST_CASE("indexes stay correct after growth") {
  Engine eng;
  Relation r(2);
  for (uint64_t i = 0; i < 50; ++i) r.insert({Value::number(i % 5), Value::number(i)});
  std::vector<uint32_t> out;
  r.match({0}, {Value::number(3)}, out);
  CHECK(out.size() == 10);
  for (uint64_t i = 50; i < 100; ++i) r.insert({Value::number(i % 5), Value::number(i)});
  out.clear();
  r.match({0}, {Value::number(3)}, out);
  CHECK(out.size() == 20);
}

TEST_CASE("record rendering round-trips") {
  Engine eng;
  Value expr = tsup::bin(eng, "ADD", tsup::leaf(eng, "x"), tsup::leaf(eng, "0x2"));

  std::string text = render_record(eng, expr);
  CHECK(text == "[\"ADD\", [\"x\", nil, nil], [\"0x2\", nil, nil]]");
  CHECK(parse_record_text(eng, text) == expr);

  CHECK(render_record(eng, Value::nil_value()) == "nil");
  CHECK(parse_record_text(eng, "nil").is_nil());

  Value mixed_fields[3] = {eng.sym("s"), Value::number(42), Value::nil_value()};
  Value mixed = eng.pack(mixed_fields);
  std::string mtext = render_record(eng, mixed);
  CHECK(mtext == "[\"s\", 42, nil]");
  CHECK(parse_record_text(eng, mtext) == mixed);
}

TEST_CASE("record rendering escapes quotes and backslashes") {
  Engine eng;
  Value tricky_fields[2] = {eng.sym("say \"hi\""), eng.sym("back\\slash")};
  Value tricky = eng.pack(tricky_fields);
  std::string text = render_record(eng, tricky);
  CHECK(parse_record_text(eng, text) == tricky);
}

TEST_CASE("cell rendering by kind") {
  Engine eng;
  CHECK(render_cell(eng, eng.sym("plain")) == "plain");
  CHECK(render_cell(eng, Value::number(7)) == "7");
  Value f[2] = {Value::number(1), Value::number(2)};
  CHECK(render_cell(eng, eng.pack(f)) == "[1, 2]");
}

TEST_CASE("load_facts reads typed tab-separated files") {
  Engine eng;
  Program p = parse_program(
      ".decl Edge(a: symbol, b: symbol)\n"
      ".decl Weight(a: symbol, n: number)\n"
      ".decl Expr(e: record)\n"
      ".input Edge\n"
      ".input Weight\n"
      ".input Expr\n"
      ".decl Out(a: symbol)\n"
      ".output Out\n"
      "Out(x) :- Edge(x, _).\n");

  TempDir dir;
  write_file(dir.path / "Edge.facts", "a\tb\nb\tc\n");
  write_file(dir.path / "Weight.facts", "a\t10\n");
  write_file(dir.path / "Expr.facts", "[\"ADD\", [\"x\", nil, nil], 3]\n");

  FactDB db = load_facts(eng, dir.path.string(), p);
  REQUIRE(db.find("Edge") != nullptr);
  CHECK(db.find("Edge")->size() == 2);
  CHECK(db.find("Edge")->contains({eng.sym("a"), eng.sym("b")}));
  CHECK(db.find("Weight")->contains({eng.sym("a"), Value::number(10)}));
  REQUIRE(db.find("Expr")->size() == 1);
  const Tuple& row = db.find("Expr")->rows()[0];
  auto fields = eng.unpack(row[0]);
  REQUIRE(fields.size() == 3);
  CHECK(eng.name_of(fields[0]) == "ADD");
  CHECK(fields[2] == Value::number(3));
  // Declared relations with no file are present and empty.
  REQUIRE(db.find("Out") != nullptr);
  CHECK(db.find("Out")->size() == 0);
}

TEST_CASE("load_facts error classes") {
  Engine eng;
  Program p = parse_program(
      ".decl W(a: symbol, n: number)\n"
      ".input W\n"
      ".decl Out(a: symbol)\n"
      ".output Out\n"
      "Out(x) :- W(x, _).\n");

  SUBCASE("missing fact file") {
    TempDir dir;
    try {
      load_facts(eng, dir.path.string(), p);
      FAIL("expected an io error");
    } catch (const Error& e) {
      CHECK(e.code() == errc::io);
    }
  }
  SUBCASE("non-numeric cell in a number column") {
    TempDir dir;
    write_file(dir.path / "W.facts", "a\tnotanumber\n");
    try {
      load_facts(eng, dir.path.string(), p);
      FAIL("expected a type error");
    } catch (const Error& e) {
      CHECK(e.code() == errc::type);
    }
  }
  SUBCASE("wrong column count") {
    TempDir dir;
    write_file(dir.path / "W.facts", "a\t1\textra\n");
    try {
      load_facts(eng, dir.path.string(), p);
      FAIL("expected an arity error");
    } catch (const Error& e) {
      CHECK(e.code() == errc::arity);
    }
  }
  SUBCASE("fresh-prefixed symbols are reserved") {
    TempDir dir;
    write_file(dir.path / "W.facts", "$fresh_x\t1\n");
    try {
      load_facts(eng, dir.path.string(), p);
      FAIL("expected a reserved symbol error");
    } catch (const Error& e) {
      CHECK(e.code() == errc::reserved_symbol);
    }
  }
}

TEST_CASE("dump writes sorted csv for output relations only") {
  Engine eng;
  Program p = parse_program(
      ".decl In(a: symbol)\n"
      ".input In\n"
      ".decl Keep(a: symbol, b: number)\n"
      ".decl Hidden(a: symbol)\n"
      ".output Keep\n"
      "Keep(x, 1) :- In(x).\n"
      "Hidden(x) :- In(x).\n");

  FactDB db;
  auto& keep = db.get("Keep", 2);
  keep.insert({eng.sym("zeta"), Value::number(3)});
  keep.insert({eng.sym("alpha"), Value::number(9)});
  db.get("Hidden", 1).insert({eng.sym("x")});

  TempDir dir;
  dump_relations(eng, db, dir.path.string(), p);
  CHECK_FALSE(fs::exists(dir.path / "Hidden.csv"));
  std::ifstream in(dir.path / "Keep.csv");
  REQUIRE(in.good());
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1 == "alpha\t9");
  CHECK(l2 == "zeta\t3");
}

TEST_CASE("dump then load round-trips records") {
  Engine eng;
  Program writer = parse_program(
      ".decl E(v: record)\n"
      ".input E\n"
      ".decl R(v: record)\n"
      ".output R\n"
      "R(x) :- E(x).\n");

  FactDB db;
  Value nested = tsup::bin(eng, "MUL", tsup::bin(eng, "ADD", tsup::leaf(eng, "x"), tsup::leaf(eng, "y")),
                           tsup::leaf(eng, "0xff"));
  db.get("R", 1).insert({nested});
  Value lst = tsup::list_of(eng, {eng.sym("p"), Value::number(5)});
  db.get("R", 1).insert({lst});

  TempDir dir;
  dump_relations(eng, db, dir.path.string(), writer);
  fs::rename(dir.path / "R.csv", dir.path / "R.facts");

  Program reader = parse_program(
      ".decl R(v: record)\n"
      ".input R\n"
      ".decl Out(v: record)\n"
      ".output Out\n"
      "Out(x) :- R(x).\n");
  Engine eng2;
  FactDB back = load_facts(eng2, dir.path.string(), reader);
  CHECK(back.find("R")->size() == 2);
  CHECK(rendered_rows(eng, *db.find("R")) == rendered_rows(eng2, *back.find("R")));
}

TEST_CASE("db_equal compares across engines by rendered content") {
  Engine a, b;
  FactDB da, dbb;
  // Different interning orders must not matter.
  b.sym("warmup1");
  b.sym("warmup2");
  da.get("R", 2).insert({a.sym("x"), a.sym("y")});
  dbb.get("R", 2).insert({b.sym("x"), b.sym("y")});
  CHECK(db_equal(a, da, b, dbb));

  dbb.get("R", 2).insert({b.sym("x"), b.sym("z")});
  CHECK_FALSE(db_equal(a, da, b, dbb));

  da.get("R", 2).insert({a.sym("x"), a.sym("z")});
  CHECK(db_equal(a, da, b, dbb));

  da.get("Extra", 1).insert({a.sym("q")});
  CHECK_FALSE(db_equal(a, da, b, dbb));
}

TEST_CASE("rendered rows are sorted and stable") {
  Engine eng;
  Relation r(1);
  r.insert({eng.sym("b")});
  r.insert({eng.sym("a")});
  r.insert({eng.sym("c")});
  auto rows = rendered_rows(eng, r);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "a");
  CHECK(rows[1] == "b");
  CHECK(rows[2] == "c");
}

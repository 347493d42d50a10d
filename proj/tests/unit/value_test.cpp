#include <set>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "symdl/value.hpp"

using namespace symdl;

TEST_CASE("symbol interning round-trips and is idempotent") {
  SymbolTable t;
  uint32_t a = t.intern("alpha");
  uint32_t b = t.intern("beta");
  CHECK(a != b);
  CHECK(t.resolve(a) == "alpha");
  CHECK(t.resolve(b) == "beta");
  CHECK(t.intern("alpha") == a);
  CHECK(t.intern("beta") == b);
  CHECK(t.size() == 2);

  uint32_t out = 0;
  CHECK(t.lookup("alpha", &out));
  CHECK(out == a);
  CHECK_FALSE(t.lookup("gamma", &out));
}

TEST_CASE("unknown symbol ordinal is rejected") {
  SymbolTable t;
  t.intern("only");
  CHECK_THROWS_WITH_AS(t.resolve(99), doctest::Contains("unknown symbol ordinal"), Error);
  try {
    t.resolve(99);
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_ordinal);
  }
}

TEST_CASE("empty string is a valid symbol distinct from others") {
  SymbolTable t;
  uint32_t e = t.intern("");
  uint32_t x = t.intern("x");
  CHECK(e != x);
  CHECK(t.resolve(e) == "");
}

TEST_CASE("record packing is canonical") {
  Engine eng;
  Value a = eng.sym("a");
  Value b = eng.sym("b");
  Value f1[2] = {a, b};
  Value f2[2] = {a, b};
  Value r1 = eng.pack(f1);
  Value r2 = eng.pack(f2);
  CHECK(r1 == r2);
  CHECK(r1.is_record());

  Value f3[2] = {b, a};
  CHECK(eng.pack(f3) != r1);

  Value f4[3] = {a, b, Value::nil_value()};
  CHECK(eng.pack(f4) != r1);

  auto fields = eng.unpack(r1);
  REQUIRE(fields.size() == 2);
  CHECK(fields[0] == a);
  CHECK(fields[1] == b);
}

TEST_CASE("the empty record is nil and is never stored") {
  Engine eng;
  Value r = eng.pack({});
  CHECK(r.is_nil());
  CHECK(r == Value::nil_value());
  CHECK(eng.records().size() == 0);
  CHECK(eng.unpack(Value::nil_value()).empty());
}

TEST_CASE("nested records intern structurally") {
  Engine eng;
  Value x = eng.sym("x");
  Value inner1[2] = {x, Value::number(7)};
  Value in1 = eng.pack(inner1);
  Value inner2[2] = {x, Value::number(7)};
  Value in2 = eng.pack(inner2);
  CHECK(in1 == in2);

  Value outer1[2] = {in1, Value::nil_value()};
  Value outer2[2] = {in2, Value::nil_value()};
  CHECK(eng.pack(outer1) == eng.pack(outer2));
}

TEST_CASE("unknown record reference is rejected") {
  Engine eng;
  try {
    eng.unpack(Value::record(1234));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_record_ref);
  }
}

TEST_CASE("value accessor type errors") {
  Engine eng;
  try {
    eng.name_of(Value::number(3));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::type);
  }
  try {
    eng.unpack(Value::number(3));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::type);
  }
}

TEST_CASE("numbers compare by payload and kinds never collide") {
  Value n = Value::number(5);
  Value s = Value::symbol(5);
  Value r = Value::record(5);
  CHECK(n != s);
  CHECK(s != r);
  CHECK(n != r);
  CHECK(Value::number(5) == Value::number(5));
  CHECK(Value::number(5) != Value::number(6));
  CHECK(Value::number(5).num() == 5);
}

TEST_CASE("evaluation width accepts only the supported sizes") {
  Engine eng;
  CHECK(eng.eval_width() == 256);
  eng.set_eval_width(4);
  CHECK(eng.eval_width() == 4);
  eng.set_eval_width(8);
  eng.set_eval_width(256);
  try {
    eng.set_eval_width(16);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::type);
  }
}

TEST_CASE("concurrent interning yields one ordinal per name") {
  SymbolTable t;
  constexpr int kThreads = 8;
  constexpr int kNames = 200;
  std::vector<std::vector<uint32_t>> got(kThreads);
  std::vector<std::thread> threads;
  for (int ti = 0; ti < kThreads; ++ti) {
    threads.emplace_back([&t, &got, ti] {
      got[ti].resize(kNames);
      for (int i = 0; i < kNames; ++i) {
        got[ti][static_cast<size_t>(i)] = t.intern("name_" + std::to_string(i));
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(t.size() == kNames);
  for (int i = 0; i < kNames; ++i) {
    for (int ti = 1; ti < kThreads; ++ti) {
      CHECK(got[ti][static_cast<size_t>(i)] == got[0][static_cast<size_t>(i)]);
    }
  }
  for (int i = 0; i < kNames; ++i) {
    CHECK(t.resolve(got[0][static_cast<size_t>(i)]) == "name_" + std::to_string(i));
  }
}

TEST_CASE("concurrent record packing stays canonical") {
  Engine eng;
  std::vector<Value> leaves;
  for (int i = 0; i < 50; ++i) leaves.push_back(eng.sym("leaf_" + std::to_string(i)));

  constexpr int kThreads = 6;
  std::vector<std::vector<Value>> got(kThreads);
  std::vector<std::thread> threads;
  for (int ti = 0; ti < kThreads; ++ti) {
    threads.emplace_back([&eng, &leaves, &got, ti] {
      for (size_t i = 0; i + 1 < leaves.size(); ++i) {
        Value f[2] = {leaves[i], leaves[i + 1]};
        got[ti].push_back(eng.pack(f));
      }
    });
  }
  for (auto& th : threads) th.join();
  for (int ti = 1; ti < kThreads; ++ti) CHECK(got[ti] == got[0]);
  CHECK(eng.records().size() == leaves.size() - 1);
}

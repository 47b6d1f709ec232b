#include <random>
#include <set>

#include "doctest.h"
#include "sigsem/store.hpp"

using namespace sigsem;

namespace {

CommandPtr h(int n) { return cmd::assign("y", ex::lit(n)); }

}  // namespace

TEST_CASE("eval_expr") {
  CHECK(eval_expr(*ex::var("x"), State{{"x", 5}}) == 5);
  CHECK(eval_expr(*ex::add(ex::var("x"), ex::var("y")), State{{"x", 2}, {"y", 3}}) == 5);
  CHECK_THROWS_AS(eval_expr(*ex::var("q"), State{{"x", 2}}), EvalError);
  try {
    eval_expr(*ex::var("q"), State{});
  } catch (const EvalError& e) {
    CHECK(e.variable() == "q");
  }
}

TEST_CASE("values do not overflow") {
  Value big = Value(1) << 80;
  State s{{"x", big}};
  CHECK(eval_expr(*ex::add(ex::var("x"), ex::var("x")), s) == (Value(1) << 81));
}

TEST_CASE("update is persistent") {
  State s{{"x", 1}};
  State t = s.update("x", 7);
  CHECK(*t.lookup("x") == 7);
  CHECK(*s.lookup("x") == 1);
  State u = s.update("y", 2);
  CHECK(*u.lookup("x") == 1);
  CHECK(*u.lookup("y") == 2);
  CHECK_FALSE(s.contains("y"));

  SigMap empty;
  SigMap one = empty.update("z", h(1));
  CHECK(one.contains("z"));
  CHECK(empty.empty());
  CHECK(one.remove("z").empty());
  CHECK(one.size() == 1);
}

TEST_CASE("state rendering is sorted") {
  CHECK(State{{"y", 2}, {"x", -1}}.to_string() == "x=-1,y=2");
  CHECK(State{}.to_string().empty());
}

TEST_CASE("sep_join") {
  SigMap z{{"z", h(1)}};
  CHECK(*sep_join({}, z) == z);
  auto both = sep_join(SigMap{{"z1", h(1)}}, SigMap{{"z2", h(2)}});
  REQUIRE(both);
  CHECK(*both == SigMap{{"z1", h(1)}, {"z2", h(2)}});
  CHECK_FALSE(sep_join(SigMap{{"z", h(1)}}, SigMap{{"z", h(2)}}));
  CHECK_FALSE(sep_join(SigMap{{"z", h(1)}}, SigMap{{"z", h(1)}}));
}

TEST_CASE("splits") {
  auto e = splits({});
  REQUIRE(e.size() == 1);
  CHECK(e[0].first.empty());
  CHECK(e[0].second.empty());

  SigMap z{{"z", h(1)}};
  auto one = splits(z);
  REQUIRE(one.size() == 2);
  CHECK(one[0].first.empty());
  CHECK(one[0].second == z);
  CHECK(one[1].first == z);
  CHECK(one[1].second.empty());

  CHECK(splits(SigMap{{"z1", h(1)}, {"z2", h(2)}}).size() == 4);
}

TEST_CASE("sep_join laws on random maps") {
  std::mt19937 rng(3);
  const char* names[] = {"a", "b", "c", "d"};
  auto random_map = [&] {
    SigMap m;
    for (const char* n : names)
      if (rng() % 3 == 0) m = m.update(n, h(static_cast<int>(rng() % 2)));
    return m;
  };
  for (int i = 0; i < 500; ++i) {
    SigMap a = random_map(), b = random_map(), c = random_map();
    CHECK(*sep_join(a, {}) == a);
    CHECK(*sep_join({}, a) == a);
    auto ab = sep_join(a, b), ba = sep_join(b, a);
    CHECK(ab.has_value() == ba.has_value());
    if (ab) CHECK(*ab == *ba);
    std::optional<SigMap> left, right;
    if (ab) left = sep_join(*ab, c);
    if (auto bc = sep_join(b, c)) right = sep_join(a, *bc);
    CHECK(left.has_value() == right.has_value());
    if (left) CHECK(*left == *right);

    auto parts = splits(a);
    CHECK(parts.size() == (std::size_t{1} << a.size()));
    std::set<std::pair<SigMap, SigMap>> distinct(parts.begin(), parts.end());
    CHECK(distinct.size() == parts.size());
    for (const auto& [o1, o2] : parts) {
      auto j = sep_join(o1, o2);
      REQUIRE(j);
      CHECK(*j == a);
    }
  }
}

TEST_CASE("bit vector laws") {
  const char* names[] = {"z", "w", "v"};
  BitVector b = BitVector::zero().plus("w");
  for (const char* z : names) {
    CHECK_FALSE(BitVector::zero()(z));
    CHECK_FALSE(b.plus(z).minus(z)(z));
    CHECK(b.plus(z)(z));
    for (const char* other : names) {
      if (std::string(other) == z) continue;
      CHECK(b.plus(z)(other) == b(other));
      CHECK(b.minus(z)(other) == b(other));
    }
  }
  CHECK(b.plus("z").to_string() == "[w,z]");
  CHECK(BitVector::zero().to_string() == "[]");
}

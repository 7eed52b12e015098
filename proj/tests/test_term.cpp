#include "reactor/term.hpp"

#include "doctest.h"
#include "support/term_gen.hpp"

using namespace reactor;
using reactor::testing::TermGen;

namespace {
Term v(const char* n) { return Term::var(n); }
Term a(const char* n) { return Term::atom(n); }
}  // namespace

TEST_CASE("unify computes textbook MGUs") {
  // f(X,b) ~ f(a,Y)
  Term t1 = Term::compound("f", {v("X"), a("b")});
  Term t2 = Term::compound("f", {a("a"), v("Y")});
  auto mgu = unify(t1, t2);
  REQUIRE(mgu);
  CHECK(mgu->apply(v("X")) == a("a"));
  CHECK(mgu->apply(v("Y")) == a("b"));
  CHECK(mgu->apply(t1) == mgu->apply(t2));
}

TEST_CASE("unify X with X is the empty substitution") {
  auto mgu = unify(v("X"), v("X"));
  REQUIRE(mgu);
  CHECK(mgu->empty());
}

TEST_CASE("occurs-check rejects X ~ f(X)") {
  CHECK_FALSE(unify(v("X"), Term::compound("f", {v("X")})));
  // and can be disabled
  CHECK(unify(v("X"), Term::compound("f", {v("X")}), BindingSet{}, false));
}

TEST_CASE("apply substitutes transitively and preserves unbound variables") {
  BindingSet b;
  b = b.bind(VarId{"X", 0}, a("a"));
  Term g = Term::compound("g", {v("X"), v("Y")});
  CHECK(b.apply(g) == Term::compound("g", {a("a"), v("Y")}));

  BindingSet empty;
  CHECK(empty.apply(g) == g);

  BindingSet chain;
  chain = chain.bind(VarId{"X", 0}, Term::compound("f", {v("Y")}));
  chain = chain.bind(VarId{"Y", 0}, a("b"));
  CHECK(chain.apply(v("X")) == Term::compound("f", {a("b")}));
}

TEST_CASE("apply is idempotent") {
  TermGen gen(7);
  for (int i = 0; i < 200; ++i) {
    Term t1 = gen.open_term();
    Term t2 = gen.open_term();
    auto mgu = unify(t1, t2);
    if (!mgu) continue;
    Term once = mgu->apply(t1);
    CHECK(mgu->apply(once) == once);
  }
}

TEST_CASE("unify succeeds symmetrically and MGU equates both sides") {
  TermGen gen(42);
  int successes = 0;
  for (int i = 0; i < 500; ++i) {
    Term t1 = gen.open_term();
    Term t2 = gen.open_term();
    auto ab = unify(t1, t2);
    auto ba = unify(t2, t1);
    CHECK(ab.has_value() == ba.has_value());
    if (ab) {
      ++successes;
      CHECK(ab->apply(t1) == ab->apply(t2));
    }
  }
  CHECK(successes > 20);  // the generator must actually exercise success paths
}

TEST_CASE("list unification handles tails") {
  // [a,b|T] ~ [a,b,c]
  Term open = Term::list({a("a"), a("b")}, v("T"));
  Term closed = Term::list({a("a"), a("b"), a("c")});
  auto mgu = unify(open, closed);
  REQUIRE(mgu);
  CHECK(mgu->apply(v("T")) == Term::list({a("c")}));
  CHECK(mgu->apply(open) == closed);

  // [H|T] ~ [] fails, [] ~ [] succeeds
  CHECK_FALSE(unify(Term::list({v("H")}, v("T")), Term::nil()));
  CHECK(unify(Term::nil(), Term::nil()));
}

TEST_CASE("interval order is pointwise") {
  CHECK(interval_leq({1000, 1000}, {10000, 10000}));  // [1,1] <= [10,10], seconds
  TimeInterval t{5, 5};
  CHECK(interval_leq(t, t));               // reflexive
  CHECK_FALSE(interval_leq({1, 5}, {3, 4}));  // 5 </= 4 pointwise
  CHECK(interval_leq({1, 5}, {3, 5}));
}

TEST_CASE("interval order is reflexive and transitive on random intervals") {
  TermGen gen(3);
  auto rnd = [&] {
    std::int64_t s = gen.pick(50);
    std::int64_t e = s + gen.pick(50);
    return TimeInterval{s, e};
  };
  for (int i = 0; i < 300; ++i) {
    TimeInterval x = rnd(), y = rnd(), z = rnd();
    CHECK(interval_leq(x, x));
    if (interval_leq(x, y) && interval_leq(y, z)) CHECK(interval_leq(x, z));
  }
}

TEST_CASE("datetime round trip at second granularity") {
  CivilTime c{2005, 1, 1, 0, 0, 1};
  std::int64_t ms = civil_to_epoch_millis(c);
  CivilTime back = epoch_millis_to_civil(ms);
  CHECK(back.year == 2005);
  CHECK(back.month == 1);
  CHECK(back.day == 1);
  CHECK(back.second == 1);

  TermGen gen(11);
  for (int i = 0; i < 500; ++i) {
    CivilTime rt{1900 + gen.pick(300), 1 + gen.pick(12), 1 + gen.pick(28),
                 gen.pick(24),         gen.pick(60),     gen.pick(60)};
    std::int64_t e = civil_to_epoch_millis(rt);
    CivilTime rb = epoch_millis_to_civil(e);
    CHECK(rb.year == rt.year);
    CHECK(rb.month == rt.month);
    CHECK(rb.day == rt.day);
    CHECK(rb.hour == rt.hour);
    CHECK(rb.minute == rt.minute);
    CHECK(rb.second == rt.second);
    CHECK(civil_to_epoch_millis(rb) == e);
  }
}

TEST_CASE("datetime terms convert to time points and unify with them") {
  Term dt = Term::compound(
      "datetime", {Term::integer(2005), Term::integer(1), Term::integer(1), Term::integer(0),
                   Term::integer(0), Term::integer(1)});
  auto ms = datetime_term_to_epoch(dt);
  REQUIRE(ms);
  Term tp = Term::time_point(*ms);
  Term pattern = Term::compound(
      "datetime", {v("Y"), Term::integer(1), Term::integer(1), Term::integer(0), Term::integer(0),
                   Term::integer(1)});
  auto mgu = unify(tp, pattern);
  REQUIRE(mgu);
  CHECK(mgu->apply(v("Y")) == Term::integer(2005));
}

TEST_CASE("ground detection walks all depths") {
  CHECK(Term::compound("f", {a("a"), Term::list({Term::integer(1)})}).is_ground());
  CHECK_FALSE(Term::compound("f", {a("a"), Term::list({v("X")})}).is_ground());
  CHECK_FALSE(Term::list({a("a")}, v("T")).is_ground());
}

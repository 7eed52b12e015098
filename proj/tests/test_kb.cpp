#include "reactor/kb.hpp"

#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "reactor/engine.hpp"

using namespace reactor;

TEST_CASE("add then query via the engine") {
  Engine e;
  e.kb().add_module_text(Term::atom("id1"), "r(1):-f(1). f(1).");
  CHECK(e.prove("r(1)"));
}

TEST_CASE("placeholder substitution formats argument terms into the text") {
  KnowledgeBase kb;
  Term t0 = parse_term("datetime(2006,5,1,0,0,0)");
  kb.add_module_text(parse_term("key(s1)"), "happens(loading(_0),_1).", {Term::atom("s1"), t0});
  const SourceModule* mod = kb.find_module(parse_term("key(s1)"));
  REQUIRE(mod);
  REQUIRE(mod->clauses.size() == 1);
  CHECK(format_term(mod->clauses[0].head) == "happens(loading(s1),datetime(2006,5,1,0,0,0))");
}

TEST_CASE("placeholders choose the longest digit run") {
  KnowledgeBase kb;
  std::vector<Term> args;
  for (int i = 0; i < 11; ++i) args.push_back(Term::integer(i * 10));
  kb.add_module_text(Term::atom("m"), "f(_1, _10).", args);
  CHECK(format_term(kb.find_module(Term::atom("m"))->clauses[0].head) == "f(10,100)");
}

TEST_CASE("add then remove restores the initial KB exactly") {
  KnowledgeBase kb;
  kb.add_module_text(Term::atom("base"), "f(0).");
  std::string before = kb.fingerprint();
  kb.add_module_text(Term::atom("id1"), "r(1):-f(1). f(1).");
  kb.remove_module(Term::atom("id1"));
  CHECK(kb.fingerprint() == before);
}

TEST_CASE("remove of an unknown oid raises UnknownOid") {
  KnowledgeBase kb;
  try {
    kb.remove_module(Term::atom("ghost"));
    FAIL("expected KbError");
  } catch (const KbError& e) {
    CHECK(e.kind == KbError::Kind::UnknownOid);
  }
}

TEST_CASE("duplicate oids are rejected unless replacing") {
  KnowledgeBase kb;
  kb.add_module_text(Term::atom("m"), "f(1).");
  CHECK_THROWS_AS(kb.add_module_text(Term::atom("m"), "f(2)."), KbError);
  kb.add_module_text(Term::atom("m"), "f(2).", {}, /*replace=*/true);
  CHECK(kb.find_module(Term::atom("m"))->clauses.size() == 1);
}

TEST_CASE("transactions commit or roll back atomically") {
  Engine e;
  SolveContext ctx = e.make_context();
  GoalProver prover = [&](const Term& g) { return provable(g, ctx); };

  SUBCASE("commit with a satisfied must_hold constraint") {
    std::vector<UpdateRequest> ups(1);
    ups[0].kind = UpdateRequest::Kind::Add;
    ups[0].oid = Term::atom("a");
    ups[0].text = "f(1).";
    std::vector<IntegrityConstraint> ics(1);
    ics[0].mode = IntegrityConstraint::Mode::MustHold;
    ics[0].goal = parse_term("f(1)");
    auto outcome = e.kb().run_transaction(ups, ics, prover);
    CHECK(outcome.committed);
    CHECK(e.prove("f(1)"));
  }

  SUBCASE("must_fail violation rolls everything back") {
    std::string before = e.kb().fingerprint();
    std::vector<UpdateRequest> ups(2);
    ups[0].kind = UpdateRequest::Kind::Add;
    ups[0].oid = Term::atom("a");
    ups[0].text = "f(1).";
    ups[1].kind = UpdateRequest::Kind::Add;
    ups[1].oid = Term::atom("b");
    ups[1].text = "g(2).";
    std::vector<IntegrityConstraint> ics(1);
    ics[0].mode = IntegrityConstraint::Mode::MustFail;
    ics[0].goal = parse_term("g(2)");
    auto outcome = e.kb().run_transaction(ups, ics, prover);
    CHECK_FALSE(outcome.committed);
    CHECK(e.kb().fingerprint() == before);
  }

  SUBCASE("a failing update rolls back with no partial effects") {
    std::string before = e.kb().fingerprint();
    std::vector<UpdateRequest> ups(2);
    ups[0].kind = UpdateRequest::Kind::Add;
    ups[0].oid = Term::atom("a");
    ups[0].text = "f(1).";
    ups[1].kind = UpdateRequest::Kind::Remove;
    ups[1].oid = Term::atom("unknown");
    auto outcome = e.kb().run_transaction(ups, {}, prover);
    CHECK_FALSE(outcome.committed);
    CHECK(outcome.reason.find("unknown") != std::string::npos);
    CHECK(e.kb().fingerprint() == before);
  }
}

TEST_CASE("reserved integrity facts are picked up from the KB") {
  Engine e;
  e.kb().add_module_text(Term::atom("ics"), "integrity(must_fail, g(2)).");
  SolveContext ctx = e.make_context();
  GoalProver prover = [&](const Term& g) { return provable(g, ctx); };
  std::vector<UpdateRequest> ups(1);
  ups[0].kind = UpdateRequest::Kind::Add;
  ups[0].oid = Term::atom("bad");
  ups[0].text = "g(2).";
  auto outcome = e.kb().run_transaction(ups, {}, prover);
  CHECK_FALSE(outcome.committed);
  CHECK_FALSE(e.kb().has_module(Term::atom("bad")));
}

TEST_CASE("checkpoint and rollback_to invert in LIFO order") {
  KnowledgeBase kb;
  std::string s0 = kb.fingerprint();
  KbMarker m0 = kb.checkpoint();
  kb.add_module_text(Term::atom("x"), "f(1).");
  KbMarker m1 = kb.checkpoint();
  kb.add_module_text(Term::atom("y"), "g(1).");
  kb.rollback_to(m1);
  CHECK(kb.has_module(Term::atom("x")));
  CHECK_FALSE(kb.has_module(Term::atom("y")));
  kb.rollback_to(m0);
  CHECK(kb.fingerprint() == s0);
}

TEST_CASE("rollback past a seal raises StaleMarker") {
  KnowledgeBase kb;
  KbMarker m0 = kb.checkpoint();
  kb.add_module_text(Term::atom("x"), "f(1).");
  kb.seal();
  try {
    kb.rollback_to(m0);
    FAIL("expected StaleMarker");
  } catch (const KbError& e) {
    CHECK(e.kind == KbError::Kind::StaleMarker);
  }
  // markers from another KB are stale too
  KnowledgeBase other;
  CHECK_THROWS_AS(other.rollback_to(kb.checkpoint()), KbError);
}

TEST_CASE("replaying the transition log reproduces the module map") {
  KnowledgeBase kb;
  kb.add_module_text(Term::atom("a"), "f(1). f(2).");
  kb.add_module_text(Term::atom("b"), "g(X) :- f(X).");
  kb.remove_module(Term::atom("a"));
  kb.add_module_text(Term::atom("a"), "f(3).");

  KnowledgeBase replayed;
  replayed.replay(kb.log());
  CHECK(replayed.fingerprint() == kb.fingerprint());
}

TEST_CASE("inversion totality: random update sequences invert to the start") {
  std::mt19937 rng(99);
  for (int round = 0; round < 50; ++round) {
    KnowledgeBase kb;
    kb.add_module_text(Term::atom("seed"), "s(0).");
    std::string before = kb.fingerprint();
    KbMarker mark = kb.checkpoint();
    int ops = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < ops; ++i) {
      Term oid = Term::atom("m" + std::to_string(rng() % 4));
      switch (rng() % 3) {
        case 0:
          if (!kb.has_module(oid)) kb.add_module_text(oid, "f(" + std::to_string(i) + ").");
          break;
        case 1:
          if (kb.has_module(oid)) kb.remove_module(oid);
          break;
        default: kb.update_module(oid, "u(" + std::to_string(i) + ")."); break;
      }
    }
    kb.rollback_to(mark);
    CHECK(kb.fingerprint() == before);
  }
}

TEST_CASE("module order is insertion order, re-adding appends at the end") {
  KnowledgeBase kb;
  kb.add_module_text(Term::atom("a"), "f(1).");
  kb.add_module_text(Term::atom("b"), "f(2).");
  kb.add_module_text(Term::atom("c"), "f(3).");
  kb.remove_module(Term::atom("a"));
  kb.add_module_text(Term::atom("a"), "f(9).");
  auto oids = kb.module_oids();
  REQUIRE(oids.size() == 3);
  CHECK(format_term(oids[0]) == "b");
  CHECK(format_term(oids[1]) == "c");
  CHECK(format_term(oids[2]) == "a");
}

TEST_CASE("file import uses the locator as oid; missing files raise NotFound") {
  std::string path = "./kb_import_test_tmp.rr";
  {
    std::ofstream out(path);
    out << "imported(1).\n";
  }
  KnowledgeBase kb;
  kb.import_module(path);
  CHECK(kb.has_module(Term::atom(path)));
  std::remove(path.c_str());

  try {
    kb.import_module("./no/such/file.rr");
    FAIL("expected NotFound");
  } catch (const KbError& e) {
    CHECK(e.kind == KbError::Kind::NotFound);
  }
}

TEST_CASE("nested update facts execute at load time") {
  KnowledgeBase kb;
  kb.add_module_text(Term::atom("outer"), "top(1). add(inner, \"deep(2).\"). top(2).");
  CHECK(kb.has_module(Term::atom("inner")));
  // the directive itself is not stored
  CHECK(kb.find_module(Term::atom("outer"))->clauses.size() == 2);
}

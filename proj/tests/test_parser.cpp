#include "reactor/parser.hpp"

#include "doctest.h"
#include "support/term_gen.hpp"

using namespace reactor;

TEST_CASE("a single fact parses") {
  SourceModule m = parse_program("f(1).", Term::atom("m"));
  REQUIRE(m.clauses.size() == 1);
  CHECK(m.clauses[0].is_fact());
  CHECK(format_term(m.clauses[0].head) == "f(1)");
}

TEST_CASE("the every10Sec rule parses with a 0-ary constant head") {
  SourceModule m =
      parse_program("every10Sec() :- sysTime(T), interval(timespan(0,0,0,10),T).", Term::atom("m"));
  REQUIRE(m.clauses.size() == 1);
  const Clause& c = m.clauses[0];
  CHECK(c.head.kind() == TermKind::Constant);
  CHECK(c.head.symbol() == "every10Sec");
  CHECK(c.body.size() == 2);
}

TEST_CASE("the detection rule with an embedded clause string parses") {
  SourceModule m = parse_program(
      "detect(e,T):- event(sequence(a,b),T), add(eis(e), \"occurs(e,_0).\", [T]), "
      "consume(eis(a)), consume(eis(b)).",
      Term::atom("m"));
  REQUIRE(m.clauses.size() == 1);
  const Clause& c = m.clauses[0];
  REQUIRE(c.body.size() == 4);
  const Term& add_goal = c.body[1].goal;
  REQUIRE(add_goal.functor() == "add");
  REQUIRE(add_goal.arity() == 3);
  CHECK(add_goal.args()[1].is_string());
  CHECK(add_goal.args()[1].symbol() == "occurs(e,_0).");  // placeholders stay verbatim
}

TEST_CASE("queries parse to goal lists") {
  auto q1 = parse_query("holdsInterval([a,b],I)?");
  CHECK(q1.size() == 1);

  auto q2 = parse_query("f(X), g(X)?");
  REQUIRE(q2.size() == 2);
  CHECK(q2[0].goal.args()[0].var_id().name == "X");
  CHECK(q2[1].goal.args()[0].var_id().name == "X");

  CHECK_THROWS_AS(parse_query("?"), ParseError);
}

TEST_CASE("format examples") {
  CHECK(format_term(Term::compound(
            "f", {Term::atom("a"), Term::list({Term::integer(1), Term::integer(2)})})) ==
        "f(a,[1,2])");
  Term dt = parse_term("datetime(2005,1,1,0,0,1)");
  CHECK(dt.kind() == TermKind::TimePoint);
  CHECK(format_term(dt) == "datetime(2005,1,1,0,0,1)");
  CHECK(format_term(Term::var("X")) == "X");
}

TEST_CASE("round trip: parse(format(t)) is structurally identical") {
  reactor::testing::TermGen gen(1234);
  for (int i = 0; i < 600; ++i) {
    Term t = gen.ground();
    std::string text = format_term(t);
    CAPTURE(text);
    Term back = parse_term(text);
    CHECK(back == t);
  }
}

TEST_CASE("clause order and count match the text") {
  SourceModule m = parse_program("a. b. c(1).\n% comment line\nd :- a, b.", Term::atom("m"));
  REQUIRE(m.clauses.size() == 4);
  CHECK(format_term(m.clauses[0].head) == "a");
  CHECK(format_term(m.clauses[1].head) == "b");
  CHECK(format_term(m.clauses[2].head) == "c(1)");
  CHECK(format_term(m.clauses[3].head) == "d");
}

TEST_CASE("infix comparisons and arithmetic parse") {
  SourceModule m = parse_program(
      "detect(controller_failure(IP,Role,Timeout)) :- sysTime(LocalTimeNow), "
      "heartbeats(IP,Role,RemoteTime,LocalTime), LocalTimeNow-LocalTime > Timeout.",
      Term::atom("m"));
  const Clause& c = m.clauses[0];
  REQUIRE(c.body.size() == 3);
  const Term& cmp = c.body[2].goal;
  CHECK(cmp.functor() == ">");
  CHECK(cmp.args()[0].functor() == "-");
}

TEST_CASE("quoted atoms, dotted names, strings with escapes") {
  SourceModule m = parse_program(
      "every('1S').\n"
      "load(S) :- rbsla.utils.WebService.load(S).\n"
      "msg(\"a \\\"quoted\\\" text\").",
      Term::atom("m"));
  CHECK(m.clauses[0].head.args()[0].symbol() == "1S");
  CHECK(m.clauses[1].body[0].goal.functor() == "rbsla.utils.WebService.load");
  CHECK(m.clauses[2].head.args()[0].symbol() == "a \"quoted\" text");
}

TEST_CASE("not and neg literals, direct nesting rejected") {
  SourceModule m = parse_program("p :- not(q), neg(r).", Term::atom("m"));
  CHECK(m.clauses[0].body[0].polarity == BodyLiteral::Polarity::Naf);
  CHECK(m.clauses[0].body[1].polarity == BodyLiteral::Polarity::Neg);
  CHECK_THROWS_AS(parse_program("p :- not(neg(q)).", Term::atom("m")), ParseError);
  CHECK_THROWS_AS(parse_program("p :- neg(not(q)).", Term::atom("m")), ParseError);
}

TEST_CASE("cut and else-style eca facts parse as terms") {
  SourceModule m = parse_program(
      "eca( every10Sec(), detect(request(Customer, Service),T), find(Server), "
      "load(Server, Service), !, notify(Customer, \"Service request temporarily rejected\")).",
      Term::atom("m"));
  const Term& head = m.clauses[0].head;
  REQUIRE(head.arity() == 6);
  CHECK(head.args()[0].symbol() == "every10Sec");
  CHECK(head.args()[4].symbol() == "!");
}

TEST_CASE("anonymous variables are each fresh") {
  SourceModule m = parse_program("f(_,_).", Term::atom("m"));
  const Term& head = m.clauses[0].head;
  CHECK(head.args()[0].var_id().name != head.args()[1].var_id().name);
}

TEST_CASE("syntax errors carry position and stop the whole parse") {
  try {
    parse_program("f(1delta.", Term::atom("m"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.col > 1);
  }
}

TEST_CASE("list tails parse") {
  Term t = parse_term("[H|T]");
  REQUIRE(t.kind() == TermKind::List);
  CHECK(t.items().size() == 1);
  REQUIRE(t.tail());
  CHECK(t.tail()->var_id().name == "T");
  CHECK(format_term(parse_term("[a,b|T]")) == "[a,b|T]");
}

TEST_CASE("millis round trip for sub-second time points") {
  Term tp = Term::time_point(1500);
  std::string text = format_term(tp);
  CHECK(text == "millis(1500)");
  CHECK(parse_term(text) == tp);
}

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reactor/term.hpp"

namespace reactor {

/// One resolution step's worth of body: a goal with its polarity, or a cut.
/// `not(G)` parses to Naf, `neg(G)` to Neg; direct nesting of the two is
/// rejected by the parser. For Naf/Neg the stored goal is the inner literal.
struct BodyLiteral {
  enum class Kind { Goal, Cut };
  enum class Polarity { Positive, Naf, Neg };

  Kind kind = Kind::Goal;
  Polarity polarity = Polarity::Positive;
  Term goal;

  static BodyLiteral cut() {
    BodyLiteral b;
    b.kind = Kind::Cut;
    return b;
  }
  static BodyLiteral positive(Term g) {
    BodyLiteral b;
    b.goal = std::move(g);
    return b;
  }
  static BodyLiteral naf(Term g) {
    BodyLiteral b;
    b.polarity = Polarity::Naf;
    b.goal = std::move(g);
    return b;
  }
  static BodyLiteral negated(Term g) {
    BodyLiteral b;
    b.polarity = Polarity::Neg;
    b.goal = std::move(g);
    return b;
  }
};

/// head :- body. Facts have an empty body. The head is a Constant or
/// Compound, never a variable; explicitly negated heads are neg/1 compounds.
struct Clause {
  Term head;
  std::vector<BodyLiteral> body;

  bool is_fact() const { return body.empty(); }
};

/// An oid-keyed ordered clause set — the unit of KB updates. Clause order is
/// exactly the textual order.
struct SourceModule {
  Term oid;
  std::vector<Clause> clauses;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& expected)
      : std::runtime_error("syntax error at " + std::to_string(line) + ":" +
                           std::to_string(col) + ": expected " + expected),
        line(line),
        col(col),
        expected(expected) {}
  int line;
  int col;
  std::string expected;
};

/// Parse a whole `.rr` program. All-or-nothing: the first syntax error throws
/// and nothing is returned.
SourceModule parse_program(std::string_view text, const Term& default_oid);

/// Parse a query: goals separated by commas, terminated by `?` or `.`.
std::vector<BodyLiteral> parse_query(std::string_view text);

/// Parse a single term (no trailing terminator).
Term parse_term(std::string_view text);

/// Canonical text form; re-parses to a structurally identical term.
std::string format_term(const Term& t);
std::string format_clause(const Clause& c);
std::string format_literal(const BodyLiteral& l);
std::string format_module(const SourceModule& m);

}  // namespace reactor

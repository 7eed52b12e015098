#include "reactor/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace reactor {

namespace {

enum class TokKind { Atom, Var, Int, Float, Str, QuotedAtom, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  std::int64_t ival = 0;
  double fval = 0.0;
  int line = 1;
  int col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    throw ParseError(tok_.line, tok_.col, expected);
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  char cur() const { return src_[pos_]; }
  bool more() const { return pos_ < src_.size(); }
  char at(std::size_t i) const { return i < src_.size() ? src_[i] : '\0'; }

  void bump() {
    ++pos_;
    ++col_;
  }

  void advance() {
    skip_ws();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (!more()) {
      tok_.kind = TokKind::End;
      return;
    }
    char c = cur();

    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    if (c == '"') {
      lex_string();
      return;
    }
    if (c == '\'') {
      lex_quoted_atom();
      return;
    }
    if (ident_start(c)) {
      lex_name();
      return;
    }

    // multi-char punctuation first
    auto two = [&](const char* p) {
      return c == p[0] && at(pos_ + 1) == p[1];
    };
    if (two(":-") || two("<=") || two(">=")) {
      tok_.kind = TokKind::Punct;
      tok_.text = std::string(src_.substr(pos_, 2));
      bump();
      bump();
      return;
    }
    static const std::string singles = "()[]|,.!?<>=+-";
    if (singles.find(c) != std::string::npos) {
      tok_.kind = TokKind::Punct;
      tok_.text = std::string(1, c);
      bump();
      return;
    }
    throw ParseError(line_, col_, "a token");
  }

  void lex_number() {
    std::size_t start = pos_;
    while (more() && std::isdigit(static_cast<unsigned char>(cur()))) bump();
    bool is_float = false;
    if (more() && cur() == '.' && std::isdigit(static_cast<unsigned char>(at(pos_ + 1)))) {
      is_float = true;
      bump();
      while (more() && std::isdigit(static_cast<unsigned char>(cur()))) bump();
    }
    std::string_view text = src_.substr(start, pos_ - start);
    if (is_float) {
      tok_.kind = TokKind::Float;
      tok_.fval = std::stod(std::string(text));
    } else {
      tok_.kind = TokKind::Int;
      std::from_chars(text.data(), text.data() + text.size(), tok_.ival);
    }
  }

  void lex_string() {
    bump();  // opening quote
    std::string out;
    while (true) {
      if (!more()) throw ParseError(line_, col_, "closing '\"'");
      char c = cur();
      if (c == '"') {
        bump();
        break;
      }
      if (c == '\\') {
        bump();
        if (!more()) throw ParseError(line_, col_, "escape character");
        char e = cur();
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '\\': out.push_back('\\'); break;
          case '"': out.push_back('"'); break;
          default: out.push_back(e); break;
        }
        bump();
        continue;
      }
      if (c == '\n') {
        ++line_;
        col_ = 0;
      }
      out.push_back(c);
      bump();
    }
    tok_.kind = TokKind::Str;
    tok_.text = std::move(out);
  }

  void lex_quoted_atom() {
    bump();
    std::string out;
    while (true) {
      if (!more()) throw ParseError(line_, col_, "closing \"'\"");
      char c = cur();
      if (c == '\'') {
        bump();
        break;
      }
      if (c == '\\') {
        bump();
        if (!more()) throw ParseError(line_, col_, "escape character");
        out.push_back(cur());
        bump();
        continue;
      }
      out.push_back(c);
      bump();
    }
    tok_.kind = TokKind::QuotedAtom;
    tok_.text = std::move(out);
  }

  // Atoms, variables, and dotted qualified names. A '.' continues the name
  // only when glued to a following identifier (java.sql.SQLException); any
  // other '.' stays a clause terminator.
  void lex_name() {
    std::size_t start = pos_;
    bool upper = std::isupper(static_cast<unsigned char>(cur())) || cur() == '_';
    while (more() && ident_char(cur())) bump();
    if (!upper) {
      while (more() && cur() == '.' && ident_start(at(pos_ + 1))) {
        bump();
        while (more() && ident_char(cur())) bump();
      }
    }
    std::string text(src_.substr(start, pos_ - start));
    tok_.kind = upper ? TokKind::Var : TokKind::Atom;
    tok_.text = std::move(text);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lx_(src) {}

  SourceModule parse_program(const Term& oid) {
    SourceModule mod;
    mod.oid = oid;
    while (lx_.peek().kind != TokKind::End) {
      mod.clauses.push_back(parse_clause());
    }
    return mod;
  }

  std::vector<BodyLiteral> parse_query() {
    if (lx_.peek().kind == TokKind::Punct && (lx_.peek().text == "?" || lx_.peek().text == "."))
      lx_.fail("a goal");
    std::vector<BodyLiteral> goals = parse_body();
    expect_punct_any({"?", "."});
    if (lx_.peek().kind != TokKind::End) lx_.fail("end of query");
    return goals;
  }

  Term parse_single_term() {
    Term t = parse_term();
    if (lx_.peek().kind != TokKind::End) lx_.fail("end of input");
    return t;
  }

 private:
  Clause parse_clause() {
    Clause c;
    c.head = parse_term();
    if (c.head.kind() != TermKind::Constant && c.head.kind() != TermKind::Compound)
      lx_.fail("a clause head (constant or compound)");
    if (peek_punct(":-")) {
      lx_.take();
      c.body = parse_body();
    }
    expect_punct(".");
    return c;
  }

  std::vector<BodyLiteral> parse_body() {
    std::vector<BodyLiteral> body;
    body.push_back(parse_literal());
    while (peek_punct(",")) {
      lx_.take();
      body.push_back(parse_literal());
    }
    return body;
  }

  BodyLiteral parse_literal() {
    if (peek_punct("!")) {
      lx_.take();
      return BodyLiteral::cut();
    }
    Term t = parse_term();
    if (t.kind() == TermKind::Compound && t.arity() == 1) {
      const auto inner_functor = [&](const Term& inner) {
        return inner.kind() == TermKind::Compound ? inner.functor()
               : inner.kind() == TermKind::Constant ? inner.symbol()
                                                    : std::string{};
      };
      if (t.functor() == "not") {
        if (inner_functor(t.args()[0]) == "neg") lx_.fail("no neg(..) directly inside not(..)");
        return BodyLiteral::naf(t.args()[0]);
      }
      if (t.functor() == "neg") {
        if (inner_functor(t.args()[0]) == "not") lx_.fail("no not(..) directly inside neg(..)");
        return BodyLiteral::negated(t.args()[0]);
      }
    }
    return BodyLiteral::positive(t);
  }

  // term := additive ((< > <= >= = is) additive)?
  Term parse_term() {
    Term lhs = parse_additive();
    if (lx_.peek().kind == TokKind::Punct) {
      const std::string& p = lx_.peek().text;
      if (p == "<" || p == ">" || p == "<=" || p == ">=" || p == "=") {
        std::string op = lx_.take().text;
        Term rhs = parse_additive();
        return Term::compound(op, {lhs, rhs});
      }
    }
    if (lx_.peek().kind == TokKind::Atom && lx_.peek().text == "is") {
      lx_.take();
      Term rhs = parse_additive();
      return Term::compound("is", {lhs, rhs});
    }
    return lhs;
  }

  Term parse_additive() {
    Term lhs = parse_primary();
    while (lx_.peek().kind == TokKind::Punct &&
           (lx_.peek().text == "+" || lx_.peek().text == "-")) {
      std::string op = lx_.take().text;
      Term rhs = parse_primary();
      lhs = Term::compound(op, {lhs, rhs});
    }
    return lhs;
  }

  Term parse_primary() {
    const Token& t = lx_.peek();
    switch (t.kind) {
      case TokKind::Int: {
        Token tok = lx_.take();
        return Term::integer(tok.ival);
      }
      case TokKind::Float: {
        Token tok = lx_.take();
        return Term::real(tok.fval);
      }
      case TokKind::Str: {
        Token tok = lx_.take();
        return Term::string(tok.text);
      }
      case TokKind::QuotedAtom: {
        Token tok = lx_.take();
        return Term::atom(tok.text);
      }
      case TokKind::Var: {
        Token tok = lx_.take();
        if (tok.text == "_") return fresh_anon();
        return Term::var(tok.text);
      }
      case TokKind::Atom: return parse_atom_or_compound();
      case TokKind::Punct: {
        if (t.text == "[") return parse_list();
        if (t.text == "(") {
          lx_.take();
          Term inner = parse_term();
          expect_punct(")");
          return inner;
        }
        if (t.text == "-") {
          lx_.take();
          const Token& n = lx_.peek();
          if (n.kind == TokKind::Int) {
            Token tok = lx_.take();
            return Term::integer(-tok.ival);
          }
          if (n.kind == TokKind::Float) {
            Token tok = lx_.take();
            return Term::real(-tok.fval);
          }
          lx_.fail("a number after unary '-'");
        }
        if (t.text == "!") {
          lx_.take();
          return Term::atom("!");
        }
        lx_.fail("a term");
      }
      default: lx_.fail("a term");
    }
  }

  Term parse_atom_or_compound() {
    Token name = lx_.take();
    if (peek_punct("(")) {
      lx_.take();
      if (peek_punct(")")) {  // f() is the constant f
        lx_.take();
        return finish_atom(name.text);
      }
      std::vector<Term> args;
      args.push_back(parse_term());
      while (peek_punct(",")) {
        lx_.take();
        args.push_back(parse_term());
      }
      expect_punct(")");
      return Term::compound(name.text, std::move(args));
    }
    return finish_atom(name.text);
  }

  // datetime(...) ground literals normalize to TimePoints at parse time;
  // millis(N) is the sub-second escape hatch.
  Term finish_atom(const std::string& name) { return Term::atom(name); }

  Term parse_list() {
    expect_punct("[");
    if (peek_punct("]")) {
      lx_.take();
      return Term::list({});
    }
    std::vector<Term> items;
    items.push_back(parse_term());
    while (peek_punct(",")) {
      lx_.take();
      items.push_back(parse_term());
    }
    if (peek_punct("|")) {
      lx_.take();
      const Token& t = lx_.peek();
      if (t.kind == TokKind::Var) {
        Token v = lx_.take();
        Term tail = v.text == "_" ? fresh_anon() : Term::var(v.text);
        expect_punct("]");
        return Term::list(std::move(items), tail);
      }
      if (t.kind == TokKind::Punct && t.text == "[") {
        Term tail_list = parse_list();
        expect_punct("]");
        std::vector<Term> all = std::move(items);
        for (const auto& x : tail_list.items()) all.push_back(x);
        if (tail_list.tail()) return Term::list(std::move(all), *tail_list.tail());
        return Term::list(std::move(all));
      }
      lx_.fail("a variable or list after '|'");
    }
    expect_punct("]");
    return Term::list(std::move(items));
  }

  Term fresh_anon() { return Term::var("_G" + std::to_string(++anon_counter_)); }

  bool peek_punct(const char* p) const {
    return lx_.peek().kind == TokKind::Punct && lx_.peek().text == p;
  }
  void expect_punct(const char* p) {
    if (!peek_punct(p)) lx_.fail(std::string("'") + p + "'");
    lx_.take();
  }
  void expect_punct_any(std::initializer_list<const char*> ps) {
    for (const char* p : ps)
      if (peek_punct(p)) {
        lx_.take();
        return;
      }
    lx_.fail("a terminator");
  }

  Lexer lx_;
  int anon_counter_ = 0;
};

// Compounds that normalize to scalar kinds at parse time.
Term normalize_parsed(const Term& t);

Term normalize_children(const Term& t) {
  switch (t.kind()) {
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const auto& a : t.args()) args.push_back(normalize_parsed(a));
      return Term::compound(t.functor(), std::move(args));
    }
    case TermKind::List: {
      std::vector<Term> items;
      items.reserve(t.items().size());
      for (const auto& a : t.items()) items.push_back(normalize_parsed(a));
      if (t.tail()) return Term::list(std::move(items), *t.tail());
      return Term::list(std::move(items));
    }
    default: return t;
  }
}

Term normalize_parsed(const Term& t) {
  Term n = normalize_children(t);
  if (n.kind() == TermKind::Compound) {
    if (auto ms = datetime_term_to_epoch(n)) return Term::time_point(*ms);
    if (n.functor() == "millis" && n.arity() == 1 && n.args()[0].kind() == TermKind::Int)
      return Term::time_point(n.args()[0].int_value());
  }
  return n;
}

BodyLiteral normalize_literal(const BodyLiteral& l) {
  if (l.kind == BodyLiteral::Kind::Cut) return l;
  BodyLiteral out = l;
  out.goal = normalize_parsed(l.goal);
  return out;
}

}  // namespace

SourceModule parse_program(std::string_view text, const Term& default_oid) {
  Parser p(text);
  SourceModule mod = p.parse_program(default_oid);
  for (auto& c : mod.clauses) {
    c.head = normalize_parsed(c.head);
    for (auto& l : c.body) l = normalize_literal(l);
  }
  return mod;
}

std::vector<BodyLiteral> parse_query(std::string_view text) {
  Parser p(text);
  auto goals = p.parse_query();
  for (auto& l : goals) l = normalize_literal(l);
  return goals;
}

Term parse_term(std::string_view text) {
  Parser p(text);
  return normalize_parsed(p.parse_single_term());
}

namespace {

bool bare_atom_safe(const std::string& s) {
  if (s.empty()) return false;
  if (s == "[]" || s == "!") return true;
  if (!std::islower(static_cast<unsigned char>(s[0]))) return false;
  bool prev_dot = false;
  for (std::size_t i = 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (prev_dot || i + 1 == s.size() || !ident_start(s[i + 1])) return false;
      prev_dot = true;
      continue;
    }
    prev_dot = false;
    if (!ident_char(c)) return false;
  }
  return true;
}

void format_rec(const Term& t, std::ostream& os, bool parenthesize_infix);

void format_infix(const Term& t, const std::string& op, std::ostream& os, bool parens) {
  if (parens) os << '(';
  format_rec(t.args()[0], os, true);
  os << op;
  format_rec(t.args()[1], os, true);
  if (parens) os << ')';
}

void format_rec(const Term& t, std::ostream& os, bool parenthesize_infix) {
  switch (t.kind()) {
    case TermKind::Variable: os << t.var_id().name; return;
    case TermKind::Constant: {
      const std::string& s = t.symbol();
      if (t.is_string()) {
        os << '"';
        for (char c : s) {
          if (c == '"' || c == '\\') os << '\\';
          if (c == '\n') {
            os << "\\n";
            continue;
          }
          os << c;
        }
        os << '"';
        return;
      }
      if (bare_atom_safe(s)) {
        os << s;
        return;
      }
      os << '\'';
      for (char c : s) {
        if (c == '\'' || c == '\\') os << '\\';
        os << c;
      }
      os << '\'';
      return;
    }
    case TermKind::Int: os << t.int_value(); return;
    case TermKind::Float: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", t.float_value());
      // trim to shortest round-trip form
      for (int prec = 1; prec < 17; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof probe, "%.*g", prec, t.float_value());
        if (std::stod(probe) == t.float_value()) {
          os << probe;
          if (std::string(probe).find_first_of(".eE") == std::string::npos) os << ".0";
          return;
        }
      }
      os << buf;
      return;
    }
    case TermKind::TimePoint: {
      std::int64_t ms = t.epoch_millis();
      if (ms % 1000 == 0) {
        format_rec(epoch_to_datetime_term(ms), os, false);
      } else {
        os << "millis(" << ms << ")";
      }
      return;
    }
    case TermKind::Compound: {
      const std::string& f = t.functor();
      if (t.arity() == 2) {
        if (f == "<" || f == ">" || f == "<=" || f == ">=" || f == "=") {
          format_infix(t, f, os, parenthesize_infix);
          return;
        }
        if (f == "+" || f == "-") {
          format_infix(t, f, os, false);
          return;
        }
        if (f == "is") {
          format_infix(t, " is ", os, parenthesize_infix);
          return;
        }
      }
      if (bare_atom_safe(f)) {
        os << f;
      } else {
        os << '\'';
        for (char c : f) {
          if (c == '\'' || c == '\\') os << '\\';
          os << c;
        }
        os << '\'';
      }
      os << '(';
      for (std::size_t i = 0; i < t.arity(); ++i) {
        if (i) os << ',';
        format_rec(t.args()[i], os, false);
      }
      os << ')';
      return;
    }
    case TermKind::List: {
      os << '[';
      for (std::size_t i = 0; i < t.items().size(); ++i) {
        if (i) os << ',';
        format_rec(t.items()[i], os, false);
      }
      if (t.tail()) {
        os << '|';
        format_rec(*t.tail(), os, false);
      }
      os << ']';
      return;
    }
  }
}

}  // namespace

std::string format_term(const Term& t) {
  std::ostringstream os;
  format_rec(t, os, false);
  return os.str();
}

std::string format_literal(const BodyLiteral& l) {
  if (l.kind == BodyLiteral::Kind::Cut) return "!";
  switch (l.polarity) {
    case BodyLiteral::Polarity::Naf: return "not(" + format_term(l.goal) + ")";
    case BodyLiteral::Polarity::Neg: return "neg(" + format_term(l.goal) + ")";
    default: return format_term(l.goal);
  }
}

std::string format_clause(const Clause& c) {
  std::string out = format_term(c.head);
  if (!c.body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i) out += ", ";
      out += format_literal(c.body[i]);
    }
  }
  out += ".";
  return out;
}

std::string format_module(const SourceModule& m) {
  std::string out;
  for (const auto& c : m.clauses) {
    out += format_clause(c);
    out += "\n";
  }
  return out;
}

}  // namespace reactor

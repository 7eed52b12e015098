#include <cmath>
#include <ostream>

#include "reactor/solver.hpp"

namespace reactor {

namespace {

[[noreturn]] void type_error(const std::string& what) {
  throw SolveError(SolveError::Kind::BuiltinTypeError, what);
}

// ---------------------------------------------------------------------------
// arithmetic
// ---------------------------------------------------------------------------

struct Num {
  bool is_float = false;
  std::int64_t i = 0;
  double f = 0.0;
  double as_double() const { return is_float ? f : static_cast<double>(i); }
};

std::optional<std::int64_t> duration_millis(const Term& t) {
  if (t.kind() == TermKind::Constant) {
    const std::string& s = t.symbol();
    if (s.size() < 2) return std::nullopt;
    char unit = s.back();
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    std::int64_t n = std::stoll(s.substr(0, s.size() - 1));
    switch (unit) {
      case 'S': return n * 1000;
      case 'M': return n * 60000;
      case 'H': return n * 3600000;
      case 'D': return n * 86400000;
      default: return std::nullopt;
    }
  }
  if (t.kind() == TermKind::Compound && t.functor() == "timespan" && t.arity() == 4) {
    std::int64_t parts[4];
    for (int i = 0; i < 4; ++i) {
      if (t.args()[i].kind() != TermKind::Int) return std::nullopt;
      parts[i] = t.args()[i].int_value();
    }
    return ((parts[0] * 24 + parts[1]) * 60 + parts[2]) * 60000 + parts[3] * 1000;
  }
  return std::nullopt;
}

Num eval_arith(const Term& t0, SolverMachine& m) {
  Term t = m.resolve(t0);
  switch (t.kind()) {
    case TermKind::Int: return Num{false, t.int_value(), 0.0};
    case TermKind::Float: return Num{true, 0, t.float_value()};
    case TermKind::TimePoint: return Num{false, t.epoch_millis(), 0.0};
    case TermKind::Constant: {
      if (auto ms = duration_millis(t)) return Num{false, *ms, 0.0};
      type_error("non-numeric constant in arithmetic: " + format_term(t));
    }
    case TermKind::Compound: {
      if (auto ms = duration_millis(t)) return Num{false, *ms, 0.0};
      if ((t.functor() == "+" || t.functor() == "-") && t.arity() == 2) {
        Num a = eval_arith(t.args()[0], m);
        Num b = eval_arith(t.args()[1], m);
        if (a.is_float || b.is_float) {
          double r = t.functor() == "+" ? a.as_double() + b.as_double()
                                        : a.as_double() - b.as_double();
          return Num{true, 0, r};
        }
        return Num{false, t.functor() == "+" ? a.i + b.i : a.i - b.i, 0.0};
      }
      type_error("unknown arithmetic function: " + format_term(t));
    }
    default: type_error("cannot evaluate arithmetically: " + format_term(t));
  }
}

BuiltinResult bi_is(const Term& goal, SolverMachine& m) {
  Num r = eval_arith(goal.args()[1], m);
  Term value = r.is_float ? Term::real(r.f) : Term::integer(r.i);
  auto b = unify(goal.args()[0], value, m.bindings(), m.config().occurs_check);
  if (!b) return BuiltinResult::fail();
  return BuiltinResult::ok(std::move(*b));
}

BuiltinResult compare_builtin(const Term& goal, SolverMachine& m,
                              bool (*cmp)(double, double)) {
  Num a = eval_arith(goal.args()[0], m);
  Num b = eval_arith(goal.args()[1], m);
  return cmp(a.as_double(), b.as_double()) ? BuiltinResult::ok(m.bindings())
                                           : BuiltinResult::fail();
}

BuiltinResult bi_unify(const Term& goal, SolverMachine& m) {
  auto b = unify(goal.args()[0], goal.args()[1], m.bindings(), m.config().occurs_check);
  if (!b) return BuiltinResult::fail();
  return BuiltinResult::ok(std::move(*b));
}

// ---------------------------------------------------------------------------
// time
// ---------------------------------------------------------------------------

BuiltinResult bi_systime(const Term& goal, SolverMachine& m) {
  if (!m.ctx().now) type_error("sysTime/1: no clock in context");
  Term now = Term::time_point(m.ctx().now());
  auto b = unify(goal.args()[0], now, m.bindings(), m.config().occurs_check);
  if (!b) return BuiltinResult::fail();
  return BuiltinResult::ok(std::move(*b));
}

// interval(timespan(D,H,M,S), T): succeeds when T is at least the span past
// this call site's previous success; per-site state, first call fires.
BuiltinResult bi_interval(const Term& goal, SolverMachine& m) {
  if (!m.ctx().interval_sites) type_error("interval/2: no site table in context");
  auto span = duration_millis(m.resolve(goal.args()[0]));
  if (!span) type_error("interval/2: bad timespan " + format_term(m.resolve(goal.args()[0])));
  Term t = m.resolve(goal.args()[1]);
  std::int64_t now;
  if (t.kind() == TermKind::TimePoint)
    now = t.epoch_millis();
  else if (t.kind() == TermKind::Int)
    now = t.int_value();
  else
    type_error("interval/2: time point expected, got " + format_term(t));
  const std::string site = m.current_site();
  auto last = m.ctx().interval_sites->last_fire(site);
  if (last && now - *last < *span) return BuiltinResult::fail();
  m.ctx().interval_sites->mark(site, now);
  return BuiltinResult::ok(m.bindings());
}

// ---------------------------------------------------------------------------
// io & misc
// ---------------------------------------------------------------------------

std::string println_text(const Term& t) {
  if (t.kind() == TermKind::List && !t.tail()) {
    std::string out;
    for (const auto& item : t.items()) {
      if (item.kind() == TermKind::Constant)
        out += item.symbol();
      else
        out += format_term(item);
    }
    return out;
  }
  if (t.kind() == TermKind::Constant) return t.symbol();
  return format_term(t);
}

BuiltinResult bi_println(const Term& goal, SolverMachine& m) {
  if (m.ctx().out) {
    (*m.ctx().out) << println_text(m.resolve(goal.args()[0])) << "\n";
    m.ctx().out->flush();
  }
  return BuiltinResult::ok(m.bindings());
}

BuiltinResult bi_first(const Term& goal, SolverMachine& m) {
  auto b = m.sub_first(goal.args()[0]);
  if (!b) return BuiltinResult::fail();
  return BuiltinResult::ok(std::move(*b));
}

BuiltinResult bi_derive(const Term& goal, SolverMachine& m) {
  Term arg = m.resolve(goal.args()[0]);
  Term derived;
  if (arg.kind() == TermKind::List && !arg.items().empty()) {
    Term head = arg.items().front();
    if (head.kind() != TermKind::Constant)
      type_error("derive/1: unbound predicate symbol in " + format_term(arg));
    std::vector<Term> rest(arg.items().begin() + 1, arg.items().end());
    derived = rest.empty() ? head : Term::compound(head.symbol(), std::move(rest));
  } else if (arg.kind() == TermKind::Compound || arg.kind() == TermKind::Constant) {
    derived = arg;
  } else {
    type_error("derive/1: callable or [Predicate|Args] expected");
  }
  return BuiltinResult::push({BodyLiteral::positive(derived)});
}

// ---------------------------------------------------------------------------
// KB updates
// ---------------------------------------------------------------------------

bool looks_like_locator(const std::string& s) {
  if (s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0) return true;
  if (s.rfind("./", 0) == 0 || s.rfind("../", 0) == 0 || s.rfind("/", 0) == 0) return true;
  auto dot = s.rfind('.');
  if (dot != std::string::npos) {
    std::string ext = s.substr(dot);
    if (ext == ".rr" || ext == ".prova") return true;
  }
  return false;
}

UpdateRequest update_request_from_goal(const Term& goal, SolverMachine& m) {
  const auto [f, a] = goal.predicate_indicator();
  UpdateRequest u;
  if (f == "remove") {
    u.kind = UpdateRequest::Kind::Remove;
    u.oid = m.resolve(goal.args()[0]);
    return u;
  }
  u.kind = f == "update" ? UpdateRequest::Kind::Update : UpdateRequest::Kind::Add;
  if (a == 1) {
    Term arg = m.resolve(goal.args()[0]);
    if (arg.kind() != TermKind::Constant) type_error("add/1: text or locator expected");
    u.text = arg.symbol();
    u.is_locator = looks_like_locator(u.text);
    return u;
  }
  u.oid = m.resolve(goal.args()[0]);
  Term text = m.resolve(goal.args()[1]);
  if (text.kind() != TermKind::Constant) type_error(f + "/2+: clause text expected");
  u.text = text.symbol();
  if (a == 3) {
    Term args = m.resolve(goal.args()[2]);
    if (args.kind() != TermKind::List)
      type_error(f + "/3: substitution argument list expected");
    u.args = args.items();
  }
  return u;
}

BuiltinResult apply_update_goal(const Term& goal, SolverMachine& m) {
  UpdateRequest u = update_request_from_goal(goal, m);
  try {
    switch (u.kind) {
      case UpdateRequest::Kind::Add:
        if (u.is_locator)
          m.ctx().kb->import_module(u.text);
        else if (u.oid)
          m.ctx().kb->add_module_text(*u.oid, u.text, u.args);
        else
          m.ctx().kb->add_anonymous(u.text, u.args);
        break;
      case UpdateRequest::Kind::Remove: m.ctx().kb->remove_module(*u.oid); break;
      case UpdateRequest::Kind::Update: m.ctx().kb->update_module(*u.oid, u.text, u.args); break;
    }
  } catch (const SolveError&) {
    throw;
  } catch (const std::exception& e) {
    throw SolveError(SolveError::Kind::Other, e.what());
  }
  return BuiltinResult::ok(m.bindings());
}

BuiltinResult bi_transaction(const Term& goal, SolverMachine& m) {
  Term arg = m.resolve(goal.args()[0]);
  if (arg.kind() != TermKind::List) type_error("transaction/1: update list expected");
  std::vector<UpdateRequest> updates;
  for (const auto& u : arg.items()) {
    const auto [f, a] = u.predicate_indicator();
    if (!((f == "add" && a >= 1 && a <= 3) || (f == "remove" && a == 1) ||
          (f == "update" && a == 3)))
      type_error("transaction/1: not an update: " + format_term(u));
    updates.push_back(update_request_from_goal(u, m));
  }
  auto outcome = m.ctx().kb->run_transaction(
      updates, {}, [&m](const Term& g) { return m.sub_prove(g); });
  return outcome.committed ? BuiltinResult::ok(m.bindings()) : BuiltinResult::fail();
}

BuiltinResult bi_commit(const Term&, SolverMachine& m) {
  m.ctx().kb->seal();
  return BuiltinResult::ok(m.bindings());
}

BuiltinResult bi_rollback(const Term&, SolverMachine& m) {
  m.rollback_tolerant(m.start_marker());
  return BuiltinResult::ok(m.bindings());
}

// ---------------------------------------------------------------------------
// external data stubs
// ---------------------------------------------------------------------------

BuiltinResult bi_on_exception(const Term& goal, SolverMachine& m) {
  m.register_exception_handler(m.resolve(goal.args()[0]), m.resolve(goal.args()[1]));
  return BuiltinResult::ok(m.bindings());
}

BuiltinResult bi_dbopen(const Term& goal, SolverMachine& m) {
  Term name = m.resolve(goal.args()[0]);
  if (name.kind() != TermKind::Constant) type_error("dbopen/2: table name expected");
  if (!m.ctx().tables || !m.ctx().tables->find(name.symbol())) return BuiltinResult::fail();
  auto b = unify(goal.args()[1], Term::atom("db:" + name.symbol()), m.bindings(),
                 m.config().occurs_check);
  if (!b) return BuiltinResult::fail();
  return BuiltinResult::ok(std::move(*b));
}

// sql_select(DB, Table, [Col, Var], [where, Col2 = Val]): one solution per
// matching row.
BuiltinResult bi_sql_select(const Term& goal, SolverMachine& m) {
  if (!m.ctx().tables) return BuiltinResult::fail();
  Term table = m.resolve(goal.args()[1]);
  if (table.kind() != TermKind::Constant) type_error("sql_select: table name expected");
  const auto* rows = m.ctx().tables->find(table.symbol());
  if (!rows) return BuiltinResult::fail();

  Term select = m.resolve(goal.args()[2]);
  if (select.kind() != TermKind::List || select.items().size() != 2 ||
      select.items()[0].kind() != TermKind::Constant)
    type_error("sql_select: [column, Var] selection expected");
  const std::string out_col = select.items()[0].symbol();

  std::optional<std::pair<std::string, Term>> where;
  if (goal.arity() >= 4) {
    Term w = m.resolve(goal.args()[3]);
    if (w.kind() != TermKind::List || w.items().size() != 2 ||
        w.items()[0].kind() != TermKind::Constant || w.items()[0].symbol() != "where")
      type_error("sql_select: [where, col = value] expected");
    Term cond = w.items()[1];
    if (cond.kind() != TermKind::Compound || cond.functor() != "=" || cond.arity() != 2 ||
        cond.args()[0].kind() != TermKind::Constant)
      type_error("sql_select: [where, col = value] expected");
    where = {cond.args()[0].symbol(), cond.args()[1]};
  }

  std::vector<BindingSet> alts;
  for (const auto& row : *rows) {
    BindingSet bs = m.bindings();
    bool ok = true;
    if (where) {
      const Term* cell = nullptr;
      for (const auto& [col, val] : row)
        if (col == where->first) cell = &val;
      if (!cell) continue;
      auto u = unify(where->second, *cell, bs, m.config().occurs_check);
      if (!u) ok = false;
      else bs = *u;
    }
    if (!ok) continue;
    const Term* out_cell = nullptr;
    for (const auto& [col, val] : row)
      if (col == out_col) out_cell = &val;
    if (!out_cell) continue;
    auto u = unify(goal.args()[2], Term::list({Term::atom(out_col), *out_cell}), bs,
                   m.config().occurs_check);
    if (!u) continue;
    alts.push_back(std::move(*u));
  }
  return BuiltinResult::multi(std::move(alts));
}

}  // namespace

BuiltinTable core_builtin_table() {
  BuiltinTable t;
  t.set("is", 2, bi_is);
  t.set("=", 2, bi_unify);
  t.set("<", 2, [](const Term& g, SolverMachine& m) {
    return compare_builtin(g, m, [](double a, double b) { return a < b; });
  });
  t.set(">", 2, [](const Term& g, SolverMachine& m) {
    return compare_builtin(g, m, [](double a, double b) { return a > b; });
  });
  t.set("<=", 2, [](const Term& g, SolverMachine& m) {
    return compare_builtin(g, m, [](double a, double b) { return a <= b; });
  });
  t.set(">=", 2, [](const Term& g, SolverMachine& m) {
    return compare_builtin(g, m, [](double a, double b) { return a >= b; });
  });
  t.set("sysTime", 1, bi_systime);
  t.set("time", 1, bi_systime);
  t.set("interval", 2, bi_interval);
  t.set("println", 1, bi_println);
  t.set("first", 1, bi_first);
  t.set("derive", 1, bi_derive);
  t.set("add", 1, apply_update_goal);
  t.set("add", 2, apply_update_goal);
  t.set("add", 3, apply_update_goal);
  t.set("remove", 1, apply_update_goal);
  t.set("update", 3, apply_update_goal);
  t.set("transaction", 1, bi_transaction);
  t.set("commit", 0, bi_commit);
  t.set("rollback", 0, bi_rollback);
  t.set("on_exception", 2, bi_on_exception);
  t.set("dbopen", 2, bi_dbopen);
  t.set("sql_select", 3, bi_sql_select);
  t.set("sql_select", 4, bi_sql_select);
  return t;
}

}  // namespace reactor

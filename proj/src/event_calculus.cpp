#include "reactor/event_calculus.hpp"

#include <algorithm>

namespace reactor {

namespace {

[[noreturn]] void type_error(const std::string& what) {
  throw SolveError(SolveError::Kind::BuiltinTypeError, what);
}

Term event_type_key(const Term& event) {
  const auto [f, a] = event.predicate_indicator();
  (void)a;
  if (f.empty()) type_error("event term expected, got " + format_term(event));
  return Term::compound("eis", {Term::atom(f)});
}

std::optional<std::int64_t> term_to_point(const Term& t) {
  if (t.kind() == TermKind::TimePoint) return t.epoch_millis();
  if (t.kind() == TermKind::Int) return t.int_value();
  return std::nullopt;
}

}  // namespace

std::optional<TimeInterval> term_to_interval(const Term& t) {
  if (auto p = term_to_point(t)) return TimeInterval{*p, *p};
  if (t.kind() == TermKind::List && t.items().size() == 2 && !t.tail()) {
    auto a = term_to_point(t.items()[0]);
    auto b = term_to_point(t.items()[1]);
    if (a && b && *a <= *b) return TimeInterval{*a, *b};
  }
  return std::nullopt;
}

namespace {

std::optional<Occurrence> occurrence_from_fact(const Term& head, bool transient,
                                               std::size_t order) {
  const Term& event = head.args()[0];
  const Term& time = head.args()[1];
  auto iv = term_to_interval(time);
  if (!iv) return std::nullopt;
  Occurrence o;
  o.event = event;
  o.interval = *iv;
  if (time.kind() == TermKind::List) {
    o.start_term = time.items()[0];
    o.end_term = time.items()[1];
  } else {
    o.start_term = time;
    o.end_term = time;
  }
  o.order = order;
  o.transient = transient;
  return o;
}

}  // namespace

std::vector<Occurrence> collect_occurrences(const KnowledgeBase& kb, bool include_happens) {
  std::vector<Occurrence> out;
  std::size_t order = 0;
  auto scan = [&](const char* functor, bool transient) {
    for (const auto& ref : kb.clauses_for(functor, 2)) {
      if (!ref.clause->is_fact()) continue;
      if (auto o = occurrence_from_fact(ref.clause->head, transient, order++)) out.push_back(*o);
    }
  };
  scan("occurs", true);
  if (include_happens) scan("happens", false);
  std::stable_sort(out.begin(), out.end(), [](const Occurrence& a, const Occurrence& b) {
    if (a.interval.start != b.interval.start) return a.interval.start < b.interval.start;
    if (a.interval.end != b.interval.end) return a.interval.end < b.interval.end;
    return a.order < b.order;
  });
  return out;
}

void record_occurrence(KnowledgeBase& kb, const Term& event, const Term& time_term) {
  if (!event.is_ground())
    throw SolveError(SolveError::Kind::BuiltinTypeError,
                     "non-ground event occurrence: " + format_term(event));
  if (!term_to_interval(time_term))
    throw SolveError(SolveError::Kind::BuiltinTypeError,
                     "bad occurrence time: " + format_term(time_term));
  Term key = event_type_key(event);
  Clause fact;
  fact.head = Term::compound("occurs", {event, time_term});
  SourceModule mod;
  mod.oid = key;
  if (const SourceModule* existing = kb.find_module(key)) mod.clauses = existing->clauses;
  mod.clauses.push_back(std::move(fact));
  kb.add_module(key, std::move(mod), /*replace=*/true);
}

void consume(KnowledgeBase& kb, const Term& key_or_pattern, ConsumePolicy policy) {
  const auto [f, a] = key_or_pattern.predicate_indicator();
  Term key = (f == "eis") ? key_or_pattern : event_type_key(key_or_pattern);
  const bool by_pattern = f != "eis";
  const SourceModule* mod = kb.find_module(key);
  if (!mod) return;  // unknown key: no-op

  if (!by_pattern && policy == ConsumePolicy::All) {
    kb.remove_module(key);
    return;
  }

  // collect candidate fact indices (with their intervals) in clause order
  struct Cand {
    std::size_t index;
    TimeInterval iv;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < mod->clauses.size(); ++i) {
    const Clause& c = mod->clauses[i];
    const auto [cf, ca] = c.head.predicate_indicator();
    if (!c.is_fact() || cf != "occurs" || ca != 2) continue;
    if (by_pattern && !unify(key_or_pattern, c.head.args()[0])) continue;
    auto iv = term_to_interval(c.head.args()[1]);
    if (!iv) continue;
    cands.push_back({i, *iv});
  }
  if (cands.empty()) return;

  std::vector<std::size_t> doomed;
  switch (policy) {
    case ConsumePolicy::All:
      for (const auto& c : cands) doomed.push_back(c.index);
      break;
    case ConsumePolicy::First: {
      auto it = std::min_element(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.iv.start != y.iv.start) return x.iv.start < y.iv.start;
        if (x.iv.end != y.iv.end) return x.iv.end < y.iv.end;
        return x.index < y.index;
      });
      doomed.push_back(it->index);
      break;
    }
    case ConsumePolicy::Last: {
      auto it = std::max_element(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.iv.start != y.iv.start) return x.iv.start < y.iv.start;
        if (x.iv.end != y.iv.end) return x.iv.end < y.iv.end;
        return x.index < y.index;
      });
      doomed.push_back(it->index);
      break;
    }
  }

  SourceModule next;
  next.oid = key;
  for (std::size_t i = 0; i < mod->clauses.size(); ++i)
    if (std::find(doomed.begin(), doomed.end(), i) == doomed.end())
      next.clauses.push_back(mod->clauses[i]);
  kb.add_module(key, std::move(next), /*replace=*/true);
}

// ---------------------------------------------------------------------------
// detection
// ---------------------------------------------------------------------------

bool is_event_operator(const std::string& functor, std::size_t arity) {
  if (functor == "sequence" || functor == "or" || functor == "xor" || functor == "and" ||
      functor == "concurrent")
    return arity >= 2;
  if (functor == "neg" || functor == "aperiodic" || functor == "any") return arity == 2;
  return false;
}

namespace {

struct DetectCtx {
  const std::vector<Occurrence>& occs;
  SolverMachine& m;
  bool occurs_check;
};

std::vector<Detection> eval_expr(const Term& expr, const BindingSet& bs, DetectCtx& ctx);

Detection from_occurrence(const Occurrence& o, BindingSet bs) {
  Detection d;
  d.interval = o.interval;
  d.start_term = o.start_term;
  d.end_term = o.end_term;
  d.contributors = {o};
  d.bindings = std::move(bs);
  return d;
}

std::vector<Detection> leaf_detections(const Term& pattern, const BindingSet& bs, DetectCtx& ctx) {
  std::vector<Detection> out;
  for (const auto& o : ctx.occs) {
    auto u = unify(pattern, o.event, bs, ctx.occurs_check);
    if (u) out.push_back(from_occurrence(o, std::move(*u)));
  }
  return out;
}

void collect_leaf_types(const Term& expr, std::vector<Term>& out) {
  const auto [f, a] = expr.predicate_indicator();
  if (is_event_operator(f, a)) {
    if (f == "neg" || f == "aperiodic") {
      // window leaves only; the negated/filtered types are not sequence legs
      const Term& window = expr.args()[1];
      if (window.kind() == TermKind::List)
        for (const auto& t : window.items()) collect_leaf_types(t, out);
      if (f == "aperiodic") collect_leaf_types(expr.args()[0], out);
      return;
    }
    if (f == "any") {
      collect_leaf_types(expr.args()[1], out);
      return;
    }
    for (const auto& child : expr.args()) collect_leaf_types(child, out);
    return;
  }
  for (const auto& seen : out)
    if (seen == expr) return;
  out.push_back(expr);
}

// Declared-terminator break check between two adjacent detections:
// terminates(T, IntervalTerm, [End1, Start2]) derivable and an occurrence of
// T strictly inside (end1, start2); with a scope, the occurrence must also
// match a scope type.
bool broken_between(std::int64_t end1, const Term& end1_term, std::int64_t start2,
                    const Term& start2_term, const Term& interval_term,
                    const std::vector<Term>& scope, const BindingSet& bs, DetectCtx& ctx) {
  Term terminator = Term::var("_Terminator", ctx.m.fresh_var_index());
  Term window = Term::list({end1_term, start2_term});
  Term goal = Term::compound("terminates", {terminator, interval_term, window});
  for (const auto& sol : ctx.m.sub_all(goal)) {
    Term pattern = sol.apply(terminator);
    for (const auto& o : ctx.occs) {
      if (!(end1 < o.interval.start && o.interval.end < start2)) continue;
      if (!unify(pattern, o.event, bs, ctx.occurs_check)) continue;
      if (!scope.empty()) {
        bool in_scope = false;
        for (const auto& s : scope)
          if (unify(s, o.event, bs, ctx.occurs_check)) {
            in_scope = true;
            break;
          }
        if (!in_scope) continue;
      }
      return true;
    }
  }
  return false;
}

Term expr_repr(const Term& expr, const BindingSet& bs) { return bs.apply(expr); }

std::vector<Detection> eval_sequence(const Term& expr, const BindingSet& bs, DetectCtx& ctx) {
  std::vector<Term> scope;
  collect_leaf_types(expr, scope);
  std::vector<Detection> acc;
  // chain left to right, threading bindings
  std::vector<Detection> current = eval_expr(expr.args()[0], bs, ctx);
  for (std::size_t i = 1; i < expr.arity(); ++i) {
    std::vector<Detection> next;
    for (const auto& left : current) {
      for (const auto& right : eval_expr(expr.args()[i], left.bindings, ctx)) {
        if (!interval_leq(left.interval, right.interval)) continue;
        Term interval_term = Term::list({expr_repr(expr.args()[i - 1], right.bindings),
                                         expr_repr(expr.args()[i], right.bindings)});
        if (broken_between(left.interval.end, left.end_term, right.interval.start,
                           right.start_term, interval_term, scope, right.bindings, ctx))
          continue;
        Detection d;
        d.interval = {left.interval.start, right.interval.end};
        d.start_term = left.start_term;
        d.end_term = right.end_term;
        d.contributors = left.contributors;
        d.contributors.insert(d.contributors.end(), right.contributors.begin(),
                              right.contributors.end());
        d.bindings = right.bindings;
        next.push_back(std::move(d));
      }
    }
    current = std::move(next);
  }
  return current;
}

std::vector<Detection> eval_and(const Term& expr, const BindingSet& bs, DetectCtx& ctx,
                                bool concurrent) {
  std::vector<Detection> current = eval_expr(expr.args()[0], bs, ctx);
  for (std::size_t i = 1; i < expr.arity(); ++i) {
    std::vector<Detection> next;
    for (const auto& left : current) {
      for (const auto& right : eval_expr(expr.args()[i], left.bindings, ctx)) {
        if (concurrent && !(left.interval == right.interval)) continue;
        Detection d;
        d.interval = {std::min(left.interval.start, right.interval.start),
                      std::max(left.interval.end, right.interval.end)};
        d.start_term =
            left.interval.start <= right.interval.start ? left.start_term : right.start_term;
        d.end_term = left.interval.end >= right.interval.end ? left.end_term : right.end_term;
        d.contributors = left.contributors;
        d.contributors.insert(d.contributors.end(), right.contributors.begin(),
                              right.contributors.end());
        d.bindings = right.bindings;
        next.push_back(std::move(d));
      }
    }
    current = std::move(next);
  }
  return current;
}

std::vector<Detection> eval_window_pairs(const Term& window, const BindingSet& bs,
                                         DetectCtx& ctx) {
  if (window.kind() != TermKind::List || window.items().size() != 2)
    type_error("event window [E1,E2] expected, got " + format_term(window));
  // a window is just a two-leg sequence without the scope restriction
  std::vector<Detection> out;
  for (const auto& left : eval_expr(window.items()[0], bs, ctx)) {
    for (const auto& right : eval_expr(window.items()[1], left.bindings, ctx)) {
      if (!interval_leq(left.interval, right.interval)) continue;
      Term interval_term = Term::list({expr_repr(window.items()[0], right.bindings),
                                       expr_repr(window.items()[1], right.bindings)});
      if (broken_between(left.interval.end, left.end_term, right.interval.start,
                         right.start_term, interval_term, {}, right.bindings, ctx))
        continue;
      Detection d;
      d.interval = {left.interval.start, right.interval.end};
      d.start_term = left.start_term;
      d.end_term = right.end_term;
      d.contributors = left.contributors;
      d.contributors.insert(d.contributors.end(), right.contributors.begin(),
                            right.contributors.end());
      d.bindings = right.bindings;
      out.push_back(std::move(d));
    }
  }
  return out;
}

bool strictly_inside(const TimeInterval& inner, const TimeInterval& outer) {
  return outer.start < inner.start && inner.end < outer.end;
}

std::vector<Detection> eval_expr(const Term& expr0, const BindingSet& bs, DetectCtx& ctx) {
  Term expr = bs.walk(expr0);
  const auto [f, a] = expr.predicate_indicator();
  if (!is_event_operator(f, a)) return leaf_detections(expr, bs, ctx);

  if (f == "sequence") return eval_sequence(expr, bs, ctx);
  if (f == "and") return eval_and(expr, bs, ctx, false);
  if (f == "concurrent") return eval_and(expr, bs, ctx, true);
  if (f == "or") {
    std::vector<Detection> out;
    for (const auto& child : expr.args()) {
      auto ds = eval_expr(child, bs, ctx);
      out.insert(out.end(), ds.begin(), ds.end());
    }
    return out;
  }
  if (f == "xor") {
    std::vector<Detection> only;
    std::size_t children_with = 0;
    for (const auto& child : expr.args()) {
      auto ds = eval_expr(child, bs, ctx);
      if (!ds.empty()) {
        ++children_with;
        only = std::move(ds);
      }
    }
    if (children_with == 1) return only;
    return {};
  }
  if (f == "neg") {
    Term types = bs.apply(expr.args()[0]);
    if (types.kind() != TermKind::List) type_error("neg([T1..Tn],[E1,E2]) expected");
    std::vector<Detection> out;
    for (const auto& window : eval_window_pairs(expr.args()[1], bs, ctx)) {
      bool violated = false;
      for (const auto& t : types.items()) {
        for (const auto& o : ctx.occs) {
          if (!strictly_inside(o.interval, window.interval)) continue;
          if (unify(t, o.event, window.bindings, ctx.occurs_check)) {
            violated = true;
            break;
          }
        }
        if (violated) break;
      }
      if (!violated) out.push_back(window);
    }
    return out;
  }
  if (f == "aperiodic") {
    std::vector<Detection> out;
    for (const auto& window : eval_window_pairs(expr.args()[1], bs, ctx)) {
      for (const auto& o : ctx.occs) {
        if (!strictly_inside(o.interval, window.interval)) continue;
        auto u = unify(expr.args()[0], o.event, window.bindings, ctx.occurs_check);
        if (!u) continue;
        Detection d = from_occurrence(o, std::move(*u));
        d.contributors.insert(d.contributors.end(), window.contributors.begin(),
                              window.contributors.end());
        out.push_back(std::move(d));
      }
    }
    return out;
  }
  if (f == "any") {
    Term n_term = bs.apply(expr.args()[0]);
    if (n_term.kind() != TermKind::Int || n_term.int_value() < 1)
      type_error("any(n,E): positive count expected");
    const std::size_t n = static_cast<std::size_t>(n_term.int_value());
    std::vector<Detection> singles = eval_expr(expr.args()[1], bs, ctx);
    std::vector<Detection> out;
    if (singles.size() < n) return out;
    // n-subsets in lexicographic index order; bindings thread left to right
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    while (true) {
      BindingSet cur = bs;
      bool ok = true;
      std::vector<const Detection*> picks;
      for (std::size_t i : idx) {
        auto u = unify(bs.apply(expr.args()[1]), singles[i].contributors.front().event, cur,
                       ctx.occurs_check);
        if (!u) {
          ok = false;
          break;
        }
        cur = std::move(*u);
        picks.push_back(&singles[i]);
      }
      if (ok) {
        Detection d;
        d.interval = picks.front()->interval;
        d.start_term = picks.front()->start_term;
        d.end_term = picks.back()->end_term;
        for (const auto* p : picks) {
          d.interval.start = std::min(d.interval.start, p->interval.start);
          d.interval.end = std::max(d.interval.end, p->interval.end);
          d.contributors.insert(d.contributors.end(), p->contributors.begin(),
                                p->contributors.end());
        }
        d.bindings = cur;
        out.push_back(std::move(d));
      }
      // next combination
      std::size_t k = n;
      while (k > 0 && idx[k - 1] == singles.size() - n + (k - 1)) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  }
  return {};
}

}  // namespace

std::vector<Detection> detect_expr(const Term& expr, SolverMachine& m) {
  auto occs = collect_occurrences(*m.ctx().kb, false);
  DetectCtx ctx{occs, m, m.config().occurs_check};
  return eval_expr(m.resolve(expr), m.bindings(), ctx);
}

// ---------------------------------------------------------------------------
// holdsAt / holdsInterval
// ---------------------------------------------------------------------------

std::vector<BindingSet> holds_at(const Term& fluent, const Term& time, SolverMachine& m) {
  Term tq = m.resolve(time);
  auto point = term_to_interval(tq);
  if (!point) type_error("holdsAt/2: time point expected, got " + format_term(tq));
  const std::int64_t qt = point->end;

  auto occs = collect_occurrences(*m.ctx().kb, true);
  std::vector<BindingSet> out;
  for (const auto& o : occs) {
    if (o.interval.end > qt) continue;
    Term init_goal = Term::compound("initiates", {o.event, fluent, o.end_term});
    for (const auto& bs1 : m.sub_all(init_goal)) {
      Term bound_fluent = bs1.apply(fluent);
      bool clipped = false;
      for (const auto& o2 : occs) {
        if (!(o2.interval.end > o.interval.end && o2.interval.end <= qt)) continue;
        Term term_goal = Term::compound("terminates", {o2.event, bound_fluent, o2.end_term});
        if (m.sub_prove(term_goal)) {
          clipped = true;
          break;
        }
      }
      if (!clipped) out.push_back(bs1);
    }
  }
  return out;
}

namespace {

std::vector<BindingSet> holds_interval_solutions(const Term& pair, const Term& slot,
                                                 const std::vector<Term>& scope,
                                                 SolverMachine& m) {
  if (pair.kind() != TermKind::List || pair.items().size() != 2)
    type_error("holdsInterval: [E1,E2] expected, got " + format_term(pair));
  const Term& e1 = pair.items()[0];
  const Term& e2 = pair.items()[1];

  auto occs = collect_occurrences(*m.ctx().kb, false);
  DetectCtx ctx{occs, m, m.config().occurs_check};
  std::vector<BindingSet> out;
  for (const auto& o1 : occs) {
    auto u1 = unify(e1, o1.event, m.bindings(), m.config().occurs_check);
    if (!u1) continue;
    for (const auto& o2 : occs) {
      auto u2 = unify(e2, o2.event, *u1, m.config().occurs_check);
      if (!u2) continue;
      if (!interval_leq(o1.interval, o2.interval)) continue;
      Term interval_term = Term::list({u2->apply(e1), u2->apply(e2)});
      if (broken_between(o1.interval.end, o1.end_term, o2.interval.start, o2.start_term,
                         interval_term, scope, *u2, ctx))
        continue;
      Term result = Term::list({o1.start_term, o2.end_term});
      auto u3 = unify(slot, result, *u2, m.config().occurs_check);
      if (!u3) continue;
      out.push_back(std::move(*u3));
    }
  }
  return out;
}

BuiltinResult bi_holds_interval(const Term& goal, SolverMachine& m) {
  std::vector<Term> scope;
  if (goal.arity() == 3) {
    Term s = m.resolve(goal.args()[2]);
    if (s.kind() != TermKind::List) type_error("holdsInterval/3: scope list expected");
    scope = s.items();
  }
  return BuiltinResult::multi(
      holds_interval_solutions(m.resolve(goal.args()[0]), goal.args()[1], scope, m));
}

BuiltinResult bi_holds_at(const Term& goal, SolverMachine& m) {
  return BuiltinResult::multi(holds_at(goal.args()[0], goal.args()[1], m));
}

BuiltinResult detection_result(const Term& goal, SolverMachine& m) {
  std::vector<BindingSet> alts;
  for (const auto& d : detect_expr(goal.args()[0], m)) {
    Term interval = Term::list({d.start_term, d.end_term});
    auto u = unify(goal.args()[1], interval, d.bindings, m.config().occurs_check);
    if (u) alts.push_back(std::move(*u));
  }
  return BuiltinResult::multi(std::move(alts));
}

BuiltinResult bi_event(const Term& goal, SolverMachine& m) {
  return detection_result(goal, m);
}

BuiltinResult bi_detect(const Term& goal, SolverMachine& m) {
  Term expr = m.resolve(goal.args()[0]);
  const auto [f, a] = expr.predicate_indicator();
  if (!is_event_operator(f, a)) return BuiltinResult::not_applicable();
  return detection_result(goal, m);
}

BuiltinResult bi_consume(const Term& goal, SolverMachine& m) {
  Term key = m.resolve(goal.args()[0]);
  ConsumePolicy policy = ConsumePolicy::All;
  if (goal.arity() == 2) {
    Term p = m.resolve(goal.args()[1]);
    if (p.kind() != TermKind::Constant) type_error("consume/2: policy all|first|last expected");
    if (p.symbol() == "all")
      policy = ConsumePolicy::All;
    else if (p.symbol() == "first")
      policy = ConsumePolicy::First;
    else if (p.symbol() == "last")
      policy = ConsumePolicy::Last;
    else
      type_error("consume/2: policy all|first|last expected");
  }
  consume(*m.ctx().kb, key, policy);
  return BuiltinResult::ok(m.bindings());
}

}  // namespace

void register_event_calculus_builtins(BuiltinTable& t) {
  t.set("holdsAt", 2, bi_holds_at);
  t.set("holdsInterval", 2, bi_holds_interval);
  t.set("holdsInterval", 3, bi_holds_interval);
  t.set("event", 2, bi_event);
  t.set("detect", 2, bi_detect);
  t.set("consume", 1, bi_consume);
  t.set("consume", 2, bi_consume);
}

}  // namespace reactor

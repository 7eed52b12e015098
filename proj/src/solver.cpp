#include "reactor/solver.hpp"

#include <atomic>

namespace reactor {

namespace {
std::atomic<int> g_var_index{1};
}

int next_global_var_index() { return g_var_index.fetch_add(1); }

namespace {

Term rename_term(const Term& t, std::map<VarId, Term>& mapping) {
  switch (t.kind()) {
    case TermKind::Variable: {
      auto it = mapping.find(t.var_id());
      if (it != mapping.end()) return it->second;
      Term fresh = Term::var(t.var_id().name, next_global_var_index());
      mapping.emplace(t.var_id(), fresh);
      return fresh;
    }
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const auto& a : t.args()) args.push_back(rename_term(a, mapping));
      Term out = Term::compound(t.functor(), std::move(args));
      if (t.annotations()) out = out.with_annotations(*t.annotations());
      return out;
    }
    case TermKind::List: {
      std::vector<Term> items;
      items.reserve(t.items().size());
      for (const auto& a : t.items()) items.push_back(rename_term(a, mapping));
      if (t.tail()) return Term::list(std::move(items), rename_term(*t.tail(), mapping));
      return Term::list(std::move(items));
    }
    default: return t;
  }
}

}  // namespace

Clause rename_clause(const Clause& c, int /*index*/) {
  std::map<VarId, Term> mapping;
  Clause out;
  out.head = rename_term(c.head, mapping);
  out.body.reserve(c.body.size());
  for (const auto& l : c.body) {
    BodyLiteral nl = l;
    if (l.kind == BodyLiteral::Kind::Goal) nl.goal = rename_term(l.goal, mapping);
    out.body.push_back(std::move(nl));
  }
  return out;
}

namespace {

struct Frame {
  BodyLiteral lit;
  std::size_t cut_barrier = 0;
  int depth = 0;
  std::string site;
};

struct ChoicePoint {
  enum class Kind { Clauses, Canned };
  Kind kind = Kind::Clauses;
  std::vector<Frame> goals;  // continuation snapshot (builtin/goal frame already popped)
  BindingSet bindings;
  KbMarker marker;
  std::size_t barrier = 0;  // cps height when this CP was created
  int depth = 0;
  std::string site;
  // Clauses
  Term goal;
  std::vector<KnowledgeBase::ClauseRef> clauses;
  std::size_t next_clause = 0;
  // Canned
  std::vector<BindingSet> alts;
  std::size_t next_alt = 0;
};

class MachineImpl final : public SolverMachine {
 public:
  MachineImpl(std::vector<BodyLiteral> goals, SolveContext& ctx, SolverConfig cfg, BindingSet seed)
      : ctx_(ctx), cfg_(std::move(cfg)), bindings_(std::move(seed)) {
    start_marker_ = kb().checkpoint();
    frames_.reserve(goals.size());
    for (std::size_t i = goals.size(); i-- > 0;) {
      Frame f;
      f.lit = goals[i];
      f.cut_barrier = 0;
      f.depth = 0;
      f.site = cfg_.query_site_prefix + "#" + std::to_string(i);
      frames_.push_back(std::move(f));
    }
  }

  ~MachineImpl() { close(); }

  SolveContext& ctx() override { return ctx_; }
  const SolverConfig& config() const override { return cfg_; }
  const BindingSet& bindings() const override { return bindings_; }
  Term resolve(const Term& t) const override { return bindings_.apply(t); }

  std::vector<BodyLiteral> remaining_goals() const override {
    std::vector<BodyLiteral> out;
    out.reserve(frames_.size());
    for (std::size_t i = frames_.size(); i-- > 0;) out.push_back(frames_[i].lit);
    return out;
  }

  std::string current_site() const override { return cur_site_; }

  bool sub_prove(const Term& goal) override {
    KbMarker marker = kb().checkpoint();
    MachineImpl sub({BodyLiteral::positive(goal)}, ctx_, cfg_, bindings_);
    bool found = sub.next().has_value();
    sub.emitted_deltas_.clear();  // pure check: nothing to re-apply
    sub.close();
    rollback_tolerant(marker);
    return found;
  }

  std::optional<BindingSet> sub_first(const Term& goal) override {
    MachineImpl sub({BodyLiteral::positive(goal)}, ctx_, cfg_, bindings_);
    auto sol = sub.next();
    if (!sol) {
      sub.close();
      return std::nullopt;
    }
    sub.close();  // retains the found path's transitions
    return sol->bindings;
  }

  std::vector<BindingSet> sub_all(const Term& goal) override {
    KbMarker marker = kb().checkpoint();
    MachineImpl sub({BodyLiteral::positive(goal)}, ctx_, cfg_, bindings_);
    std::vector<BindingSet> out;
    while (auto sol = sub.next()) out.push_back(sol->bindings);
    sub.emitted_deltas_.clear();
    sub.close();
    rollback_tolerant(marker);
    return out;
  }

  int fresh_var_index() override { return next_global_var_index(); }

  KbMarker start_marker() const override { return start_marker_; }

  void register_exception_handler(Term pattern, Term handler) override {
    exception_handlers_.emplace_back(std::move(pattern), std::move(handler));
  }

  void rollback_tolerant(const KbMarker& m) override {
    KbMarker eff = m;
    if (eff.seq < kb().sealed_seq()) eff.seq = kb().sealed_seq();
    kb().rollback_to(eff);
  }

  std::optional<Solution> next() {
    if (finished_) return std::nullopt;
    if (emitted_any_) {
      if (!backtrack()) {
        finished_ = true;
        return std::nullopt;
      }
    }
    while (true) {
      if (frames_.empty()) {
        emitted_any_ = true;
        return emit();
      }
      Frame f = std::move(frames_.back());
      frames_.pop_back();
      if (!step(f)) {
        if (!backtrack()) {
          finished_ = true;
          return std::nullopt;
        }
      }
    }
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    finished_ = true;
    rollback_tolerant(start_marker_);
    const std::uint64_t seal = kb().sealed_seq();
    for (const auto& delta : emitted_deltas_) {
      std::vector<TransitionRecord> pending;
      for (const auto& rec : delta)
        if (rec.seq > seal) pending.push_back(rec);
      kb().replay(pending);
    }
  }

 private:
  KnowledgeBase& kb() { return *ctx_.kb; }
  const KnowledgeBase& kb() const { return *ctx_.kb; }

  Solution emit() {
    Solution s;
    s.bindings = bindings_;
    std::vector<TransitionRecord> delta;
    for (const auto& rec : kb().log())
      if (rec.seq > start_marker_.seq) {
        delta.push_back(rec);
        s.transitions.push_back(rec.seq);
      }
    emitted_deltas_.push_back(std::move(delta));
    s.root_oid = root_oid_;
    s.root_clause_index = root_clause_index_;
    return s;
  }

  // Returns false when the current branch fails.
  bool step(const Frame& f) {
    cur_site_ = f.site;
    if (f.lit.kind == BodyLiteral::Kind::Cut) {
      cut_to(f.cut_barrier);
      return true;
    }
    switch (f.lit.polarity) {
      case BodyLiteral::Polarity::Naf: return step_naf(f);
      case BodyLiteral::Polarity::Neg: {
        Frame g = f;
        g.lit = BodyLiteral::positive(Term::compound("neg", {f.lit.goal}));
        return step_goal(g);
      }
      default: return step_goal(f);
    }
  }

  bool step_naf(const Frame& f) {
    Term goal = bindings_.apply(f.lit.goal);
    if (!goal.is_ground())
      throw SolveError(SolveError::Kind::FlounderingNaf,
                       "not/1 on non-ground goal " + format_term(goal));
    return !sub_prove(goal);
  }

  bool step_goal(const Frame& f) {
    Term goal = bindings_.walk(f.lit.goal);
    switch (goal.kind()) {
      case TermKind::Variable:
        throw SolveError(SolveError::Kind::Instantiation,
                         "unbound goal " + goal.var_id().name);
      case TermKind::Constant:
      case TermKind::Compound: break;
      default:
        throw SolveError(SolveError::Kind::BuiltinTypeError,
                         "callable expected, got " + format_term(goal));
    }
    const auto [functor, arity] = goal.predicate_indicator();

    if (functor == "!" && arity == 0) {
      cut_to(f.cut_barrier);
      return true;
    }
    if (arity == 0 && (functor == "true")) return true;
    if (arity == 0 && (functor == "fail" || functor == "false")) return false;
    if (functor == "not" && arity == 1) {
      Frame g = f;
      g.lit = BodyLiteral::naf(goal.args()[0]);
      return step_naf(g);
    }

    if (ctx_.builtins) {
      if (const BuiltinFn* fn = ctx_.builtins->find(functor, arity)) {
        BuiltinResult r = (*fn)(goal, *this);
        switch (r.kind) {
          case BuiltinResult::Kind::Fail: return false;
          case BuiltinResult::Kind::Det: bindings_ = std::move(r.det); return true;
          case BuiltinResult::Kind::Multi: {
            if (r.alts.empty()) return false;
            if (r.alts.size() > 1) {
              ChoicePoint cp;
              cp.kind = ChoicePoint::Kind::Canned;
              cp.goals = frames_;
              cp.marker = kb().checkpoint();
              cp.barrier = cps_.size();
              cp.depth = f.depth;
              cp.site = f.site;
              cp.alts.assign(r.alts.begin() + 1, r.alts.end());
              cps_.push_back(std::move(cp));
            }
            bindings_ = std::move(r.alts.front());
            return true;
          }
          case BuiltinResult::Kind::Push: {
            push_body(r.push_goals, f.cut_barrier, f.depth + 1, f.site + ">");
            return true;
          }
          case BuiltinResult::Kind::Suspend: return false;
          case BuiltinResult::Kind::NotApplicable: break;
        }
      }
    }

    // Stub dispatch: configured stubs and dotted qualified names.
    const bool has_stub_entry = ctx_.stubs && ctx_.stubs->find(functor) != nullptr;
    if (has_stub_entry || functor.find('.') != std::string::npos) return step_stub(goal, functor);

    return resolve_against_kb(goal, f);
  }

  bool step_stub(const Term& goal, const std::string& functor) {
    std::vector<Term> args;
    if (goal.kind() == TermKind::Compound)
      for (const auto& a : goal.args()) args.push_back(bindings_.apply(a));
    if (ctx_.stubs) {
      ctx_.stubs->record(functor, args);
      if (StubTable::Behavior* b = ctx_.stubs->find(functor)) {
        switch (b->mode) {
          case StubTable::Mode::Succeed: return true;
          case StubTable::Mode::Fail: return false;
          case StubTable::Mode::FailFirstN:
            if (b->fail_count > 0) {
              --b->fail_count;
              return false;
            }
            return true;
          case StubTable::Mode::Raise: {
            Term tag = Term::atom(b->raise_tag.empty() ? functor : b->raise_tag);
            for (const auto& [pattern, handler] : exception_handlers_) {
              if (unify(pattern, tag, bindings_, cfg_.occurs_check)) {
                sub_first(handler);
                return false;
              }
            }
            throw SolveError(SolveError::Kind::Other,
                             "unhandled stub exception " + format_term(tag));
          }
        }
      }
    }
    return true;  // default: record (if possible) and succeed
  }

  bool resolve_against_kb(const Term& goal, const Frame& f) {
    const auto [functor, arity] = goal.predicate_indicator();
    std::vector<KnowledgeBase::ClauseRef> clauses = kb().clauses_for(functor, arity);
    if (clauses.empty()) return false;

    ChoicePoint cp;
    cp.kind = ChoicePoint::Kind::Clauses;
    cp.goals = frames_;
    cp.bindings = bindings_;
    cp.marker = kb().checkpoint();
    cp.barrier = cps_.size();
    cp.depth = f.depth;
    cp.site = f.site;
    cp.goal = goal;
    cp.clauses = std::move(clauses);
    cps_.push_back(std::move(cp));
    return try_clause_alternatives();
  }

  // Take alternatives from the top (Clauses) choice point until one's head
  // unifies; false when the CP is exhausted (caller backtracks further).
  bool try_clause_alternatives() {
    ChoicePoint& cp = cps_.back();
    while (cp.next_clause < cp.clauses.size()) {
      const auto& ref = cp.clauses[cp.next_clause++];
      Clause renamed = rename_clause(*ref.clause, 0);
      auto unified = unify(cp.goal, renamed.head, cp.bindings, cfg_.occurs_check);
      if (!unified) continue;
      bindings_ = std::move(*unified);
      frames_ = cp.goals;
      if (cp.depth == 0) {
        root_oid_ = ref.oid;
        root_clause_index_ = ref.clause_index;
      }
      if (cp.depth + 1 > cfg_.max_depth)
        throw SolveError(SolveError::Kind::DepthExceeded,
                         "max derivation depth exceeded at " + format_term(cp.goal));
      std::string site_base = format_term(ref.oid) + "#" + std::to_string(ref.clause_index);
      const std::size_t barrier = cp.barrier;
      const int depth = cp.depth + 1;
      for (std::size_t i = renamed.body.size(); i-- > 0;) {
        Frame bf;
        bf.lit = renamed.body[i];
        bf.cut_barrier = barrier;
        bf.depth = depth;
        bf.site = site_base + "#" + std::to_string(i);
        frames_.push_back(std::move(bf));
      }
      return true;
    }
    return false;
  }

  void push_body(const std::vector<BodyLiteral>& goals, std::size_t barrier, int depth,
                 const std::string& site_base) {
    if (depth > cfg_.max_depth)
      throw SolveError(SolveError::Kind::DepthExceeded, "max derivation depth exceeded");
    for (std::size_t i = goals.size(); i-- > 0;) {
      Frame f;
      f.lit = goals[i];
      f.cut_barrier = barrier;
      f.depth = depth;
      f.site = site_base + "#" + std::to_string(i);
      frames_.push_back(std::move(f));
    }
  }

  void cut_to(std::size_t barrier) {
    if (cps_.size() > barrier) cps_.resize(barrier);
  }

  bool backtrack() {
    while (!cps_.empty()) {
      ChoicePoint& cp = cps_.back();
      rollback_tolerant(cp.marker);
      if (cp.kind == ChoicePoint::Kind::Canned) {
        if (cp.next_alt < cp.alts.size()) {
          bindings_ = cp.alts[cp.next_alt++];
          frames_ = cp.goals;
          return true;
        }
        cps_.pop_back();
        continue;
      }
      if (try_clause_alternatives()) return true;
      cps_.pop_back();
    }
    return false;
  }

  SolveContext& ctx_;
  SolverConfig cfg_;
  BindingSet bindings_;
  std::vector<Frame> frames_;
  std::vector<ChoicePoint> cps_;
  KbMarker start_marker_;
  std::string cur_site_;
  bool emitted_any_ = false;
  bool finished_ = false;
  bool closed_ = false;
  std::optional<Term> root_oid_;
  std::size_t root_clause_index_ = 0;
  std::vector<std::vector<TransitionRecord>> emitted_deltas_;
  std::vector<std::pair<Term, Term>> exception_handlers_;  // (pattern, handler goal)
};

}  // namespace

struct StreamAccess;

SolutionStream::SolutionStream(std::vector<BodyLiteral> goals, SolveContext& ctx, SolverConfig cfg,
                               BindingSet seed)
    : m_(std::make_unique<MachineImpl>(std::move(goals), ctx, std::move(cfg), std::move(seed))) {}

SolutionStream::~SolutionStream() = default;
SolutionStream::SolutionStream(SolutionStream&&) noexcept = default;
SolutionStream& SolutionStream::operator=(SolutionStream&&) noexcept = default;

std::optional<Solution> SolutionStream::next() {
  return static_cast<MachineImpl*>(m_.get())->next();
}

void SolutionStream::close() { static_cast<MachineImpl*>(m_.get())->close(); }

std::vector<Solution> solve_all(std::vector<BodyLiteral> goals, SolveContext& ctx, SolverConfig cfg,
                                std::size_t limit) {
  SolutionStream s(std::move(goals), ctx, std::move(cfg));
  std::vector<Solution> out;
  while (out.size() < limit) {
    auto sol = s.next();
    if (!sol) break;
    out.push_back(std::move(*sol));
  }
  s.close();
  return out;
}

bool provable(const Term& goal, SolveContext& ctx, SolverConfig cfg) {
  KbMarker marker = ctx.kb->checkpoint();
  bool found;
  {
    SolutionStream s({BodyLiteral::positive(goal)}, ctx, std::move(cfg));
    found = s.next().has_value();
    s.close();
  }
  // pure check: undo anything the proof (and the close replay) applied
  if (marker.seq < ctx.kb->sealed_seq()) marker.seq = ctx.kb->sealed_seq();
  ctx.kb->rollback_to(marker);
  return found;
}

std::optional<Solution> solve_first(const Term& goal, SolveContext& ctx, SolverConfig cfg) {
  SolutionStream s({BodyLiteral::positive(goal)}, ctx, std::move(cfg));
  auto sol = s.next();
  s.close();
  return sol;
}

}  // namespace reactor

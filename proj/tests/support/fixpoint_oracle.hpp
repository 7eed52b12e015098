#pragma once

#include <map>
#include <set>
#include <string>

#include "reactor/parser.hpp"

namespace reactor::testing {

/// Bottom-up stratified fixpoint evaluation over the finite Herbrand base —
/// the independent oracle for the backward-chaining solver. Clauses are
/// grounded over the constant universe; strata are computed per predicate
/// (negative dependencies bump the stratum); each stratum iterates TP to a
/// fixpoint against the lower strata's completed model.
class FixpointOracle {
 public:
  FixpointOracle(const SourceModule& program, std::vector<Term> universe)
      : universe_(std::move(universe)) {
    for (const auto& c : program.clauses) ground_clause(c);
    compute_strata(program);
    run();
  }

  bool holds(const Term& ground_atom) const { return model_.count(format_term(ground_atom)) > 0; }

  const std::set<std::string>& model() const { return model_; }

 private:
  struct GroundClause {
    std::string head;
    std::string head_pred;
    std::vector<std::string> pos;
    std::vector<std::string> neg;
  };

  static std::string pred_of(const Term& t) {
    auto [f, a] = t.predicate_indicator();
    return f + "/" + std::to_string(a);
  }

  void ground_clause(const Clause& c) {
    std::vector<VarId> vars;
    c.head.collect_vars(vars);
    for (const auto& l : c.body)
      if (l.kind == BodyLiteral::Kind::Goal) l.goal.collect_vars(vars);

    std::vector<std::size_t> choice(vars.size(), 0);
    while (true) {
      BindingSet bs;
      for (std::size_t i = 0; i < vars.size(); ++i) bs = bs.bind(vars[i], universe_[choice[i]]);
      GroundClause gc;
      Term head = bs.apply(c.head);
      gc.head = format_term(head);
      gc.head_pred = pred_of(head);
      bool ok = true;
      for (const auto& l : c.body) {
        if (l.kind != BodyLiteral::Kind::Goal) continue;  // cuts are ignored bottom-up
        Term g = bs.apply(l.goal);
        if (!g.is_ground()) {
          ok = false;
          break;
        }
        if (l.polarity == BodyLiteral::Polarity::Naf)
          gc.neg.push_back(format_term(g));
        else
          gc.pos.push_back(format_term(g));
      }
      if (ok) clauses_.push_back(std::move(gc));

      std::size_t k = 0;
      while (k < vars.size()) {
        if (++choice[k] < universe_.size()) break;
        choice[k] = 0;
        ++k;
      }
      if (k == vars.size() || vars.empty()) break;
    }
  }

  void compute_strata(const SourceModule& program) {
    // stratum(p) >= stratum(q) for positive deps, > for negative; iterate to
    // a fixpoint (programs are stratified by construction)
    std::map<std::string, int> stratum;
    for (const auto& c : program.clauses) stratum[pred_of(c.head)] = 0;
    bool changed = true;
    int guard = 0;
    while (changed && guard++ < 1000) {
      changed = false;
      for (const auto& c : program.clauses) {
        int& s = stratum[pred_of(c.head)];
        for (const auto& l : c.body) {
          if (l.kind != BodyLiteral::Kind::Goal) continue;
          int dep = stratum[pred_of(l.goal)];
          int need = l.polarity == BodyLiteral::Polarity::Naf ? dep + 1 : dep;
          if (s < need) {
            s = need;
            changed = true;
          }
        }
      }
    }
    strata_ = stratum;
    max_stratum_ = 0;
    for (const auto& [p, s] : stratum) max_stratum_ = std::max(max_stratum_, s);
  }

  void run() {
    for (int s = 0; s <= max_stratum_; ++s) {
      bool changed = true;
      while (changed) {
        changed = false;
        for (const auto& gc : clauses_) {
          if (strata_[gc.head_pred] != s) continue;
          if (model_.count(gc.head)) continue;
          bool fire = true;
          for (const auto& p : gc.pos)
            if (!model_.count(p)) {
              fire = false;
              break;
            }
          if (fire)
            for (const auto& n : gc.neg)
              if (model_.count(n)) {
                fire = false;
                break;
              }
          if (fire) {
            model_.insert(gc.head);
            changed = true;
          }
        }
      }
    }
  }

  std::vector<Term> universe_;
  std::vector<GroundClause> clauses_;
  std::map<std::string, int> strata_;
  int max_stratum_ = 0;
  std::set<std::string> model_;
};

/// Random stratified, range-restricted, predicate-acyclic programs.
/// Acyclic positive dependencies keep SLDNF terminating, which is what makes
/// the fixpoint comparison meaningful; negation is only on strictly lower
/// predicates, so the programs are stratified by construction.
class StratifiedProgramGen {
 public:
  explicit StratifiedProgramGen(unsigned seed) : rng_(seed) {}

  struct Generated {
    SourceModule program;
    std::vector<Term> universe;
    std::vector<std::pair<std::string, std::size_t>> predicates;  // name/arity by index
  };

  Generated make(int max_clauses = 12) {
    Generated g;
    g.universe = {Term::atom("a"), Term::atom("b"), Term::atom("c")};
    const int npreds = 3 + pick(3);  // 3..5 predicates
    for (int i = 0; i < npreds; ++i)
      g.predicates.emplace_back("p" + std::to_string(i), static_cast<std::size_t>(pick(3)));

    g.program.oid = Term::atom("gen");
    const int nclauses = 1 + pick(max_clauses);
    for (int ci = 0; ci < nclauses; ++ci) {
      const int hp = pick(npreds);
      Clause c;
      std::vector<Term> head_args;

      std::vector<Term> vars = {Term::var("X"), Term::var("Y"), Term::var("Z")};
      const int nvars = pick(4);  // 0..3 variables available

      // positive body over strictly lower predicates
      std::vector<Term> bound_vars;
      const int npos = hp == 0 ? 0 : pick(3);
      for (int i = 0; i < npos; ++i) {
        const int bp = pick(hp);
        Term lit = make_literal(g.predicates[static_cast<std::size_t>(bp)], vars, nvars,
                                g.universe, &bound_vars);
        c.body.push_back(BodyLiteral::positive(lit));
      }
      // negative literals on lower predicates, vars already bound
      const int nneg = hp == 0 || bound_vars.empty() ? (hp == 0 ? 0 : pick(2)) : pick(2);
      for (int i = 0; i < nneg && hp > 0; ++i) {
        const int bp = pick(hp);
        Term lit = make_bound_literal(g.predicates[static_cast<std::size_t>(bp)], bound_vars,
                                      g.universe);
        c.body.push_back(BodyLiteral::naf(lit));
      }
      // head args restricted to bound vars or constants
      const auto& [hname, harity] = g.predicates[static_cast<std::size_t>(hp)];
      for (std::size_t i = 0; i < harity; ++i) {
        if (!bound_vars.empty() && pick(2) == 0)
          head_args.push_back(bound_vars[static_cast<std::size_t>(pick(
              static_cast<int>(bound_vars.size())))]);
        else
          head_args.push_back(g.universe[static_cast<std::size_t>(pick(3))]);
      }
      c.head = harity == 0 ? Term::atom(hname) : Term::compound(hname, std::move(head_args));
      g.program.clauses.push_back(std::move(c));
    }
    return g;
  }

  /// Every ground atom over the generated predicate signatures.
  static std::vector<Term> herbrand_base(const Generated& g) {
    std::vector<Term> out;
    for (const auto& [name, arity] : g.predicates) {
      if (arity == 0) {
        out.push_back(Term::atom(name));
        continue;
      }
      std::vector<std::size_t> idx(arity, 0);
      while (true) {
        std::vector<Term> args;
        for (std::size_t i = 0; i < arity; ++i) args.push_back(g.universe[idx[i]]);
        out.push_back(Term::compound(name, std::move(args)));
        std::size_t k = 0;
        while (k < arity) {
          if (++idx[k] < g.universe.size()) break;
          idx[k] = 0;
          ++k;
        }
        if (k == arity) break;
      }
    }
    return out;
  }

  std::mt19937& rng() { return rng_; }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Term make_literal(const std::pair<std::string, std::size_t>& pred, const std::vector<Term>& vars,
                    int nvars, const std::vector<Term>& universe, std::vector<Term>* bound) {
    const auto& [name, arity] = pred;
    if (arity == 0) return Term::atom(name);
    std::vector<Term> args;
    for (std::size_t i = 0; i < arity; ++i) {
      if (nvars > 0 && pick(2) == 0) {
        Term v = vars[static_cast<std::size_t>(pick(nvars))];
        bool seen = false;
        for (const auto& b : *bound)
          if (b == v) seen = true;
        if (!seen) bound->push_back(v);
        args.push_back(v);
      } else {
        args.push_back(universe[static_cast<std::size_t>(pick(3))]);
      }
    }
    return Term::compound(name, std::move(args));
  }

  Term make_bound_literal(const std::pair<std::string, std::size_t>& pred,
                          const std::vector<Term>& bound, const std::vector<Term>& universe) {
    const auto& [name, arity] = pred;
    if (arity == 0) return Term::atom(name);
    std::vector<Term> args;
    for (std::size_t i = 0; i < arity; ++i) {
      if (!bound.empty() && pick(2) == 0)
        args.push_back(bound[static_cast<std::size_t>(pick(static_cast<int>(bound.size())))]);
      else
        args.push_back(universe[static_cast<std::size_t>(pick(3))]);
    }
    return Term::compound(name, std::move(args));
  }

  std::mt19937 rng_;
};

}  // namespace reactor::testing

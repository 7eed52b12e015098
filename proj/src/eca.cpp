#include "reactor/eca.hpp"

namespace reactor {

const char* to_string(EcaOutcome::Status s) {
  switch (s) {
    case EcaOutcome::Status::Fired: return "fired";
    case EcaOutcome::Status::ElseFired: return "else_fired";
    case EcaOutcome::Status::TimeSkip: return "time_skip";
    case EcaOutcome::Status::EventSkip: return "event_skip";
    case EcaOutcome::Status::Failed: return "failed";
  }
  return "?";
}

namespace {

std::optional<Term> slot(const Solution& sol, const Term& var) {
  Term w = sol.bindings.apply(var);
  if (w.kind() == TermKind::Variable) return std::nullopt;  // Blank
  return w;
}

}  // namespace

EcaCollection collect_eca_rules(SolveContext& ctx, const SolverConfig& cfg) {
  EcaCollection out;
  for (std::size_t arity : {std::size_t{2}, std::size_t{3}, std::size_t{4}, std::size_t{6}}) {
    std::vector<Term> vars;
    for (std::size_t i = 0; i < arity; ++i)
      vars.push_back(Term::var("_Eca" + std::to_string(i), next_global_var_index()));
    Term query = Term::compound("eca", std::vector<Term>(vars));
    for (const auto& sol : solve_all({BodyLiteral::positive(query)}, ctx, cfg)) {
      EcaRule r;
      switch (arity) {
        case 2:
          r.condition = slot(sol, vars[0]);
          r.action = slot(sol, vars[1]);
          break;
        case 3:
          r.event = slot(sol, vars[0]);
          r.condition = slot(sol, vars[1]);
          r.action = slot(sol, vars[2]);
          break;
        case 4:
          r.event = slot(sol, vars[0]);
          r.condition = slot(sol, vars[1]);
          r.action = slot(sol, vars[2]);
          r.post = slot(sol, vars[3]);
          break;
        case 6:
          r.time = slot(sol, vars[0]);
          r.event = slot(sol, vars[1]);
          r.condition = slot(sol, vars[2]);
          r.action = slot(sol, vars[3]);
          r.post = slot(sol, vars[4]);
          r.els = slot(sol, vars[5]);
          break;
      }
      if (sol.root_oid) {
        r.source_oid = *sol.root_oid;
        r.clause_index = sol.root_clause_index;
        r.id = format_term(*sol.root_oid) + "#" + std::to_string(sol.root_clause_index) + "/" +
               std::to_string(arity);
      } else {
        r.id = "eca/" + std::to_string(arity);
      }
      out.rules.push_back(std::move(r));
    }
  }
  for (const auto& ref : ctx.kb->all_clauses()) {
    const auto [f, a] = ref.clause->head.predicate_indicator();
    if (f == "eca" && a != 2 && a != 3 && a != 4 && a != 6)
      out.malformed.push_back("eca/" + std::to_string(a) + " in " + format_term(ref.oid));
  }
  return out;
}

namespace {

BodyLiteral part_literal(const Term& part) {
  if (part.kind() == TermKind::Constant && part.symbol() == "!") return BodyLiteral::cut();
  return BodyLiteral::positive(part);
}

// First solution of a part conjunction under seed bindings; effects of the
// found path stay, a failed search leaves none (SolutionStream close).
std::optional<Solution> run_part(const std::vector<BodyLiteral>& goals, const BindingSet& seed,
                                 SolveContext& ctx, SolverConfig cfg, const std::string& site) {
  if (goals.empty()) {
    Solution s;
    s.bindings = seed;
    return s;
  }
  cfg.query_site_prefix = site;
  SolutionStream stream(goals, ctx, std::move(cfg), seed);
  auto sol = stream.next();
  stream.close();
  return sol;
}

}  // namespace

EcaOutcome evaluate_eca(const EcaRule& rule, SolveContext& ctx, const SolverConfig& cfg) {
  EcaOutcome out;
  out.rule_id = rule.id;
  KnowledgeBase& kb = *ctx.kb;
  KbMarker start = kb.checkpoint();
  const auto rollback = [&] {
    KbMarker eff = start;
    if (eff.seq < kb.sealed_seq()) eff.seq = kb.sealed_seq();
    kb.rollback_to(eff);
  };
  const auto delta_since = [&](std::uint64_t seq) {
    std::vector<std::uint64_t> seqs;
    for (const auto& rec : kb.log())
      if (rec.seq > seq) seqs.push_back(rec.seq);
    return seqs;
  };

  try {
    BindingSet env;
    if (rule.time) {
      auto sol = run_part({part_literal(*rule.time)}, env, ctx, cfg, "eca:" + rule.id + ":t");
      if (!sol) {
        out.status = EcaOutcome::Status::TimeSkip;
        return out;
      }
      env = sol->bindings;
    }
    if (rule.event) {
      auto sol = run_part({part_literal(*rule.event)}, env, ctx, cfg, "eca:" + rule.id + ":e");
      if (!sol) {
        out.status = EcaOutcome::Status::EventSkip;
        return out;
      }
      env = sol->bindings;
    }

    std::vector<BodyLiteral> cap;
    if (rule.condition) cap.push_back(part_literal(*rule.condition));
    if (rule.action) cap.push_back(part_literal(*rule.action));
    if (rule.post) cap.push_back(part_literal(*rule.post));
    auto sol = run_part(cap, env, ctx, cfg, "eca:" + rule.id + ":cap");
    if (sol) {
      out.status = EcaOutcome::Status::Fired;
      out.bindings = sol->bindings;
      out.transitions = delta_since(start.seq);
      return out;
    }

    // Blank else is trivially true: when T∧E succeed the outcome is always
    // one of fired/else_fired, per (C∧A∧P)∨EL.
    std::vector<BodyLiteral> el_goals;
    if (rule.els) el_goals.push_back(part_literal(*rule.els));
    auto esol = run_part(el_goals, env, ctx, cfg, "eca:" + rule.id + ":el");
    if (esol) {
      out.status = EcaOutcome::Status::ElseFired;
      out.bindings = esol->bindings;
      out.transitions = delta_since(start.seq);
      return out;
    }
    out.status = EcaOutcome::Status::Failed;
    rollback();
    return out;
  } catch (const std::exception& e) {
    out.status = EcaOutcome::Status::Failed;
    out.error = e.what();
    rollback();
    return out;
  }
}

}  // namespace reactor

#pragma once

#include "reactor/solver.hpp"

namespace reactor {

/// A normalized six-part reactive rule. Absent optionals are Blank parts
/// (trivially true). Parts share variables: bindings computed while
/// evaluating one part flow into the next.
struct EcaRule {
  std::optional<Term> time;
  std::optional<Term> event;
  std::optional<Term> condition;
  std::optional<Term> action;
  std::optional<Term> post;
  std::optional<Term> els;
  Term source_oid;
  std::size_t clause_index = 0;
  std::string id;  // stable per (source clause, arity); used for outcome and site keys
};

struct EcaOutcome {
  enum class Status { Fired, ElseFired, TimeSkip, EventSkip, Failed };
  std::string rule_id;
  Status status = Status::Failed;
  BindingSet bindings;
  std::vector<std::uint64_t> transitions;
  std::string error;  // recorded solver error, if any
};

const char* to_string(EcaOutcome::Status s);

struct EcaCollection {
  std::vector<EcaRule> rules;
  std::vector<std::string> malformed;  // eca/N heads with N outside {2,3,4,6}
};

/// Derive every eca fact of arity 2/3/4/6 via the universal queries
/// eca(C,A)?, eca(E,C,A)?, eca(E,C,A,P)?, eca(T,E,C,A,P,EL)? and normalize
/// slot positions. Unbound slots are Blank.
EcaCollection collect_eca_rules(SolveContext& ctx, const SolverConfig& cfg = {});

/// Forward-directed evaluation: T (skip), E (skip), then C∧A∧P as one
/// backtracking conjunction; on its failure EL under the T∧E bindings.
/// A failing evaluation leaves the KB as it found it.
EcaOutcome evaluate_eca(const EcaRule& rule, SolveContext& ctx, const SolverConfig& cfg = {});

}  // namespace reactor

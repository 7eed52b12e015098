#pragma once

#include "reactor/solver.hpp"

namespace reactor {

/// A stored event occurrence lifted to interval form. start_term/end_term
/// keep the originally written time representation (datetime, integer,
/// millis) so detection results echo the input's notation.
struct Occurrence {
  Term event;
  TimeInterval interval;
  Term start_term;
  Term end_term;
  std::size_t order = 0;   // KB scan order, tie-breaker
  bool transient = true;   // occurs/2 (consumable); false for happens/2
};

/// A complex-event detection.
///
/// Detection semantics, pinned here for both the detector and the test
/// oracle:
///   sequence(X1..Xn)   adjacent child detections pointwise-ordered
///                      (iv_i <= iv_{i+1}) with no declared terminator
///                      occurrence strictly between end(X_i) and
///                      start(X_{i+1}); scope for the terminator check is
///                      the node's own leaf types. Result spans first start
///                      to last end.
///   or(..)             any child's detection, child order.
///   xor(..)            exactly one child type occurred in the current EIS
///                      snapshot; that child's detections.
///   and(..)            one detection per child combination; envelope.
///   concurrent(..)     child combinations with identical intervals.
///   neg(Ts,[E1,E2])    an [E1,E2] window pair with no occurrence of any T
///                      strictly inside it.
///   any(n,E)           each n-subset of E occurrences, ascending; envelope.
///   aperiodic(E,[E1,E2]) each E occurrence strictly inside a window pair,
///                      at the occurrence's own interval.
/// "Strictly inside (a,b)" means a < start and end < b.
struct Detection {
  TimeInterval interval;
  Term start_term;
  Term end_term;
  std::vector<Occurrence> contributors;
  BindingSet bindings;
};

bool is_event_operator(const std::string& functor, std::size_t arity);

/// Scan stored occurs/2 (and optionally happens/2) facts, sorted by
/// (start, end, scan order). Facts whose time does not normalize to an
/// interval are skipped.
std::vector<Occurrence> collect_occurrences(const KnowledgeBase& kb, bool include_happens);

/// [t,t] for points; a two-element list for intervals; integers accepted as
/// raw timestamps.
std::optional<TimeInterval> term_to_interval(const Term& t);

/// Record occurs(event, time) under the type-specific eis module
/// (oid eis(functor)). The event must be ground.
void record_occurrence(KnowledgeBase& kb, const Term& event, const Term& time_term);

enum class ConsumePolicy { All, First, Last };

/// consume(eis(type)) removes per policy; consume(pattern) removes the
/// occurrences unifying with the pattern from that type's eis. Unknown keys
/// are a no-op.
void consume(KnowledgeBase& kb, const Term& key_or_pattern, ConsumePolicy policy);

/// Evaluate an event-algebra expression over the current EIS.
std::vector<Detection> detect_expr(const Term& expr, SolverMachine& m);

/// Clipped-persistence holdsAt over initiates/terminates and stored
/// occurrences (both occurs and happens views).
std::vector<BindingSet> holds_at(const Term& fluent, const Term& time, SolverMachine& m);

void register_event_calculus_builtins(BuiltinTable& t);

}  // namespace reactor

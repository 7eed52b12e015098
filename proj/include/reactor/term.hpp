#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reactor {

class Term;

/// Identity of a logic variable. Clauses are renamed apart by giving every
/// instantiation a fresh index, so (name, index) pairs never collide between
/// two clause activations.
struct VarId {
  std::string name;
  int index = 0;

  bool operator==(const VarId& o) const { return index == o.index && name == o.name; }
  bool operator<(const VarId& o) const {
    if (index != o.index) return index < o.index;
    return name < o.name;
  }
};

enum class TermKind {
  Variable,
  Constant,   // atoms and string literals
  Int,
  Float,
  TimePoint,  // epoch milliseconds
  Compound,
  List,
};

/// Immutable term value. Copying a Term copies a shared pointer; all
/// structural data is shared and never mutated after construction, so terms
/// may be handed between threads freely.
///
/// Lists keep an optional tail variable ([H|T]); a tail may only be
/// instantiated to another list or left unbound. Constants carry a
/// presentation flag distinguishing string literals ("...") from atoms, which
/// formatting honours and structural equality ignores.
///
/// Any node may carry annotations (string key/value pairs) used by the XML
/// interchange layer for type/mode attributes. Annotations are ignored by
/// unification and by equals() unless explicitly requested.
class Term {
 public:
  using Annotations = std::map<std::string, std::string>;

  Term();  // constant "undef"; prefer the factories below

  static Term var(std::string name, int index = 0);
  static Term atom(std::string symbol);
  static Term string(std::string text);
  static Term integer(std::int64_t v);
  static Term real(double v);
  static Term time_point(std::int64_t epoch_millis);
  static Term compound(std::string functor, std::vector<Term> args);
  static Term list(std::vector<Term> items);
  static Term list(std::vector<Term> items, Term tail_var);
  static Term nil() { return list({}); }

  TermKind kind() const;
  bool is(TermKind k) const { return kind() == k; }

  // Variable
  const VarId& var_id() const;

  // Constant
  const std::string& symbol() const;
  bool is_string() const;

  // Numbers / time
  std::int64_t int_value() const;
  double float_value() const;
  std::int64_t epoch_millis() const;

  // Compound
  const std::string& functor() const;
  const std::vector<Term>& args() const;
  std::size_t arity() const;

  // List
  const std::vector<Term>& items() const;
  const std::optional<Term>& tail() const;  // unbound tail variable, if any

  /// Functor/arity view used for predicate indexing: constants are 0-ary,
  /// compounds report their own functor.
  std::pair<std::string, std::size_t> predicate_indicator() const;

  bool is_ground() const;
  void collect_vars(std::vector<VarId>& out) const;

  /// Structural equality. Variables compare by identity, constants by symbol
  /// (string flag ignored). Annotations participate only when with_meta.
  bool equals(const Term& o, bool with_meta = false) const;

  Term with_annotations(Annotations a) const;
  const Annotations* annotations() const;

  bool operator==(const Term& o) const { return equals(o); }
  bool operator!=(const Term& o) const { return !equals(o); }

 private:
  struct Rep;
  explicit Term(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

/// Closed interval in epoch milliseconds. An atomic occurrence uses
/// start == end.
struct TimeInterval {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool valid() const { return start <= end; }
  bool operator==(const TimeInterval& o) const { return start == o.start && end == o.end; }
};

/// Pointwise interval order: i1.start <= i2.start and i1.end <= i2.end.
/// Reflexive and transitive; admits equal endpoints (shared midpoints in
/// event sequences).
bool interval_leq(const TimeInterval& i1, const TimeInterval& i2);

/// Calendar conversion, second granularity, proleptic Gregorian.
/// Round trip epoch -> (y,m,d,h,mi,s) -> epoch is the identity for whole
/// seconds.
struct CivilTime {
  int year;
  int month;
  int day;
  int hour;
  int minute;
  int second;
};
std::int64_t civil_to_epoch_millis(const CivilTime& c);
CivilTime epoch_millis_to_civil(std::int64_t ms);

/// Recognizes datetime(Y,M,D,H,Mi,S) compounds with integer args.
std::optional<std::int64_t> datetime_term_to_epoch(const Term& t);
Term epoch_to_datetime_term(std::int64_t ms);

/// Substitution map. Value semantics: bind() returns an extended copy. The
/// resolved form of a term under apply() contains no bound variables at any
/// depth, which makes application idempotent.
class BindingSet {
 public:
  BindingSet() = default;

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }

  std::optional<Term> lookup(const VarId& v) const;
  BindingSet bind(const VarId& v, Term t) const;

  /// Dereference top-level variable chains only.
  Term walk(const Term& t) const;
  /// Deep substitution, splicing bound list tails.
  Term apply(const Term& t) const;

  const std::map<VarId, Term>& entries() const { return map_; }

 private:
  std::map<VarId, Term> map_;
};

/// Most general unifier extending `seed`, or nullopt when none exists.
/// Failure is a value, not an error. With occurs_check (the default) a
/// variable never unifies with a term containing it.
std::optional<BindingSet> unify(const Term& a, const Term& b, const BindingSet& seed,
                                bool occurs_check = true);

inline std::optional<BindingSet> unify(const Term& a, const Term& b, bool occurs_check = true) {
  return unify(a, b, BindingSet{}, occurs_check);
}

}  // namespace reactor

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reactor/kb.hpp"

namespace reactor {

class SolveError : public std::runtime_error {
 public:
  enum class Kind {
    DepthExceeded,
    FlounderingNaf,
    UnknownBuiltin,
    BuiltinTypeError,
    Instantiation,
    Messaging,
    Other,
  };
  SolveError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

/// Behavior table for external/procedural stubs (dotted qualified names,
/// sendMessage, println-style side effects configured per test or config
/// file). The default mode records the call and succeeds.
class StubTable {
 public:
  enum class Mode { Succeed, Fail, FailFirstN, Raise };
  struct Behavior {
    Mode mode = Mode::Succeed;
    int fail_count = 0;  // FailFirstN budget
    std::string raise_tag;
  };
  struct CallRecord {
    std::string functor;
    std::vector<Term> args;
  };

  void set(const std::string& functor, Behavior b) { table_[functor] = b; }
  Behavior* find(const std::string& functor) {
    auto it = table_.find(functor);
    return it == table_.end() ? nullptr : &it->second;
  }
  void record(std::string functor, std::vector<Term> args) {
    calls_.push_back({std::move(functor), std::move(args)});
  }
  const std::vector<CallRecord>& calls() const { return calls_; }
  std::size_t call_count(const std::string& functor) const {
    std::size_t n = 0;
    for (const auto& c : calls_)
      if (c.functor == functor) ++n;
    return n;
  }
  void clear_calls() { calls_.clear(); }

 private:
  std::unordered_map<std::string, Behavior> table_;
  std::vector<CallRecord> calls_;
};

/// In-memory tables backing the sql_select/dbopen stubs.
class TableRegistry {
 public:
  using Row = std::vector<std::pair<std::string, Term>>;
  void define(const std::string& name, std::vector<Row> rows) { tables_[name] = std::move(rows); }
  const std::vector<Row>* find(const std::string& name) const {
    auto it = tables_.find(name);
    return it == tables_.end() ? nullptr : &it->second;
  }

 private:
  std::unordered_map<std::string, std::vector<Row>> tables_;
};

/// Per-call-site state for the periodic interval/2 builtin, keyed by
/// (module oid, clause index, literal index).
class IntervalSiteTable {
 public:
  std::optional<std::int64_t> last_fire(const std::string& site) const {
    auto it = last_.find(site);
    if (it == last_.end()) return std::nullopt;
    return it->second;
  }
  void mark(const std::string& site, std::int64_t t) { last_[site] = t; }
  void reset() { last_.clear(); }

 private:
  std::unordered_map<std::string, std::int64_t> last_;
};

class SolverMachine;

struct BuiltinResult {
  enum class Kind { Fail, Det, Multi, Push, Suspend, NotApplicable };
  Kind kind = Kind::Fail;
  BindingSet det;
  std::vector<BindingSet> alts;
  std::vector<BodyLiteral> push_goals;

  static BuiltinResult fail() { return {}; }
  static BuiltinResult ok(BindingSet b) {
    BuiltinResult r;
    r.kind = Kind::Det;
    r.det = std::move(b);
    return r;
  }
  static BuiltinResult multi(std::vector<BindingSet> alts) {
    BuiltinResult r;
    r.kind = Kind::Multi;
    r.alts = std::move(alts);
    return r;
  }
  static BuiltinResult push(std::vector<BodyLiteral> goals) {
    BuiltinResult r;
    r.kind = Kind::Push;
    r.push_goals = std::move(goals);
    return r;
  }
  static BuiltinResult suspend() {
    BuiltinResult r;
    r.kind = Kind::Suspend;
    return r;
  }
  /// Fall through to ordinary KB clause resolution (detect/2 on
  /// non-operator arguments, user-defined predicates shadowed case-by-case).
  static BuiltinResult not_applicable() {
    BuiltinResult r;
    r.kind = Kind::NotApplicable;
    return r;
  }
};

using BuiltinFn = std::function<BuiltinResult(const Term& goal, SolverMachine& m)>;

/// Dispatch table functor/arity -> handler; vararg entries match any arity
/// of the functor at or above the registered minimum.
class BuiltinTable {
 public:
  void set(const std::string& functor, std::size_t arity, BuiltinFn fn) {
    exact_[key(functor, arity)] = std::move(fn);
  }
  void set_vararg(const std::string& functor, std::size_t min_arity, BuiltinFn fn) {
    vararg_[functor] = {min_arity, std::move(fn)};
  }
  const BuiltinFn* find(const std::string& functor, std::size_t arity) const {
    auto it = exact_.find(key(functor, arity));
    if (it != exact_.end()) return &it->second;
    auto v = vararg_.find(functor);
    if (v != vararg_.end() && arity >= v->second.first) return &v->second.second;
    return nullptr;
  }

 private:
  static std::string key(const std::string& f, std::size_t a) {
    return f + "/" + std::to_string(a);
  }
  std::unordered_map<std::string, BuiltinFn> exact_;
  std::unordered_map<std::string, std::pair<std::size_t, BuiltinFn>> vararg_;
};

/// Core control/arithmetic/update builtins. The event-calculus and messaging
/// modules add theirs via their register_* functions.
BuiltinTable core_builtin_table();

struct SolverConfig {
  int max_depth = 10000;
  bool occurs_check = true;
  /// Site-key prefix for goals passed directly to solve (not coming from a
  /// KB clause); lets periodic builtins in distinct ECA rule parts keep
  /// separate state.
  std::string query_site_prefix = "query";
};

class MessagingEngine;

/// Services available to builtin handlers. Everything optional except the
/// KB; handlers raise BuiltinTypeError when a facility they need is absent.
struct SolveContext {
  KnowledgeBase* kb = nullptr;
  const BuiltinTable* builtins = nullptr;
  std::function<std::int64_t()> now;
  MessagingEngine* messaging = nullptr;
  StubTable* stubs = nullptr;
  TableRegistry* tables = nullptr;
  IntervalSiteTable* interval_sites = nullptr;
  std::ostream* out = nullptr;
  std::string agent_name = "self";
};

struct Solution {
  BindingSet bindings;
  /// Transition seqs performed on the path that produced this solution.
  std::vector<std::uint64_t> transitions;
  /// Module/clause that resolved the root goal (when KB resolution did).
  std::optional<Term> root_oid;
  std::size_t root_clause_index = 0;
};

/// Lazy depth-first solution stream. Pulling one solution performs no work
/// towards the next. Dropping or close()-ing the stream finalizes the KB per
/// executional entailment: the working state is rolled back to the
/// solve-start marker and every emitted solution's transition delta is
/// re-applied in order (duplicate oids: last writer wins). A query with no
/// solutions therefore leaves the KB exactly as it was.
class SolutionStream {
 public:
  SolutionStream(std::vector<BodyLiteral> goals, SolveContext& ctx, SolverConfig cfg,
                 BindingSet seed = {});
  ~SolutionStream();
  SolutionStream(SolutionStream&&) noexcept;
  SolutionStream& operator=(SolutionStream&&) noexcept;

  std::optional<Solution> next();
  void close();

 private:
  std::unique_ptr<SolverMachine> m_;
};

/// Convenience wrappers.
std::vector<Solution> solve_all(std::vector<BodyLiteral> goals, SolveContext& ctx,
                                SolverConfig cfg = {}, std::size_t limit = SIZE_MAX);
bool provable(const Term& goal, SolveContext& ctx, SolverConfig cfg = {});
std::optional<Solution> solve_first(const Term& goal, SolveContext& ctx, SolverConfig cfg = {});

/// Resolution-time services exposed to builtin handlers.
class SolverMachine {
 public:
  virtual ~SolverMachine() = default;
  virtual SolveContext& ctx() = 0;
  virtual const SolverConfig& config() const = 0;
  virtual const BindingSet& bindings() const = 0;
  virtual Term resolve(const Term& t) const = 0;  // deep apply of current bindings
  /// Conjunction of goals still pending after the currently executing
  /// builtin, in execution order (the and-continuation).
  virtual std::vector<BodyLiteral> remaining_goals() const = 0;
  /// (module oid, clause index, literal index) of the current goal.
  virtual std::string current_site() const = 0;
  /// Sub-derivations against the same context (fresh machine, shared KB).
  virtual bool sub_prove(const Term& goal) = 0;
  virtual std::optional<BindingSet> sub_first(const Term& goal) = 0;
  /// All solutions of a side-effect-free sub-derivation (effects are rolled
  /// back), seeded with the current bindings.
  virtual std::vector<BindingSet> sub_all(const Term& goal) = 0;
  virtual int fresh_var_index() = 0;
  /// Roll back, tolerating a sealed log (rolls to the seal instead).
  virtual void rollback_tolerant(const KbMarker& m) = 0;
  /// Marker taken when this derivation started (rollback/0 target).
  virtual KbMarker start_marker() const = 0;
  /// on_exception/2 registration, scoped to this derivation.
  virtual void register_exception_handler(Term pattern, Term handler) = 0;
};

/// Shared fresh-variable counter for renaming clauses apart.
int next_global_var_index();

/// Rename a clause's variables apart with a fresh index.
Clause rename_clause(const Clause& c, int index);

}  // namespace reactor

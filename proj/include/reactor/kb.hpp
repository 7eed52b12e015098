#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "reactor/parser.hpp"

namespace reactor {

class KbError : public std::runtime_error {
 public:
  enum class Kind { DuplicateOid, UnknownOid, NotFound, FetchError, StaleMarker };
  KbError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

/// One logged KB state transition. Negative records snapshot the removed
/// module (and its position) so inversion is total.
struct TransitionRecord {
  enum class Polarity { Positive, Negative };
  std::uint64_t seq = 0;
  Polarity polarity = Polarity::Positive;
  Term oid;
  std::shared_ptr<const SourceModule> payload;
  std::size_t position = 0;  // module slot, for inverting removals
};

struct IntegrityConstraint {
  enum class Mode { MustHold, MustFail };
  Mode mode = Mode::MustHold;
  Term goal;
};

/// A requested update inside a transaction.
struct UpdateRequest {
  enum class Kind { Add, Remove, Update };
  Kind kind = Kind::Add;
  std::optional<Term> oid;  // absent: anonymous (auto(n)) or locator import
  std::string text;         // clause source, or import locator when is_locator
  bool is_locator = false;
  std::vector<Term> args;   // placeholder substitution values
};

struct TransactionOutcome {
  bool committed = false;
  std::string reason;                       // on rollback
  std::vector<std::uint64_t> transitions;   // seqs applied (committed case)
};

/// Marker for checkpoint/rollback. Only valid against the KB lineage that
/// produced it and while no commit has sealed past it.
struct KbMarker {
  std::uint64_t seq = 0;
  std::uint64_t lineage = 0;
};

using GoalProver = std::function<bool(const Term& goal)>;

/// The ordered, module-structured knowledge base. Modules are oid-keyed
/// ordered clause sets; clause iteration order is module insertion order then
/// intra-module order, and every update is logged so that replaying the log
/// from the initial state reproduces the live module map bit-for-bit.
///
/// Not synchronized: mutation must be serialized by the owner (single
/// writer). snapshot() yields an independent copy sharing immutable module
/// payloads, safe for concurrent readers.
class KnowledgeBase {
 public:
  KnowledgeBase();

  // -- module updates ------------------------------------------------------
  void add_module(const Term& oid, SourceModule mod, bool replace = false);
  /// Placeholders _0.._n in `text` are substituted with format_term(args[i])
  /// before parsing. Facts with add/remove/update heads execute as nested
  /// updates instead of being stored.
  void add_module_text(const Term& oid, std::string_view text, const std::vector<Term>& args = {},
                       bool replace = false);
  /// Anonymous add: oid auto(n).
  Term add_anonymous(std::string_view text, const std::vector<Term>& args = {});
  void remove_module(const Term& oid);
  /// remove-if-present + add (replace semantics), two transitions.
  void update_module(const Term& oid, std::string_view text, const std::vector<Term>& args = {});

  /// Load from a file path or http(s) URL; the locator becomes the oid.
  void import_module(const std::string& locator);

  bool has_module(const Term& oid) const;
  const SourceModule* find_module(const Term& oid) const;
  std::vector<Term> module_oids() const;

  // -- clause access -------------------------------------------------------
  struct ClauseRef {
    Term oid;
    std::size_t module_pos = 0;
    std::size_t clause_index = 0;
    const Clause* clause = nullptr;
  };
  /// All clauses for functor/arity in global order.
  std::vector<ClauseRef> clauses_for(const std::string& functor, std::size_t arity) const;
  /// Every clause in global order.
  std::vector<ClauseRef> all_clauses() const;

  // -- integrity -----------------------------------------------------------
  /// Reserved facts integrity(must_hold|must_fail, Goal).
  std::vector<IntegrityConstraint> integrity_constraints() const;

  // -- transactions and rollback -------------------------------------------
  TransactionOutcome run_transaction(const std::vector<UpdateRequest>& updates,
                                     const std::vector<IntegrityConstraint>& extra_ics,
                                     const GoalProver& prove);

  KbMarker checkpoint() const;
  /// Invert, newest first, every transition after the marker. Throws
  /// StaleMarker for markers from another lineage or older than the seal.
  void rollback_to(const KbMarker& m);
  /// Seal the log at its current end: earlier transitions can no longer be
  /// rolled back.
  void seal();
  std::uint64_t sealed_seq() const { return sealed_; }

  // -- log / state ---------------------------------------------------------
  const std::vector<TransitionRecord>& log() const { return log_; }
  std::uint64_t state_counter() const { return next_seq_; }
  /// Re-apply a retained transition delta (used when merging committed
  /// solution paths): duplicate-oid adds replace, removals of missing oids
  /// are skipped.
  void replay(const std::vector<TransitionRecord>& delta);

  KnowledgeBase snapshot() const;
  bool deep_equals(const KnowledgeBase& o) const;
  /// Formatted module map, for equality checks and debugging.
  std::string fingerprint() const;

 private:
  struct Entry {
    Term oid;
    std::string key;  // formatted oid
    std::shared_ptr<const SourceModule> mod;
  };

  std::size_t index_of(const std::string& key) const;
  void insert_entry(const Term& oid, std::shared_ptr<const SourceModule> mod, std::size_t pos,
                    TransitionRecord::Polarity pol);
  void apply_update(const UpdateRequest& u);
  void invert(const TransitionRecord& rec);

  std::vector<Entry> entries_;
  std::vector<TransitionRecord> log_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t sealed_ = 0;
  std::uint64_t lineage_ = 0;
  std::uint64_t auto_counter_ = 0;
};

/// Read a locator (filesystem path or http(s) URL) into text.
std::string resolve_import(const std::string& locator);

}  // namespace reactor

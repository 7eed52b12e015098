#pragma once

#include <deque>
#include <functional>
#include <mutex>

#include "reactor/solver.hpp"

namespace reactor {

/// Conversation-scoped event message envelope.
struct Message {
  Term xid;
  Term protocol;
  Term sender;       // stamped by the sending engine
  Term target;       // agent the message is addressed to
  Term performative;
  Term payload;
  std::vector<Term> context;

  /// rcvMsg(XID, Protocol, Sender, Performative, Payload | Context) shape
  /// used for pattern matching on the receiving side.
  Term to_term() const;
};

/// A suspended computation: fires when a message matching `pattern` arrives,
/// then solves the captured continuation under the stored bindings.
struct TemporalReactionRule {
  std::int64_t id = 0;
  Term pattern;
  std::vector<BodyLiteral> continuation;
  BindingSet env;
  bool one_shot = true;
  std::vector<std::int64_t> inbound;   // partitions that must be active
  std::vector<std::int64_t> outbound;  // partitions deactivated on firing
};

struct JoinBarrier {
  Term xid;
  Term name;
  Term me;
  std::vector<Term> expected;           // patterns, in declaration order
  std::vector<std::optional<Term>> arrived;
  BindingSet env;
  bool done = false;
};

/// Messaging engine: one inbound queue consumed by one logical dispatch
/// loop; reactions, partitions and join barriers are engine-level state and
/// are not subject to KB rollback. Queue and registries are mutex-guarded so
/// transports and concurrent evaluations may send and register freely; poll()
/// must only run on one activity at a time.
class MessagingEngine {
 public:
  using Deliver = std::function<void(const Message&)>;

  explicit MessagingEngine(std::string agent_name) : agent_(std::move(agent_name)) {}

  const std::string& agent_name() const { return agent_; }

  // -- outbound --------------------------------------------------------------
  /// Route per protocol: self/loopback to the own queue; remote protocols
  /// (tcp and its aliases jms/http/soap/esb/jade) through the peer registry.
  void send(const Message& m);
  void connect_peer(const std::string& agent, Deliver deliver);
  /// Invoked when a remote protocol names an unknown peer agent == own name
  /// still loops back.
  void enqueue(Message m);
  void set_wakeup(std::function<void()> fn) { wakeup_ = std::move(fn); }

  // -- dispatch ---------------------------------------------------------------
  /// Drain the inbound queue on the calling activity. Returns reactions fired.
  std::size_t poll(SolveContext& ctx, const SolverConfig& cfg = {});
  std::size_t dispatch_inbound(const Message& m, SolveContext& ctx, const SolverConfig& cfg);
  std::size_t queued() const;

  // -- reactions / partitions / joins ----------------------------------------
  std::int64_t register_reaction(TemporalReactionRule r);
  std::size_t reaction_count() const;
  std::int64_t fresh_partition();
  bool partition_known(std::int64_t id) const;
  bool partition_active(std::int64_t id) const;
  void deactivate_partition(std::int64_t id);

  void init_join(Term xid, Term name, Term me, std::vector<Term> expected, BindingSet env);
  /// Returns the handler goal to run when the barrier completes.
  std::optional<Term> join(const Term& me, const Term& xid, const Term& name, const Term& value,
                           bool occurs_check);

  Term fresh_conversation_id();

  /// Messages this engine attempted to send (for tests and the CLI log).
  const std::vector<Message>& sent_log() const { return sent_log_; }

 private:
  void sweep_inactive_reactions_locked();

  std::string agent_;
  mutable std::recursive_mutex mu_;
  std::deque<Message> inbound_;
  std::vector<TemporalReactionRule> reactions_;
  std::unordered_map<std::int64_t, bool> partitions_;
  std::vector<JoinBarrier> joins_;
  std::unordered_map<std::string, Deliver> peers_;
  std::vector<Message> sent_log_;
  std::function<void()> wakeup_;
  std::int64_t next_id_ = 1;
  std::int64_t next_conversation_ = 1;
};

void register_messaging_builtins(BuiltinTable& t);

}  // namespace reactor

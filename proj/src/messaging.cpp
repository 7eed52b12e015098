#include "reactor/messaging.hpp"

#include <algorithm>

namespace reactor {

namespace {

[[noreturn]] void messaging_error(const std::string& what) {
  throw SolveError(SolveError::Kind::Messaging, what);
}

const std::vector<std::string>& remote_protocols() {
  static const std::vector<std::string> names = {"tcp", "jms", "http", "soap", "esb", "jade"};
  return names;
}

bool is_remote_protocol(const std::string& p) {
  const auto& names = remote_protocols();
  return std::find(names.begin(), names.end(), p) != names.end();
}

// Payload matching with the restricted second-order notation: a list pattern
// [Predicate|Args] matches a compound by decomposing it into functor +
// argument list.
std::optional<BindingSet> match_payload(const Term& pattern, const Term& actual,
                                        const BindingSet& seed, bool occ) {
  if (auto direct = unify(pattern, actual, seed, occ)) return direct;
  Term p = seed.walk(pattern);
  if (p.kind() != TermKind::List) return std::nullopt;
  if (actual.kind() == TermKind::Compound) {
    std::vector<Term> decomposed;
    decomposed.push_back(Term::atom(actual.functor()));
    for (const auto& a : actual.args()) decomposed.push_back(a);
    return unify(pattern, Term::list(std::move(decomposed)), seed, occ);
  }
  if (actual.kind() == TermKind::Constant)
    return unify(pattern, Term::list({actual}), seed, occ);
  return std::nullopt;
}

std::optional<BindingSet> match_message(const Term& pattern, const Message& m,
                                        const BindingSet& seed, bool occ) {
  if (pattern.kind() != TermKind::Compound || pattern.arity() < 5) return std::nullopt;
  const auto& pa = pattern.args();
  if (pa.size() != 5 + m.context.size()) return std::nullopt;
  BindingSet bs = seed;
  const Term slots[4] = {m.xid, m.protocol, m.sender, m.performative};
  for (int i = 0; i < 4; ++i) {
    auto u = unify(pa[static_cast<std::size_t>(i)], slots[i], bs, occ);
    if (!u) return std::nullopt;
    bs = std::move(*u);
  }
  auto u = match_payload(pa[4], m.payload, bs, occ);
  if (!u) return std::nullopt;
  bs = std::move(*u);
  for (std::size_t i = 0; i < m.context.size(); ++i) {
    auto uc = unify(pa[5 + i], m.context[i], bs, occ);
    if (!uc) return std::nullopt;
    bs = std::move(*uc);
  }
  return bs;
}

}  // namespace

Term Message::to_term() const {
  std::vector<Term> args = {xid, protocol, sender, performative, payload};
  for (const auto& c : context) args.push_back(c);
  return Term::compound("rcvMsg", std::move(args));
}

void MessagingEngine::enqueue(Message m) {
  {
    std::lock_guard lock(mu_);
    inbound_.push_back(std::move(m));
  }
  if (wakeup_) wakeup_();
}

std::size_t MessagingEngine::queued() const {
  std::lock_guard lock(mu_);
  return inbound_.size();
}

void MessagingEngine::connect_peer(const std::string& agent, Deliver deliver) {
  std::lock_guard lock(mu_);
  peers_[agent] = std::move(deliver);
}

void MessagingEngine::send(const Message& m0) {
  Message m = m0;
  m.sender = Term::atom(agent_);
  {
    std::lock_guard lock(mu_);
    sent_log_.push_back(m);
  }
  if (m.protocol.kind() != TermKind::Constant)
    messaging_error("sendMsg: protocol constant expected, got " + format_term(m.protocol));
  const std::string proto = m.protocol.symbol();
  const std::string target =
      m.target.kind() == TermKind::Constant ? m.target.symbol() : format_term(m.target);

  if (proto == "self" || proto == "loopback") {
    enqueue(std::move(m));
    return;
  }
  if (!is_remote_protocol(proto)) messaging_error("unknown protocol " + proto);
  if (target == "self" || target == agent_) {
    enqueue(std::move(m));
    return;
  }
  Deliver deliver;
  {
    std::lock_guard lock(mu_);
    auto it = peers_.find(target);
    if (it != peers_.end()) deliver = it->second;
  }
  if (!deliver) messaging_error("unresolvable agent " + target + " for protocol " + proto);
  deliver(m);
}

std::int64_t MessagingEngine::register_reaction(TemporalReactionRule r) {
  std::lock_guard lock(mu_);
  r.id = next_id_++;
  reactions_.push_back(std::move(r));
  return reactions_.back().id;
}

std::size_t MessagingEngine::reaction_count() const {
  std::lock_guard lock(mu_);
  return reactions_.size();
}

std::int64_t MessagingEngine::fresh_partition() {
  std::lock_guard lock(mu_);
  std::int64_t id = next_id_++;
  partitions_[id] = true;
  return id;
}

bool MessagingEngine::partition_known(std::int64_t id) const {
  std::lock_guard lock(mu_);
  return partitions_.count(id) != 0;
}

bool MessagingEngine::partition_active(std::int64_t id) const {
  std::lock_guard lock(mu_);
  auto it = partitions_.find(id);
  return it != partitions_.end() && it->second;
}

void MessagingEngine::deactivate_partition(std::int64_t id) {
  std::lock_guard lock(mu_);
  partitions_[id] = false;
  sweep_inactive_reactions_locked();
}

void MessagingEngine::sweep_inactive_reactions_locked() {
  reactions_.erase(std::remove_if(reactions_.begin(), reactions_.end(),
                                  [this](const TemporalReactionRule& r) {
                                    for (auto id : r.inbound) {
                                      auto it = partitions_.find(id);
                                      if (it != partitions_.end() && !it->second) return true;
                                    }
                                    return false;
                                  }),
                   reactions_.end());
}

Term MessagingEngine::fresh_conversation_id() {
  std::lock_guard lock(mu_);
  return Term::atom("conv" + std::to_string(next_conversation_++));
}

std::size_t MessagingEngine::poll(SolveContext& ctx, const SolverConfig& cfg) {
  std::size_t fired = 0;
  while (true) {
    Message m;
    {
      std::lock_guard lock(mu_);
      if (inbound_.empty()) break;
      m = std::move(inbound_.front());
      inbound_.pop_front();
    }
    fired += dispatch_inbound(m, ctx, cfg);
  }
  return fired;
}

std::size_t MessagingEngine::dispatch_inbound(const Message& m, SolveContext& ctx,
                                              const SolverConfig& cfg) {
  std::size_t fired = 0;

  // Inline temporal reactions, registration order. Non-matching messages are
  // skipped by these; they stay registered.
  std::vector<std::int64_t> order;
  {
    std::lock_guard lock(mu_);
    for (const auto& r : reactions_) order.push_back(r.id);
  }
  for (std::int64_t id : order) {
    std::optional<TemporalReactionRule> rule;
    {
      std::lock_guard lock(mu_);
      auto it = std::find_if(reactions_.begin(), reactions_.end(),
                             [&](const TemporalReactionRule& r) { return r.id == id; });
      if (it == reactions_.end()) continue;
      bool live = true;
      for (auto pid : it->inbound)
        if (!partition_active(pid)) live = false;
      if (!live) {
        reactions_.erase(it);
        continue;
      }
      auto match = match_message(it->pattern, m, it->env, cfg.occurs_check);
      if (!match) continue;
      rule = *it;
      rule->env = std::move(*match);
      if (it->one_shot) reactions_.erase(it);
      for (auto pid : rule->outbound) {
        partitions_[pid] = false;
      }
      sweep_inactive_reactions_locked();
    }
    ++fired;
    try {
      SolverConfig run_cfg = cfg;
      run_cfg.query_site_prefix = "reaction" + std::to_string(id);
      SolutionStream s(rule->continuation, ctx, run_cfg, rule->env);
      s.next();
      s.close();
    } catch (const std::exception&) {
      // recorded per reaction; dispatch continues
    }
  }

  // Global rcvMsg-headed rules.
  for (const auto& ref : ctx.kb->all_clauses()) {
    const auto [f, a] = ref.clause->head.predicate_indicator();
    if (f != "rcvMsg" || a < 5) continue;
    Clause renamed = rename_clause(*ref.clause, 0);
    auto match = match_message(renamed.head, m, BindingSet{}, cfg.occurs_check);
    if (!match) continue;
    ++fired;
    try {
      SolverConfig run_cfg = cfg;
      run_cfg.query_site_prefix = format_term(ref.oid) + "#" + std::to_string(ref.clause_index);
      SolutionStream s(renamed.body, ctx, run_cfg, *match);
      s.next();
      s.close();
    } catch (const std::exception&) {
    }
  }
  return fired;  // unmatched messages are dropped after the global pass
}

void MessagingEngine::init_join(Term xid, Term name, Term me, std::vector<Term> expected,
                                BindingSet env) {
  std::lock_guard lock(mu_);
  JoinBarrier b;
  b.xid = std::move(xid);
  b.name = std::move(name);
  b.me = std::move(me);
  b.expected = std::move(expected);
  b.arrived.resize(b.expected.size());
  b.env = std::move(env);
  joins_.push_back(std::move(b));
}

std::optional<Term> MessagingEngine::join(const Term& me, const Term& xid, const Term& name,
                                          const Term& value, bool occurs_check) {
  std::lock_guard lock(mu_);
  JoinBarrier* barrier = nullptr;
  for (auto& b : joins_)
    if (b.xid == xid && b.name == name) barrier = &b;
  if (!barrier) messaging_error("unknown join barrier " + format_term(name));
  if (barrier->done) return std::nullopt;

  std::size_t slot = barrier->expected.size();
  bool filled_match = false;
  for (std::size_t i = 0; i < barrier->expected.size(); ++i) {
    if (!unify(barrier->expected[i], value, barrier->env, occurs_check)) continue;
    if (barrier->arrived[i]) {
      filled_match = true;
      continue;
    }
    slot = i;
    break;
  }
  if (slot == barrier->expected.size()) {
    if (filled_match)
      messaging_error("duplicate join arrival " + format_term(value) + " for " +
                      format_term(name));
    return std::nullopt;  // no slot matches: nothing filled
  }
  barrier->arrived[slot] = value;

  for (const auto& a : barrier->arrived)
    if (!a) return std::nullopt;
  barrier->done = true;
  std::vector<Term> inputs;
  for (const auto& a : barrier->arrived) inputs.push_back(*a);
  if (name.kind() != TermKind::Constant)
    messaging_error("join barrier name must be a constant");
  return Term::compound(name.symbol(), {me, xid, Term::list(std::move(inputs))});
}

// ---------------------------------------------------------------------------
// builtins
// ---------------------------------------------------------------------------

namespace {

MessagingEngine& engine_of(SolverMachine& m) {
  if (!m.ctx().messaging) messaging_error("no messaging engine in this context");
  return *m.ctx().messaging;
}

BuiltinResult bi_send_msg(const Term& goal, SolverMachine& m) {
  MessagingEngine& eng = engine_of(m);
  BindingSet bs = m.bindings();
  Term xid = bs.walk(goal.args()[0]);
  if (xid.kind() == TermKind::Variable) {
    Term fresh = eng.fresh_conversation_id();
    bs = bs.bind(xid.var_id(), fresh);
    xid = fresh;
  }
  Message msg;
  msg.xid = bs.apply(xid);
  msg.protocol = bs.apply(goal.args()[1]);
  msg.target = bs.apply(goal.args()[2]);
  msg.performative = bs.apply(goal.args()[3]);
  msg.payload = bs.apply(goal.args()[4]);
  for (std::size_t i = 5; i < goal.arity(); ++i) msg.context.push_back(bs.apply(goal.args()[i]));
  eng.send(msg);
  return BuiltinResult::ok(std::move(bs));
}

BuiltinResult suspend_on_pattern(const Term& pattern, SolverMachine& m, bool one_shot,
                                 std::vector<std::int64_t> inbound,
                                 std::vector<std::int64_t> outbound) {
  TemporalReactionRule r;
  r.pattern = pattern;
  r.continuation = m.remaining_goals();
  r.env = m.bindings();
  r.one_shot = one_shot;
  r.inbound = std::move(inbound);
  r.outbound = std::move(outbound);
  engine_of(m).register_reaction(std::move(r));
  return BuiltinResult::suspend();
}

BuiltinResult bi_rcv_msg(const Term& goal, SolverMachine& m) {
  return suspend_on_pattern(goal, m, true, {}, {});
}

BuiltinResult bi_rcv_mult(const Term& goal, SolverMachine& m) {
  Term pattern = Term::compound("rcvMsg", goal.args());
  return suspend_on_pattern(pattern, m, false, {}, {});
}

std::vector<std::int64_t> partition_ids(const Term& t, SolverMachine& m) {
  Term list = m.resolve(t);
  if (list.kind() != TermKind::List) messaging_error("rcvMsgP: partition id list expected");
  std::vector<std::int64_t> out;
  for (const auto& item : list.items()) {
    if (item.kind() != TermKind::Int) messaging_error("rcvMsgP: integer partition id expected");
    if (!engine_of(m).partition_known(item.int_value()))
      messaging_error("unknown partition " + format_term(item));
    out.push_back(item.int_value());
  }
  return out;
}

BuiltinResult bi_rcv_msg_p(const Term& goal, SolverMachine& m) {
  auto inbound = partition_ids(goal.args()[0], m);
  auto outbound = partition_ids(goal.args()[1], m);
  Term pattern = m.bindings().walk(goal.args()[2]);
  if (pattern.kind() != TermKind::Compound || pattern.functor() != "rcvMsg")
    messaging_error("rcvMsgP: rcvMsg(..) pattern expected");
  return suspend_on_pattern(pattern, m, true, std::move(inbound), std::move(outbound));
}

BuiltinResult bi_partition_id(const Term& goal, SolverMachine& m) {
  Term id = Term::integer(engine_of(m).fresh_partition());
  auto b = unify(goal.args()[0], id, m.bindings(), m.config().occurs_check);
  if (!b) return BuiltinResult::fail();
  return BuiltinResult::ok(std::move(*b));
}

BuiltinResult bi_init_join(const Term& goal, SolverMachine& m) {
  Term xid = m.resolve(goal.args()[0]);
  Term name = m.resolve(goal.args()[1]);
  Term expected = m.resolve(goal.args()[2]);
  if (expected.kind() != TermKind::List) messaging_error("init_join: pattern list expected");
  engine_of(m).init_join(xid, name, Term::atom(m.ctx().agent_name), expected.items(),
                         m.bindings());
  return BuiltinResult::ok(m.bindings());
}

BuiltinResult bi_join(const Term& goal, SolverMachine& m) {
  Term me = m.resolve(goal.args()[0]);
  Term xid = m.resolve(goal.args()[1]);
  Term name = m.resolve(goal.args()[2]);
  Term value = m.resolve(goal.args()[3]);
  auto handler = engine_of(m).join(me, xid, name, value, m.config().occurs_check);
  if (handler) m.sub_first(*handler);  // exactly-once handler invocation
  return BuiltinResult::ok(m.bindings());
}

BuiltinResult bi_iam(const Term& goal, SolverMachine& m) {
  auto b = unify(goal.args()[0], Term::atom(m.ctx().agent_name), m.bindings(),
                 m.config().occurs_check);
  if (!b) return BuiltinResult::fail();
  return BuiltinResult::ok(std::move(*b));
}

}  // namespace

void register_messaging_builtins(BuiltinTable& t) {
  t.set_vararg("sendMsg", 5, bi_send_msg);
  t.set_vararg("rcvMsg", 5, bi_rcv_msg);
  t.set_vararg("rcvMult", 5, bi_rcv_mult);
  t.set("rcvMsgP", 3, bi_rcv_msg_p);
  t.set("partition_id", 1, bi_partition_id);
  t.set("init_join", 3, bi_init_join);
  t.set("join", 4, bi_join);
  t.set("iam", 1, bi_iam);
}

}  // namespace reactor

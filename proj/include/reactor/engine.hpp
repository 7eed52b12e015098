#pragma once

#include <atomic>
#include <condition_variable>
#include <iostream>
#include <thread>

#include "reactor/eca.hpp"
#include "reactor/event_calculus.hpp"
#include "reactor/messaging.hpp"
#include "reactor/solver.hpp"

namespace reactor {

/// One engine per node: the KB, the solver services, the messaging engine
/// and the ECA daemon, serialized behind a single writer lock. Queries,
/// daemon ticks and message dispatch each take the lock; `step()` is fully
/// synchronous for deterministic tests and CI.
class Engine {
 public:
  struct Options {
    std::string agent_name = "self";
    int tick_millis = 100;
    int parallelism = 0;  // 0: hardware_concurrency
    bool parallel = false;
    std::ostream* out = &std::cout;
  };

  Engine();
  explicit Engine(Options opts);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // -- loading ---------------------------------------------------------------
  void load_file(const std::string& path);
  void load_text(std::string_view text, const Term& oid);

  // -- querying ----------------------------------------------------------------
  std::vector<Solution> query(const std::string& query_text, std::size_t limit = SIZE_MAX);
  bool prove(const std::string& goal_text);

  // -- clock -------------------------------------------------------------------
  /// Manual clocks make periodic rules and heartbeat timeouts deterministic.
  void use_manual_clock(std::int64_t start_ms);
  void advance_clock(std::int64_t delta_ms);
  std::int64_t now() const;

  // -- ECA daemon ---------------------------------------------------------------
  /// Run exactly `ticks` daemon ticks synchronously; inbound messages are
  /// dispatched before and after each tick. Returns all outcomes.
  std::vector<EcaOutcome> step(int ticks = 1);
  void start();  // daemon + dispatch threads, until stop()
  void stop();
  bool running() const { return running_; }
  void set_observer(std::function<void(const EcaOutcome&)> fn);

  // -- messaging ---------------------------------------------------------------
  MessagingEngine& messaging() { return messaging_; }
  /// Dispatch everything queued; returns fired reaction count.
  std::size_t poll();
  void post(Message m);
  /// In-process wiring: this engine can send to `other` by its agent name.
  void connect_local(Engine& other);

  // -- tcp ----------------------------------------------------------------------
  /// Frame format: 4-byte big-endian length + UTF-8 XmlMessage body.
  void listen(int port);
  void stop_listening();
  int listen_port() const { return listen_port_; }
  void add_tcp_peer(const std::string& agent, const std::string& host, int port);

  // -- configuration ------------------------------------------------------------
  /// key=value lines: stub.<functor>=succeed|fail|failfirst:<n>|raise:<tag>,
  /// table.<name>=col:value,col:value;..., peer.<agent>=host:port.
  void apply_config_text(const std::string& text);
  void apply_config_file(const std::string& path);

  // -- direct access (callers must not run concurrent mutations) ----------------
  KnowledgeBase& kb() { return kb_; }
  StubTable& stubs() { return stubs_; }
  TableRegistry& tables() { return tables_; }
  SolverConfig& solver_config() { return solver_config_; }
  const std::string& agent_name() const { return opts_.agent_name; }
  SolveContext make_context();
  std::unique_lock<std::recursive_mutex> lock() {
    return std::unique_lock<std::recursive_mutex>(mu_);
  }

  /// One synchronous daemon tick (collect + evaluate all rules).
  std::vector<EcaOutcome> tick_once();

 private:
  void dispatch_loop();
  void daemon_loop();
  void accept_loop(int server_fd);
  std::vector<EcaOutcome> tick_parallel(const std::vector<EcaRule>& rules);

  Options opts_;
  KnowledgeBase kb_;
  BuiltinTable builtins_;
  StubTable stubs_;
  TableRegistry tables_;
  IntervalSiteTable interval_sites_;
  MessagingEngine messaging_;
  SolverConfig solver_config_;

  mutable std::recursive_mutex mu_;
  std::atomic<bool> manual_clock_{false};
  std::atomic<std::int64_t> manual_now_{0};

  std::function<void(const EcaOutcome&)> observer_;

  std::atomic<bool> running_{false};
  std::thread daemon_thread_;
  std::thread dispatch_thread_;
  std::condition_variable_any dispatch_cv_;
  std::mutex dispatch_mu_;

  std::atomic<bool> listening_{false};
  int listen_port_ = 0;
  int server_fd_ = -1;
  std::thread accept_thread_;
};

}  // namespace reactor

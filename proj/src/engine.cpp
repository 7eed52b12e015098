#include "reactor/engine.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <future>
#include <sstream>

#include "reactor/log.hpp"
#include "reactor/ruleml.hpp"

namespace reactor {

namespace {
std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}
}  // namespace

Engine::Engine() : Engine(Options{}) {}

Engine::Engine(Options opts) : opts_(std::move(opts)), messaging_(opts_.agent_name) {
  builtins_ = core_builtin_table();
  register_event_calculus_builtins(builtins_);
  register_messaging_builtins(builtins_);
  // procedural stubs the paper's listings call by name
  stubs_.set("sendMessage", {});
  stubs_.set("fopen", {});
  stubs_.set("copy", {});
  messaging_.set_wakeup([this] { dispatch_cv_.notify_all(); });
}

Engine::~Engine() {
  stop();
  stop_listening();
}

SolveContext Engine::make_context() {
  SolveContext ctx;
  ctx.kb = &kb_;
  ctx.builtins = &builtins_;
  ctx.now = [this] { return now(); };
  ctx.messaging = &messaging_;
  ctx.stubs = &stubs_;
  ctx.tables = &tables_;
  ctx.interval_sites = &interval_sites_;
  ctx.out = opts_.out;
  ctx.agent_name = opts_.agent_name;
  return ctx;
}

void Engine::load_file(const std::string& path) {
  auto guard = lock();
  kb_.import_module(path);
}

void Engine::load_text(std::string_view text, const Term& oid) {
  auto guard = lock();
  kb_.add_module_text(oid, text);
}

std::vector<Solution> Engine::query(const std::string& query_text, std::size_t limit) {
  auto guard = lock();
  auto goals = parse_query(query_text);
  SolveContext ctx = make_context();
  return solve_all(std::move(goals), ctx, solver_config_, limit);
}

bool Engine::prove(const std::string& goal_text) {
  auto guard = lock();
  SolveContext ctx = make_context();
  return provable(parse_term(goal_text), ctx, solver_config_);
}

void Engine::use_manual_clock(std::int64_t start_ms) {
  manual_now_ = start_ms;
  manual_clock_ = true;
}

void Engine::advance_clock(std::int64_t delta_ms) { manual_now_ += delta_ms; }

std::int64_t Engine::now() const { return manual_clock_ ? manual_now_.load() : wall_clock_ms(); }

std::vector<EcaOutcome> Engine::tick_once() {
  auto guard = lock();
  SolveContext ctx = make_context();
  EcaCollection collected = collect_eca_rules(ctx, solver_config_);
  for (const auto& bad : collected.malformed) log::warn("malformed eca rule: " + bad);
  if (opts_.parallel) return tick_parallel(collected.rules);
  std::vector<EcaOutcome> outcomes;
  outcomes.reserve(collected.rules.size());
  for (const auto& rule : collected.rules) {
    EcaOutcome out = evaluate_eca(rule, ctx, solver_config_);
    if (observer_) observer_(out);
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

// Parallel mode: each rule evaluates on its own KB snapshot (snapshot
// isolation); retained transition deltas merge into the live KB in
// completion order, last writer wins. The messaging engine and interval
// site table are shared and internally synchronized.
std::vector<EcaOutcome> Engine::tick_parallel(const std::vector<EcaRule>& rules) {
  struct Slot {
    KnowledgeBase snapshot;
    std::uint64_t base = 0;
    EcaOutcome outcome;
  };
  std::vector<Slot> slots(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    slots[i].snapshot = kb_.snapshot();
    slots[i].base = slots[i].snapshot.state_counter() - 1;
  }
  const std::size_t workers = opts_.parallelism > 0
                                  ? static_cast<std::size_t>(opts_.parallelism)
                                  : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= rules.size()) break;
      SolveContext ctx = make_context();
      ctx.kb = &slots[i].snapshot;
      slots[i].outcome = evaluate_eca(rules[i], ctx, solver_config_);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, rules.size()); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  std::vector<EcaOutcome> outcomes;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    std::vector<TransitionRecord> delta;
    for (const auto& rec : slots[i].snapshot.log())
      if (rec.seq > slots[i].base) delta.push_back(rec);
    kb_.replay(delta);
    if (observer_) observer_(slots[i].outcome);
    outcomes.push_back(std::move(slots[i].outcome));
  }
  return outcomes;
}

std::vector<EcaOutcome> Engine::step(int ticks) {
  std::vector<EcaOutcome> all;
  for (int i = 0; i < ticks; ++i) {
    poll();
    auto outcomes = tick_once();
    all.insert(all.end(), outcomes.begin(), outcomes.end());
    poll();
  }
  return all;
}

std::size_t Engine::poll() {
  auto guard = lock();
  SolveContext ctx = make_context();
  return messaging_.poll(ctx, solver_config_);
}

void Engine::post(Message m) { messaging_.enqueue(std::move(m)); }

void Engine::connect_local(Engine& other) {
  messaging_.connect_peer(other.agent_name(), [&other](const Message& m) {
    other.post(m);
  });
}

void Engine::set_observer(std::function<void(const EcaOutcome&)> fn) {
  auto guard = lock();
  observer_ = std::move(fn);
}

void Engine::start() {
  if (running_) return;
  running_ = true;
  daemon_thread_ = std::thread([this] { daemon_loop(); });
  dispatch_thread_ = std::thread([this] { dispatch_loop(); });
}

void Engine::stop() {
  if (!running_) return;
  running_ = false;
  dispatch_cv_.notify_all();
  if (daemon_thread_.joinable()) daemon_thread_.join();
  if (dispatch_thread_.joinable()) dispatch_thread_.join();
}

void Engine::daemon_loop() {
  while (running_) {
    tick_once();
    std::this_thread::sleep_for(std::chrono::milliseconds(opts_.tick_millis));
  }
}

void Engine::dispatch_loop() {
  while (running_) {
    {
      std::unique_lock<std::mutex> wait_lock(dispatch_mu_);
      dispatch_cv_.wait_for(wait_lock, std::chrono::milliseconds(50),
                            [this] { return !running_ || messaging_.queued() > 0; });
    }
    if (!running_) break;
    if (messaging_.queued() > 0) poll();
  }
}

// ---------------------------------------------------------------------------
// tcp transport
// ---------------------------------------------------------------------------

namespace {

bool read_exact(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<char*>(buf);
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_exact(int fd, const void* buf, std::size_t n) {
  const auto* p = static_cast<const char*>(buf);
  std::size_t put = 0;
  while (put < n) {
    ssize_t r = ::send(fd, p + put, n - put, 0);
    if (r <= 0) return false;
    put += static_cast<std::size_t>(r);
  }
  return true;
}

void send_frame(const std::string& host, int port, const std::string& body) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw SolveError(SolveError::Kind::Messaging, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    hostent* he = ::gethostbyname(host.c_str());
    if (!he) {
      ::close(fd);
      throw SolveError(SolveError::Kind::Messaging, "cannot resolve host " + host);
    }
    std::memcpy(&addr.sin_addr, he->h_addr, sizeof(addr.sin_addr));
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw SolveError(SolveError::Kind::Messaging,
                     "transport error: cannot connect to " + host + ":" + std::to_string(port));
  }
  std::uint32_t len = htonl(static_cast<std::uint32_t>(body.size()));
  bool ok = write_exact(fd, &len, 4) && write_exact(fd, body.data(), body.size());
  ::close(fd);
  if (!ok) throw SolveError(SolveError::Kind::Messaging, "transport error: short write");
}

}  // namespace

void Engine::listen(int port) {
  if (listening_) return;
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw std::runtime_error("cannot bind port " + std::to_string(port));
  }
  if (::listen(fd, 16) != 0) {
    ::close(fd);
    throw std::runtime_error("listen() failed");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  listen_port_ = ntohs(addr.sin_port);
  server_fd_ = fd;
  listening_ = true;
  accept_thread_ = std::thread([this, fd] { accept_loop(fd); });
  log::info("listening on tcp port " + std::to_string(listen_port_));
}

void Engine::stop_listening() {
  if (!listening_) return;
  listening_ = false;
  ::shutdown(server_fd_, SHUT_RDWR);
  ::close(server_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  server_fd_ = -1;
}

void Engine::accept_loop(int server_fd) {
  while (listening_) {
    int client = ::accept(server_fd, nullptr, nullptr);
    if (client < 0) break;
    std::uint32_t netlen = 0;
    while (read_exact(client, &netlen, 4)) {
      std::uint32_t len = ntohl(netlen);
      if (len > (64u << 20)) break;  // refuse absurd frames
      std::string body(len, '\0');
      if (!read_exact(client, body.data(), len)) break;
      try {
        Message m = message_from_xml(body);
        post(std::move(m));
      } catch (const std::exception& e) {
        log::warn(std::string("dropping undecodable frame: ") + e.what());
      }
    }
    ::close(client);
  }
}

void Engine::add_tcp_peer(const std::string& agent, const std::string& host, int port) {
  messaging_.connect_peer(agent, [host, port](const Message& m) {
    send_frame(host, port, message_to_xml(m, true));
  });
}

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

void Engine::apply_config_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = line.substr(0, line.find('#'));
    auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    std::string key = t.substr(0, eq);
    std::string value = t.substr(eq + 1);
    auto trim = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    trim(key);
    trim(value);
    if (key.empty()) continue;

    if (key.rfind("stub.", 0) == 0) {
      std::string functor = key.substr(5);
      StubTable::Behavior b;
      if (value == "succeed") {
        b.mode = StubTable::Mode::Succeed;
      } else if (value == "fail") {
        b.mode = StubTable::Mode::Fail;
      } else if (value.rfind("failfirst:", 0) == 0) {
        b.mode = StubTable::Mode::FailFirstN;
        b.fail_count = std::stoi(value.substr(10));
      } else if (value.rfind("raise:", 0) == 0) {
        b.mode = StubTable::Mode::Raise;
        b.raise_tag = value.substr(6);
      } else {
        log::warn("unknown stub mode '" + value + "' for " + functor);
        continue;
      }
      stubs_.set(functor, b);
      continue;
    }
    if (key.rfind("table.", 0) == 0) {
      std::string name = key.substr(6);
      std::vector<TableRegistry::Row> rows;
      std::istringstream rows_in(value);
      std::string row_text;
      while (std::getline(rows_in, row_text, ';')) {
        if (row_text.empty()) continue;
        TableRegistry::Row row;
        std::istringstream cells(row_text);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
          auto colon = cell.find(':');
          if (colon == std::string::npos) continue;
          std::string col = cell.substr(0, colon);
          std::string val = cell.substr(colon + 1);
          trim(col);
          trim(val);
          row.emplace_back(col, parse_term(val));
        }
        rows.push_back(std::move(row));
      }
      tables_.define(name, std::move(rows));
      continue;
    }
    if (key.rfind("peer.", 0) == 0) {
      std::string agent = key.substr(5);
      auto colon = value.rfind(':');
      if (colon == std::string::npos) {
        log::warn("peer value must be host:port, got " + value);
        continue;
      }
      add_tcp_peer(agent, value.substr(0, colon), std::stoi(value.substr(colon + 1)));
      continue;
    }
    log::warn("unknown config key " + key);
  }
}

void Engine::apply_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  apply_config_text(os.str());
}

}  // namespace reactor

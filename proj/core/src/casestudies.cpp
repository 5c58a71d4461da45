#include "waltz/casestudies.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <utility>
#include <variant>

#include "waltz/conductor.hpp"
#include "waltz/errors.hpp"
#include "waltz/instrument.hpp"
#include "waltz/lang.hpp"

namespace waltz {

namespace {

Term at(const std::string& name) { return Term::atom(name); }

bool is_tagged(const Term& t, const std::string& tag, std::size_t arity) {
  if (!t.is_tuple()) return false;
  const auto& e = t.elements();
  return e.size() == arity && e[0].is_atom() && e[0].atom_name() == tag;
}

Term badarg() { return Term::tuple({at("error"), at("badarg")}); }

// main: hands the whole request to add and relays the result.
struct ArithMain : ServerBehavior {
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound& out) override {
    if (!is_tagged(msg, "process", 3)) return CallResult::respond(badarg(), std::move(state));
    Term result = out.call("add", msg);
    return CallResult::respond(std::move(result), std::move(state));
  }
};

// add: raises the number by ten and asks mult to finish. Accepts both the
// routed {process, Pid, N} form and a direct {process, N}.
struct ArithAdd : ServerBehavior {
  explicit ArithAdd(bool decrement) : decrement_(decrement) {}
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound& out) override {
    std::size_t slot;
    if (is_tagged(msg, "process", 3))
      slot = 2;
    else if (is_tagged(msg, "process", 2))
      slot = 1;
    else
      return CallResult::respond(badarg(), std::move(state));
    if (!msg.elements()[slot].is_int()) return CallResult::respond(badarg(), std::move(state));
    std::int64_t n = msg.elements()[slot].int_value();
    std::int64_t m = decrement_ ? n - 10 : n + 10;
    Term result = out.call("mult", Term::tuple({at("process"), Term::integer(m)}));
    return CallResult::respond(std::move(result), std::move(state));
  }
  bool decrement_;
};

struct ArithMult : ServerBehavior {
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound&) override {
    if (!is_tagged(msg, "process", 2) || !msg.elements()[1].is_int())
      return CallResult::respond(badarg(), std::move(state));
    std::int64_t m = msg.elements()[1].int_value();
    return CallResult::respond(Term::tuple({at("result"), Term::integer(2 * m)}),
                               std::move(state));
  }
};

// chat_server front desk. Tracks which rooms have been joined; posts to
// unjoined rooms bounce. The bug skips that check and shifts the room.
struct ChatServer : ServerBehavior {
  explicit ChatServer(bool bypass) : bypass_(bypass) {}

  struct St {
    std::vector<std::int64_t> joined;
  };

  State init() override { return St{}; }

  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound& out) override {
    St st = std::any_cast<St>(std::move(state));
    if (is_tagged(msg, "register", 2)) {
      out.call("registry", msg);
      return CallResult::respond(Term::tuple({at("registered"), msg.elements()[1]}),
                                 std::move(st));
    }
    if (is_tagged(msg, "join", 2) && msg.elements()[1].is_int()) {
      std::int64_t room = msg.elements()[1].int_value();
      Term reply = out.call("chat_room", msg);
      if (std::find(st.joined.begin(), st.joined.end(), room) == st.joined.end())
        st.joined.push_back(room);
      return CallResult::respond(std::move(reply), std::move(st));
    }
    if (is_tagged(msg, "post", 3) && msg.elements()[1].is_int()) {
      std::int64_t room = msg.elements()[1].int_value();
      if (bypass_) {
        Term reply = out.call(
            "chat_room", Term::tuple({at("post"), Term::integer(room + 1), msg.elements()[2]}));
        return CallResult::respond(std::move(reply), std::move(st));
      }
      if (std::find(st.joined.begin(), st.joined.end(), room) == st.joined.end())
        return CallResult::respond(Term::tuple({at("error"), at("not_member")}), std::move(st));
      Term reply = out.call("chat_room", msg);
      return CallResult::respond(std::move(reply), std::move(st));
    }
    if (is_tagged(msg, "disconnect", 2)) {
      out.call("registry", Term::tuple({at("unregister"), msg.elements()[1]}));
      return CallResult::respond(Term::tuple({at("bye")}), std::move(st));
    }
    return CallResult::respond(badarg(), std::move(st));
  }

  bool bypass_;
};

struct ChatRoom : ServerBehavior {
  explicit ChatRoom(std::size_t busy_work) : busy_work_(busy_work) {}

  struct St {
    std::int64_t posts = 0;
  };

  State init() override { return St{}; }

  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound&) override {
    St st = std::any_cast<St>(std::move(state));
    if (is_tagged(msg, "join", 2))
      return CallResult::respond(Term::tuple({at("joined"), msg.elements()[1]}), std::move(st));
    if (is_tagged(msg, "post", 3)) {
      volatile std::size_t spin = 0;
      while (spin < busy_work_) spin = spin + 1;
      ++st.posts;
      return CallResult::respond(Term::tuple({at("ack"), msg.elements()[2]}), std::move(st));
    }
    return CallResult::respond(badarg(), std::move(st));
  }

  std::size_t busy_work_;
};

struct Registry : ServerBehavior {
  struct St {
    std::vector<Term> registered;
  };

  State init() override { return St{}; }

  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound&) override {
    St st = std::any_cast<St>(std::move(state));
    if (is_tagged(msg, "register", 2)) {
      st.registered.push_back(msg.elements()[1]);
      return CallResult::respond(Term::tuple({at("ok"), msg.elements()[1]}), std::move(st));
    }
    if (is_tagged(msg, "unregister", 2)) {
      auto it = std::find(st.registered.begin(), st.registered.end(), msg.elements()[1]);
      if (it != st.registered.end()) st.registered.erase(it);
      return CallResult::respond(Term::tuple({at("ok"), msg.elements()[1]}), std::move(st));
    }
    return CallResult::respond(badarg(), std::move(st));
  }
};

// Grow-only counter. prev always trails value by exactly the latest
// increment, which is what the stale_query bug leaks.
struct Counter : ServerBehavior {
  explicit Counter(bool stale) : stale_(stale) {}

  struct St {
    std::int64_t value = 0;
    std::int64_t prev = 0;
  };

  State init() override { return St{}; }

  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound&) override {
    St st = std::any_cast<St>(std::move(state));
    if (is_tagged(msg, "increment", 1)) {
      Term reply = Term::tuple({at("old"), Term::integer(st.value)});
      st.prev = st.value;
      st.value += 1;
      return CallResult::respond(std::move(reply), std::move(st));
    }
    if (is_tagged(msg, "query", 1)) {
      std::int64_t seen = stale_ ? st.prev : st.value;
      return CallResult::respond(Term::tuple({at("value"), Term::integer(seen)}), std::move(st));
    }
    return CallResult::respond(badarg(), std::move(st));
  }

  bool stale_;
};

std::mt19937_64 client_rng(std::uint64_t seed, std::size_t index) {
  return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL + index + 1);
}

struct Scenario {
  std::vector<std::pair<std::string, std::shared_ptr<ServerBehavior>>> servers;
  // Call list for one client; pid identifies the client inside payloads.
  std::function<std::vector<std::pair<std::string, Term>>(std::size_t index,
                                                          const Term::Pid& pid)>
      workload;
  std::string property;
};

void check_config(const ScenarioConfig& cfg) {
  if (cfg.clients == 0) throw Error("scenario needs at least one client");
  if (cfg.requests_per_client == 0) throw Error("scenario needs at least one request per client");
}

void check_bug(const ScenarioConfig& cfg, const std::string& scenario) {
  if (!cfg.bug) return;
  auto known = scenario_bugs(scenario);
  if (std::find(known.begin(), known.end(), *cfg.bug) == known.end())
    throw Error("scenario " + scenario + " has no bug named " + *cfg.bug);
}

RunReport execute(const Scenario& sc, const ScenarioConfig& cfg, const RunOptions& opt) {
  RunReport report;

  Runtime rt(opt.runtime);
  std::optional<Conductor> conductor;
  if (opt.instrument) {
    conductor.emplace(rt);
    conductor->start();
  }

  for (const auto& [name, behavior] : sc.servers)
    rt.spawn_server(opt.instrument ? wrap_server(behavior, name, *conductor) : behavior, name);

  bool monitoring = opt.instrument && opt.monitor;
  std::thread monitor_thread;
  Verdict monitor_verdict;
  std::vector<VerdictLogEntry> monitor_log;
  if (monitoring) {
    std::string source = opt.property_source ? *opt.property_source : sc.property;
    MonitorProgram program = compile_monitor(parse_formula(source));
    auto sub = conductor->bus().subscribe();
    ContextTree tree = conductor->tree();
    monitor_thread = std::thread(
        [program = std::move(program), sub = std::move(sub), tree = std::move(tree),
         &monitor_verdict, &monitor_log]() mutable {
          monitor_verdict = run_monitor(program, std::move(sub), std::move(tree), &monitor_log);
        });
  }

  report.replies.resize(cfg.clients);
  std::vector<std::uint64_t> call_us(cfg.clients, 0);
  std::vector<std::exception_ptr> failures(cfg.clients);

  std::mutex gate_mutex;
  std::condition_variable gate_cv;
  bool go = false;

  std::vector<std::thread> clients;
  clients.reserve(cfg.clients);
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    clients.emplace_back([&, i] {
      try {
        std::optional<ClientHandle> handle;
        if (opt.instrument) handle.emplace(*conductor);
        Term::Pid pid = opt.instrument ? handle->pid() : rt.make_pid();
        auto work = sc.workload(i, pid);
        report.replies[i].reserve(work.size());
        {
          std::unique_lock<std::mutex> lk(gate_mutex);
          gate_cv.wait(lk, [&] { return go; });
        }
        for (auto& [to, msg] : work) {
          auto t0 = std::chrono::steady_clock::now();
          Term reply = opt.instrument ? handle->send(to, std::move(msg))
                                      : rt.call(to, std::move(msg));
          auto t1 = std::chrono::steady_clock::now();
          call_us[i] +=
              std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
          report.replies[i].push_back(std::move(reply));
        }
      } catch (...) {
        failures[i] = std::current_exception();
      }
    });
  }

  auto started = std::chrono::steady_clock::now();
  {
    std::lock_guard<std::mutex> lk(gate_mutex);
    go = true;
  }
  gate_cv.notify_all();
  for (auto& t : clients) t.join();
  auto finished = std::chrono::steady_clock::now();

  report.active_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(finished - started)
          .count();

  if (conductor) {
    conductor->stop();
    conductor->bus().close();
  }
  if (monitor_thread.joinable()) monitor_thread.join();

  if (conductor) {
    report.events = conductor->bus().size();
    if (opt.collect_trace) report.trace_events = conductor->bus().snapshot();
    report.tree = conductor->tree();
    report.labels = conductor->labels();
  }
  if (monitoring) {
    report.verdict = monitor_verdict;
    report.verdict_log = std::move(monitor_log);
  }

  // Shut the runtime down before the conductor goes away: server threads
  // (and the conductor's own process) hold references to it, so they must
  // all be joined first.
  rt.shutdown();
  conductor.reset();
  report.crashes = rt.crashes();

  for (std::size_t i = 0; i < cfg.clients; ++i)
    if (failures[i]) std::rethrow_exception(failures[i]);

  std::uint64_t total_us = 0;
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    report.calls += report.replies[i].size();
    total_us += call_us[i];
  }
  if (report.calls > 0) report.mean_call_us = double(total_us) / double(report.calls);
  return report;
}

}  // namespace

std::shared_ptr<ServerBehavior> make_arith_main() { return std::make_shared<ArithMain>(); }
std::shared_ptr<ServerBehavior> make_arith_add(bool decrement_bug) {
  return std::make_shared<ArithAdd>(decrement_bug);
}
std::shared_ptr<ServerBehavior> make_arith_mult() { return std::make_shared<ArithMult>(); }
std::shared_ptr<ServerBehavior> make_chat_server(bool bypass_membership) {
  return std::make_shared<ChatServer>(bypass_membership);
}
std::shared_ptr<ServerBehavior> make_chat_room(std::size_t busy_work) {
  return std::make_shared<ChatRoom>(busy_work);
}
std::shared_ptr<ServerBehavior> make_registry() { return std::make_shared<Registry>(); }
std::shared_ptr<ServerBehavior> make_counter(bool stale_query) {
  return std::make_shared<Counter>(stale_query);
}

std::string shipped_property(const std::string& scenario) {
  if (scenario == "arithmetic")
    return "# Each add handoff must carry its input raised by ten.\n"
           "omega(send main -> add {process, _, Number1} : true ;\n"
           "      send add -> mult {process, Number2} : Number2 == Number1 + 10)\n";
  if (scenario == "chat")
    return "# A post must land in the room its chain joined.\n"
           "omega(send client -> chat_server {join, Room} : true ;\n"
           "      send chat_server -> chat_room {post, Room2, _} : Room2 == Room)\n";
  if (scenario == "gcounter")
    return "# A read after an acknowledged increment must come back larger.\n"
           "omega(send counter -> client {old, V1} : true ;\n"
           "      send counter -> client {value, V2} : V2 >= V1 + 1)\n";
  throw Error("unknown scenario: " + scenario);
}

RunReport run_arithmetic(const ScenarioConfig& cfg, const RunOptions& opt) {
  check_config(cfg);
  check_bug(cfg, "arithmetic");
  bool decrement = cfg.bug == "add_decrements";

  Scenario sc;
  sc.servers = {{"main", make_arith_main()},
                {"add", make_arith_add(decrement)},
                {"mult", make_arith_mult()}};
  sc.property = shipped_property("arithmetic");
  std::uint64_t seed = cfg.seed;
  std::size_t requests = cfg.requests_per_client;
  sc.workload = [seed, requests](std::size_t index, const Term::Pid& pid) {
    auto rng = client_rng(seed, index);
    std::uniform_int_distribution<std::int64_t> dist(0, 100);
    std::vector<std::pair<std::string, Term>> calls;
    calls.reserve(requests);
    for (std::size_t r = 0; r < requests; ++r)
      calls.emplace_back("main", Term::tuple({at("process"), Term::pid(pid),
                                              Term::integer(dist(rng))}));
    return calls;
  };
  return execute(sc, cfg, opt);
}

RunReport run_chat(const ScenarioConfig& cfg, const RunOptions& opt) {
  check_config(cfg);
  check_bug(cfg, "chat");
  bool bypass = cfg.bug == "bypass_membership";

  Scenario sc;
  sc.servers = {{"chat_server", make_chat_server(bypass)},
                {"chat_room", make_chat_room(cfg.busy_work)},
                {"registry", make_registry()}};
  sc.property = shipped_property("chat");
  std::uint64_t seed = cfg.seed;
  std::size_t posts = cfg.requests_per_client;
  sc.workload = [seed, posts](std::size_t index, const Term::Pid&) {
    auto rng = client_rng(seed, index);
    std::uniform_int_distribution<std::int64_t> room_dist(100, 999);
    std::int64_t cid = std::int64_t(index) + 1;
    std::int64_t room = room_dist(rng);
    std::vector<std::pair<std::string, Term>> calls;
    calls.reserve(posts + 3);
    calls.emplace_back("chat_server", Term::tuple({at("register"), Term::integer(cid)}));
    calls.emplace_back("chat_server", Term::tuple({at("join"), Term::integer(room)}));
    for (std::size_t p = 1; p <= posts; ++p)
      calls.emplace_back("chat_server", Term::tuple({at("post"), Term::integer(room),
                                                     Term::integer(std::int64_t(p))}));
    calls.emplace_back("chat_server", Term::tuple({at("disconnect"), Term::integer(cid)}));
    return calls;
  };
  return execute(sc, cfg, opt);
}

RunReport run_gcounter(const ScenarioConfig& cfg, const RunOptions& opt) {
  check_config(cfg);
  check_bug(cfg, "gcounter");
  bool stale = cfg.bug == "stale_query";

  Scenario sc;
  sc.servers = {{"counter", make_counter(stale)}};
  sc.property = shipped_property("gcounter");
  std::size_t rounds = cfg.requests_per_client;
  sc.workload = [rounds](std::size_t, const Term::Pid&) {
    std::vector<std::pair<std::string, Term>> calls;
    calls.reserve(rounds * 2);
    for (std::size_t r = 0; r < rounds; ++r) {
      calls.emplace_back("counter", Term::tuple({at("increment")}));
      calls.emplace_back("counter", Term::tuple({at("query")}));
    }
    return calls;
  };
  return execute(sc, cfg, opt);
}

RunReport run_scenario(const std::string& name, const ScenarioConfig& cfg,
                       const RunOptions& opt) {
  if (name == "arithmetic") return run_arithmetic(cfg, opt);
  if (name == "chat") return run_chat(cfg, opt);
  if (name == "gcounter") return run_gcounter(cfg, opt);
  throw Error("unknown scenario: " + name);
}

std::vector<std::string> scenario_names() { return {"arithmetic", "chat", "gcounter"}; }

std::vector<std::string> scenario_bugs(const std::string& name) {
  if (name == "arithmetic") return {"add_decrements"};
  if (name == "chat") return {"bypass_membership"};
  if (name == "gcounter") return {"stale_query"};
  throw Error("unknown scenario: " + name);
}

}  // namespace waltz

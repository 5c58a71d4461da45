#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "waltz/event.hpp"
#include "waltz/monitor.hpp"
#include "waltz/runtime.hpp"

namespace waltz {

struct ScenarioConfig {
  std::size_t clients = 2;
  // Arithmetic: calls per client. Chat: posts per client (register, join
  // and disconnect come on top). Counter: increment+query rounds.
  std::size_t requests_per_client = 10;
  std::optional<std::string> bug;
  std::uint64_t seed = 1;
  // Chat only: spin iterations added to every post, to model systems
  // whose own work dwarfs the routing cost.
  std::size_t busy_work = 0;
};

struct RunOptions {
  // Off: servers run bare and clients call them directly, nothing is
  // recorded. This is the benchmark baseline.
  bool instrument = true;
  // Evaluate the scenario property while the run is live. Only
  // meaningful when instrumenting.
  bool monitor = true;
  std::optional<std::string> property_source;  // overrides the shipped property
  bool collect_trace = true;
  RuntimeConfig runtime;
};

struct RunReport {
  std::optional<Verdict> verdict;  // absent when the monitor was off
  std::vector<VerdictLogEntry> verdict_log;
  std::size_t calls = 0;   // client calls completed
  std::size_t events = 0;  // bus events recorded
  double active_ms = 0.0;  // workload phase only, setup and teardown excluded
  double mean_call_us = 0.0;
  std::vector<std::vector<Term>> replies;  // per client, in call order
  std::vector<Event> trace_events;
  std::optional<ContextTree> tree;
  std::optional<ContextLabels> labels;
  std::vector<CrashRecord> crashes;
};

// Three-stage pipeline: main forwards {process, Pid, N} to add, add sends
// {process, N+10} on to mult, mult replies {result, 2*(N+10)}. Bug
// "add_decrements" turns add's +10 into -10.
RunReport run_arithmetic(const ScenarioConfig& cfg, const RunOptions& opt = {});

// chat_server in front of chat_room and registry. Clients register, join
// a seeded room, post, disconnect. Bug "bypass_membership" skips the
// membership check and routes each post to Room+1.
RunReport run_chat(const ScenarioConfig& cfg, const RunOptions& opt = {});

// Single grow-only counter. Each round is {increment} then {query};
// increment acknowledges the pre-increment value as {old, V}, query
// replies {value, V}. Bug "stale_query" answers queries with the value
// from before the latest increment.
RunReport run_gcounter(const ScenarioConfig& cfg, const RunOptions& opt = {});

// Dispatch by name: "arithmetic", "chat", "gcounter".
RunReport run_scenario(const std::string& name, const ScenarioConfig& cfg,
                       const RunOptions& opt = {});
std::vector<std::string> scenario_names();
std::vector<std::string> scenario_bugs(const std::string& name);

// Property source the scenario evaluates when none is supplied.
std::string shipped_property(const std::string& scenario);

// Behavior factories, for tests that assemble systems by hand.
std::shared_ptr<ServerBehavior> make_arith_main();
std::shared_ptr<ServerBehavior> make_arith_add(bool decrement_bug = false);
std::shared_ptr<ServerBehavior> make_arith_mult();
std::shared_ptr<ServerBehavior> make_chat_server(bool bypass_membership = false);
std::shared_ptr<ServerBehavior> make_chat_room(std::size_t busy_work = 0);
std::shared_ptr<ServerBehavior> make_registry();
std::shared_ptr<ServerBehavior> make_counter(bool stale_query = false);

}  // namespace waltz

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "doctest.h"
#include "waltz/casestudies.hpp"
#include "waltz/errors.hpp"
#include "waltz/runtime.hpp"

using namespace waltz;
using namespace std::chrono_literals;

namespace {

Term at(const char* n) { return Term::atom(n); }

struct Echo : ServerBehavior {
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound&) override {
    return CallResult::respond(msg, std::move(state));
  }
};

// Hands every reply handle to the test instead of answering.
struct Deferring : ServerBehavior {
  std::mutex m;
  std::vector<ReplyHandle> handles;
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term&, const ReplyHandle& from, State state,
                         const Outbound&) override {
    std::lock_guard lock(m);
    handles.push_back(from);
    return CallResult::no_reply(std::move(state));
  }
  ReplyHandle wait_for_handle(std::size_t n) {
    for (;;) {
      {
        std::lock_guard lock(m);
        if (handles.size() >= n) return handles[n - 1];
      }
      std::this_thread::sleep_for(1ms);
    }
  }
};

struct Counter : ServerBehavior {
  std::atomic<int>* in_handler;
  std::atomic<int>* overlaps;
  explicit Counter(std::atomic<int>* ih, std::atomic<int>* ov) : in_handler(ih), overlaps(ov) {}
  State init() override { return std::int64_t{0}; }
  CallResult handle_call(const Term&, const ReplyHandle&, State state, const Outbound&) override {
    if (in_handler->fetch_add(1) != 0) overlaps->fetch_add(1);
    auto n = std::any_cast<std::int64_t>(state);
    std::this_thread::yield();
    in_handler->fetch_sub(1);
    return CallResult::respond(Term::integer(n), std::int64_t{n + 1});
  }
};

struct Recorder : ServerBehavior {
  std::vector<std::int64_t>* sink;  // handler-thread only
  explicit Recorder(std::vector<std::int64_t>* s) : sink(s) {}
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound&) override {
    sink->push_back(msg.int_value());
    return CallResult::respond(at("ok"), std::move(state));
  }
};

struct Bomb : ServerBehavior {
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term& msg, const ReplyHandle&, State state,
                         const Outbound&) override {
    if (msg == at("die")) throw std::runtime_error("boom");
    return CallResult::respond(msg, std::move(state));
  }
};

}  // namespace

TEST_CASE("spawning registers a resolvable name") {
  Runtime rt;
  Term::Pid p = rt.spawn_server(std::make_shared<Echo>(), "echo");
  CHECK(rt.whereis("echo") == p);
  CHECK(rt.name_of(p) == "echo");
  CHECK(!rt.whereis("nobody").has_value());
  Term::Pid q = rt.spawn_server(std::make_shared<Echo>(), "echo2");
  CHECK(p != q);
  CHECK_THROWS_AS(rt.spawn_server(std::make_shared<Echo>(), "echo"), NameAlreadyRegistered);
}

TEST_CASE("call returns the handler's reply") {
  Runtime rt;
  rt.spawn_server(std::make_shared<Echo>(), "echo");
  Term msg = Term::tuple({at("ping"), Term::integer(3)});
  CHECK(rt.call("echo", msg) == msg);
  Term::Pid p = *rt.whereis("echo");
  CHECK(rt.call(p, at("by_pid")) == at("by_pid"));
}

TEST_CASE("calls to unknown targets raise") {
  Runtime rt;
  CHECK_THROWS_AS(rt.call("nobody", at("hi")), UnknownTarget);
  CHECK_THROWS_AS(rt.call(Term::Pid{0, 99, 99}, at("hi")), UnknownTarget);
  CHECK_THROWS_AS(rt.name_of(Term::Pid{0, 99, 99}), UnknownTarget);
}

TEST_CASE("a three-server pipeline answers through plain calls") {
  Runtime rt;
  rt.spawn_server(make_arith_add(false), "add");
  rt.spawn_server(make_arith_mult(), "mult");
  Term reply = rt.call("add", Term::tuple({at("process"), Term::integer(10)}));
  CHECK(reply == Term::tuple({at("result"), Term::integer(40)}));
}

TEST_CASE("a handler may defer its reply to another thread") {
  Runtime rt;
  auto behavior = std::make_shared<Deferring>();
  rt.spawn_server(behavior, "slow");

  Term got;
  std::thread caller([&] { got = rt.call("slow", at("q")); });
  ReplyHandle h = behavior->wait_for_handle(1);
  Runtime::reply(h, Term::integer(99));
  caller.join();
  CHECK(got == Term::integer(99));
  CHECK_THROWS_AS(Runtime::reply(h, Term::integer(1)), AlreadyReplied);
}

TEST_CASE("a deferred server keeps serving while replies are pending") {
  Runtime rt;
  auto behavior = std::make_shared<Deferring>();
  rt.spawn_server(behavior, "slow");

  Term first, second;
  std::thread c1([&] { first = rt.call("slow", Term::integer(1)); });
  std::thread c2([&] { second = rt.call("slow", Term::integer(2)); });
  ReplyHandle h1 = behavior->wait_for_handle(1);
  ReplyHandle h2 = behavior->wait_for_handle(2);  // arrives while h1 is unanswered
  Runtime::reply(h2, at("two"));
  Runtime::reply(h1, at("one"));
  c1.join();
  c2.join();
  // arrival order of the two calls is racy; both must get an answer
  CHECK(((first == at("one") && second == at("two")) ||
         (first == at("two") && second == at("one"))));
}

TEST_CASE("an unanswered call times out") {
  Runtime rt;
  auto behavior = std::make_shared<Deferring>();
  rt.spawn_server(behavior, "slow");
  auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(rt.call("slow", at("q"), 50ms), Timeout);
  CHECK(std::chrono::steady_clock::now() - t0 < 3s);
}

TEST_CASE("a reply ahead of the deadline wins") {
  Runtime rt;
  auto behavior = std::make_shared<Deferring>();
  rt.spawn_server(behavior, "slow");
  Term got;
  std::thread caller([&] { got = rt.call("slow", at("q"), 2000ms); });
  ReplyHandle h = behavior->wait_for_handle(1);
  std::this_thread::sleep_for(20ms);
  Runtime::reply(h, at("made_it"));
  caller.join();
  CHECK(got == at("made_it"));
}

TEST_CASE("handlers never overlap and state updates are linear") {
  Runtime rt;
  std::atomic<int> in_handler{0}, overlaps{0};
  rt.spawn_server(std::make_shared<Counter>(&in_handler, &overlaps), "count");

  constexpr int kThreads = 8, kCalls = 50;
  std::vector<std::thread> threads;
  std::mutex m;
  std::vector<std::int64_t> seen;
  for (int i = 0; i < kThreads; ++i)
    threads.emplace_back([&] {
      for (int k = 0; k < kCalls; ++k) {
        Term r = rt.call("count", at("tick"));
        std::lock_guard lock(m);
        seen.push_back(r.int_value());
      }
    });
  for (auto& t : threads) t.join();

  CHECK(overlaps.load() == 0);
  std::sort(seen.begin(), seen.end());
  REQUIRE(seen.size() == kThreads * kCalls);
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(seen.size()); ++i)
    CHECK(seen[i] == i);  // every ticket handed out exactly once, in some order
}

TEST_CASE("one sender's messages arrive in send order") {
  Runtime rt;
  std::vector<std::int64_t> order;
  rt.spawn_server(std::make_shared<Recorder>(&order), "log");
  for (std::int64_t i = 1; i <= 50; ++i) rt.call("log", Term::integer(i));
  REQUIRE(order.size() == 50);
  for (std::int64_t i = 0; i < 50; ++i) CHECK(order[i] == i + 1);
}

TEST_CASE("an echo storm completes without timeouts") {
  Runtime rt;
  rt.spawn_server(std::make_shared<Echo>(), "echo");
  constexpr int kThreads = 16, kCalls = 50;
  std::atomic<int> bad{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < kThreads; ++i)
    threads.emplace_back([&, i] {
      for (int k = 0; k < kCalls; ++k) {
        Term msg = Term::tuple({Term::integer(i), Term::integer(k)});
        if (rt.call("echo", msg) != msg) bad.fetch_add(1);
      }
    });
  for (auto& t : threads) t.join();
  CHECK(bad.load() == 0);
  CHECK(rt.crashes().empty());
}

TEST_CASE("a throwing handler is recorded and the caller unblocked") {
  Runtime rt;
  rt.spawn_server(std::make_shared<Bomb>(), "bomb");
  Term r = rt.call("bomb", at("die"));
  CHECK(r == Term::tuple({at("server_error")}));
  auto crashes = rt.crashes();
  REQUIRE(crashes.size() == 1);
  CHECK(crashes[0].server == "bomb");
  CHECK(crashes[0].reason == "boom");
  // the server survives for later messages
  CHECK(rt.call("bomb", at("ok")) == at("ok"));
}

TEST_CASE("shutdown is idempotent and calls after it fail cleanly") {
  Runtime rt;
  rt.spawn_server(std::make_shared<Echo>(), "echo");
  rt.shutdown();
  rt.shutdown();
  CHECK_THROWS_AS(rt.call("echo", at("hi")), Error);
}

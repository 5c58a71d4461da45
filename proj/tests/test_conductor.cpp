#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <set>
#include <thread>
#include <vector>

#include "doctest.h"
#include "waltz/casestudies.hpp"
#include "waltz/conductor.hpp"
#include "waltz/errors.hpp"
#include "waltz/instrument.hpp"

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

struct NeverReplies : ServerBehavior {
  std::vector<ReplyHandle> parked;
  State init() override { return std::monostate{}; }
  CallResult handle_call(const Term&, const ReplyHandle& from, State state,
                         const Outbound&) override {
    parked.push_back(from);  // keep the slot alive, never answer
    return CallResult::no_reply(std::move(state));
  }
};

}  // namespace

TEST_CASE("envelope helpers invert each other") {
  Context c = Context::fresh();
  Term inner = Term::tuple({at("process"), Term::integer(10)});
  Term env = make_context_envelope(c, inner);
  auto back = unwrap_context_envelope(env);
  REQUIRE(back.has_value());
  CHECK(back->ctx == c);
  CHECK(back->payload == inner);
  CHECK(!unwrap_context_envelope(inner).has_value());
  CHECK(!unwrap_context_envelope(at("with_context")).has_value());
}

TEST_CASE("a client call gets a fresh context piggybacked on the reply") {
  Runtime rt;
  Conductor cond(rt);
  cond.start();
  rt.spawn_server(wrap_server(std::make_shared<Echo>(), "echo", cond), "echo");

  Term resp = cond.call("echo", at("hi"), std::nullopt, "client");
  REQUIRE(resp.is_tuple());
  REQUIRE(resp.elements().size() == 2);
  CHECK(resp.elements()[0] == at("hi"));
  REQUIRE(resp.elements()[1].is_ref());
  Context got{resp.elements()[1].ref_value()};
  CHECK(cond.tree().derived_from(got, Context::root()));
  cond.stop();
}

TEST_CASE("a non-client caller gets the bare reply in its given context") {
  Runtime rt;
  Conductor cond(rt);
  cond.start();
  rt.spawn_server(wrap_server(std::make_shared<Echo>(), "echo", cond), "echo");

  Context ctx = cond.gen_context();
  Term resp = cond.call("echo", at("hi"), ctx, "main");
  CHECK(resp == at("hi"));  // the envelope goes to the server, not back out

  auto events = cond.bus().snapshot();
  REQUIRE(events.size() == 2);
  CHECK(events[0].from == "main");
  CHECK(events[0].to == "echo");
  CHECK(events[0].payload == at("hi"));
  CHECK(events[0].context == ctx);
  CHECK(events[1].from == "echo");
  CHECK(events[1].to == "main");
  CHECK(events[1].context == ctx);
  cond.stop();
}

TEST_CASE("each call publishes its request before its reply") {
  Runtime rt;
  Conductor cond(rt);
  cond.start();
  rt.spawn_server(wrap_server(std::make_shared<Echo>(), "echo", cond), "echo");
  for (int i = 0; i < 5; ++i) cond.call("echo", Term::integer(i), std::nullopt, "client");
  cond.stop();

  auto events = cond.bus().snapshot();
  REQUIRE(events.size() == 10);
  for (std::size_t i = 0; i < events.size(); i += 2) {
    CHECK(events[i].from == "client");
    CHECK(events[i].to == "echo");
    CHECK(events[i + 1].from == "echo");
    CHECK(events[i + 1].to == "client");
    CHECK(events[i].context == events[i + 1].context);
    CHECK(events[i].payload == events[i + 1].payload);  // echo
  }
}

TEST_CASE("generated contexts are distinct children of the root") {
  Runtime rt;
  Conductor cond(rt);
  std::set<std::uint64_t> tokens;
  for (int i = 0; i < 10000; ++i) {
    Context c = cond.gen_context();
    tokens.insert(c.token.id);
    CHECK(!c.is_root());
  }
  CHECK(tokens.size() == 10000);
  // spot-check tree membership; checking all 10k is just slow
  Context c = cond.gen_context();
  CHECK(cond.tree().derived_from(c, Context::root()));
  CHECK(cond.tree().size() >= 10001);
}

TEST_CASE("target modules resolve to registered names") {
  Runtime rt;
  Conductor cond(rt);
  Term::Pid p = rt.spawn_server(std::make_shared<Echo>(), "echo");
  CHECK(cond.get_target_module("anything") == "anything");
  CHECK(cond.get_target_module(p) == "echo");
  CHECK_THROWS_AS(cond.get_target_module(Term::Pid{0, 99, 99}), UnknownTarget);
}

TEST_CASE("client module membership follows the config") {
  Runtime rt;
  Conductor defaults(rt);
  CHECK(defaults.is_client_module("client"));
  CHECK(!defaults.is_client_module("main"));
  CHECK(!defaults.is_client_module(""));

  Runtime rt2;
  Conductor none(rt2, ConductorConfig{{}});
  CHECK(!none.is_client_module("client"));

  Runtime rt3;
  Conductor two(rt3, ConductorConfig{{"alpha", "beta"}});
  CHECK(two.is_client_module("alpha"));
  CHECK(two.is_client_module("beta"));
  CHECK(!two.is_client_module("client"));
}

TEST_CASE("a routed call to a missing server raises through the conductor") {
  Runtime rt;
  Conductor cond(rt);
  cond.start();
  CHECK_THROWS_AS(cond.call("nobody", at("hi"), std::nullopt, "client"), UnknownTarget);
  cond.stop();
}

TEST_CASE("a forwarded timeout comes back as a marker event and a raised Timeout") {
  Runtime rt{RuntimeConfig{100ms}};
  Conductor cond(rt);
  cond.start();
  rt.spawn_server(std::make_shared<NeverReplies>(), "tar_pit");

  Context ctx = cond.gen_context();
  CHECK_THROWS_AS(cond.call("tar_pit", at("hi"), ctx, "main"), Timeout);
  cond.stop();

  auto events = cond.bus().snapshot();
  REQUIRE(events.size() == 2);
  CHECK(events[1].from == "tar_pit");
  CHECK(events[1].to == "main");
  CHECK(events[1].payload == Term::tuple({at("conductor_timeout")}));
  CHECK(events[1].context == ctx);
}

TEST_CASE("a stopped conductor turns late routed calls into unknown-target errors") {
  Runtime rt;
  Conductor cond(rt);
  cond.start();
  rt.spawn_server(wrap_server(std::make_shared<Echo>(), "echo", cond), "echo");
  CHECK(cond.call("echo", at("hi"), std::nullopt, "client").is_tuple());
  cond.stop();

  std::size_t events_before = cond.bus().size();
  CHECK_THROWS_AS(cond.call("echo", at("late"), std::nullopt, "client"), UnknownTarget);
  CHECK_THROWS_AS(cond.call("echo", at("late"), cond.gen_context(), "main"), UnknownTarget);
  CHECK(cond.bus().size() == events_before);  // nothing new reaches the bus
}

TEST_CASE("a full pipeline call leaves one nested six-event chain") {
  Runtime rt;
  Conductor cond(rt);
  cond.start();
  rt.spawn_server(wrap_server(make_arith_main(), "main", cond), "main");
  rt.spawn_server(wrap_server(make_arith_add(false), "add", cond), "add");
  rt.spawn_server(wrap_server(make_arith_mult(), "mult", cond), "mult");

  ClientHandle client(cond);
  Term::Pid me = client.pid();
  Term reply =
      client.send("main", Term::tuple({at("process"), Term::pid(me), Term::integer(10)}));
  CHECK(reply == Term::tuple({at("result"), Term::integer(40)}));
  cond.stop();

  auto events = cond.bus().snapshot();
  REQUIRE(events.size() == 6);
  const char* expected[6][2] = {{"client", "main"}, {"main", "add"},  {"add", "mult"},
                                {"mult", "add"},    {"add", "main"}, {"main", "client"}};
  for (int i = 0; i < 6; ++i) {
    CHECK(events[i].from == expected[i][0]);
    CHECK(events[i].to == expected[i][1]);
    CHECK(events[i].context == events[0].context);
  }
  CHECK(events[1].payload ==
        Term::tuple({at("process"), Term::pid(me), Term::integer(10)}));
  CHECK(events[2].payload == Term::tuple({at("process"), Term::integer(20)}));
  CHECK(events[3].payload == Term::tuple({at("result"), Term::integer(40)}));
}

TEST_CASE("concurrent chains interleave on the bus but never share a context") {
  Runtime rt;
  Conductor cond(rt);
  cond.start();
  rt.spawn_server(wrap_server(make_arith_main(), "main", cond), "main");
  rt.spawn_server(wrap_server(make_arith_add(false), "add", cond), "add");
  rt.spawn_server(wrap_server(make_arith_mult(), "mult", cond), "mult");

  constexpr int kClients = 6, kCalls = 5;
  std::vector<std::thread> threads;
  std::atomic<int> bad{0};
  for (int i = 0; i < kClients; ++i)
    threads.emplace_back([&] {
      ClientHandle client(cond);
      Term::Pid me = client.pid();
      for (int k = 0; k < kCalls; ++k) {
        Term reply = client.send(
            "main", Term::tuple({at("process"), Term::pid(me), Term::integer(k)}));
        if (reply != Term::tuple({at("result"), Term::integer((k + 10) * 2)})) bad.fetch_add(1);
      }
    });
  for (auto& t : threads) t.join();
  cond.stop();
  CHECK(bad.load() == 0);

  // per-context event streams must each be a clean repetition of the
  // six-hop chain shape even though the global order interleaves
  auto events = cond.bus().snapshot();
  CHECK(events.size() == kClients * kCalls * 6);
  std::map<std::uint64_t, std::vector<const Event*>> per_ctx;
  for (const auto& e : events) per_ctx[e.context.token.id].push_back(&e);
  CHECK(per_ctx.size() == kClients);
  const char* expected[6][2] = {{"client", "main"}, {"main", "add"},  {"add", "mult"},
                                {"mult", "add"},    {"add", "main"}, {"main", "client"}};
  for (const auto& [token, stream] : per_ctx) {
    REQUIRE(stream.size() == kCalls * 6);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      CHECK(stream[i]->from == expected[i % 6][0]);
      CHECK(stream[i]->to == expected[i % 6][1]);
    }
  }
}

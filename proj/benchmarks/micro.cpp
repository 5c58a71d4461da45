// Microbenchmarks for the hot paths: a bare runtime call, the same call
// routed through the conductor, one monitor step, and property parsing.

#include <benchmark/benchmark.h>

#include "waltz/casestudies.hpp"
#include "waltz/conductor.hpp"
#include "waltz/instrument.hpp"
#include "waltz/lang.hpp"
#include "waltz/monitor.hpp"
#include "waltz/runtime.hpp"
#include "waltz/term.hpp"

namespace {

struct Echo : waltz::ServerBehavior {
  waltz::State init() override { return std::monostate{}; }
  waltz::CallResult handle_call(const waltz::Term& msg, const waltz::ReplyHandle&,
                                waltz::State state, const waltz::Outbound&) override {
    return waltz::CallResult::respond(msg, std::move(state));
  }
};

void BM_runtime_call(benchmark::State& state) {
  waltz::Runtime rt;
  rt.spawn_server(std::make_shared<Echo>(), "echo");
  waltz::Term msg = waltz::Term::tuple({waltz::Term::atom("ping"), waltz::Term::integer(1)});
  for (auto _ : state) benchmark::DoNotOptimize(rt.call("echo", msg));
  rt.shutdown();
}
BENCHMARK(BM_runtime_call);

void BM_conductor_hop(benchmark::State& state) {
  waltz::Runtime rt;
  waltz::Conductor conductor(rt);
  conductor.start();
  rt.spawn_server(waltz::wrap_server(std::make_shared<Echo>(), "echo", conductor), "echo");
  waltz::ClientHandle client(conductor);
  waltz::Term msg = waltz::Term::tuple({waltz::Term::atom("ping"), waltz::Term::integer(1)});
  for (auto _ : state) benchmark::DoNotOptimize(client.send("echo", msg));
  conductor.stop();
  rt.shutdown();
}
BENCHMARK(BM_conductor_hop);

void BM_monitor_step(benchmark::State& state) {
  waltz::MonitorProgram program = waltz::compile_monitor(
      waltz::parse_formula("omega(send a -> b {x, N} : N >= 0)"));
  waltz::ContextTree tree;
  waltz::Context ctx = waltz::Context::fresh();
  tree.add(ctx, waltz::Context::root());
  waltz::MonitorEngine engine(program, tree);
  waltz::Event e{"a", "b",
                 waltz::Term::tuple({waltz::Term::atom("x"), waltz::Term::integer(3)}), ctx};
  for (auto _ : state) benchmark::DoNotOptimize(engine.step(e));
}
BENCHMARK(BM_monitor_step);

void BM_parse_formula(benchmark::State& state) {
  std::string source = waltz::shipped_property("arithmetic");
  for (auto _ : state) benchmark::DoNotOptimize(waltz::parse_formula(source));
}
BENCHMARK(BM_parse_formula);

}  // namespace

BENCHMARK_MAIN();

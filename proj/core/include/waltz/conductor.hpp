#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "waltz/event.hpp"
#include "waltz/runtime.hpp"

namespace waltz {

struct ConductorConfig {
  // Modules whose calls get the context piggybacked onto the reply.
  std::set<std::string> client_modules = {"client"};
};

// Central router that stamps every call with a causality context and
// publishes one request and one reply event per call on its bus. Its own
// handler never blocks: forwarding happens on a spawned worker, so server
// handlers are free to route their onward calls back through here.
class Conductor {
 public:
  Conductor(Runtime& rt, ConductorConfig cfg = {});
  ~Conductor();

  Conductor(const Conductor&) = delete;
  Conductor& operator=(const Conductor&) = delete;

  static constexpr const char* process_name = "conductor";

  void start();
  // Stops routing and blocks until every call that went through call() has
  // been fully dealt with: queued envelopes included, not just the workers
  // already serving one. Calls arriving afterwards (say, a server that was
  // still finishing a handler) get an unknown-target reply. Idempotent.
  void stop();

  // Routed call. Context reuse: an absent ctx means a fresh context is
  // generated and recorded under the root. Client-module callers receive
  // {reply, ctx} pairs; everyone else the bare reply. Raises Timeout when
  // the forwarded call times out (after emitting the {conductor_timeout}
  // reply event) and UnknownTarget for unresolvable targets.
  Term call(const Target& to, Term msg, std::optional<Context> ctx,
            const std::string& from_module);

  // Fresh token, recorded as derived from the root context.
  Context gen_context();

  // Name targets resolve to themselves; pid targets to their registered
  // name, or UnknownTarget.
  std::string get_target_module(const Target& to) const;

  bool is_client_module(const std::string& module) const;

  EventBus& bus() { return bus_; }
  const ContextTree& tree() const { return tree_; }
  const ContextLabels& labels() const { return labels_; }

  Runtime& runtime() { return rt_; }

 private:
  friend class ConductorBehavior;

  void spawn_worker(Target to, std::string to_module, std::string from_module, Term msg,
                    Context ctx, ReplyHandle reply_to, bool counted);

  Runtime& rt_;
  ConductorConfig cfg_;
  EventBus bus_;
  ContextTree tree_;
  ContextLabels labels_;

  struct WorkerGate;
  std::shared_ptr<WorkerGate> gate_;
  // Shared with the conductor's server behavior, which can outlive this
  // object inside the runtime and must not touch it once set.
  std::shared_ptr<std::atomic<bool>> stopped_;
  bool started_ = false;
};

// Envelope helpers shared with the instrumentation wrapper.
Term make_context_envelope(const Context& ctx, Term payload);
// nullopt when the term is not a {with_context, Ctx, Msg} envelope.
struct ContextEnvelope {
  Context ctx;
  Term payload;
};
std::optional<ContextEnvelope> unwrap_context_envelope(const Term& t);

}  // namespace waltz

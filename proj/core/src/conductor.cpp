#include "waltz/conductor.hpp"

#include <cassert>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace waltz {

namespace {

Term encode_target(const Target& to) {
  if (const auto* name = std::get_if<std::string>(&to)) return Term::atom(*name);
  return Term::pid(std::get<Term::Pid>(to));
}

Target decode_target(const Term& t) {
  if (t.is_atom()) return t.atom_name();
  return t.pid_value();
}

bool is_marker(const Term& t, const char* name) {
  return t.is_tuple() && t.elements().size() == 1 && t.elements()[0].is_atom() &&
         t.elements()[0].atom_name() == name;
}

std::string target_name(const Target& to) {
  if (const auto* name = std::get_if<std::string>(&to)) return *name;
  return to_string(Term::pid(std::get<Term::Pid>(to)));
}

}  // namespace

Term make_context_envelope(const Context& ctx, Term payload) {
  return Term::tuple({Term::atom("with_context"), Term::ref(ctx.token), std::move(payload)});
}

std::optional<ContextEnvelope> unwrap_context_envelope(const Term& t) {
  if (!t.is_tuple()) return std::nullopt;
  const auto& e = t.elements();
  if (e.size() != 3 || !e[0].is_atom() || e[0].atom_name() != "with_context" || !e[1].is_ref())
    return std::nullopt;
  return ContextEnvelope{Context{e[1].ref_value()}, e[2]};
}

// Counts every routed call from the moment call() enqueues it until the
// conductor is completely done with it. A caller that gives up waiting does
// not release its token: the envelope is still in the mailbox and will still
// be processed, so drain() has to cover it too.
struct Conductor::WorkerGate {
  std::mutex m;
  std::condition_variable cv;
  std::size_t outstanding = 0;

  void enter() {
    std::lock_guard lock(m);
    ++outstanding;
  }
  void leave() {
    {
      std::lock_guard lock(m);
      assert(outstanding > 0);
      if (outstanding > 0) --outstanding;
    }
    cv.notify_all();
  }
  void drain() {
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return outstanding == 0; });
  }
};

// The conductor's own server. Handles {send, To, Msg, Ctx, FromModule}
// tuples (plus a trailing accounting marker when they came through
// Conductor::call): emits the request event, hands forwarding to a worker,
// never blocks. The gate, the stopped flag and the client-module set are
// held by value/shared pointer because this behavior lives inside the
// runtime and can be invoked on envelopes that were still queued while the
// Conductor object itself is being torn down.
class ConductorBehavior : public ServerBehavior {
 public:
  ConductorBehavior(Conductor& owner, std::shared_ptr<Conductor::WorkerGate> gate,
                    std::shared_ptr<std::atomic<bool>> stopped,
                    std::set<std::string> client_modules)
      : owner_(owner),
        gate_(std::move(gate)),
        stopped_(std::move(stopped)),
        client_modules_(std::move(client_modules)) {}

  State init() override { return State{}; }

  CallResult handle_call(const Term& msg, const ReplyHandle& from, State state,
                         const Outbound&) override {
    bool shaped = msg.is_tuple() &&
                  (msg.elements().size() == 5 || msg.elements().size() == 6) &&
                  msg.elements()[0].is_atom() && msg.elements()[0].atom_name() == "send";
    bool counted = false;
    if (shaped && msg.elements().size() == 6) {
      const Term& mark = msg.elements()[5];
      counted = mark.is_atom() && mark.atom_name() == "counted";
      shaped = counted;
    }
    if (!shaped) {
      return CallResult::respond(Term::tuple({Term::atom("conductor_bad_request")}),
                                 std::move(state));
    }
    const auto& e = msg.elements();
    Target to = decode_target(e[1]);
    const Term& payload = e[2];
    Context ctx{e[3].ref_value()};
    const std::string& from_module = e[4].atom_name();

    // Once stopped, answer leftovers with a marker built from local copies
    // only: the owning Conductor may already be gone.
    if (stopped_->load()) {
      Term marker = Term::tuple({Term::atom("conductor_unknown_target")});
      if (client_modules_.count(from_module) > 0)
        marker = Term::tuple({std::move(marker), Term::ref(ctx.token)});
      if (counted) gate_->leave();
      return CallResult::respond(std::move(marker), std::move(state));
    }

    std::string to_module;
    try {
      to_module = owner_.get_target_module(to);
    } catch (const UnknownTarget&) {
      Term marker = Term::tuple({Term::atom("conductor_unknown_target")});
      if (owner_.is_client_module(from_module))
        marker = Term::tuple({std::move(marker), Term::ref(ctx.token)});
      if (counted) gate_->leave();
      return CallResult::respond(std::move(marker), std::move(state));
    }

    owner_.bus_.emit(Event{from_module, to_module, payload, ctx});
    owner_.spawn_worker(std::move(to), std::move(to_module), from_module, payload, ctx, from,
                        counted);
    return CallResult::no_reply(std::move(state));
  }

 private:
  Conductor& owner_;
  std::shared_ptr<Conductor::WorkerGate> gate_;
  std::shared_ptr<std::atomic<bool>> stopped_;
  std::set<std::string> client_modules_;
};

Conductor::Conductor(Runtime& rt, ConductorConfig cfg)
    : rt_(rt),
      cfg_(std::move(cfg)),
      gate_(std::make_shared<WorkerGate>()),
      stopped_(std::make_shared<std::atomic<bool>>(false)) {}

Conductor::~Conductor() { stop(); }

void Conductor::start() {
  rt_.spawn_server(
      std::make_shared<ConductorBehavior>(*this, gate_, stopped_, cfg_.client_modules),
      process_name);
  started_ = true;
}

void Conductor::stop() {
  if (!started_) return;
  stopped_->store(true);
  gate_->drain();
}

Context Conductor::gen_context() {
  Context c = Context::fresh();
  tree_.add(c, Context::root());
  labels_.assign_next(c);
  return c;
}

std::string Conductor::get_target_module(const Target& to) const {
  if (const auto* name = std::get_if<std::string>(&to)) return *name;
  return rt_.name_of(std::get<Term::Pid>(to));
}

bool Conductor::is_client_module(const std::string& module) const {
  return cfg_.client_modules.count(module) > 0;
}

void Conductor::spawn_worker(Target to, std::string to_module, std::string from_module, Term msg,
                             Context ctx, ReplyHandle reply_to, bool counted) {
  // An envelope from Conductor::call already carries a gate token; the
  // worker inherits it and releases it when done. Anything else gets its
  // own token here.
  if (!counted) gate_->enter();
  auto gate = gate_;
  Runtime* rt = &rt_;
  EventBus bus_copy = bus_;  // shares the underlying stream
  bool piggyback = is_client_module(from_module);
  auto inner_timeout = rt_.config().call_timeout;

  std::thread([rt, gate, bus = std::move(bus_copy), to = std::move(to),
               to_module = std::move(to_module), from_module = std::move(from_module),
               msg = std::move(msg), ctx, piggyback, inner_timeout,
               reply_to = std::move(reply_to)]() mutable {
    Term reply;
    try {
      reply = rt->call(to, make_context_envelope(ctx, std::move(msg)), inner_timeout);
    } catch (const Timeout&) {
      reply = Term::tuple({Term::atom("conductor_timeout")});
    } catch (const UnknownTarget&) {
      reply = Term::tuple({Term::atom("conductor_unknown_target")});
    }
    // Monitors see the bare reply; only the caller gets the context pair.
    Term final = piggyback ? Term::tuple({reply, Term::ref(ctx.token)}) : reply;
    bus.emit(Event{to_module, from_module, std::move(reply), ctx});
    try {
      Runtime::reply(reply_to, std::move(final));
    } catch (const AlreadyReplied&) {
    }
    gate->leave();
  }).detach();
}

Term Conductor::call(const Target& to, Term msg, std::optional<Context> ctx,
                     const std::string& from_module) {
  Context c = ctx ? *ctx : gen_context();
  Term packed = Term::tuple({Term::atom("send"), encode_target(to), std::move(msg),
                             Term::ref(c.token), Term::atom(from_module),
                             Term::atom("counted")});
  // Margin over the worker's own timeout, so a downstream timeout comes
  // back as the marker reply instead of racing this wait.
  auto outer = rt_.config().call_timeout + std::chrono::milliseconds(1000);

  // Take a gate token before enqueueing. It is released by whichever path
  // finishes the envelope: the worker serving it, an early marker reply, or
  // the catch below when enqueueing itself failed. On a Timeout the token
  // stays taken on purpose: the envelope is still queued and stop() must
  // wait for it even though this caller walks away.
  gate_->enter();
  Term resp;
  try {
    resp = rt_.call(std::string(process_name), std::move(packed), outer);
  } catch (const Timeout&) {
    throw;
  } catch (...) {
    gate_->leave();
    throw;
  }

  const Term* bare = &resp;
  if (is_client_module(from_module) && resp.is_tuple() && resp.elements().size() == 2 &&
      resp.elements()[1].is_ref()) {
    bare = &resp.elements()[0];
  }
  if (is_marker(*bare, "conductor_timeout")) throw Timeout("conductor call timed out");
  if (is_marker(*bare, "conductor_unknown_target")) throw UnknownTarget(target_name(to));
  return resp;
}

}  // namespace waltz

#include "waltz/instrument.hpp"

namespace waltz {

namespace {

struct WrappedState {
  State inner;
  std::optional<Context> slot;
};

class InstrumentedBehavior : public ServerBehavior {
 public:
  InstrumentedBehavior(std::shared_ptr<ServerBehavior> inner, std::string module,
                       Conductor& conductor)
      : inner_(std::move(inner)), module_(std::move(module)), conductor_(&conductor) {}

  State init() override { return WrappedState{inner_->init(), std::nullopt}; }

  CallResult handle_call(const Term& msg, const ReplyHandle& from, State state,
                         const Outbound&) override {
    auto ws = std::any_cast<WrappedState>(std::move(state));

    auto envelope = unwrap_context_envelope(msg);
    if (envelope) ws.slot = envelope->ctx;
    const Term& inner_msg = envelope ? envelope->payload : msg;

    // Captured once per invocation; deferred work keeps this context even
    // if later messages overwrite the slot.
    std::optional<Context> entry = ws.slot;
    Conductor* conductor = conductor_;
    std::string module = module_;
    Outbound routed([conductor, entry, module](const std::string& to, Term m) {
      return conductor->call(to, std::move(m), entry, module);
    });

    CallResult r = inner_->handle_call(inner_msg, from, std::move(ws.inner), routed);
    ws.inner = std::move(r.state);
    return CallResult{std::move(r.reply), State{std::move(ws)}};
  }

 private:
  std::shared_ptr<ServerBehavior> inner_;
  std::string module_;
  Conductor* conductor_;
};

}  // namespace

std::shared_ptr<ServerBehavior> wrap_server(std::shared_ptr<ServerBehavior> inner,
                                            std::string module_name, Conductor& conductor) {
  return std::make_shared<InstrumentedBehavior>(std::move(inner), std::move(module_name),
                                                conductor);
}

ClientHandle::ClientHandle(Conductor& conductor, std::string module)
    : conductor_(&conductor), module_(std::move(module)) {
  if (!conductor_->is_client_module(module_))
    throw Error("client handle module " + module_ + " is not configured as a client module");
  pid_ = conductor_->runtime().make_pid();
}

Term ClientHandle::send(const Target& to, Term msg) {
  Term resp = conductor_->call(to, std::move(msg), ctx_, module_);
  // Client calls come back as {reply, ctx}; adopt the context.
  if (resp.is_tuple() && resp.elements().size() == 2 && resp.elements()[1].is_ref()) {
    ctx_ = Context{resp.elements()[1].ref_value()};
    return resp.elements()[0];
  }
  throw Error("conductor reply to a client module was not a context pair");
}

}  // namespace waltz

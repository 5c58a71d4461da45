#pragma once

#include <memory>
#include <optional>
#include <string>

#include "waltz/conductor.hpp"

namespace waltz {

// Wraps a behavior for conductor-routed operation without touching its
// code: keeps a context slot outside the inner state (initially absent),
// unwraps {with_context, Ctx, Msg} envelopes into the slot before
// dispatch, hands the inner behavior an outbound capability that routes
// through the conductor with the context captured at handler entry, and
// passes non-enveloped messages through unchanged.
std::shared_ptr<ServerBehavior> wrap_server(std::shared_ptr<ServerBehavior> inner,
                                            std::string module_name, Conductor& conductor);

// Client-side endpoint. Sends go through the conductor; the context that
// comes back piggybacked on the first reply is cached and reused for the
// rest of the handle's life, so one handle forms one causal chain.
class ClientHandle {
 public:
  explicit ClientHandle(Conductor& conductor, std::string module = "client");

  Term send(const Target& to, Term msg);

  const std::optional<Context>& context() const { return ctx_; }

  // Drops the cached context; the next send starts a fresh chain.
  void reset() { ctx_.reset(); }

  Term::Pid pid() const { return pid_; }
  const std::string& module() const { return module_; }

 private:
  Conductor* conductor_;
  std::string module_;
  std::optional<Context> ctx_;
  Term::Pid pid_;
};

}  // namespace waltz

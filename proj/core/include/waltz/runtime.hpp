#pragma once

#include <any>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "waltz/term.hpp"

namespace waltz {

// Opaque per-server state, threaded through handler invocations.
using State = std::any;

class Runtime;
namespace detail {
struct ReplySlot;
class Process;
}  // namespace detail

// One-shot rendezvous back to a blocked caller. Replying twice raises
// AlreadyReplied; a handle outliving its caller is harmless.
class ReplyHandle {
 public:
  ReplyHandle() = default;
  bool valid() const { return slot_ != nullptr; }

 private:
  friend class Runtime;
  friend class detail::Process;
  explicit ReplyHandle(std::shared_ptr<detail::ReplySlot> s) : slot_(std::move(s)) {}
  std::shared_ptr<detail::ReplySlot> slot_;
};

// Either an immediate reply plus the next state, or just the next state
// when the handler will answer later through its ReplyHandle.
struct CallResult {
  std::optional<Term> reply;
  State state;

  static CallResult respond(Term value, State next) {
    return CallResult{std::move(value), std::move(next)};
  }
  static CallResult no_reply(State next) { return CallResult{std::nullopt, std::move(next)}; }
};

// Capability a handler uses for onward calls. Copyable, so deferred work
// can carry it out of the handler; the routing it captured stays fixed.
class Outbound {
 public:
  Outbound() = default;
  explicit Outbound(std::function<Term(const std::string&, Term)> fn) : fn_(std::move(fn)) {}
  Term call(const std::string& to, Term msg) const { return fn_(to, std::move(msg)); }

 private:
  std::function<Term(const std::string&, Term)> fn_;
};

struct ServerBehavior {
  virtual ~ServerBehavior() = default;
  virtual State init() = 0;
  virtual CallResult handle_call(const Term& msg, const ReplyHandle& from, State state,
                                 const Outbound& out) = 0;
};

using Target = std::variant<Term::Pid, std::string>;

struct RuntimeConfig {
  std::chrono::milliseconds call_timeout{5000};
};

struct CrashRecord {
  std::string server;
  std::string reason;
};

// Thread-per-server actor runtime. Each server owns an unbounded FIFO
// mailbox and handles one message at a time; call() blocks the caller
// until the server replies or the timeout expires.
class Runtime {
 public:
  explicit Runtime(RuntimeConfig cfg = {});
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  // Registers under a unique name and starts the server thread.
  Term::Pid spawn_server(std::shared_ptr<ServerBehavior> behavior, const std::string& name);

  Term call(const Target& to, Term msg);
  Term call(const Target& to, Term msg, std::chrono::milliseconds timeout);

  static void reply(const ReplyHandle& to, Term value);

  std::optional<Term::Pid> whereis(const std::string& name) const;
  // Registered name for a pid; UnknownTarget if the pid is not a live server.
  std::string name_of(const Term::Pid& pid) const;

  // Mints a pid for an external caller (a test driver or client handle).
  Term::Pid make_pid();

  const RuntimeConfig& config() const { return cfg_; }

  // Behaviors that threw out of handle_call. Healthy runs leave this empty.
  std::vector<CrashRecord> crashes() const;

  // Stops every server and joins its thread. Idempotent.
  void shutdown();

 private:
  friend class detail::Process;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  RuntimeConfig cfg_;
};

}  // namespace waltz

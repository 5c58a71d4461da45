#include "waltz/runtime.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace waltz {

namespace detail {

struct ReplySlot {
  std::mutex m;
  std::condition_variable cv;
  std::optional<Term> value;
  bool replied = false;

  void fulfill(Term v) {
    {
      std::lock_guard lock(m);
      if (replied) throw AlreadyReplied();
      replied = true;
      value = std::move(v);
    }
    cv.notify_all();
  }

  Term await(std::chrono::milliseconds timeout) {
    std::unique_lock lock(m);
    if (!cv.wait_for(lock, timeout, [&] { return value.has_value(); })) throw Timeout();
    return *value;
  }
};

struct Envelope {
  Term msg;
  std::shared_ptr<ReplySlot> slot;
};

class Process {
 public:
  Process(Runtime& rt, std::shared_ptr<ServerBehavior> behavior, std::string name,
          Term::Pid pid)
      : rt_(rt), behavior_(std::move(behavior)), name_(std::move(name)), pid_(pid) {}

  const std::string& name() const { return name_; }
  Term::Pid pid() const { return pid_; }

  void start();
  void enqueue(Envelope env);
  void stop();   // lets the loop finish queued messages, then exit
  void join();

 private:
  void loop();

  Runtime& rt_;
  std::shared_ptr<ServerBehavior> behavior_;
  std::string name_;
  Term::Pid pid_;

  std::mutex m_;
  std::condition_variable cv_;
  std::deque<Envelope> queue_;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace detail

struct Runtime::Impl {
  mutable std::mutex m;
  std::unordered_map<std::string, std::shared_ptr<detail::Process>> by_name;
  std::unordered_map<std::uint32_t, std::shared_ptr<detail::Process>> by_serial;
  std::uint32_t next_serial = 1;
  bool shut_down = false;

  std::mutex crash_m;
  std::vector<CrashRecord> crashes;

  std::shared_ptr<detail::Process> resolve(const Target& to) {
    std::lock_guard lock(m);
    if (const auto* name = std::get_if<std::string>(&to)) {
      auto it = by_name.find(*name);
      if (it == by_name.end()) throw UnknownTarget(*name);
      return it->second;
    }
    const auto& pid = std::get<Term::Pid>(to);
    auto it = by_serial.find(pid.serial);
    if (it == by_serial.end()) throw UnknownTarget(to_string(Term::pid(pid)));
    return it->second;
  }

  void record_crash(const std::string& server, const std::string& reason) {
    std::lock_guard lock(crash_m);
    crashes.push_back({server, reason});
  }
};

namespace detail {

void Process::start() {
  thread_ = std::thread([this] { loop(); });
}

void Process::enqueue(Envelope env) {
  {
    std::lock_guard lock(m_);
    if (stopping_) throw UnknownTarget(name_);
    queue_.push_back(std::move(env));
  }
  cv_.notify_one();
}

void Process::stop() {
  {
    std::lock_guard lock(m_);
    stopping_ = true;
  }
  cv_.notify_one();
}

void Process::join() {
  if (thread_.joinable()) thread_.join();
}

void Process::loop() {
  Runtime& rt = rt_;
  Outbound direct([&rt](const std::string& to, Term msg) { return rt.call(to, std::move(msg)); });

  State state;
  try {
    state = behavior_->init();
  } catch (const std::exception& e) {
    rt_.impl_->record_crash(name_, std::string("init: ") + e.what());
    return;
  }

  for (;;) {
    Envelope env;
    {
      std::unique_lock lock(m_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping and drained
      env = std::move(queue_.front());
      queue_.pop_front();
    }
    ReplyHandle from(env.slot);
    try {
      CallResult r = behavior_->handle_call(env.msg, from, std::move(state), direct);
      state = std::move(r.state);
      if (r.reply) Runtime::reply(from, std::move(*r.reply));
    } catch (const std::exception& e) {
      rt_.impl_->record_crash(name_, e.what());
      // Unblock the caller rather than letting it ride out the timeout.
      try {
        env.slot->fulfill(Term::tuple({Term::atom("server_error")}));
      } catch (const AlreadyReplied&) {
      }
      // The handler consumed the old state when it threw. Restart the
      // server with a fresh one and keep draining the mailbox.
      try {
        state = behavior_->init();
      } catch (const std::exception& e2) {
        rt_.impl_->record_crash(name_, std::string("init: ") + e2.what());
        return;
      }
    }
  }
}

}  // namespace detail

Runtime::Runtime(RuntimeConfig cfg) : impl_(std::make_unique<Impl>()), cfg_(cfg) {}

Runtime::~Runtime() { shutdown(); }

Term::Pid Runtime::spawn_server(std::shared_ptr<ServerBehavior> behavior, const std::string& name) {
  std::shared_ptr<detail::Process> proc;
  {
    std::lock_guard lock(impl_->m);
    if (impl_->by_name.count(name)) throw NameAlreadyRegistered(name);
    Term::Pid pid{0, impl_->next_serial++, 0};
    proc = std::make_shared<detail::Process>(*this, std::move(behavior), name, pid);
    impl_->by_name.emplace(name, proc);
    impl_->by_serial.emplace(pid.serial, proc);
  }
  proc->start();
  return proc->pid();
}

Term Runtime::call(const Target& to, Term msg) { return call(to, std::move(msg), cfg_.call_timeout); }

Term Runtime::call(const Target& to, Term msg, std::chrono::milliseconds timeout) {
  auto proc = impl_->resolve(to);
  auto slot = std::make_shared<detail::ReplySlot>();
  proc->enqueue(detail::Envelope{std::move(msg), slot});
  return slot->await(timeout);
}

void Runtime::reply(const ReplyHandle& to, Term value) {
  if (!to.slot_) throw Error("reply on an empty handle");
  to.slot_->fulfill(std::move(value));
}

std::optional<Term::Pid> Runtime::whereis(const std::string& name) const {
  std::lock_guard lock(impl_->m);
  auto it = impl_->by_name.find(name);
  if (it == impl_->by_name.end()) return std::nullopt;
  return it->second->pid();
}

std::string Runtime::name_of(const Term::Pid& pid) const {
  std::lock_guard lock(impl_->m);
  auto it = impl_->by_serial.find(pid.serial);
  if (it == impl_->by_serial.end()) throw UnknownTarget(to_string(Term::pid(pid)));
  return it->second->name();
}

Term::Pid Runtime::make_pid() {
  std::lock_guard lock(impl_->m);
  return Term::Pid{0, impl_->next_serial++, 0};
}

std::vector<CrashRecord> Runtime::crashes() const {
  std::lock_guard lock(impl_->crash_m);
  return impl_->crashes;
}

void Runtime::shutdown() {
  std::vector<std::shared_ptr<detail::Process>> procs;
  {
    std::lock_guard lock(impl_->m);
    if (impl_->shut_down) return;
    impl_->shut_down = true;
    for (auto& [_, p] : impl_->by_name) procs.push_back(p);
  }
  for (auto& p : procs) p->stop();
  for (auto& p : procs) p->join();
}

}  // namespace waltz

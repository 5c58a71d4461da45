#include "waltz/event.hpp"

#include <condition_variable>
#include <mutex>
#include <unordered_map>

#include "waltz/errors.hpp"

namespace waltz {

struct ContextTree::Inner {
  mutable std::mutex m;
  std::unordered_map<std::uint64_t, Context> parent;
  std::vector<std::pair<Context, Context>> order;
};

ContextTree::ContextTree() : inner_(std::make_shared<Inner>()) {}

void ContextTree::add(const Context& child, const Context& parent) {
  std::lock_guard lock(inner_->m);
  if (child.is_root()) throw Error("the root context cannot get a parent");
  if (!parent.is_root() && !inner_->parent.count(parent.token.id))
    throw Error("context parent not recorded");
  if (inner_->parent.count(child.token.id)) throw Error("context recorded twice");
  inner_->parent.emplace(child.token.id, parent);
  inner_->order.emplace_back(child, parent);
}

std::optional<Context> ContextTree::parent(const Context& c) const {
  std::lock_guard lock(inner_->m);
  auto it = inner_->parent.find(c.token.id);
  if (it == inner_->parent.end()) return std::nullopt;
  return it->second;
}

bool ContextTree::contains(const Context& c) const {
  if (c.is_root()) return true;
  std::lock_guard lock(inner_->m);
  return inner_->parent.count(c.token.id) > 0;
}

bool ContextTree::derived_from(const Context& c, const Context& p) const {
  std::lock_guard lock(inner_->m);
  auto it = inner_->parent.find(c.token.id);
  return it != inner_->parent.end() && it->second == p;
}

std::vector<Context> ContextTree::children(const Context& parent) const {
  std::lock_guard lock(inner_->m);
  std::vector<Context> out;
  for (const auto& [child, par] : inner_->order)
    if (par == parent) out.push_back(child);
  return out;
}

std::vector<std::pair<Context, Context>> ContextTree::edges() const {
  std::lock_guard lock(inner_->m);
  return inner_->order;
}

std::size_t ContextTree::size() const {
  std::lock_guard lock(inner_->m);
  return inner_->order.size();
}

struct ContextLabels::Inner {
  mutable std::mutex m;
  std::unordered_map<std::uint64_t, std::string> label;
  std::unordered_map<std::string, Context> token;
  std::uint64_t next = 1;
};

ContextLabels::ContextLabels() : inner_(std::make_shared<Inner>()) {
  inner_->label.emplace(0, "ctx-0");
  inner_->token.emplace("ctx-0", Context::root());
}

std::string ContextLabels::assign_next(const Context& c) {
  std::lock_guard lock(inner_->m);
  auto it = inner_->label.find(c.token.id);
  if (it != inner_->label.end()) return it->second;
  std::string label = "ctx-" + std::to_string(inner_->next++);
  inner_->label.emplace(c.token.id, label);
  inner_->token.emplace(label, c);
  return label;
}

void ContextLabels::assign(const Context& c, const std::string& label) {
  std::lock_guard lock(inner_->m);
  inner_->label.emplace(c.token.id, label);
  inner_->token.emplace(label, c);
}

std::optional<std::string> ContextLabels::label_of(const Context& c) const {
  std::lock_guard lock(inner_->m);
  auto it = inner_->label.find(c.token.id);
  if (it == inner_->label.end()) return std::nullopt;
  return it->second;
}

std::optional<Context> ContextLabels::find(const std::string& label) const {
  std::lock_guard lock(inner_->m);
  auto it = inner_->token.find(label);
  if (it == inner_->token.end()) return std::nullopt;
  return it->second;
}

struct EventBus::Subscription::Shared {
  mutable std::mutex m;
  std::condition_variable cv;
  std::vector<Event> log;
  bool closed = false;
};

EventBus::EventBus() : shared_(std::make_shared<Subscription::Shared>()) {}

void EventBus::emit(Event e) {
  {
    std::lock_guard lock(shared_->m);
    if (shared_->closed) throw Error("emit on a closed event bus");
    shared_->log.push_back(std::move(e));
  }
  shared_->cv.notify_all();
}

void EventBus::close() {
  {
    std::lock_guard lock(shared_->m);
    shared_->closed = true;
  }
  shared_->cv.notify_all();
}

bool EventBus::closed() const {
  std::lock_guard lock(shared_->m);
  return shared_->closed;
}

std::size_t EventBus::size() const {
  std::lock_guard lock(shared_->m);
  return shared_->log.size();
}

std::vector<Event> EventBus::snapshot() const {
  std::lock_guard lock(shared_->m);
  return shared_->log;
}

EventBus::Subscription EventBus::subscribe() {
  Subscription s;
  s.shared_ = shared_;
  return s;
}

std::optional<Event> EventBus::Subscription::next() {
  std::unique_lock lock(shared_->m);
  shared_->cv.wait(lock, [&] { return cursor_ < shared_->log.size() || shared_->closed; });
  if (cursor_ < shared_->log.size()) return shared_->log[cursor_++];
  return std::nullopt;
}

}  // namespace waltz

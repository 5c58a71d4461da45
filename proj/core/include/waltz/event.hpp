#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "waltz/term.hpp"

namespace waltz {

// Causality token carried by every hop routed through the conductor.
// Token id 0 is the root context that always exists.
struct Context {
  Term::Ref token;

  static Context root() { return Context{Term::Ref{0}}; }
  static Context fresh() { return Context{Term::Ref::fresh()}; }
  bool is_root() const { return token.id == 0; }

  auto operator<=>(const Context&) const = default;
};

// One observed message hop. Requests run from -> to; the matching reply
// is recorded with the roles swapped and the same context.
struct Event {
  std::string from;
  std::string to;
  Term payload;
  Context context;

  bool operator==(const Event&) const = default;
};

// Parent map over contexts. Shared-state value: copies alias the same
// tree, which lets the conductor keep writing while monitors read.
class ContextTree {
 public:
  ContextTree();

  // parent must be the root or already recorded; re-adding a child is an error.
  void add(const Context& child, const Context& parent);

  std::optional<Context> parent(const Context& c) const;
  bool contains(const Context& c) const;
  // Direct derivation: c was generated under parent p.
  bool derived_from(const Context& c, const Context& p) const;
  std::vector<Context> children(const Context& parent) const;
  // (child, parent) pairs in insertion order.
  std::vector<std::pair<Context, Context>> edges() const;
  std::size_t size() const;

 private:
  struct Inner;
  std::shared_ptr<Inner> inner_;
};

// Stable names for context tokens ("ctx-<N>", allocation order; the root
// is always "ctx-0"). Shared-state value like ContextTree.
class ContextLabels {
 public:
  ContextLabels();

  // Conductor side: next serial in allocation order.
  std::string assign_next(const Context& c);
  // Loader side: adopt a label read from a trace file.
  void assign(const Context& c, const std::string& label);

  std::optional<std::string> label_of(const Context& c) const;
  std::optional<Context> find(const std::string& label) const;

 private:
  struct Inner;
  std::shared_ptr<Inner> inner_;
};

// Append-only ordered stream of events: one total order, any number of
// subscribers, each reading from the beginning at its own pace. Buffers
// without bound; close() ends the stream.
class EventBus {
 public:
  EventBus();

  void emit(Event e);
  void close();
  bool closed() const;

  std::size_t size() const;
  std::vector<Event> snapshot() const;

  class Subscription {
   public:
    // Next event in bus order; blocks until one is available. nullopt
    // only after close() once everything has been delivered.
    std::optional<Event> next();

   private:
    friend class EventBus;
    struct Shared;
    std::shared_ptr<Shared> shared_;
    std::size_t cursor_ = 0;
  };

  Subscription subscribe();

 private:
  std::shared_ptr<Subscription::Shared> shared_;
};

}  // namespace waltz

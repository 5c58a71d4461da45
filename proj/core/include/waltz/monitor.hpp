#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "waltz/event.hpp"
#include "waltz/lang.hpp"

namespace waltz {

enum class VerdictKind { Satisfied, Violated, Inconclusive };

const char* to_string(VerdictKind v);

struct Violation {
  Context context;
  std::size_t step_index = 0;  // 0-based
  Event event;
  Bindings bindings;  // environment at the failing match
};

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::optional<Violation> violation;
};

enum class Quantifier { Omega, Theta };

// Executable form of a well-formed formula: the flattened chain plus the
// top-level quantifier.
struct MonitorProgram {
  Quantifier quantifier = Quantifier::Omega;
  std::vector<FormulaStep> steps;
};

// Throws NotWellFormed unless check_well_formed accepts f.
MonitorProgram compile_monitor(const Formula& f);
MonitorProgram compile_monitor(const FormulaPtr& f);

// Per-context progress through the chain.
struct ChainCursor {
  std::size_t step = 0;
  Bindings bindings;
  std::size_t completed = 0;
  bool failed = false;  // theta only: this context is out of the running
};

struct VerdictLogEntry {
  std::int64_t ts_us = 0;  // wall clock, microseconds
  VerdictKind verdict = VerdictKind::Inconclusive;
  std::optional<Violation> violation;  // violated entries
  std::optional<Context> context;      // satisfied-by context, when one exists
};

// Incremental evaluator. Feed events in bus order; events in contexts not
// derived from the root are ignored (and counted). After a terminal
// verdict further events change nothing.
class MonitorEngine {
 public:
  MonitorEngine(MonitorProgram program, ContextTree tree);

  // The terminal verdict, when this event produces one.
  std::optional<Verdict> step(const Event& e);

  // End-of-stream policy. Omega: Satisfied when at least one context was
  // observed, none violated, and every observed context finished at least
  // one chain and rests at step 0; otherwise Inconclusive. Theta:
  // Satisfied only if already satisfied mid-stream. Idempotent.
  Verdict finalize();

  Verdict current() const { return verdict_; }
  bool terminal() const { return terminal_; }

  const std::vector<VerdictLogEntry>& log() const { return log_; }
  std::size_t ignored_events() const { return ignored_; }
  std::size_t processed_events() const { return processed_; }
  const std::map<std::uint64_t, ChainCursor>& cursors() const { return cursors_; }

 private:
  void record(VerdictKind kind, std::optional<Violation> v, std::optional<Context> c);

  MonitorProgram program_;
  ContextTree tree_;
  Context root_ = Context::root();
  std::map<std::uint64_t, ChainCursor> cursors_;
  std::map<std::uint64_t, Context> tokens_;
  Verdict verdict_;
  bool terminal_ = false;
  bool finalized_ = false;
  std::size_t ignored_ = 0;
  std::size_t processed_ = 0;
  std::vector<VerdictLogEntry> log_;
};

// Consumes a subscription to completion (or to a terminal verdict),
// then applies the end-of-stream policy. The log ends up in log_out when
// given.
Verdict run_monitor(const MonitorProgram& program, EventBus::Subscription sub, ContextTree tree,
                    std::vector<VerdictLogEntry>* log_out = nullptr);

}  // namespace waltz

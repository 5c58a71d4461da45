#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "waltz/event.hpp"
#include "waltz/lang.hpp"

namespace waltz {

// Finite event sequence, addressed 1-based as positions 1..length().
struct Trace {
  std::vector<Event> events;

  std::size_t length() const { return events.size(); }
  const Event& at(std::size_t pos) const { return events[pos - 1]; }
};

// The causality token the trace recorded for this event.
inline Context gamma_of(const Event& e) { return e.context; }

// Direction plus payload pattern. The overload with inherited bindings
// also requires consistency with them: a variable seen before only
// matches the same value again.
std::optional<Bindings> signature_matches(const Event& e, const Signature& a);
std::optional<Bindings> signature_matches(const Event& e, const Signature& a,
                                          const Bindings& inherited);

enum class EvalMode {
  // Definition-style: a step is witnessed by any in-context event in the
  // interval that matches and passes its constraint.
  Existential,
  // Operational: the first in-context matching event decides the step,
  // pass or fail, and a chain consumes strictly forward. This is exactly
  // how a compiled monitor reads its mailbox.
  FirstMatch,
};

// Does trace t over [i, j] satisfy f in context delta? j = length+1 reads
// "to the end of the trace". Quantified formulas range over the contexts
// recorded in ct as derived from delta. Requires a well-formed f when
// modal and 1 <= i <= j <= length+1 (InvalidInterval otherwise).
bool satisfies(const Trace& t, const ContextTree& ct, const Context& delta, std::size_t i,
               std::size_t j, const Formula& f, EvalMode mode);

// Operational evaluation of a flattened chain against the events of one
// context, replayed the way a compiled monitor consumes them: skip
// non-matching events, check the constraint at each first match, loop
// from the start after every completed pass, stop at the first failure.
// This is the independent reference for monitor verdicts.
struct ChainWalk {
  bool violated = false;
  std::size_t violation_pos = 0;   // 1-based position of the failing event
  std::size_t violation_step = 0;  // 0-based step index
  Bindings violation_bindings;
  std::size_t completed = 0;       // full passes finished before any failure
  std::size_t resting_step = 0;    // cursor after the last processed event
  std::size_t events_seen = 0;     // events of this context in the interval
};

ChainWalk walk_chain(const Trace& t, const Context& delta, const std::vector<FormulaStep>& steps,
                     std::size_t i, std::size_t j);

}  // namespace waltz

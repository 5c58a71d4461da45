#include "waltz/semantics.hpp"

#include <algorithm>

#include "waltz/errors.hpp"

namespace waltz {

std::optional<Bindings> signature_matches(const Event& e, const Signature& a) {
  if (e.from != a.from || e.to != a.to) return std::nullopt;
  return match_pattern(a.pattern, e.payload);
}

std::optional<Bindings> signature_matches(const Event& e, const Signature& a,
                                          const Bindings& inherited) {
  auto own = signature_matches(e, a);
  if (!own) return std::nullopt;
  return try_merge(inherited, *own);
}

namespace {

// A constraint that cannot be evaluated over the matched values (a
// variable bound to a non-integer) counts as a failed guard.
bool guard_passes(const ConstraintExpr& c, const Bindings& b) {
  try {
    return eval_constraint(c, b);
  } catch (const NonNumericOperand&) {
    return false;
  }
}

// Every (position, bindings) pair witnessing f over [i, j]. Positions
// are where the final step of f matched; bindings are the accumulated
// environment, seeded from b0.
using Way = std::pair<std::size_t, Bindings>;

std::vector<Way> ways(const Trace& t, const Context& delta, const Formula& f, std::size_t i,
                      std::size_t j, const Bindings& b0, EvalMode mode) {
  if (const auto* s = std::get_if<FormulaStep>(&f.node)) {
    std::vector<Way> out;
    std::size_t hi = std::min(j, t.length());
    for (std::size_t k = i; k <= hi; ++k) {
      const Event& e = t.at(k);
      if (!(gamma_of(e) == delta)) continue;
      auto mb = signature_matches(e, s->sig, b0);
      if (!mb) continue;
      if (mode == EvalMode::FirstMatch) {
        // The first match decides; a failing guard here is final.
        if (guard_passes(*s->constraint, *mb)) out.emplace_back(k, std::move(*mb));
        return out;
      }
      if (guard_passes(*s->constraint, *mb)) out.emplace_back(k, std::move(*mb));
    }
    return out;
  }

  if (const auto* c = std::get_if<Formula::Chain>(&f.node)) {
    std::vector<Way> out;
    if (mode == EvalMode::FirstMatch) {
      // Sequential consumption: the right side starts after the event
      // the left side used.
      for (const auto& [k, b1] : ways(t, delta, *c->left, i, j, b0, mode)) {
        if (k + 1 > j) continue;
        for (auto& w : ways(t, delta, *c->right, k + 1, j, b1, mode)) out.push_back(std::move(w));
      }
      return out;
    }
    // Split point k with the left over [i, k] and the right over [k, j].
    for (std::size_t k = i; k < j; ++k) {
      for (const auto& [_, b1] : ways(t, delta, *c->left, i, k, b0, mode)) {
        for (auto& w : ways(t, delta, *c->right, k, j, b1, mode)) {
          if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(std::move(w));
        }
      }
    }
    return out;
  }

  throw NotWellFormed("modal operator inside a chain");
}

}  // namespace

bool satisfies(const Trace& t, const ContextTree& ct, const Context& delta, std::size_t i,
               std::size_t j, const Formula& f, EvalMode mode) {
  if (i < 1 || i > j || j > t.length() + 1) throw InvalidInterval(i, j, t.length());

  if (const auto* o = std::get_if<Formula::Omega>(&f.node)) {
    for (const Context& dn : ct.children(delta))
      if (ways(t, dn, *o->body, i, j, {}, mode).empty()) return false;
    return true;  // vacuous over no derived contexts
  }
  if (const auto* th = std::get_if<Formula::Theta>(&f.node)) {
    for (const Context& dn : ct.children(delta))
      if (!ways(t, dn, *th->body, i, j, {}, mode).empty()) return true;
    return false;
  }
  return !ways(t, delta, f, i, j, {}, mode).empty();
}

ChainWalk walk_chain(const Trace& t, const Context& delta, const std::vector<FormulaStep>& steps,
                     std::size_t i, std::size_t j) {
  if (i < 1 || i > j || j > t.length() + 1) throw InvalidInterval(i, j, t.length());
  ChainWalk w;
  if (steps.empty()) return w;

  Bindings bound;
  std::size_t hi = std::min(j, t.length());
  for (std::size_t pos = i; pos <= hi; ++pos) {
    const Event& e = t.at(pos);
    if (!(gamma_of(e) == delta)) continue;
    ++w.events_seen;
    auto mb = signature_matches(e, steps[w.resting_step].sig, bound);
    if (!mb) continue;
    if (!guard_passes(*steps[w.resting_step].constraint, *mb)) {
      w.violated = true;
      w.violation_pos = pos;
      w.violation_step = w.resting_step;
      w.violation_bindings = std::move(*mb);
      return w;
    }
    bound = std::move(*mb);
    if (++w.resting_step == steps.size()) {
      ++w.completed;
      w.resting_step = 0;
      bound.clear();
    }
  }
  return w;
}

}  // namespace waltz

#pragma once

// Shared random generators for the property tests and the acceptance
// suite. Everything is driven by a caller-owned mt19937_64 so failures
// reproduce from a seed.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "waltz/event.hpp"
#include "waltz/lang.hpp"
#include "waltz/monitor.hpp"
#include "waltz/semantics.hpp"

namespace testgen {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline std::int64_t pick_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline bool chance(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Small pools keep the match rate between random formulas and random
// traces high enough that all three verdicts show up in bulk runs.
inline const std::vector<std::string>& module_pool() {
  static const std::vector<std::string> m = {"a", "b"};
  return m;
}

inline const std::vector<std::string>& atom_pool() {
  static const std::vector<std::string> a = {"x", "y"};
  return a;
}

struct GenFormula {
  waltz::FormulaPtr formula;
  std::vector<waltz::FormulaStep> steps;
  waltz::Quantifier quantifier = waltz::Quantifier::Omega;
};

namespace detail {

struct VarScope {
  std::vector<std::string> bound;  // across earlier steps
  std::size_t counter = 0;

  std::string fresh() { return "V" + std::to_string(++counter); }
};

inline waltz::ArithPtr gen_arith(Rng& rng, const std::vector<std::string>& vars,
                                 std::size_t depth) {
  if (depth > 0 && chance(rng, 0.35)) {
    auto op = std::array{waltz::ArithExpr::Op::Add, waltz::ArithExpr::Op::Sub,
                         waltz::ArithExpr::Op::Mul}[pick(rng, 3)];
    return waltz::arith_bin(op, gen_arith(rng, vars, depth - 1), gen_arith(rng, vars, depth - 1));
  }
  if (!vars.empty() && chance(rng, 0.55)) return waltz::arith_var(vars[pick(rng, vars.size())]);
  return waltz::arith_lit(pick_int(rng, 0, 20));
}

inline waltz::ConstraintPtr gen_constraint(Rng& rng, const std::vector<std::string>& vars,
                                           std::size_t arith_depth, std::size_t not_depth) {
  double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (r < 0.22) return waltz::constraint_true();
  if (r < 0.28) return waltz::constraint_false();
  if (r < 0.38 && not_depth > 0)
    return waltz::constraint_not(gen_constraint(rng, vars, arith_depth, not_depth - 1));
  auto op = std::array{waltz::ConstraintExpr::CmpOp::Eq, waltz::ConstraintExpr::CmpOp::Ne,
                       waltz::ConstraintExpr::CmpOp::Lt, waltz::ConstraintExpr::CmpOp::Le,
                       waltz::ConstraintExpr::CmpOp::Gt,
                       waltz::ConstraintExpr::CmpOp::Ge}[pick(rng, 6)];
  return waltz::constraint_cmp(op, gen_arith(rng, vars, arith_depth),
                               gen_arith(rng, vars, arith_depth));
}

// One flat step: pattern {head_atom, one or two more slots}. Variables in
// this pattern must be distinct from each other; reusing a name from an
// earlier step is allowed and turns the occurrence into an equality filter.
inline waltz::FormulaStep gen_step(Rng& rng, VarScope& scope) {
  std::vector<waltz::Pattern> elems;
  std::vector<std::string> here;  // names bound by this signature
  elems.push_back(waltz::Pattern::constant(waltz::Term::atom(atom_pool()[pick(rng, 2)])));
  std::size_t extra = 1 + pick(rng, 2);
  for (std::size_t k = 0; k < extra; ++k) {
    double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (r < 0.25) {
      elems.push_back(waltz::Pattern::constant(waltz::Term::integer(pick_int(rng, 0, 10))));
    } else if (r < 0.35) {
      elems.push_back(waltz::Pattern::wildcard());
    } else if (r < 0.45 && !scope.bound.empty()) {
      // cross-step reuse; skip names already bound in this signature
      std::string name = scope.bound[pick(rng, scope.bound.size())];
      if (std::find(here.begin(), here.end(), name) != here.end()) {
        elems.push_back(waltz::Pattern::wildcard());
      } else {
        here.push_back(name);
        elems.push_back(waltz::Pattern::var(name));
      }
    } else {
      std::string name = scope.fresh();
      here.push_back(name);
      elems.push_back(waltz::Pattern::var(name));
    }
  }
  for (const auto& n : here)
    if (std::find(scope.bound.begin(), scope.bound.end(), n) == scope.bound.end())
      scope.bound.push_back(n);
  waltz::Signature sig{module_pool()[pick(rng, 2)], module_pool()[pick(rng, 2)],
                       waltz::Pattern::tuple(std::move(elems))};
  return waltz::FormulaStep{std::move(sig), gen_constraint(rng, scope.bound, 1, 1)};
}

}  // namespace detail

// A well-formed modal formula with 1..max_steps chain steps.
inline GenFormula gen_formula(Rng& rng, std::size_t max_steps) {
  detail::VarScope scope;
  std::size_t n = 1 + pick(rng, max_steps);
  std::vector<waltz::FormulaStep> steps;
  for (std::size_t s = 0; s < n; ++s) steps.push_back(detail::gen_step(rng, scope));

  waltz::FormulaPtr body = waltz::make_step(steps.back().sig, steps.back().constraint);
  for (std::size_t s = n - 1; s-- > 0;)
    body = waltz::make_chain(waltz::make_step(steps[s].sig, steps[s].constraint), std::move(body));
  bool omega = chance(rng, 0.5);
  GenFormula out;
  out.steps = std::move(steps);
  out.quantifier = omega ? waltz::Quantifier::Omega : waltz::Quantifier::Theta;
  out.formula = omega ? waltz::make_omega(std::move(body)) : waltz::make_theta(std::move(body));
  return out;
}

// A ground term that matches p. Variable and wildcard slots become small
// integers (sometimes an atom, to exercise non-numeric guard operands);
// a name seen before in the same context usually repeats its value so the
// cross-step equality filter passes more often than not.
inline waltz::Term instantiate_pattern(Rng& rng, const waltz::Pattern& p,
                                       std::map<std::string, waltz::Term>& memo) {
  struct V {
    Rng& rng;
    std::map<std::string, waltz::Term>& memo;
    waltz::Term operator()(const waltz::Pattern::Const& c) const { return c.value; }
    waltz::Term operator()(const waltz::Pattern::Var& v) const {
      auto it = memo.find(v.name);
      if (it != memo.end() && chance(rng, 0.8)) return it->second;
      waltz::Term t = chance(rng, 0.12) ? waltz::Term::atom(atom_pool()[pick(rng, 2)])
                                        : waltz::Term::integer(pick_int(rng, 0, 10));
      memo[v.name] = t;
      return t;
    }
    waltz::Term operator()(const waltz::Pattern::Wildcard&) const {
      return waltz::Term::integer(pick_int(rng, 0, 10));
    }
    waltz::Term operator()(const waltz::Pattern::TuplePat& tp) const {
      std::vector<waltz::Term> elems;
      for (const auto& e : tp.elems) elems.push_back(instantiate_pattern(rng, e, memo));
      return waltz::Term::tuple(std::move(elems));
    }
  };
  return std::visit(V{rng, memo}, p.node);
}

struct GenTrace {
  waltz::Trace trace;
  waltz::ContextTree tree;
  std::vector<waltz::Context> contexts;  // children of the root, each with >= 1 event
};

// Up to max_events events across up to max_contexts fresh children of the
// root. When bias_steps is given, around half the events instantiate a
// step signature, walking each context through the chain in rough order so
// completions, violations and stuck prefixes all occur. Payload integers
// stay in [0, 10]. A small fraction of traces is empty.
inline GenTrace gen_trace(Rng& rng, std::size_t max_events, std::size_t max_contexts,
                          const std::vector<waltz::FormulaStep>* bias_steps = nullptr) {
  GenTrace out;
  if (chance(rng, 0.03)) return out;

  std::size_t n_ctx = 1 + pick(rng, max_contexts);
  for (std::size_t c = 0; c < n_ctx; ++c) {
    waltz::Context ctx = waltz::Context::fresh();
    out.tree.add(ctx, waltz::Context::root());
    out.contexts.push_back(ctx);
  }
  std::size_t n_events = n_ctx + pick(rng, max_events - n_ctx + 1);

  std::vector<std::map<std::string, waltz::Term>> memo(n_ctx);
  std::vector<std::size_t> next_step(n_ctx, 0);

  for (std::size_t i = 0; i < n_events; ++i) {
    std::size_t c = i < n_ctx ? i : pick(rng, n_ctx);
    waltz::Event e;
    e.context = out.contexts[c];
    if (bias_steps && !bias_steps->empty() && chance(rng, 0.55)) {
      std::size_t s = chance(rng, 0.6) ? next_step[c] % bias_steps->size()
                                       : pick(rng, bias_steps->size());
      if (s == next_step[c] % bias_steps->size()) ++next_step[c];
      const auto& st = (*bias_steps)[s];
      e.from = st.sig.from;
      e.to = st.sig.to;
      e.payload = instantiate_pattern(rng, st.sig.pattern, memo[c]);
    } else {
      e.from = module_pool()[pick(rng, 2)];
      e.to = module_pool()[pick(rng, 2)];
      std::vector<waltz::Term> elems;
      elems.push_back(waltz::Term::atom(chance(rng, 0.1) ? "zz" : atom_pool()[pick(rng, 2)]));
      std::size_t extra = 1 + pick(rng, 2);
      for (std::size_t k = 0; k < extra; ++k)
        elems.push_back(waltz::Term::integer(pick_int(rng, 0, 10)));
      e.payload = waltz::Term::tuple(std::move(elems));
    }
    out.trace.events.push_back(std::move(e));
  }
  return out;
}

// What a monitor run over the whole trace must conclude, derived from
// independent per-context chain walks plus the quantifier and the
// end-of-stream policy.
struct ExpectedVerdict {
  waltz::VerdictKind kind = waltz::VerdictKind::Inconclusive;
  bool has_violation = false;
  waltz::Context context;      // violated only
  std::size_t step_index = 0;  // violated only, 0-based
  std::size_t pos = 0;         // violated only, 1-based trace position
  // true when the satisfies() boolean is forced by the verdict:
  // Satisfied => true; Violated before any completed pass => false;
  // theta Inconclusive => false.
  bool expect_bool = false;
  bool bool_value = false;
};

inline ExpectedVerdict derive_expected(const waltz::Trace& t,
                                       const std::vector<waltz::Context>& contexts,
                                       const waltz::MonitorProgram& p) {
  using waltz::VerdictKind;
  std::size_t end = t.length() + 1;
  ExpectedVerdict out;

  bool any_observed = false;
  bool all_clean = true;
  bool theta_sat = false;
  std::size_t best_pos = static_cast<std::size_t>(-1);
  waltz::ChainWalk best_walk;
  waltz::Context best_ctx;

  for (const auto& c : contexts) {
    waltz::ChainWalk w = waltz::walk_chain(t, c, p.steps, 1, end);
    if (w.events_seen == 0) continue;  // no cursor would exist for it
    any_observed = true;
    if (p.quantifier == waltz::Quantifier::Omega) {
      if (w.violated && w.violation_pos < best_pos) {
        best_pos = w.violation_pos;
        best_walk = w;
        best_ctx = c;
      }
      if (w.violated || w.completed == 0 || w.resting_step != 0) all_clean = false;
    } else {
      if (w.completed >= 1) theta_sat = true;
    }
  }

  if (p.quantifier == waltz::Quantifier::Omega) {
    if (best_pos != static_cast<std::size_t>(-1)) {
      out.kind = VerdictKind::Violated;
      out.has_violation = true;
      out.context = best_ctx;
      out.step_index = best_walk.violation_step;
      out.pos = best_pos;
      if (best_walk.completed == 0) {
        out.expect_bool = true;
        out.bool_value = false;
      }
    } else if (any_observed && all_clean) {
      out.kind = VerdictKind::Satisfied;
      out.expect_bool = true;
      out.bool_value = true;
    }
  } else {
    if (theta_sat) {
      out.kind = VerdictKind::Satisfied;
      out.expect_bool = true;
      out.bool_value = true;
    } else {
      out.expect_bool = true;
      out.bool_value = false;
    }
  }
  return out;
}

// Formula/trace pair restricted so that existential and first-match modes
// must agree: steps use pairwise distinct channels and each context holds
// at most one event per channel, so "some matching event" and "the first
// matching event" pick out the same one.
struct AgreementCase {
  GenFormula formula;
  GenTrace trace;
};

inline AgreementCase gen_agreement_case(Rng& rng) {
  static const std::vector<std::pair<std::string, std::string>> channels = {
      {"a", "b"}, {"b", "a"}, {"a", "c"}, {"c", "a"}, {"b", "c"}, {"c", "b"}};

  AgreementCase out;
  detail::VarScope scope;
  std::size_t n = 1 + pick(rng, 3);
  std::vector<std::size_t> chan(channels.size());
  for (std::size_t i = 0; i < chan.size(); ++i) chan[i] = i;
  std::shuffle(chan.begin(), chan.end(), rng);

  std::vector<waltz::FormulaStep> steps;
  for (std::size_t s = 0; s < n; ++s) {
    waltz::FormulaStep st = detail::gen_step(rng, scope);
    st.sig.from = channels[chan[s]].first;
    st.sig.to = channels[chan[s]].second;
    steps.push_back(std::move(st));
  }
  waltz::FormulaPtr body = waltz::make_step(steps.back().sig, steps.back().constraint);
  for (std::size_t s = n - 1; s-- > 0;)
    body = waltz::make_chain(waltz::make_step(steps[s].sig, steps[s].constraint), std::move(body));
  bool omega = chance(rng, 0.5);
  out.formula.steps = steps;
  out.formula.quantifier = omega ? waltz::Quantifier::Omega : waltz::Quantifier::Theta;
  out.formula.formula =
      omega ? waltz::make_omega(std::move(body)) : waltz::make_theta(std::move(body));

  std::size_t n_ctx = 1 + pick(rng, 3);
  std::vector<std::vector<waltz::Event>> per_ctx(n_ctx);
  for (std::size_t c = 0; c < n_ctx; ++c) {
    waltz::Context ctx = waltz::Context::fresh();
    out.trace.tree.add(ctx, waltz::Context::root());
    out.trace.contexts.push_back(ctx);
    std::map<std::string, waltz::Term> memo;
    std::size_t upto = pick(rng, n + 1);  // how many step signatures appear
    for (std::size_t s = 0; s < upto; ++s) {
      waltz::Event e;
      e.context = ctx;
      e.from = steps[s].sig.from;
      e.to = steps[s].sig.to;
      e.payload = instantiate_pattern(rng, steps[s].sig.pattern, memo);
      per_ctx[c].push_back(std::move(e));
    }
    std::shuffle(per_ctx[c].begin(), per_ctx[c].end(), rng);
    // filler on a channel no step uses; can never match
    std::size_t fills = pick(rng, 3);
    for (std::size_t k = 0; k < fills; ++k) {
      waltz::Event e;
      e.context = ctx;
      e.from = "z";
      e.to = "z";
      e.payload = waltz::Term::tuple({waltz::Term::atom("zz")});
      per_ctx[c].insert(per_ctx[c].begin() + pick(rng, per_ctx[c].size() + 1), std::move(e));
    }
  }
  // interleave contexts preserving each one's order
  std::vector<std::size_t> take(n_ctx, 0);
  for (;;) {
    std::vector<std::size_t> open;
    for (std::size_t c = 0; c < n_ctx; ++c)
      if (take[c] < per_ctx[c].size()) open.push_back(c);
    if (open.empty()) break;
    std::size_t c = open[pick(rng, open.size())];
    out.trace.trace.events.push_back(per_ctx[c][take[c]++]);
  }
  return out;
}

// Deeper shapes for parse/print round-trips: nested tuple patterns, nested
// arithmetic, chains up to four steps. Stays well-formed.
namespace detail {

inline waltz::Pattern gen_deep_pattern(Rng& rng, VarScope& scope, std::vector<std::string>& here,
                                       std::size_t depth) {
  double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (depth > 0 && r < 0.25) {
    std::vector<waltz::Pattern> elems;
    std::size_t n = 1 + pick(rng, 3);
    for (std::size_t i = 0; i < n; ++i)
      elems.push_back(gen_deep_pattern(rng, scope, here, depth - 1));
    return waltz::Pattern::tuple(std::move(elems));
  }
  if (r < 0.45) {
    std::string name = scope.fresh();
    here.push_back(name);
    return waltz::Pattern::var(name);
  }
  if (r < 0.6) return waltz::Pattern::wildcard();
  if (r < 0.8)
    return waltz::Pattern::constant(waltz::Term::atom(atom_pool()[pick(rng, 2)]));
  return waltz::Pattern::constant(waltz::Term::integer(pick_int(rng, -20, 20)));
}

}  // namespace detail

inline waltz::FormulaPtr gen_roundtrip_formula(Rng& rng, std::size_t depth) {
  detail::VarScope scope;
  std::size_t n = 1 + pick(rng, 4);
  std::vector<waltz::FormulaStep> steps;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<waltz::Pattern> elems;
    std::vector<std::string> here;
    std::size_t arity = 1 + pick(rng, 3);
    for (std::size_t k = 0; k < arity; ++k)
      elems.push_back(detail::gen_deep_pattern(rng, scope, here, depth > 2 ? depth - 2 : 0));
    for (const auto& nm : here)
      if (std::find(scope.bound.begin(), scope.bound.end(), nm) == scope.bound.end())
        scope.bound.push_back(nm);
    waltz::Signature sig{module_pool()[pick(rng, 2)], module_pool()[pick(rng, 2)],
                         waltz::Pattern::tuple(std::move(elems))};
    steps.push_back(
        waltz::FormulaStep{std::move(sig), detail::gen_constraint(rng, scope.bound, 3, 2)});
  }
  waltz::FormulaPtr body = waltz::make_step(steps.back().sig, steps.back().constraint);
  for (std::size_t s = n - 1; s-- > 0;)
    body = waltz::make_chain(waltz::make_step(steps[s].sig, steps[s].constraint), std::move(body));
  return chance(rng, 0.5) ? waltz::make_omega(std::move(body))
                          : waltz::make_theta(std::move(body));
}

}  // namespace testgen

#include "waltz/monitor.hpp"

#include <chrono>

#include "waltz/errors.hpp"
#include "waltz/semantics.hpp"

namespace waltz {

const char* to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::Satisfied: return "satisfied";
    case VerdictKind::Violated: return "violated";
    case VerdictKind::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

MonitorProgram compile_monitor(const Formula& f) {
  if (auto err = check_well_formed(f)) throw NotWellFormed(err->message);
  MonitorProgram p;
  if (const auto* o = std::get_if<Formula::Omega>(&f.node)) {
    p.quantifier = Quantifier::Omega;
    p.steps = flatten_chain(*o->body);
  } else {
    p.quantifier = Quantifier::Theta;
    p.steps = flatten_chain(*std::get<Formula::Theta>(f.node).body);
  }
  return p;
}

MonitorProgram compile_monitor(const FormulaPtr& f) { return compile_monitor(*f); }

namespace {

std::int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

bool guard_passes(const ConstraintExpr& c, const Bindings& b) {
  try {
    return eval_constraint(c, b);
  } catch (const NonNumericOperand&) {
    return false;
  }
}

}  // namespace

MonitorEngine::MonitorEngine(MonitorProgram program, ContextTree tree)
    : program_(std::move(program)), tree_(std::move(tree)) {}

void MonitorEngine::record(VerdictKind kind, std::optional<Violation> v,
                           std::optional<Context> c) {
  log_.push_back(VerdictLogEntry{now_us(), kind, std::move(v), std::move(c)});
}

std::optional<Verdict> MonitorEngine::step(const Event& e) {
  if (terminal_) return std::nullopt;

  Context ctx = e.context;
  if (!tree_.derived_from(ctx, root_)) {
    ++ignored_;
    return std::nullopt;
  }
  ++processed_;

  auto [it, fresh] = cursors_.try_emplace(ctx.token.id);
  tokens_.try_emplace(ctx.token.id, ctx);
  ChainCursor& cur = it->second;
  (void)fresh;
  if (cur.failed) return std::nullopt;

  const FormulaStep& step = program_.steps[cur.step];
  auto mb = signature_matches(e, step.sig, cur.bindings);
  if (!mb) return std::nullopt;

  if (!guard_passes(*step.constraint, *mb)) {
    if (program_.quantifier == Quantifier::Omega) {
      terminal_ = true;
      verdict_ = Verdict{VerdictKind::Violated, Violation{ctx, cur.step, e, std::move(*mb)}};
      record(VerdictKind::Violated, verdict_.violation, ctx);
      return verdict_;
    }
    cur.failed = true;  // theta keeps watching the other contexts
    return std::nullopt;
  }

  cur.bindings = std::move(*mb);
  if (++cur.step == program_.steps.size()) {
    ++cur.completed;
    cur.step = 0;
    cur.bindings.clear();
    if (program_.quantifier == Quantifier::Theta) {
      terminal_ = true;
      verdict_ = Verdict{VerdictKind::Satisfied, std::nullopt};
      record(VerdictKind::Satisfied, std::nullopt, ctx);
      return verdict_;
    }
  }
  return std::nullopt;
}

Verdict MonitorEngine::finalize() {
  if (terminal_ || finalized_) return verdict_;
  finalized_ = true;

  if (program_.quantifier == Quantifier::Omega) {
    bool all_clean = !cursors_.empty();
    for (const auto& [_, cur] : cursors_)
      if (cur.step != 0 || cur.completed == 0) all_clean = false;
    verdict_.kind = all_clean ? VerdictKind::Satisfied : VerdictKind::Inconclusive;
  } else {
    verdict_.kind = VerdictKind::Inconclusive;
  }
  record(verdict_.kind, std::nullopt, std::nullopt);
  return verdict_;
}

Verdict run_monitor(const MonitorProgram& program, EventBus::Subscription sub, ContextTree tree,
                    std::vector<VerdictLogEntry>* log_out) {
  MonitorEngine engine(program, std::move(tree));
  while (auto e = sub.next()) {
    if (engine.step(*e)) break;
  }
  Verdict v = engine.terminal() ? engine.current() : engine.finalize();
  if (log_out) *log_out = engine.log();
  return v;
}

}  // namespace waltz

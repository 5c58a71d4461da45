#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "waltz/term.hpp"

namespace waltz {

// Message shape selector: direction plus a tuple payload pattern.
struct Signature {
  std::string from;
  std::string to;
  Pattern pattern;

  bool operator==(const Signature&) const = default;
};

// One step of a chain: a signature guarded by a constraint over the
// variables bound so far.
struct FormulaStep {
  Signature sig;
  ConstraintPtr constraint;
};

bool step_equal(const FormulaStep& a, const FormulaStep& b);

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Property over one causal chain, quantified over contexts: omega(...)
// requires the body of every derived context, theta(...) of at least one.
struct Formula {
  struct Omega {
    FormulaPtr body;
  };
  struct Theta {
    FormulaPtr body;
  };
  struct Chain {
    FormulaPtr left;
    FormulaPtr right;
  };

  std::variant<Omega, Theta, Chain, FormulaStep> node;

  bool is_omega() const { return std::holds_alternative<Omega>(node); }
  bool is_theta() const { return std::holds_alternative<Theta>(node); }
  bool is_chain() const { return std::holds_alternative<Chain>(node); }
  bool is_step() const { return std::holds_alternative<FormulaStep>(node); }
};

FormulaPtr make_omega(FormulaPtr body);
FormulaPtr make_theta(FormulaPtr body);
FormulaPtr make_chain(FormulaPtr left, FormulaPtr right);
FormulaPtr make_step(Signature sig, ConstraintPtr constraint);

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b);

// Surface text. `;` chains right-associatively; `=` is accepted for `==`;
// `#` starts a line comment; one formula per file. Pattern constants in
// formulas are atoms, integers and nested tuples (no ref or pid literals:
// `#` belongs to comments here).
FormulaPtr parse_formula(const std::string& source);

// Canonical text; parse_formula(print_formula(f)) reproduces f exactly.
std::string print_formula(const Formula& f);
inline std::string print_formula(const FormulaPtr& f) { return print_formula(*f); }

enum class WfErrorKind {
  MissingModalWrapper,
  NestedModal,
  UnboundConstraintVariable,
  DuplicatePatternVariable,
};

struct WfError {
  WfErrorKind kind;
  std::string variable;     // the offending name, when one exists
  std::size_t step_index;   // 0-based, for UnboundConstraintVariable
  std::string message;
};

// nullopt means well-formed: exactly one modal wrapper at the top, none
// inside, every constraint variable bound by its own or an earlier step,
// and no name bound twice within one signature.
std::optional<WfError> check_well_formed(const Formula& f);

// The modal body as a left-to-right step list. Throws NotWellFormed on a
// nested modal.
std::vector<FormulaStep> flatten_chain(const Formula& body);

}  // namespace waltz

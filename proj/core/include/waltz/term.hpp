#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "waltz/errors.hpp"

namespace waltz {

// Immutable message values: atoms, integers, unique refs, pids and tuples.
// Text form: atoms are bare lowercase words, integers are decimal,
// tuples are {a,b,c}, refs are #ref<N>, pids are <A.B.C>.
struct Term {
  struct Atom {
    std::string name;
    auto operator<=>(const Atom&) const = default;
  };

  // Refs compare equal only when they came out of the same fresh() call.
  struct Ref {
    std::uint64_t id = 0;
    static Ref fresh();
    auto operator<=>(const Ref&) const = default;
  };

  struct Pid {
    std::uint32_t node = 0;
    std::uint32_t serial = 0;
    std::uint32_t seq = 0;
    auto operator<=>(const Pid&) const = default;
  };

  using Tuple = std::vector<Term>;
  using Value = std::variant<Atom, std::int64_t, Ref, Pid, Tuple>;

  Value value;

  Term() : value(std::int64_t{0}) {}
  Term(Value v) : value(std::move(v)) {}

  static Term atom(std::string name) { return Term(Atom{std::move(name)}); }
  static Term integer(std::int64_t v) { return Term(v); }
  static Term ref(Ref r) { return Term(r); }
  static Term pid(Pid p) { return Term(p); }
  static Term tuple(Tuple elems) { return Term(std::move(elems)); }

  bool is_atom() const { return std::holds_alternative<Atom>(value); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(value); }
  bool is_ref() const { return std::holds_alternative<Ref>(value); }
  bool is_pid() const { return std::holds_alternative<Pid>(value); }
  bool is_tuple() const { return std::holds_alternative<Tuple>(value); }

  const std::string& atom_name() const { return std::get<Atom>(value).name; }
  std::int64_t int_value() const { return std::get<std::int64_t>(value); }
  const Ref& ref_value() const { return std::get<Ref>(value); }
  const Pid& pid_value() const { return std::get<Pid>(value); }
  const Tuple& elements() const { return std::get<Tuple>(value); }

  bool operator==(const Term&) const = default;
  // Total order: by kind in the order above, then by content. Tuples
  // compare lexicographically.
  std::strong_ordering operator<=>(const Term& other) const;
};

std::string to_string(const Term& t);

// Parses the text form above. Whitespace between tokens is ignored.
Term parse_term(const std::string& text);

struct Pattern {
  struct Const {
    Term value;
    bool operator==(const Const&) const = default;
  };
  struct Var {
    std::string name;
    bool operator==(const Var&) const = default;
  };
  struct Wildcard {
    bool operator==(const Wildcard&) const = default;
  };
  struct TuplePat {
    std::vector<Pattern> elems;
    bool operator==(const TuplePat&) const = default;
  };

  std::variant<Const, Var, Wildcard, TuplePat> node;

  static Pattern constant(Term t) { return Pattern{Const{std::move(t)}}; }
  static Pattern var(std::string name) { return Pattern{Var{std::move(name)}}; }
  static Pattern wildcard() { return Pattern{Wildcard{}}; }
  static Pattern tuple(std::vector<Pattern> elems) { return Pattern{TuplePat{std::move(elems)}}; }

  bool operator==(const Pattern&) const = default;
};

std::string to_string(const Pattern& p);

// Variable name -> value. Ordered so tests can print deterministically.
using Bindings = std::map<std::string, Term>;

// Structural match. A Var binds any term; a repeated Var only matches when
// both occurrences see equal values. Non-match is nullopt, never an error.
std::optional<Bindings> match_pattern(const Pattern& p, const Term& t);

// nullopt when the two maps disagree on some name.
std::optional<Bindings> try_merge(const Bindings& a, const Bindings& b);

// Same, but disagreement throws BindingConflict.
Bindings merge_bindings(const Bindings& a, const Bindings& b);

struct ArithExpr;
using ArithPtr = std::shared_ptr<const ArithExpr>;

struct ArithExpr {
  enum class Op { Add, Sub, Mul };
  struct Lit {
    std::int64_t value = 0;
  };
  struct Var {
    std::string name;
  };
  struct Bin {
    Op op;
    ArithPtr lhs;
    ArithPtr rhs;
  };

  std::variant<Lit, Var, Bin> node;
};

ArithPtr arith_lit(std::int64_t v);
ArithPtr arith_var(std::string name);
ArithPtr arith_bin(ArithExpr::Op op, ArithPtr lhs, ArithPtr rhs);
bool arith_equal(const ArithPtr& a, const ArithPtr& b);
std::string to_string(const ArithExpr& e);

struct ConstraintExpr;
using ConstraintPtr = std::shared_ptr<const ConstraintExpr>;

struct ConstraintExpr {
  enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
  struct True {};
  struct False {};
  struct Not {
    ConstraintPtr inner;
  };
  struct Compare {
    CmpOp op;
    ArithPtr lhs;
    ArithPtr rhs;
  };

  std::variant<True, False, Not, Compare> node;
};

ConstraintPtr constraint_true();
ConstraintPtr constraint_false();
ConstraintPtr constraint_not(ConstraintPtr inner);
ConstraintPtr constraint_cmp(ConstraintExpr::CmpOp op, ArithPtr lhs, ArithPtr rhs);
bool constraint_equal(const ConstraintPtr& a, const ConstraintPtr& b);
std::string to_string(const ConstraintExpr& c);

// Integers only. A variable bound to anything else raises NonNumericOperand;
// a missing variable raises UnboundVariable.
std::int64_t eval_arith(const ArithExpr& e, const Bindings& b);
bool eval_constraint(const ConstraintExpr& c, const Bindings& b);

}  // namespace waltz

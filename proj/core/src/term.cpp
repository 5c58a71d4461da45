#include "waltz/term.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <sstream>

namespace waltz {

Term::Ref Term::Ref::fresh() {
  // id 0 is reserved for the root causality context.
  static std::atomic<std::uint64_t> counter{1};
  return Ref{counter.fetch_add(1, std::memory_order_relaxed)};
}

std::strong_ordering Term::operator<=>(const Term& other) const {
  if (auto c = value.index() <=> other.value.index(); c != 0) return c;
  switch (value.index()) {
    case 0:
      return std::get<Atom>(value).name <=> std::get<Atom>(other.value).name;
    case 1:
      return std::get<std::int64_t>(value) <=> std::get<std::int64_t>(other.value);
    case 2:
      return std::get<Ref>(value) <=> std::get<Ref>(other.value);
    case 3:
      return std::get<Pid>(value) <=> std::get<Pid>(other.value);
    default: {
      const Tuple& a = std::get<Tuple>(value);
      const Tuple& b = std::get<Tuple>(other.value);
      return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end());
    }
  }
}

std::string to_string(const Term& t) {
  struct V {
    std::string operator()(const Term::Atom& a) const { return a.name; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const Term::Ref& r) const {
      return "#ref<" + std::to_string(r.id) + ">";
    }
    std::string operator()(const Term::Pid& p) const {
      return "<" + std::to_string(p.node) + "." + std::to_string(p.serial) + "." +
             std::to_string(p.seq) + ">";
    }
    std::string operator()(const Term::Tuple& elems) const {
      std::string out = "{";
      for (std::size_t i = 0; i < elems.size(); ++i) {
        if (i) out += ", ";
        out += to_string(elems[i]);
      }
      out += "}";
      return out;
    }
  };
  return std::visit(V{}, t.value);
}

std::string to_string(const Pattern& p) {
  struct V {
    std::string operator()(const Pattern::Const& c) const { return to_string(c.value); }
    std::string operator()(const Pattern::Var& v) const { return v.name; }
    std::string operator()(const Pattern::Wildcard&) const { return "_"; }
    std::string operator()(const Pattern::TuplePat& tp) const {
      std::string out = "{";
      for (std::size_t i = 0; i < tp.elems.size(); ++i) {
        if (i) out += ", ";
        out += to_string(tp.elems[i]);
      }
      out += "}";
      return out;
    }
  };
  return std::visit(V{}, p.node);
}

namespace {

// One-line recursive descent for the term text form.
class TermParser {
 public:
  explicit TermParser(const std::string& text) : text_(text) {}

  Term parse() {
    Term t = parse_term();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return t;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& expected) {
    throw ParseError(1, static_cast<int>(pos_) + 1, expected);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("'") + c + "'");
  }

  std::uint64_t parse_digits() {
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail("digit");
    std::uint64_t v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      v = v * 10 + static_cast<std::uint64_t>(text_[pos_++] - '0');
    return v;
  }

  Term parse_term() {
    skip_ws();
    if (pos_ >= text_.size()) fail("term");
    char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      Term::Tuple elems;
      skip_ws();
      if (!eat('}')) {
        for (;;) {
          elems.push_back(parse_term());
          skip_ws();
          if (eat('}')) break;
          expect(',');
        }
      }
      return Term::tuple(std::move(elems));
    }
    if (c == '#') {
      ++pos_;
      for (char r : {'r', 'e', 'f'}) {
        if (pos_ >= text_.size() || text_[pos_] != r) fail("ref");
        ++pos_;
      }
      expect('<');
      std::uint64_t id = parse_digits();
      expect('>');
      return Term::ref(Term::Ref{id});
    }
    if (c == '<') {
      ++pos_;
      std::uint32_t a = static_cast<std::uint32_t>(parse_digits());
      expect('.');
      std::uint32_t b = static_cast<std::uint32_t>(parse_digits());
      expect('.');
      std::uint32_t s = static_cast<std::uint32_t>(parse_digits());
      expect('>');
      return Term::pid(Term::Pid{a, b, s});
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      bool neg = eat('-');
      std::int64_t v = static_cast<std::int64_t>(parse_digits());
      return Term::integer(neg ? -v : v);
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::string name;
      while (pos_ < text_.size()) {
        char d = text_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_') {
          name += d;
          ++pos_;
        } else {
          break;
        }
      }
      return Term::atom(std::move(name));
    }
    fail("term");
  }
};

}  // namespace

Term parse_term(const std::string& text) { return TermParser(text).parse(); }

namespace {

bool match_into(const Pattern& p, const Term& t, Bindings& out) {
  struct V {
    const Term& t;
    Bindings& out;
    bool operator()(const Pattern::Const& c) const { return c.value == t; }
    bool operator()(const Pattern::Var& v) const {
      auto it = out.find(v.name);
      if (it != out.end()) return it->second == t;
      out.emplace(v.name, t);
      return true;
    }
    bool operator()(const Pattern::Wildcard&) const { return true; }
    bool operator()(const Pattern::TuplePat& tp) const {
      if (!t.is_tuple()) return false;
      const auto& elems = t.elements();
      if (elems.size() != tp.elems.size()) return false;
      for (std::size_t i = 0; i < elems.size(); ++i)
        if (!match_into(tp.elems[i], elems[i], out)) return false;
      return true;
    }
  };
  return std::visit(V{t, out}, p.node);
}

}  // namespace

std::optional<Bindings> match_pattern(const Pattern& p, const Term& t) {
  Bindings out;
  if (!match_into(p, t, out)) return std::nullopt;
  return out;
}

std::optional<Bindings> try_merge(const Bindings& a, const Bindings& b) {
  Bindings out = a;
  for (const auto& [name, value] : b) {
    auto it = out.find(name);
    if (it == out.end()) {
      out.emplace(name, value);
    } else if (!(it->second == value)) {
      return std::nullopt;
    }
  }
  return out;
}

Bindings merge_bindings(const Bindings& a, const Bindings& b) {
  Bindings out = a;
  for (const auto& [name, value] : b) {
    auto it = out.find(name);
    if (it == out.end()) {
      out.emplace(name, value);
    } else if (!(it->second == value)) {
      throw BindingConflict(name);
    }
  }
  return out;
}

ArithPtr arith_lit(std::int64_t v) {
  return std::make_shared<ArithExpr>(ArithExpr{ArithExpr::Lit{v}});
}

ArithPtr arith_var(std::string name) {
  return std::make_shared<ArithExpr>(ArithExpr{ArithExpr::Var{std::move(name)}});
}

ArithPtr arith_bin(ArithExpr::Op op, ArithPtr lhs, ArithPtr rhs) {
  return std::make_shared<ArithExpr>(ArithExpr{ArithExpr::Bin{op, std::move(lhs), std::move(rhs)}});
}

bool arith_equal(const ArithPtr& a, const ArithPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* la = std::get_if<ArithExpr::Lit>(&a->node))
    return la->value == std::get<ArithExpr::Lit>(b->node).value;
  if (const auto* va = std::get_if<ArithExpr::Var>(&a->node))
    return va->name == std::get<ArithExpr::Var>(b->node).name;
  const auto& ba = std::get<ArithExpr::Bin>(a->node);
  const auto& bb = std::get<ArithExpr::Bin>(b->node);
  return ba.op == bb.op && arith_equal(ba.lhs, bb.lhs) && arith_equal(ba.rhs, bb.rhs);
}

std::string to_string(const ArithExpr& e) {
  struct V {
    std::string operator()(const ArithExpr::Lit& l) const { return std::to_string(l.value); }
    std::string operator()(const ArithExpr::Var& v) const { return v.name; }
    std::string operator()(const ArithExpr::Bin& b) const {
      const char* op = b.op == ArithExpr::Op::Add ? " + "
                       : b.op == ArithExpr::Op::Sub ? " - "
                                                    : " * ";
      return "(" + to_string(*b.lhs) + op + to_string(*b.rhs) + ")";
    }
  };
  return std::visit(V{}, e.node);
}

ConstraintPtr constraint_true() {
  return std::make_shared<ConstraintExpr>(ConstraintExpr{ConstraintExpr::True{}});
}

ConstraintPtr constraint_false() {
  return std::make_shared<ConstraintExpr>(ConstraintExpr{ConstraintExpr::False{}});
}

ConstraintPtr constraint_not(ConstraintPtr inner) {
  return std::make_shared<ConstraintExpr>(ConstraintExpr{ConstraintExpr::Not{std::move(inner)}});
}

ConstraintPtr constraint_cmp(ConstraintExpr::CmpOp op, ArithPtr lhs, ArithPtr rhs) {
  return std::make_shared<ConstraintExpr>(
      ConstraintExpr{ConstraintExpr::Compare{op, std::move(lhs), std::move(rhs)}});
}

bool constraint_equal(const ConstraintPtr& a, const ConstraintPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (std::holds_alternative<ConstraintExpr::True>(a->node)) return true;
  if (std::holds_alternative<ConstraintExpr::False>(a->node)) return true;
  if (const auto* na = std::get_if<ConstraintExpr::Not>(&a->node))
    return constraint_equal(na->inner, std::get<ConstraintExpr::Not>(b->node).inner);
  const auto& ca = std::get<ConstraintExpr::Compare>(a->node);
  const auto& cb = std::get<ConstraintExpr::Compare>(b->node);
  return ca.op == cb.op && arith_equal(ca.lhs, cb.lhs) && arith_equal(ca.rhs, cb.rhs);
}

std::string to_string(const ConstraintExpr& c) {
  struct V {
    std::string operator()(const ConstraintExpr::True&) const { return "true"; }
    std::string operator()(const ConstraintExpr::False&) const { return "false"; }
    std::string operator()(const ConstraintExpr::Not& n) const {
      return "!(" + to_string(*n.inner) + ")";
    }
    std::string operator()(const ConstraintExpr::Compare& cmp) const {
      const char* op = nullptr;
      switch (cmp.op) {
        case ConstraintExpr::CmpOp::Eq: op = " == "; break;
        case ConstraintExpr::CmpOp::Ne: op = " != "; break;
        case ConstraintExpr::CmpOp::Lt: op = " < "; break;
        case ConstraintExpr::CmpOp::Le: op = " <= "; break;
        case ConstraintExpr::CmpOp::Gt: op = " > "; break;
        case ConstraintExpr::CmpOp::Ge: op = " >= "; break;
      }
      return to_string(*cmp.lhs) + op + to_string(*cmp.rhs);
    }
  };
  return std::visit(V{}, c.node);
}

std::int64_t eval_arith(const ArithExpr& e, const Bindings& b) {
  struct V {
    const Bindings& b;
    std::int64_t operator()(const ArithExpr::Lit& l) const { return l.value; }
    std::int64_t operator()(const ArithExpr::Var& v) const {
      auto it = b.find(v.name);
      if (it == b.end()) throw UnboundVariable(v.name);
      if (!it->second.is_int()) throw NonNumericOperand(v.name);
      return it->second.int_value();
    }
    std::int64_t operator()(const ArithExpr::Bin& bin) const {
      std::int64_t l = eval_arith(*bin.lhs, b);
      std::int64_t r = eval_arith(*bin.rhs, b);
      switch (bin.op) {
        case ArithExpr::Op::Add: return l + r;
        case ArithExpr::Op::Sub: return l - r;
        case ArithExpr::Op::Mul: return l * r;
      }
      return 0;
    }
  };
  return std::visit(V{b}, e.node);
}

bool eval_constraint(const ConstraintExpr& c, const Bindings& b) {
  struct V {
    const Bindings& b;
    bool operator()(const ConstraintExpr::True&) const { return true; }
    bool operator()(const ConstraintExpr::False&) const { return false; }
    bool operator()(const ConstraintExpr::Not& n) const { return !eval_constraint(*n.inner, b); }
    bool operator()(const ConstraintExpr::Compare& cmp) const {
      std::int64_t l = eval_arith(*cmp.lhs, b);
      std::int64_t r = eval_arith(*cmp.rhs, b);
      switch (cmp.op) {
        case ConstraintExpr::CmpOp::Eq: return l == r;
        case ConstraintExpr::CmpOp::Ne: return l != r;
        case ConstraintExpr::CmpOp::Lt: return l < r;
        case ConstraintExpr::CmpOp::Le: return l <= r;
        case ConstraintExpr::CmpOp::Gt: return l > r;
        case ConstraintExpr::CmpOp::Ge: return l >= r;
      }
      return false;
    }
  };
  return std::visit(V{b}, c.node);
}

}  // namespace waltz

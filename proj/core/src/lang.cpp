#include "waltz/lang.hpp"

#include <cctype>
#include <set>

#include "waltz/errors.hpp"

namespace waltz {

bool step_equal(const FormulaStep& a, const FormulaStep& b) {
  return a.sig == b.sig && constraint_equal(a.constraint, b.constraint);
}

FormulaPtr make_omega(FormulaPtr body) {
  return std::make_shared<Formula>(Formula{Formula::Omega{std::move(body)}});
}

FormulaPtr make_theta(FormulaPtr body) {
  return std::make_shared<Formula>(Formula{Formula::Theta{std::move(body)}});
}

FormulaPtr make_chain(FormulaPtr left, FormulaPtr right) {
  return std::make_shared<Formula>(Formula{Formula::Chain{std::move(left), std::move(right)}});
}

FormulaPtr make_step(Signature sig, ConstraintPtr constraint) {
  return std::make_shared<Formula>(Formula{FormulaStep{std::move(sig), std::move(constraint)}});
}

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* o = std::get_if<Formula::Omega>(&a->node))
    return formula_equal(o->body, std::get<Formula::Omega>(b->node).body);
  if (const auto* t = std::get_if<Formula::Theta>(&a->node))
    return formula_equal(t->body, std::get<Formula::Theta>(b->node).body);
  if (const auto* c = std::get_if<Formula::Chain>(&a->node)) {
    const auto& cb = std::get<Formula::Chain>(b->node);
    return formula_equal(c->left, cb.left) && formula_equal(c->right, cb.right);
  }
  return step_equal(std::get<FormulaStep>(a->node), std::get<FormulaStep>(b->node));
}

namespace {

enum class Tok {
  Ident,      // lowercase-initial word
  Var,        // uppercase-initial word
  Int,
  Wildcard,   // _ or _name
  LParen,
  RParen,
  LBrace,
  RBrace,
  Semi,
  Colon,
  Comma,
  Arrow,
  EqEq,
  Neq,
  Le,
  Ge,
  Lt,
  Gt,
  Bang,
  Plus,
  Minus,
  Star,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_ws_and_comments();
      Token t = next_token();
      out.push_back(t);
      if (t.kind == Tok::End) return out;
    }
  }

 private:
  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws_and_comments() {
    for (;;) {
      char c = peek();
      if (c == '#') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else if (c != '\0' && std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  Token make(Tok kind, std::string text, int line, int col) {
    return Token{kind, std::move(text), 0, line, col};
  }

  Token next_token() {
    int line = line_, col = col_;
    if (pos_ >= src_.size()) return make(Tok::End, "", line, col);
    char c = peek();

    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::int64_t v = 0;
      std::string text;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        char d = advance();
        text += d;
        v = v * 10 + (d - '0');
      }
      Token t = make(Tok::Int, text, line, col);
      t.value = v;
      return t;
    }

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string text;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') text += advance();
      if (text[0] == '_') return make(Tok::Wildcard, text, line, col);
      if (std::isupper(static_cast<unsigned char>(text[0]))) return make(Tok::Var, text, line, col);
      return make(Tok::Ident, text, line, col);
    }

    advance();
    switch (c) {
      case '(': return make(Tok::LParen, "(", line, col);
      case ')': return make(Tok::RParen, ")", line, col);
      case '{': return make(Tok::LBrace, "{", line, col);
      case '}': return make(Tok::RBrace, "}", line, col);
      case ';': return make(Tok::Semi, ";", line, col);
      case ':': return make(Tok::Colon, ":", line, col);
      case ',': return make(Tok::Comma, ",", line, col);
      case '+': return make(Tok::Plus, "+", line, col);
      case '*': return make(Tok::Star, "*", line, col);
      case '-':
        if (peek() == '>') {
          advance();
          return make(Tok::Arrow, "->", line, col);
        }
        return make(Tok::Minus, "-", line, col);
      case '=':
        if (peek() == '=') {
          advance();
          return make(Tok::EqEq, "==", line, col);
        }
        return make(Tok::EqEq, "=", line, col);  // accepted alias
      case '!':
        if (peek() == '=') {
          advance();
          return make(Tok::Neq, "!=", line, col);
        }
        return make(Tok::Bang, "!", line, col);
      case '<':
        if (peek() == '=') {
          advance();
          return make(Tok::Le, "<=", line, col);
        }
        return make(Tok::Lt, "<", line, col);
      case '>':
        if (peek() == '=') {
          advance();
          return make(Tok::Ge, ">=", line, col);
        }
        return make(Tok::Gt, ">", line, col);
      default:
        throw ParseError(line, col, "a formula token");
    }
  }
};

class FormulaParser {
 public:
  explicit FormulaParser(const std::string& src) : tokens_(Lexer(src).run()) {}

  FormulaPtr parse() {
    FormulaPtr f = parse_seq();
    expect(Tok::End, "end of input");
    return f;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;

  const Token& cur() const { return tokens_[pos_]; }

  const Token& advance() { return tokens_[pos_++]; }

  bool at(Tok k) const { return cur().kind == k; }

  bool at_keyword(const char* kw) const { return at(Tok::Ident) && cur().text == kw; }

  [[noreturn]] void fail(const std::string& expected) {
    throw ParseError(cur().line, cur().column, expected);
  }

  const Token& expect(Tok k, const std::string& what) {
    if (!at(k)) fail(what);
    return advance();
  }

  // seq := unit (';' seq)?   right-associative
  FormulaPtr parse_seq() {
    FormulaPtr left = parse_unit();
    if (at(Tok::Semi)) {
      advance();
      return make_chain(std::move(left), parse_seq());
    }
    return left;
  }

  FormulaPtr parse_unit() {
    if (at_keyword("omega") || at_keyword("theta")) {
      bool omega = cur().text == "omega";
      advance();
      expect(Tok::LParen, "'('");
      FormulaPtr body = parse_seq();
      expect(Tok::RParen, "')'");
      return omega ? make_omega(std::move(body)) : make_theta(std::move(body));
    }
    if (at(Tok::LParen)) {
      advance();
      FormulaPtr f = parse_seq();
      expect(Tok::RParen, "')'");
      return f;
    }
    if (at_keyword("send")) return parse_step();
    fail("'omega', 'theta', 'send' or '('");
  }

  FormulaPtr parse_step() {
    advance();  // send
    std::string from = expect(Tok::Ident, "a module name").text;
    expect(Tok::Arrow, "'->'");
    std::string to = expect(Tok::Ident, "a module name").text;
    Pattern pat = parse_tuple_pattern();
    expect(Tok::Colon, "':'");
    ConstraintPtr c = parse_constraint();
    return make_step(Signature{std::move(from), std::move(to), std::move(pat)}, std::move(c));
  }

  Pattern parse_tuple_pattern() {
    expect(Tok::LBrace, "'{'");
    std::vector<Pattern> elems;
    if (at(Tok::RBrace)) {
      advance();
      return Pattern::tuple(std::move(elems));
    }
    for (;;) {
      elems.push_back(parse_pattern_elem());
      if (at(Tok::Comma)) {
        advance();
        continue;
      }
      expect(Tok::RBrace, "',' or '}'");
      return Pattern::tuple(std::move(elems));
    }
  }

  Pattern parse_pattern_elem() {
    if (at(Tok::Ident)) return Pattern::constant(Term::atom(advance().text));
    if (at(Tok::Int)) return Pattern::constant(Term::integer(advance().value));
    if (at(Tok::Minus)) {
      advance();
      return Pattern::constant(Term::integer(-expect(Tok::Int, "an integer").value));
    }
    if (at(Tok::Var)) return Pattern::var(advance().text);
    if (at(Tok::Wildcard)) {
      advance();
      return Pattern::wildcard();
    }
    if (at(Tok::LBrace)) return parse_tuple_pattern();
    fail("a pattern element");
  }

  ConstraintPtr parse_constraint() {
    if (at_keyword("true")) {
      advance();
      return constraint_true();
    }
    if (at_keyword("false")) {
      advance();
      return constraint_false();
    }
    if (at(Tok::Bang)) {
      advance();
      return constraint_not(parse_constraint_primary());
    }
    return parse_comparison();
  }

  // After '!': a parenthesized constraint, a boolean literal, or another '!'.
  ConstraintPtr parse_constraint_primary() {
    if (at_keyword("true")) {
      advance();
      return constraint_true();
    }
    if (at_keyword("false")) {
      advance();
      return constraint_false();
    }
    if (at(Tok::Bang)) {
      advance();
      return constraint_not(parse_constraint_primary());
    }
    if (at(Tok::LParen)) {
      advance();
      ConstraintPtr c = parse_constraint();
      expect(Tok::RParen, "')'");
      return c;
    }
    fail("'true', 'false', '!' or '('");
  }

  ConstraintPtr parse_comparison() {
    ArithPtr lhs = parse_arith();
    ConstraintExpr::CmpOp op;
    switch (cur().kind) {
      case Tok::EqEq: op = ConstraintExpr::CmpOp::Eq; break;
      case Tok::Neq: op = ConstraintExpr::CmpOp::Ne; break;
      case Tok::Lt: op = ConstraintExpr::CmpOp::Lt; break;
      case Tok::Le: op = ConstraintExpr::CmpOp::Le; break;
      case Tok::Gt: op = ConstraintExpr::CmpOp::Gt; break;
      case Tok::Ge: op = ConstraintExpr::CmpOp::Ge; break;
      default: fail("a comparison operator");
    }
    advance();
    ArithPtr rhs = parse_arith();
    return constraint_cmp(op, std::move(lhs), std::move(rhs));
  }

  ArithPtr parse_arith() {
    ArithPtr left = parse_arith_term();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      auto op = at(Tok::Plus) ? ArithExpr::Op::Add : ArithExpr::Op::Sub;
      advance();
      left = arith_bin(op, std::move(left), parse_arith_term());
    }
    return left;
  }

  ArithPtr parse_arith_term() {
    ArithPtr left = parse_arith_factor();
    while (at(Tok::Star)) {
      advance();
      left = arith_bin(ArithExpr::Op::Mul, std::move(left), parse_arith_factor());
    }
    return left;
  }

  ArithPtr parse_arith_factor() {
    if (at(Tok::Int)) return arith_lit(advance().value);
    if (at(Tok::Minus)) {
      advance();
      return arith_lit(-expect(Tok::Int, "an integer").value);
    }
    if (at(Tok::Var)) return arith_var(advance().text);
    if (at(Tok::LParen)) {
      advance();
      ArithPtr e = parse_arith();
      expect(Tok::RParen, "')'");
      return e;
    }
    fail("an integer, a variable or '('");
  }
};

int arith_prec(const ArithExpr& e) {
  const auto* bin = std::get_if<ArithExpr::Bin>(&e.node);
  if (!bin) return 3;
  return bin->op == ArithExpr::Op::Mul ? 2 : 1;
}

std::string print_arith(const ArithExpr& e, int parent_prec, bool right_child) {
  const auto* bin = std::get_if<ArithExpr::Bin>(&e.node);
  if (!bin) {
    if (const auto* lit = std::get_if<ArithExpr::Lit>(&e.node)) return std::to_string(lit->value);
    return std::get<ArithExpr::Var>(e.node).name;
  }
  int prec = arith_prec(e);
  const char* op = bin->op == ArithExpr::Op::Add ? " + "
                   : bin->op == ArithExpr::Op::Sub ? " - "
                                                   : " * ";
  std::string out =
      print_arith(*bin->lhs, prec, false) + op + print_arith(*bin->rhs, prec, true);
  // Operators associate left; a right child at equal precedence, or any
  // child at lower precedence, keeps its parentheses.
  if (prec < parent_prec || (prec == parent_prec && right_child)) return "(" + out + ")";
  return out;
}

std::string print_constraint(const ConstraintExpr& c) {
  struct V {
    std::string operator()(const ConstraintExpr::True&) const { return "true"; }
    std::string operator()(const ConstraintExpr::False&) const { return "false"; }
    std::string operator()(const ConstraintExpr::Not& n) const {
      return "!(" + print_constraint(*n.inner) + ")";
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
      return print_arith(*cmp.lhs, 0, false) + op + print_arith(*cmp.rhs, 0, false);
    }
  };
  return std::visit(V{}, c.node);
}

std::string print_pattern(const Pattern& p) {
  struct V {
    std::string operator()(const Pattern::Const& c) const { return to_string(c.value); }
    std::string operator()(const Pattern::Var& v) const { return v.name; }
    std::string operator()(const Pattern::Wildcard&) const { return "_"; }
    std::string operator()(const Pattern::TuplePat& tp) const {
      std::string out = "{";
      for (std::size_t i = 0; i < tp.elems.size(); ++i) {
        if (i) out += ", ";
        out += print_pattern(tp.elems[i]);
      }
      return out + "}";
    }
  };
  return std::visit(V{}, p.node);
}

}  // namespace

FormulaPtr parse_formula(const std::string& source) { return FormulaParser(source).parse(); }

std::string print_formula(const Formula& f) {
  struct V {
    std::string operator()(const Formula::Omega& o) const {
      return "omega(" + print_formula(*o.body) + ")";
    }
    std::string operator()(const Formula::Theta& t) const {
      return "theta(" + print_formula(*t.body) + ")";
    }
    std::string operator()(const Formula::Chain& c) const {
      std::string left = print_formula(*c.left);
      if (c.left->is_chain()) left = "(" + left + ")";  // ';' associates right
      return left + " ; " + print_formula(*c.right);
    }
    std::string operator()(const FormulaStep& s) const {
      return "send " + s.sig.from + " -> " + s.sig.to + " " + print_pattern(s.sig.pattern) +
             " : " + print_constraint(*s.constraint);
    }
  };
  return std::visit(V{}, f.node);
}

namespace {

bool contains_modal(const Formula& f) {
  if (f.is_omega() || f.is_theta()) return true;
  if (const auto* c = std::get_if<Formula::Chain>(&f.node))
    return contains_modal(*c->left) || contains_modal(*c->right);
  return false;
}

void collect_pattern_vars(const Pattern& p, std::vector<std::string>& out) {
  if (const auto* v = std::get_if<Pattern::Var>(&p.node)) {
    out.push_back(v->name);
  } else if (const auto* tp = std::get_if<Pattern::TuplePat>(&p.node)) {
    for (const auto& e : tp->elems) collect_pattern_vars(e, out);
  }
}

void collect_arith_vars(const ArithExpr& e, std::vector<std::string>& out) {
  if (const auto* v = std::get_if<ArithExpr::Var>(&e.node)) {
    out.push_back(v->name);
  } else if (const auto* bin = std::get_if<ArithExpr::Bin>(&e.node)) {
    collect_arith_vars(*bin->lhs, out);
    collect_arith_vars(*bin->rhs, out);
  }
}

void collect_constraint_vars(const ConstraintExpr& c, std::vector<std::string>& out) {
  if (const auto* n = std::get_if<ConstraintExpr::Not>(&c.node)) {
    collect_constraint_vars(*n->inner, out);
  } else if (const auto* cmp = std::get_if<ConstraintExpr::Compare>(&c.node)) {
    collect_arith_vars(*cmp->lhs, out);
    collect_arith_vars(*cmp->rhs, out);
  }
}

void flatten_into(const Formula& f, std::vector<FormulaStep>& out) {
  if (const auto* s = std::get_if<FormulaStep>(&f.node)) {
    out.push_back(*s);
    return;
  }
  if (const auto* c = std::get_if<Formula::Chain>(&f.node)) {
    flatten_into(*c->left, out);
    flatten_into(*c->right, out);
    return;
  }
  throw NotWellFormed("modal operator inside a chain");
}

}  // namespace

std::vector<FormulaStep> flatten_chain(const Formula& body) {
  std::vector<FormulaStep> out;
  flatten_into(body, out);
  return out;
}

std::optional<WfError> check_well_formed(const Formula& f) {
  const Formula* body = nullptr;
  if (const auto* o = std::get_if<Formula::Omega>(&f.node)) body = o->body.get();
  if (const auto* t = std::get_if<Formula::Theta>(&f.node)) body = t->body.get();
  if (!body)
    return WfError{WfErrorKind::MissingModalWrapper, "", 0,
                   "a formula needs an omega(...) or theta(...) wrapper"};
  if (contains_modal(*body))
    return WfError{WfErrorKind::NestedModal, "", 0, "modal operators cannot nest"};

  std::vector<FormulaStep> steps = flatten_chain(*body);
  std::set<std::string> bound;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    std::vector<std::string> vars;
    collect_pattern_vars(steps[k].sig.pattern, vars);
    std::set<std::string> in_this_sig;
    for (const auto& v : vars) {
      if (!in_this_sig.insert(v).second)
        return WfError{WfErrorKind::DuplicatePatternVariable, v, k,
                       "variable " + v + " bound twice in one signature"};
    }
    bound.insert(in_this_sig.begin(), in_this_sig.end());

    std::vector<std::string> used;
    collect_constraint_vars(*steps[k].constraint, used);
    for (const auto& v : used) {
      if (!bound.count(v))
        return WfError{WfErrorKind::UnboundConstraintVariable, v, k,
                       "variable " + v + " is not bound by step " + std::to_string(k) +
                           " or any earlier step"};
    }
  }
  return std::nullopt;
}

}  // namespace waltz

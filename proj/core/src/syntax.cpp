#include "teamlab/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "teamlab/atoms.hpp"

namespace teamlab {

ParseError::ParseError(const std::string& msg, int line, int col)
    : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ")"),
      line(line),
      col(col) {}

namespace {

std::vector<std::string> merge_sorted(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::vector<std::string> literal_vars(const Literal& l) {
  std::vector<std::string> vs;
  for (const auto& t : l.args)
    if (t.is_var()) vs.push_back(t.name);
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

std::vector<std::string> remove_var(std::vector<std::string> vs, const std::string& v) {
  vs.erase(std::remove(vs.begin(), vs.end(), v), vs.end());
  return vs;
}

}  // namespace

FormulaPtr f_lit(Literal lit) {
  auto f = std::make_shared<Formula>();
  f->kind = Conn::Lit;
  f->fv = literal_vars(lit);
  f->lit = std::move(lit);
  return f;
}

static FormulaPtr binary(Conn kind, FormulaPtr a, FormulaPtr b) {
  auto f = std::make_shared<Formula>();
  f->kind = kind;
  f->fv = merge_sorted(a->fv, b->fv);
  f->lhs = std::move(a);
  f->rhs = std::move(b);
  return f;
}

FormulaPtr f_and(FormulaPtr a, FormulaPtr b) { return binary(Conn::And, std::move(a), std::move(b)); }
FormulaPtr f_or(FormulaPtr a, FormulaPtr b) { return binary(Conn::Or, std::move(a), std::move(b)); }
FormulaPtr f_gor(FormulaPtr a, FormulaPtr b) { return binary(Conn::GlobalOr, std::move(a), std::move(b)); }

static FormulaPtr quantifier(Conn kind, std::string v, FormulaPtr body) {
  auto f = std::make_shared<Formula>();
  f->kind = kind;
  f->fv = remove_var(body->fv, v);
  f->var = std::move(v);
  f->body = std::move(body);
  return f;
}

FormulaPtr f_exists(std::string v, FormulaPtr body) {
  return quantifier(Conn::Exists, std::move(v), std::move(body));
}
FormulaPtr f_forall(std::string v, FormulaPtr body) {
  return quantifier(Conn::Forall, std::move(v), std::move(body));
}

FormulaPtr f_atom(std::string name, std::vector<std::vector<std::string>> groups) {
  auto f = std::make_shared<Formula>();
  f->kind = Conn::Atom;
  std::vector<std::string> vs;
  for (const auto& g : groups)
    for (const auto& v : g) vs.push_back(v);
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  f->fv = std::move(vs);
  f->atom = std::move(name);
  f->groups = std::move(groups);
  return f;
}

FormulaPtr f_and_all(std::vector<FormulaPtr> parts, FormulaPtr fallback) {
  if (parts.empty()) return fallback;
  FormulaPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = f_and(acc, parts[i]);
  return acc;
}

FormulaPtr f_or_all(std::vector<FormulaPtr> parts, FormulaPtr fallback) {
  if (parts.empty()) return fallback;
  FormulaPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = f_or(acc, parts[i]);
  return acc;
}

std::set<std::string> free_variables(const FormulaPtr& f) {
  return {f->fv.begin(), f->fv.end()};
}

static void walk(const FormulaPtr& f, const std::function<void(const Formula&)>& fn) {
  fn(*f);
  switch (f->kind) {
    case Conn::And:
    case Conn::Or:
    case Conn::GlobalOr:
      walk(f->lhs, fn);
      walk(f->rhs, fn);
      break;
    case Conn::Exists:
    case Conn::Forall:
      walk(f->body, fn);
      break;
    default:
      break;
  }
}

std::set<std::string> constants_of(const FormulaPtr& f) {
  std::set<std::string> out;
  walk(f, [&](const Formula& n) {
    if (n.kind == Conn::Lit)
      for (const auto& t : n.lit.args)
        if (!t.is_var()) out.insert(t.name);
  });
  return out;
}

std::set<std::string> all_variables(const FormulaPtr& f) {
  std::set<std::string> out;
  walk(f, [&](const Formula& n) {
    switch (n.kind) {
      case Conn::Lit:
        for (const auto& t : n.lit.args)
          if (t.is_var()) out.insert(t.name);
        break;
      case Conn::Exists:
      case Conn::Forall:
        out.insert(n.var);
        break;
      case Conn::Atom:
        for (const auto& g : n.groups)
          for (const auto& v : g) out.insert(v);
        break;
      default:
        break;
    }
  });
  return out;
}

std::map<std::string, int> relation_symbols(const FormulaPtr& f) {
  std::map<std::string, int> out;
  walk(f, [&](const Formula& n) {
    if (n.kind == Conn::Lit && !n.lit.is_equality)
      out.emplace(n.lit.rel, static_cast<int>(n.lit.args.size()));
  });
  return out;
}

bool contains_atom(const FormulaPtr& f) {
  bool found = false;
  walk(f, [&](const Formula& n) { found |= n.kind == Conn::Atom; });
  return found;
}

bool contains_global_or(const FormulaPtr& f) {
  bool found = false;
  walk(f, [&](const Formula& n) { found |= n.kind == Conn::GlobalOr; });
  return found;
}

bool contains_relation(const FormulaPtr& f, const std::string& rel) {
  bool found = false;
  walk(f, [&](const Formula& n) {
    found |= n.kind == Conn::Lit && !n.lit.is_equality && n.lit.rel == rel;
  });
  return found;
}

std::string print_term(const Term& t) { return t.name; }

std::string print_literal(const Literal& l) {
  std::ostringstream os;
  if (l.is_equality) {
    os << print_term(l.args[0]) << (l.positive ? " = " : " != ") << print_term(l.args[1]);
  } else {
    if (!l.positive) os << "!";
    os << l.rel << "(";
    for (std::size_t i = 0; i < l.args.size(); ++i) {
      if (i) os << ", ";
      os << print_term(l.args[i]);
    }
    os << ")";
  }
  return os.str();
}

static void print_rec(const FormulaPtr& f, std::ostringstream& os) {
  switch (f->kind) {
    case Conn::Lit:
      os << print_literal(f->lit);
      break;
    case Conn::And:
    case Conn::Or:
    case Conn::GlobalOr: {
      const char* op = f->kind == Conn::And ? " and " : f->kind == Conn::Or ? " or " : " gor ";
      os << "(";
      print_rec(f->lhs, os);
      os << op;
      print_rec(f->rhs, os);
      os << ")";
      break;
    }
    case Conn::Exists:
    case Conn::Forall:
      // Quantifiers scope maximally, so keep the printed scope explicit.
      os << "(" << (f->kind == Conn::Exists ? "E " : "A ") << f->var << ". ";
      print_rec(f->body, os);
      os << ")";
      break;
    case Conn::Atom: {
      bool user = false;
      static const char* kBuiltins[] = {"dep", "inc", "exc", "anon", "indep", "ne", "const", "all"};
      user = std::none_of(std::begin(kBuiltins), std::end(kBuiltins),
                          [&](const char* b) { return f->atom == b; });
      if (user) os << "D[" << f->atom << "]";
      else os << f->atom;
      os << "(";
      for (std::size_t g = 0; g < f->groups.size(); ++g) {
        if (g) os << " ; ";
        for (std::size_t i = 0; i < f->groups[g].size(); ++i) {
          if (i) os << ", ";
          os << f->groups[g][i];
        }
      }
      os << ")";
      break;
    }
  }
}

std::string pretty_print(const FormulaPtr& f) {
  std::ostringstream os;
  print_rec(f, os);
  return os.str();
}

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Conn::Lit:
      return a->lit == b->lit;
    case Conn::And:
    case Conn::Or:
    case Conn::GlobalOr:
      return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
    case Conn::Exists:
    case Conn::Forall:
      return a->var == b->var && structurally_equal(a->body, b->body);
    case Conn::Atom:
      return a->atom == b->atom && a->groups == b->groups;
  }
  return false;
}

void FreshVars::reserve(const std::set<std::string>& more) {
  used_.insert(more.begin(), more.end());
}

std::string FreshVars::next() {
  for (;;) {
    std::string cand = "_v" + std::to_string(counter_++);
    if (used_.insert(cand).second) return cand;
  }
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

Literal subst_lit_var(const Literal& l, const std::string& from, const std::string& to) {
  Literal out = l;
  for (auto& t : out.args)
    if (t.is_var() && t.name == from) t.name = to;
  return out;
}

Literal subst_lit_const(const Literal& l, const std::string& from, const std::string& to) {
  Literal out = l;
  for (auto& t : out.args)
    if (!t.is_var() && t.name == from) t = Term::var(to);
  return out;
}

FormulaPtr subst_var_rec(const FormulaPtr& f, const std::string& from, const std::string& to,
                         FreshVars& fresh) {
  if (!std::binary_search(f->fv.begin(), f->fv.end(), from)) return f;
  switch (f->kind) {
    case Conn::Lit:
      return f_lit(subst_lit_var(f->lit, from, to));
    case Conn::And:
      return f_and(subst_var_rec(f->lhs, from, to, fresh), subst_var_rec(f->rhs, from, to, fresh));
    case Conn::Or:
      return f_or(subst_var_rec(f->lhs, from, to, fresh), subst_var_rec(f->rhs, from, to, fresh));
    case Conn::GlobalOr:
      return f_gor(subst_var_rec(f->lhs, from, to, fresh), subst_var_rec(f->rhs, from, to, fresh));
    case Conn::Exists:
    case Conn::Forall: {
      // from is free here, so f->var != from; rename the binder first if
      // it would capture `to`.
      FormulaPtr body = f->body;
      std::string v = f->var;
      if (v == to) {
        std::string v2 = fresh.next();
        body = subst_var_rec(body, v, v2, fresh);
        v = v2;
      }
      body = subst_var_rec(body, from, to, fresh);
      return f->kind == Conn::Exists ? f_exists(v, body) : f_forall(v, body);
    }
    case Conn::Atom: {
      auto groups = f->groups;
      for (auto& g : groups)
        for (auto& v : g)
          if (v == from) v = to;
      return f_atom(f->atom, std::move(groups));
    }
  }
  return f;
}

}  // namespace

FormulaPtr substitute_var(const FormulaPtr& f, const std::string& from, const std::string& to) {
  FreshVars fresh(all_variables(f));
  fresh.reserve({to});
  return subst_var_rec(f, from, to, fresh);
}

FormulaPtr substitute_const_by_var(const FormulaPtr& f, const std::string& from, const std::string& to) {
  switch (f->kind) {
    case Conn::Lit:
      return f_lit(subst_lit_const(f->lit, from, to));
    case Conn::And:
      return f_and(substitute_const_by_var(f->lhs, from, to), substitute_const_by_var(f->rhs, from, to));
    case Conn::Or:
      return f_or(substitute_const_by_var(f->lhs, from, to), substitute_const_by_var(f->rhs, from, to));
    case Conn::GlobalOr:
      return f_gor(substitute_const_by_var(f->lhs, from, to), substitute_const_by_var(f->rhs, from, to));
    case Conn::Exists:
      return f_exists(f->var, substitute_const_by_var(f->body, from, to));
    case Conn::Forall:
      return f_forall(f->var, substitute_const_by_var(f->body, from, to));
    case Conn::Atom:
      return f;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, LParen, RParen, Comma, Semi, Dot, Eq, Neq, Bang, LBracket, RBracket, End };

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }
  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) {
      if (s_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= s_.size()) {
      tok_.kind = Tok::End;
      tok_.text.clear();
      return;
    }
    char c = s_[pos_];
    auto one = [&](Tok k) {
      tok_.kind = k;
      tok_.text = std::string(1, c);
      ++pos_;
      ++col_;
    };
    switch (c) {
      case '(': one(Tok::LParen); return;
      case ')': one(Tok::RParen); return;
      case ',': one(Tok::Comma); return;
      case ';': one(Tok::Semi); return;
      case '.': one(Tok::Dot); return;
      case '=': one(Tok::Eq); return;
      case '[': one(Tok::LBracket); return;
      case ']': one(Tok::RBracket); return;
      case '!':
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '=') {
          tok_.kind = Tok::Neq;
          tok_.text = "!=";
          pos_ += 2;
          col_ += 2;
        } else {
          one(Tok::Bang);
        }
        return;
      default:
        break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size()) {
        char d = s_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '\'') {
          ++pos_;
          ++col_;
        } else {
          break;
        }
      }
      tok_.kind = Tok::Ident;
      tok_.text = s_.substr(start, pos_ - start);
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_{};
};

bool is_builtin_atom(const std::string& s) {
  return s == "dep" || s == "inc" || s == "exc" || s == "anon" || s == "indep" ||
         s == "ne" || s == "const" || s == "all";
}

bool is_keyword(const std::string& s) {
  return s == "E" || s == "A" || s == "and" || s == "or" || s == "gor" || s == "D" ||
         is_builtin_atom(s);
}

class Parser {
 public:
  Parser(const std::string& text, const ParseContext& ctx) : lex_(text), ctx_(ctx) {
    relations_ = ctx.relations;
  }

  FormulaPtr parse() {
    FormulaPtr f = formula();
    expect(Tok::End, "end of input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, lex_.peek().line, lex_.peek().col); }

  Token expect(Tok k, const std::string& what) {
    if (lex_.peek().kind != k) fail("expected " + what);
    return lex_.take();
  }

  bool accept_ident(const std::string& word) {
    if (lex_.peek().kind == Tok::Ident && lex_.peek().text == word) {
      lex_.take();
      return true;
    }
    return false;
  }

  FormulaPtr formula() {  // gor level
    FormulaPtr f = or_level();
    while (accept_ident("gor")) f = f_gor(f, or_level());
    return f;
  }

  FormulaPtr or_level() {
    FormulaPtr f = and_level();
    while (accept_ident("or")) f = f_or(f, and_level());
    return f;
  }

  FormulaPtr and_level() {
    FormulaPtr f = unary();
    while (accept_ident("and")) f = f_and(f, unary());
    return f;
  }

  std::string variable_name() {
    Token t = expect(Tok::Ident, "a variable name");
    check_user_ident(t);
    if (ctx_.constants.count(t.text)) fail("'" + t.text + "' is a constant, not a variable");
    return t.text;
  }

  void check_user_ident(const Token& t) {
    if (is_keyword(t.text))
      throw ParseError("'" + t.text + "' is a reserved word", t.line, t.col);
    if (!ctx_.allow_reserved && !t.text.empty() && t.text[0] == '_')
      throw ParseError("identifiers starting with '_' are reserved", t.line, t.col);
  }

  FormulaPtr unary() {
    const Token& p = lex_.peek();
    if (p.kind == Tok::Ident && (p.text == "E" || p.text == "A")) {
      bool exists = p.text == "E";
      lex_.take();
      std::string v = variable_name();
      expect(Tok::Dot, "'.' after quantified variable");
      // The quantifier extends as far right as possible.
      FormulaPtr body = formula();
      return exists ? f_exists(v, body) : f_forall(v, body);
    }
    return primary();
  }

  Term term() {
    Token t = expect(Tok::Ident, "a term");
    check_user_ident(t);
    if (ctx_.constants.count(t.text)) return Term::cons(t.text);
    return Term::var(t.text);
  }

  FormulaPtr primary() {
    const Token& p = lex_.peek();
    if (p.kind == Tok::Bang) {
      Token bang = lex_.take();
      if (lex_.peek().kind != Tok::Ident || is_keyword(lex_.peek().text))
        throw ParseError("negation is only allowed on literals (input must be in negation normal form)",
                         bang.line, bang.col);
      Token name = lex_.take();
      check_user_ident(name);
      return relation_literal(name.text, /*positive=*/false);
    }
    if (p.kind == Tok::LParen) return paren_or_tuple_equality();
    if (p.kind != Tok::Ident) fail("expected a formula");

    if (is_builtin_atom(p.text)) return builtin_atom();
    if (p.text == "D") return user_atom();
    if (is_keyword(p.text)) fail("unexpected keyword '" + p.text + "'");

    Token name = lex_.take();
    check_user_ident(name);
    if (lex_.peek().kind == Tok::LParen) return relation_literal(name.text, /*positive=*/true);
    // Equality literal on single terms.
    Term lhsv = ctx_.constants.count(name.text) ? Term::cons(name.text) : Term::var(name.text);
    if (lex_.peek().kind == Tok::Eq) {
      lex_.take();
      return f_lit(Literal{true, true, "", {lhsv, term()}});
    }
    if (lex_.peek().kind == Tok::Neq) {
      lex_.take();
      return f_lit(Literal{false, true, "", {lhsv, term()}});
    }
    fail("expected '(', '=' or '!=' after identifier '" + name.text + "'");
  }

  FormulaPtr relation_literal(const std::string& rel, bool positive) {
    expect(Tok::LParen, "'('");
    std::vector<Term> args;
    if (lex_.peek().kind != Tok::RParen) {
      args.push_back(term());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        args.push_back(term());
      }
    }
    Token close = expect(Tok::RParen, "')'");
    int arity = static_cast<int>(args.size());
    auto [it, inserted] = relations_.emplace(rel, arity);
    if (!inserted && it->second != arity)
      throw ParseError("relation '" + rel + "' used with arity " + std::to_string(arity) +
                           ", declared " + std::to_string(it->second),
                       close.line, close.col);
    return f_lit(Literal{positive, false, rel, std::move(args)});
  }

  // '(' can open a grouped formula or a tuple equality (x,y) = (u,v).
  FormulaPtr paren_or_tuple_equality() {
    expect(Tok::LParen, "'('");
    if (lex_.peek().kind == Tok::Ident && !is_keyword(lex_.peek().text)) {
      // Tentatively read a term list; commit to tuple equality only on
      // ')' followed by '=' or '!='. A single parenthesized term
      // followed by '=' also parses here.
      std::vector<Term> lhs;
      std::vector<Token> toks;
      bool tuple_shape = true;
      Token first = lex_.take();
      toks.push_back(first);
      for (;;) {
        if (lex_.peek().kind == Tok::Comma) {
          lex_.take();
          Token t = expect(Tok::Ident, "a term");
          toks.push_back(t);
          continue;
        }
        break;
      }
      if (lex_.peek().kind == Tok::RParen) {
        lex_.take();
        if (lex_.peek().kind == Tok::Eq || lex_.peek().kind == Tok::Neq) {
          bool positive = lex_.take().kind == Tok::Eq;
          for (const auto& t : toks) {
            check_user_ident(t);
            lhs.push_back(ctx_.constants.count(t.text) ? Term::cons(t.text) : Term::var(t.text));
          }
          return tuple_equality(lhs, positive);
        }
      }
      tuple_shape = false;
      (void)tuple_shape;
      // Not a tuple equality after all: re-parse from the collected
      // tokens. Only the single-identifier shapes can reach here.
      if (toks.size() != 1) fail("expected '=' or '!=' after tuple");
      return reparse_after_ident(toks[0]);
    }
    FormulaPtr f = formula();
    expect(Tok::RParen, "')'");
    return f;
  }

  // Continue a parenthesized formula whose first token (an identifier)
  // was already consumed during tuple-equality lookahead.
  FormulaPtr reparse_after_ident(const Token& name) {
    FormulaPtr f;
    if (is_builtin_atom(name.text) || name.text == "D" || name.text == "E" || name.text == "A")
      throw ParseError("unexpected '" + name.text + "'", name.line, name.col);
    check_user_ident(name);
    if (lex_.peek().kind == Tok::LParen) {
      f = relation_literal(name.text, true);
    } else if (lex_.peek().kind == Tok::Eq || lex_.peek().kind == Tok::Neq) {
      bool positive = lex_.take().kind == Tok::Eq;
      Term lhsv = ctx_.constants.count(name.text) ? Term::cons(name.text) : Term::var(name.text);
      f = f_lit(Literal{positive, true, "", {lhsv, term()}});
    } else {
      fail("expected '(', '=' or '!=' after identifier '" + name.text + "'");
    }
    // Fold back into the surrounding connective levels, then close.
    while (lex_.peek().kind == Tok::Ident) {
      const std::string& w = lex_.peek().text;
      if (w == "and") {
        lex_.take();
        f = f_and(f, unary());
      } else if (w == "or") {
        lex_.take();
        f = f_or(f, and_level());
      } else if (w == "gor") {
        lex_.take();
        f = f_gor(f, or_level());
      } else {
        break;
      }
    }
    expect(Tok::RParen, "')'");
    return f;
  }

  // x⃗ = y⃗ abbreviates the conjunction of componentwise equalities; its
  // NNF negation is the disjunction of inequalities.
  FormulaPtr tuple_equality(const std::vector<Term>& lhs, bool positive) {
    expect(Tok::LParen, "'(' opening the right tuple");
    std::vector<Term> rhs;
    rhs.push_back(term());
    while (lex_.peek().kind == Tok::Comma) {
      lex_.take();
      rhs.push_back(term());
    }
    Token close = expect(Tok::RParen, "')'");
    if (lhs.size() != rhs.size())
      throw ParseError("tuple lengths differ in tuple (in)equality", close.line, close.col);
    std::vector<FormulaPtr> parts;
    for (std::size_t i = 0; i < lhs.size(); ++i)
      parts.push_back(f_lit(Literal{positive, true, "", {lhs[i], rhs[i]}}));
    FormulaPtr acc = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i)
      acc = positive ? f_and(acc, parts[i]) : f_or(acc, parts[i]);
    return acc;
  }

  FormulaPtr builtin_atom() {
    Token name = lex_.take();
    expect(Tok::LParen, "'(' after atom name");
    std::vector<std::vector<std::string>> groups;
    groups.push_back(var_group());
    if (lex_.peek().kind == Tok::Semi) {
      lex_.take();
      groups.push_back(var_group());
    }
    Token close = expect(Tok::RParen, "')'");
    bool two = name.text == "dep" || name.text == "inc" || name.text == "exc" ||
               name.text == "anon" || name.text == "indep";
    if (two && groups.size() != 2)
      throw ParseError("atom '" + name.text + "' needs two ';'-separated argument groups",
                       close.line, close.col);
    if (!two && groups.size() != 1)
      throw ParseError("atom '" + name.text + "' takes a single argument group", close.line,
                       close.col);
    if ((name.text == "inc" || name.text == "exc") && groups[0].size() != groups[1].size())
      throw ParseError("atom '" + name.text + "' needs argument groups of the same length",
                       close.line, close.col);
    return f_atom(name.text, std::move(groups));
  }

  FormulaPtr user_atom() {
    Token d = lex_.take();  // 'D'
    expect(Tok::LBracket, "'[' after D");
    Token name = expect(Tok::Ident, "dependency name");
    expect(Tok::RBracket, "']'");
    expect(Tok::LParen, "'('");
    std::vector<std::string> args = var_group();
    Token close = expect(Tok::RParen, "')'");
    if (!ctx_.registry)
      throw ParseError("no dependency context for atom 'D[" + name.text + "]'", d.line, d.col);
    const DependencySpec* spec = ctx_.registry->find(name.text);
    if (!spec)
      throw ParseError("unknown dependency '" + name.text + "'", name.line, name.col);
    if (spec->arity != static_cast<int>(args.size()))
      throw ParseError("atom '" + name.text + "' has arity " + std::to_string(spec->arity) +
                           ", got " + std::to_string(args.size()) + " arguments",
                       close.line, close.col);
    return f_atom(name.text, {std::move(args)});
  }

  std::vector<std::string> var_group() {
    std::vector<std::string> vs;
    while (lex_.peek().kind == Tok::Ident) {
      vs.push_back(variable_name());
      if (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        if (lex_.peek().kind != Tok::Ident) fail("expected a variable after ','");
        continue;
      }
      break;
    }
    return vs;
  }

  Lexer lex_;
  const ParseContext& ctx_;
  std::map<std::string, int> relations_;
};

}  // namespace

FormulaPtr parse_formula(const std::string& text, const ParseContext& ctx) {
  Parser p(text, ctx);
  return p.parse();
}

// ---------------------------------------------------------------------------
// U-sentences

FormulaPtr USentence::to_formula() const {
  std::vector<Term> yterms;
  for (const auto& y : univ_vars) yterms.push_back(Term::var(y));
  FormulaPtr guard = f_lit(Literal{false, false, rel, yterms});
  FormulaPtr block = f_or(guard, theta);
  for (auto it = univ_vars.rbegin(); it != univ_vars.rend(); ++it) block = f_forall(*it, block);
  std::vector<FormulaPtr> parts;
  for (const auto& l : eta) parts.push_back(f_lit(l));
  parts.push_back(block);
  FormulaPtr body = f_and_all(parts, block);
  for (auto it = exist_vars.rbegin(); it != exist_vars.rend(); ++it) body = f_exists(*it, body);
  return body;
}

std::set<std::string> USentence::constants() const {
  std::set<std::string> out = constants_of(theta);
  for (const auto& l : eta)
    for (const auto& t : l.args)
      if (!t.is_var()) out.insert(t.name);
  return out;
}

std::string USentence::print() const { return pretty_print(to_formula()); }

namespace {

void flatten_and(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  if (f->kind == Conn::And) {
    flatten_and(f->lhs, out);
    flatten_and(f->rhs, out);
  } else {
    out.push_back(f);
  }
}

void flatten_or(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  if (f->kind == Conn::Or) {
    flatten_or(f->lhs, out);
    flatten_or(f->rhs, out);
  } else {
    out.push_back(f);
  }
}

}  // namespace

USentence validate_u_sentence(const FormulaPtr& sentence, const std::string& rel, int rel_arity) {
  if (contains_atom(sentence) || contains_global_or(sentence))
    throw ShapeError("a U-sentence is a plain first order sentence");
  if (!sentence->fv.empty())
    throw ShapeError("not a sentence: free variables " + sentence->fv.front() + "...");

  USentence u;
  u.rel = rel;
  u.rel_arity = rel_arity;

  FormulaPtr cur = sentence;
  std::set<std::string> xset;
  while (cur->kind == Conn::Exists) {
    if (!xset.insert(cur->var).second)
      throw ShapeError("repeated existential variable '" + cur->var + "'");
    u.exist_vars.push_back(cur->var);
    cur = cur->body;
  }

  std::vector<FormulaPtr> conjuncts;
  flatten_and(cur, conjuncts);
  FormulaPtr block;
  for (const auto& c : conjuncts) {
    if (c->kind == Conn::Lit) {
      const Literal& l = c->lit;
      if (!l.is_equality && l.rel == rel && !l.positive)
        throw ShapeError("the relation symbol occurs negatively in the literal part");
      if (!l.is_equality && l.rel == rel && static_cast<int>(l.args.size()) != rel_arity)
        throw ShapeError("wrong arity for '" + rel + "'");
      if (!l.is_equality && l.rel != rel)
        throw ShapeError("foreign relation symbol '" + l.rel + "' in the literal part");
      for (const auto& t : l.args)
        if (t.is_var() && !xset.count(t.name))
          throw ShapeError("variable '" + t.name + "' in the literal part is not existentially bound");
      u.eta.push_back(l);
    } else if (c->kind == Conn::Forall) {
      if (block) throw ShapeError("more than one universal block");
      block = c;
    } else {
      throw ShapeError("the body must be a conjunction of literals and one universal block");
    }
  }
  if (!block) throw ShapeError("missing the universal block over '" + rel + "'");

  FormulaPtr inner = block;
  std::set<std::string> yset;
  while (inner->kind == Conn::Forall) {
    if (!yset.insert(inner->var).second)
      throw ShapeError("repeated universal variable '" + inner->var + "'");
    if (xset.count(inner->var))
      throw ShapeError("universal variable '" + inner->var + "' clashes with the existential block");
    u.univ_vars.push_back(inner->var);
    inner = inner->body;
  }
  if (static_cast<int>(u.univ_vars.size()) != rel_arity)
    throw ShapeError("the universal block must bind exactly " + std::to_string(rel_arity) +
                     " variables for '" + rel + "'");

  // Body shape: !R(y...) or theta, with the guard over exactly the
  // universal tuple in order.
  std::vector<FormulaPtr> disjuncts;
  flatten_or(inner, disjuncts);
  int guard_at = -1;
  for (std::size_t i = 0; i < disjuncts.size(); ++i) {
    const auto& d = disjuncts[i];
    if (d->kind != Conn::Lit || d->lit.is_equality || d->lit.rel != rel || d->lit.positive) continue;
    bool exact = d->lit.args.size() == u.univ_vars.size();
    for (std::size_t j = 0; exact && j < u.univ_vars.size(); ++j)
      exact = d->lit.args[j].is_var() && d->lit.args[j].name == u.univ_vars[j];
    if (exact) {
      guard_at = static_cast<int>(i);
      break;
    }
  }
  if (guard_at < 0)
    throw ShapeError("the universal block must have the shape !"+ rel + "(y...) or theta");
  std::vector<FormulaPtr> theta_parts;
  for (std::size_t i = 0; i < disjuncts.size(); ++i)
    if (static_cast<int>(i) != guard_at) theta_parts.push_back(disjuncts[i]);
  if (theta_parts.empty())
    throw ShapeError("empty matrix: the universal block needs a consequent");
  u.theta = f_or_all(theta_parts, nullptr);

  if (contains_relation(u.theta, rel))
    throw ShapeError("the relation symbol occurs in the matrix");
  for (const auto& v : free_variables(u.theta))
    if (!xset.count(v) && !yset.count(v))
      throw ShapeError("unbound variable '" + v + "' in the matrix");
  return u;
}

}  // namespace teamlab

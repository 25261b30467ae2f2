#include <doctest.h>

#include "support.hpp"
#include "teamlab/atoms.hpp"
#include "teamlab/syntax.hpp"

using namespace teamlab;
using namespace testsupport;

TEST_CASE("parsing the grammar productions") {
  ParseContext ctx;

  SUBCASE("dependency atom with group split") {
    auto f = parse_formula("dep(x ; y)", ctx);
    REQUIRE(f->kind == Conn::Atom);
    CHECK(f->atom == "dep");
    REQUIRE(f->groups.size() == 2);
    CHECK(f->groups[0] == std::vector<std::string>{"x"});
    CHECK(f->groups[1] == std::vector<std::string>{"y"});
  }

  SUBCASE("quantifier over a conjunction") {
    auto f = parse_formula("E x. (R(x) and ne(x))", ctx);
    REQUIRE(f->kind == Conn::Exists);
    CHECK(f->var == "x");
    REQUIRE(f->body->kind == Conn::And);
    CHECK(f->body->lhs->kind == Conn::Lit);
    CHECK(f->body->lhs->lit.rel == "R");
    CHECK(f->body->rhs->kind == Conn::Atom);
    CHECK(f->body->rhs->atom == "ne");
  }

  SUBCASE("negation only on literals") {
    CHECK_THROWS_AS(parse_formula("!(R(x) or R(y))", ctx), ParseError);
    CHECK_NOTHROW(parse_formula("!R(x) or !R(y)", ctx));
  }

  SUBCASE("tuple equality expands to a conjunction") {
    auto f = parse_formula("(x, y) = (u, v)", ctx);
    REQUIRE(f->kind == Conn::And);
    CHECK(f->lhs->lit.is_equality);
    CHECK(f->lhs->lit.args[0].name == "x");
    CHECK(f->rhs->lit.args[1].name == "v");
    auto g = parse_formula("(x, y) != (u, v)", ctx);
    REQUIRE(g->kind == Conn::Or);
    CHECK_FALSE(g->lhs->lit.positive);
  }

  SUBCASE("zero-arity atoms") {
    auto f = parse_formula("ne()", ctx);
    REQUIRE(f->kind == Conn::Atom);
    CHECK(f->groups[0].empty());
  }

  SUBCASE("quantifiers reach as far right as possible") {
    auto f = parse_formula("E x. R(x) and S(x)", ctx);
    REQUIRE(f->kind == Conn::Exists);
    CHECK(f->body->kind == Conn::And);
  }

  SUBCASE("gor binds loosest") {
    auto f = parse_formula("ne(x) gor ne(y) and ne()", ctx);
    REQUIRE(f->kind == Conn::GlobalOr);
    CHECK(f->rhs->kind == Conn::And);
  }

  SUBCASE("constants resolve through the context") {
    ParseContext cctx;
    cctx.constants = {"a"};
    auto f = parse_formula("x = a", cctx);
    CHECK(f->lit.args[0].is_var());
    CHECK_FALSE(f->lit.args[1].is_var());
  }

  SUBCASE("errors carry positions") {
    try {
      parse_formula("R(x) and\n  or", ctx);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
      CHECK(e.col >= 1);
    }
  }

  SUBCASE("reserved identifiers") {
    CHECK_THROWS_AS(parse_formula("_x = y", ctx), ParseError);
    ParseContext open = ctx;
    open.allow_reserved = true;
    CHECK_NOTHROW(parse_formula("_v0 = y", open));
    CHECK_THROWS_AS(parse_formula("E and. R(and)", ctx), ParseError);
  }

  SUBCASE("relation arity consistency inside a formula") {
    CHECK_THROWS_AS(parse_formula("R(x) and R(x, y)", ctx), ParseError);
  }

  SUBCASE("group shape validation") {
    CHECK_THROWS_AS(parse_formula("inc(x, y ; z)", ctx), ParseError);
    CHECK_THROWS_AS(parse_formula("dep(x)", ctx), ParseError);
    CHECK_THROWS_AS(parse_formula("ne(x ; y)", ctx), ParseError);
  }

  SUBCASE("user atoms need the registry") {
    CHECK_THROWS_AS(parse_formula("D[mine](x)", ctx), ParseError);
    Registry reg;
    ParseContext rctx;
    rctx.registry = &reg;
    reg.register_user("mine", 2, parse_formula("E x. R(x, x)", ctx));
    auto f = parse_formula("D[mine](x, y)", rctx);
    CHECK(f->atom == "mine");
    CHECK_THROWS_AS(parse_formula("D[mine](x)", rctx), ParseError);
    CHECK_THROWS_AS(parse_formula("D[other](x)", rctx), ParseError);
  }
}

TEST_CASE("free variables") {
  ParseContext ctx;
  CHECK(free_variables(parse_formula("dep(x ; y)", ctx)) == std::set<std::string>{"x", "y"});
  CHECK(free_variables(parse_formula("E x. R(x, y)", ctx)) == std::set<std::string>{"y"});
  CHECK(free_variables(parse_formula("E x. A y. R(x, y)", ctx)).empty());
}

TEST_CASE("print-parse round trip over random trees") {
  std::mt19937_64 rng(20231);
  GenOptions g;
  g.vars = {"x", "y", "z"};
  g.relations = {{"R", 1}, {"S", 2}};
  g.atoms = {"dep", "inc", "exc", "anon", "indep", "ne", "const", "all"};
  g.allow_gor = true;
  g.constants = {"a"};
  ParseContext ctx;
  ctx.constants = {"a"};
  for (int i = 0; i < 10000; ++i) {
    FormulaPtr f = random_formula(rng, g);
    std::string text = pretty_print(f);
    FormulaPtr back;
    REQUIRE_NOTHROW(back = parse_formula(text, ctx));
    if (!structurally_equal(f, back)) {
      CAPTURE(text);
      CAPTURE(pretty_print(back));
      FAIL("round trip changed the tree");
    }
  }
}

TEST_CASE("printing a parse is stable") {
  ParseContext ctx;
  std::string text = "E x. ((R(x) and ne(x)) or dep(x ; x))";
  auto f = parse_formula(text, ctx);
  auto printed = pretty_print(f);
  CHECK(pretty_print(parse_formula(printed, ctx)) == printed);
}

// An independent shape check for U-sentences, written iteratively and
// used to cross-validate the validator.
namespace {

bool independent_shape_check(const FormulaPtr& sentence, const std::string& rel, int arity) {
  if (!sentence->fv.empty()) return false;
  const Formula* cur = sentence.get();
  std::set<std::string> xs;
  while (cur->kind == Conn::Exists) {
    if (xs.count(cur->var)) return false;
    xs.insert(cur->var);
    cur = cur->body.get();
  }
  std::vector<const Formula*> stack{cur};
  std::vector<const Formula*> leaves;
  while (!stack.empty()) {
    const Formula* f = stack.back();
    stack.pop_back();
    if (f->kind == Conn::And) {
      stack.push_back(f->lhs.get());
      stack.push_back(f->rhs.get());
    } else {
      leaves.push_back(f);
    }
  }
  int blocks = 0;
  const Formula* block = nullptr;
  for (const Formula* f : leaves) {
    if (f->kind == Conn::Forall) {
      ++blocks;
      block = f;
    } else if (f->kind == Conn::Lit) {
      const Literal& l = f->lit;
      if (!l.is_equality) {
        if (l.rel != rel) return false;
        if (!l.positive) return false;
        if (static_cast<int>(l.args.size()) != arity) return false;
      }
      for (const auto& t : l.args)
        if (t.is_var() && !xs.count(t.name)) return false;
    } else {
      return false;
    }
  }
  if (blocks != 1) return false;
  std::vector<std::string> ys;
  const Formula* inner = block;
  while (inner->kind == Conn::Forall) {
    if (xs.count(inner->var)) return false;
    for (const auto& y : ys)
      if (y == inner->var) return false;
    ys.push_back(inner->var);
    inner = inner->body.get();
  }
  if (static_cast<int>(ys.size()) != arity) return false;
  std::vector<const Formula*> dstack{inner}, djs;
  while (!dstack.empty()) {
    const Formula* f = dstack.back();
    dstack.pop_back();
    if (f->kind == Conn::Or) {
      dstack.push_back(f->lhs.get());
      dstack.push_back(f->rhs.get());
    } else {
      djs.push_back(f);
    }
  }
  int guards = 0;
  for (const Formula* f : djs) {
    bool guard = f->kind == Conn::Lit && !f->lit.is_equality && f->lit.rel == rel &&
                 !f->lit.positive && static_cast<int>(f->lit.args.size()) == arity;
    if (guard)
      for (std::size_t i = 0; i < ys.size(); ++i)
        guard = guard && f->lit.args[i].is_var() && f->lit.args[i].name == ys[i];
    if (guard) {
      ++guards;
      continue;
    }
  }
  if (guards == 0) return false;
  if (static_cast<int>(djs.size()) - guards < 1) return false;
  // Matrix side: every non-guard disjunct must avoid rel and stray variables.
  int seen_guard = 0;
  for (const Formula* f : djs) {
    bool guard = f->kind == Conn::Lit && !f->lit.is_equality && f->lit.rel == rel &&
                 !f->lit.positive && static_cast<int>(f->lit.args.size()) == arity;
    if (guard) {
      bool exact = true;
      for (std::size_t i = 0; i < ys.size(); ++i)
        exact = exact && f->lit.args[i].is_var() && f->lit.args[i].name == ys[i];
      if (exact && seen_guard == 0) {
        ++seen_guard;
        continue;
      }
    }
    FormulaPtr keep(f, [](const Formula*) {});
    if (contains_relation(keep, rel)) return false;
    for (const auto& v : free_variables(keep))
      if (!xs.count(v) && std::find(ys.begin(), ys.end(), v) == ys.end()) return false;
  }
  return seen_guard == 1;
}

}  // namespace

TEST_CASE("U-sentence validation") {
  ParseContext ctx;

  SUBCASE("the singleton sentence decomposes") {
    auto f = parse_formula("E x. (R(x) and A y. (!R(y) or y = x))", ctx);
    USentence u = validate_u_sentence(f, "R", 1);
    CHECK(u.exist_vars == std::vector<std::string>{"x"});
    CHECK(u.univ_vars == std::vector<std::string>{"y"});
    REQUIRE(u.eta.size() == 1);
    CHECK(u.eta[0].rel == "R");
    CHECK(pretty_print(u.theta) == "y = x");
  }

  SUBCASE("negative occurrence in the literal part") {
    auto f = parse_formula("E x. (!R(x) and A y. (!R(y) or y = x))", ctx);
    CHECK_THROWS_AS(validate_u_sentence(f, "R", 1), ShapeError);
  }

  SUBCASE("the relation may not appear in the matrix") {
    auto f = parse_formula("E x. A y. (!R(y) or R(y))", ctx);
    CHECK_THROWS_AS(validate_u_sentence(f, "R", 1), ShapeError);
  }

  SUBCASE("missing universal block") {
    auto f = parse_formula("E x. R(x)", ctx);
    CHECK_THROWS_AS(validate_u_sentence(f, "R", 1), ShapeError);
  }

  SUBCASE("universal tuple must match the arity") {
    auto f = parse_formula("A y. (!R(y, y) or y = y)", ctx);
    CHECK_THROWS_AS(validate_u_sentence(f, "R", 2), ShapeError);
  }

  SUBCASE("round trip through to_formula") {
    auto f = parse_formula("E x. (x = x and A y. (!R(y) or y != y))", ctx);
    USentence u = validate_u_sentence(f, "R", 1);
    USentence v = validate_u_sentence(u.to_formula(), "R", 1);
    CHECK(u.exist_vars == v.exist_vars);
    CHECK(pretty_print(u.theta) == pretty_print(v.theta));
  }
}

TEST_CASE("validator agrees with an independent shape matcher") {
  ParseContext ctx;
  std::vector<std::pair<std::string, int>> corpus = {
      {"E x. (R(x) and A y. (!R(y) or y = x))", 1},
      {"E x. (!R(x) and A y. (!R(y) or y = x))", 1},
      {"E x. A y. (!R(y) or R(y))", 1},
      {"E x. (x = x and A y. (!R(y) or y != y))", 1},
      {"A y. (!R(y) or y = y)", 1},
      {"E x. (R(x) and R(x) and A y. (!R(y) or y = x))", 1},
      {"E x. E z. (R(x) and x != z and A y. (!R(y) or (y = x or y = z)))", 1},
      {"E x. (R(x) and A y. (!R(y) or E u. (u = x and u = y)))", 1},
      {"E x. (R(x) and A y. A w. (!R(y) or y = x))", 1},
      {"E x. (R(x) or A y. (!R(y) or y = x))", 1},
      {"A y1. A y2. (!R(y1, y2) or y1 = y2)", 2},
      {"A y1. A y2. (!R(y2, y1) or y1 = y2)", 2},
      {"E x. (ne(x) and A y. (!R(y) or y = x))", 1},
  };
  std::mt19937_64 rng(77);
  GenOptions g;
  g.vars = {"x", "y", "z"};
  g.relations = {{"R", 1}};
  g.max_depth = 3;
  for (int i = 0; i < 400; ++i) {
    FormulaPtr f = random_formula(rng, g);
    FormulaPtr closed = f;
    for (const auto& v : free_variables(f)) closed = f_exists(v, closed);
    corpus.push_back({pretty_print(closed), 1});
  }
  for (const auto& [text, arity] : corpus) {
    CAPTURE(text);
    FormulaPtr f = parse_formula(text, ctx);
    bool validator_ok = true;
    try {
      validate_u_sentence(f, "R", arity);
    } catch (const ShapeError&) {
      validator_ok = false;
    }
    CHECK(validator_ok == independent_shape_check(f, "R", arity));
  }
}

TEST_CASE("substitution") {
  ParseContext ctx;
  ctx.constants = {"a"};
  auto f = parse_formula("E y. (x = y and x = a)", ctx);
  auto g = substitute_var(f, "x", "y");
  // Capture-avoiding: the binder must be renamed away from y.
  CHECK(free_variables(g) == std::set<std::string>{"y"});
  CHECK(g->var != "y");
  auto h = substitute_const_by_var(f, "a", "w");
  CHECK(constants_of(h).empty());
  CHECK(free_variables(h) == std::set<std::string>{"x", "w"});
}

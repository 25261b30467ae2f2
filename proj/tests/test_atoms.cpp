#include <doctest.h>

#include "teamlab/atoms.hpp"
#include "teamlab/syntax.hpp"

using namespace teamlab;

namespace {

ClosureFlags row(Flag e, Flag d, Flag u, Flag up, Flag di) { return {e, d, u, up, di}; }

}  // namespace

TEST_CASE("stored metadata matches the reference grid") {
  Registry reg;
  const Flag Y = Flag::Yes, N = Flag::No;
  CHECK(reg.metadata("dep(1;1)") == row(Y, Y, N, N, Y));
  CHECK(reg.metadata("inc(1;1)") == row(Y, N, Y, N, Y));
  CHECK(reg.metadata("exc(1;1)") == row(Y, Y, N, N, Y));
  CHECK(reg.metadata("anon(1;1)") == row(Y, N, Y, N, Y));
  CHECK(reg.metadata("indep(1;1)") == row(Y, N, N, N, Y));
  CHECK(reg.metadata("ne(1)") == row(N, N, N, Y, Y));
  CHECK(reg.metadata("all(1)") == row(N, N, N, Y, N));
  CHECK(reg.metadata("const(1)") == row(Y, Y, N, N, Y));
  // Bare names resolve to the default arities.
  CHECK(reg.metadata("inc") == reg.metadata("inc(1;1)"));
  CHECK(reg.metadata("ne") == reg.metadata("ne(1)"));
}

TEST_CASE("registration") {
  Registry reg;
  ParseContext ctx;
  ctx.relations["R"] = 1;

  SUBCASE("user dependencies start unknown") {
    const auto& spec = reg.register_user("nonempty", 1, parse_formula("E x. R(x)", ctx));
    CHECK(spec.flags.empty_team == Flag::Unknown);
    CHECK(spec.flags.domain_independent == Flag::Unknown);
    CHECK(reg.find("nonempty") != nullptr);
  }
  SUBCASE("well-formed binary dependency") {
    ParseContext c2;
    c2.relations["R"] = 2;
    CHECK_NOTHROW(reg.register_user("sym", 2, parse_formula("A x. A y. (!R(x, y) or R(y, x))", c2)));
  }
  SUBCASE("built-in names are taken") {
    CHECK_THROWS_AS(reg.register_user("dep", 2, parse_formula("E x. R(x)", ctx)), RegistryError);
  }
  SUBCASE("duplicates rejected") {
    reg.register_user("mine", 1, parse_formula("E x. R(x)", ctx));
    CHECK_THROWS_AS(reg.register_user("mine", 1, parse_formula("E x. R(x)", ctx)), RegistryError);
  }
  SUBCASE("signature must be {R} with the declared arity") {
    CHECK_THROWS_AS(reg.register_user("bad1", 2, parse_formula("E x. R(x)", ctx)), RegistryError);
    CHECK_THROWS_AS(reg.register_user("bad2", 1, parse_formula("E x. S(x)", ctx)), RegistryError);
    CHECK_THROWS_AS(reg.register_user("bad3", 1, parse_formula("R(x)", ctx)), RegistryError);
    ParseContext cc;
    cc.constants = {"a"};
    cc.relations["R"] = 1;
    CHECK_THROWS_AS(reg.register_user("bad4", 1, parse_formula("R(a)", cc)), RegistryError);
    CHECK_THROWS_AS(reg.register_user("bad5", 1, parse_formula("E x. ne(x)", ctx)), RegistryError);
  }
}

TEST_CASE("descriptor and group resolution") {
  Registry reg;
  CHECK(reg.resolve_descriptor("dep(2;1)").arity == 3);
  CHECK(reg.resolve_descriptor("dep(2;1)").split == 2);
  CHECK(reg.resolve_descriptor("ne(0)").arity == 0);
  CHECK(reg.resolve("dep", {2, 1}).name == "dep(2;1)");
  CHECK(reg.resolve("ne", {0}).name == "ne(0)");
  CHECK_THROWS_AS(reg.resolve("inc", {1, 2}), ArityError);
  CHECK_THROWS_AS(reg.resolve("dep", {1}), ArityError);
  CHECK_THROWS_AS(reg.resolve_descriptor("nosuch"), RegistryError);
  CHECK_THROWS_AS(reg.resolve_descriptor("dep(x;y)"), RegistryError);
}

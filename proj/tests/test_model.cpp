#include <doctest.h>

#include "support.hpp"
#include "teamlab/model.hpp"

using namespace teamlab;
using namespace testsupport;

namespace {

Team team2(std::vector<std::vector<Element>> rows) {
  return Team::of({"x", "y"}, std::move(rows));
}

}  // namespace

TEST_CASE("team projection") {
  Team X = team2({{0, 1}, {1, 1}});
  Relation rx = team_projection(X, {"x"});
  CHECK(rx.tuples == std::vector<std::vector<Element>>{{0}, {1}});
  Relation ry = team_projection(X, {"y"});
  CHECK(ry.tuples == std::vector<std::vector<Element>>{{1}});
  Team empty = Team::empty_team({"x", "y"});
  CHECK(team_projection(empty, {"x", "y"}).empty());
  // Repeated variables are allowed.
  Relation rxx = team_projection(X, {"x", "x"});
  CHECK(rxx.tuples == std::vector<std::vector<Element>>{{0, 0}, {1, 1}});
  CHECK_THROWS_AS(team_projection(X, {"z"}), DomainError);
}

TEST_CASE("universal extension") {
  Structure M;
  M.n = 2;
  SUBCASE("from the singleton empty assignment") {
    Team e = Team::singleton_empty();
    Team out = extend_universal(e, "v", M);
    CHECK(out.vars == std::vector<std::string>{"v"});
    CHECK(out.rows == std::vector<std::vector<Element>>{{0}, {1}});
  }
  SUBCASE("the empty team stays empty") {
    Team out = extend_universal(Team::empty_team({"x"}), "v", M);
    CHECK(out.empty());
  }
  SUBCASE("overwriting an existing binding") {
    Team t = Team::of({"v"}, {{0}});
    Team out = extend_universal(t, "v", M);
    CHECK(out.rows == std::vector<std::vector<Element>>{{0}, {1}});
  }
}

TEST_CASE("choice extension") {
  Structure M;
  M.n = 2;
  Team e = Team::singleton_empty();
  SUBCASE("singleton choice") {
    std::map<Assignment, std::vector<Element>> H{{Assignment{}, {1}}};
    Team out = extend_choice(e, "v", H);
    CHECK(out.rows == std::vector<std::vector<Element>>{{1}});
  }
  SUBCASE("set-valued choice") {
    std::map<Assignment, std::vector<Element>> H{{Assignment{}, {0, 1}}};
    Team out = extend_choice(e, "v", H);
    CHECK(out.rows == std::vector<std::vector<Element>>{{0}, {1}});
  }
  SUBCASE("trivial choice on the empty team") {
    Team out = extend_choice(Team::empty_team({}), "v", {});
    CHECK(out.empty());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(extend_choice(e, "v", {}), DomainError);
    std::map<Assignment, std::vector<Element>> H{{Assignment{}, {}}};
    CHECK_THROWS_AS(extend_choice(e, "v", H), DomainError);
  }
}

TEST_CASE("field of a relation") {
  Relation r;
  r.arity = 2;
  r.tuples = {{0, 1}, {1, 2}};
  CHECK(fld(r) == std::set<Element>{0, 1, 2});
  CHECK(fld(Relation{2, {}}) == std::set<Element>{});
  CHECK(fld(Relation{2, {{2, 2}}}) == std::set<Element>{2});
}

TEST_CASE("enumerators") {
  SUBCASE("relation counts") {
    auto count = [](int n, int k) {
      RelationEnumerator e(n, k);
      Relation r;
      std::set<std::vector<std::vector<Element>>> seen;
      std::uint64_t c = 0;
      while (e.next(r)) {
        ++c;
        seen.insert(r.tuples);
      }
      CHECK(seen.size() == c);  // each emitted exactly once
      return c;
    };
    CHECK(count(2, 1) == 4);
    CHECK(count(2, 2) == 16);
    CHECK(count(3, 2) == 512);
  }
  SUBCASE("team counts") {
    TeamEnumerator e(2, {"x", "y"});
    Team t;
    std::uint64_t c = 0;
    while (e.next(t)) ++c;
    CHECK(c == 16);
  }
  SUBCASE("resource guard") {
    CHECK_THROWS_AS(RelationEnumerator(3, 3), ResourceError);
    CHECK_NOTHROW(RelationEnumerator(3, 3, 27));
  }
  SUBCASE("deterministic ascending mask order") {
    RelationEnumerator e(2, 1);
    Relation r;
    e.next(r);
    CHECK(r.tuples.empty());
    e.next(r);
    CHECK(r.tuples == std::vector<std::vector<Element>>{{0}});
  }
}

TEST_CASE("model properties") {
  std::mt19937_64 rng(5150);
  for (int round = 0; round < 300; ++round) {
    int n = 1 + static_cast<int>(rng() % 3);
    Structure M;
    M.n = n;
    Team X = random_team(rng, n, {"x", "y"});

    // Universal extension projects back onto the whole domain.
    if (!X.empty()) {
      Relation proj = team_projection(extend_universal(X, "v", M), {"v"});
      CHECK(proj.tuples.size() == static_cast<std::size_t>(n));
    }

    // Singleton choices preserve the team size for a fresh variable;
    // full choices coincide with the universal extension.
    std::map<Assignment, std::vector<Element>> singles, full;
    for (const auto& a : X.assignments()) {
      singles[a] = {static_cast<Element>(rng() % n)};
      std::vector<Element> all;
      for (Element m = 0; m < n; ++m) all.push_back(m);
      full[a] = all;
    }
    CHECK(extend_choice(X, "v", singles).size() == X.size());
    CHECK(extend_choice(X, "v", full) == extend_universal(X, "v", M));

    // fld stays inside the domain and is empty exactly on the empty relation.
    Relation r = team_projection(X, {"x", "y"});
    auto field = fld(r);
    for (Element e : field) {
      CHECK(e >= 0);
      CHECK(e < n);
    }
    CHECK(field.empty() == r.empty());
  }
}

TEST_CASE("mask round trips") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 200; ++round) {
    int n = 1 + static_cast<int>(rng() % 3);
    int k = 1 + static_cast<int>(rng() % 2);
    std::uint64_t p = positions(n, k);
    std::uint64_t mask = rng() & ((std::uint64_t(1) << p) - 1);
    CHECK(Relation::from_mask(n, k, mask).to_mask(n) == mask);
  }
}

TEST_CASE("structure validation") {
  Structure M;
  M.n = 0;
  CHECK_THROWS_AS(M.validate(), DomainError);
  M.n = 2;
  M.relations["R"] = Relation{1, {{5}}};
  CHECK_THROWS_AS(M.validate(), DomainError);
  M.relations["R"] = Relation{1, {{1}}};
  M.constants["a"] = 1;
  CHECK_NOTHROW(M.validate());
  M.pred = "Q";
  CHECK_THROWS_AS(M.validate(), DomainError);
}

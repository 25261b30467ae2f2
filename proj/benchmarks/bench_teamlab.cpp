#include <benchmark/benchmark.h>

#include <random>

#include "teamlab/lab.hpp"
#include "teamlab/teamsem.hpp"
#include "teamlab/ucalc.hpp"

using namespace teamlab;

namespace {

Registry& registry() {
  static Registry reg;
  return reg;
}

Structure chain_structure(int n) {
  Structure M;
  M.n = n;
  Relation S;
  S.arity = 2;
  for (Element e = 0; e + 1 < n; ++e) S.tuples.push_back({e, e + 1});
  S.normalize();
  M.relations["S"] = S;
  return M;
}

Team full_team(int n) {
  std::vector<std::vector<Element>> rows;
  for (Element a = 0; a < n; ++a)
    for (Element b = 0; b < n; ++b) rows.push_back({a, b});
  return Team::of({"x", "y"}, std::move(rows));
}

}  // namespace

static void BM_CoverSearch(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  Structure M = chain_structure(n);
  ParseContext ctx;
  auto f = parse_formula("(S(x, y) or S(y, x)) or x = y", ctx);
  Team X = full_team(n);
  for (auto _ : state) benchmark::DoNotOptimize(eval_team(M, X, f, registry()));
}
BENCHMARK(BM_CoverSearch)->Arg(2)->Arg(3);

static void BM_ExistsSearch(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  Structure M = chain_structure(n);
  ParseContext ctx;
  auto f = parse_formula("E u. (inc(u ; x) and S(u, y))", ctx);
  // A mid-size team: the search is exponential in the members the body
  // can distinguish, so the full team is not a realistic workload.
  Team X = Team::of({"x", "y"}, {{0, 0}, {0, n - 1}, {n - 1, 0}, {n - 1, n - 1}});
  for (auto _ : state) benchmark::DoNotOptimize(eval_team(M, X, f, registry()));
}
BENCHMARK(BM_ExistsSearch)->Arg(2)->Arg(3);

static void BM_TeamSweep(benchmark::State& state) {
  // All 512 teams of the full binary structure at n = 3 through one session.
  Structure M = chain_structure(3);
  ParseContext ctx;
  auto f = parse_formula("dep(x ; y) or (ne(x) and inc(x ; y))", ctx);
  for (auto _ : state) {
    TeamEvalSession session(M, registry());
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < 512; ++mask)
      hits += session.eval(team_from_mask(3, {"x", "y"}, mask), f);
    benchmark::DoNotOptimize(hits);
  }
}
BENCHMARK(BM_TeamSweep);

static void BM_ClosureGrid(benchmark::State& state) {
  int nmax = static_cast<int>(state.range(0));
  for (auto _ : state) {
    GridReport report = check_builtin_grid(registry(), nmax);
    benchmark::DoNotOptimize(report.all_match);
  }
}
BENCHMARK(BM_ClosureGrid)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_RelationEnumeration(benchmark::State& state) {
  for (auto _ : state) {
    RelationEnumerator e(3, 2);
    Relation r;
    std::size_t total = 0;
    while (e.next(r)) total += fld(r).size();
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_RelationEnumeration);

static void BM_EfEquiv(benchmark::State& state) {
  Structure A = chain_structure(3);
  Structure B = chain_structure(4);
  for (auto _ : state) benchmark::DoNotOptimize(ef_equiv(A, B, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_EfEquiv)->Arg(2)->Arg(3);

static void BM_TranslateCertify(benchmark::State& state) {
  ParseContext ctx;
  auto f = parse_formula("E x. (R(x) and A y. (!R(y) or y = x))", ctx);
  USentence chi = validate_u_sentence(f, "R", 1);
  FormulaPtr t = translate_u(chi, {"w"});
  for (auto _ : state) {
    EquivReport r = certify_translation(chi, t, {"w"}, registry());
    benchmark::DoNotOptimize(r.equivalent);
  }
}
BENCHMARK(BM_TranslateCertify)->Unit(benchmark::kMillisecond);

static void BM_NonJumping(benchmark::State& state) {
  ProbeOptions opts;
  opts.nmax = static_cast<int>(state.range(0));
  const DependencySpec& D = registry().resolve_descriptor("dep(1;1)");
  for (auto _ : state) benchmark::DoNotOptimize(nonjumping_probe(D, opts).holds);
}
BENCHMARK(BM_NonJumping)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

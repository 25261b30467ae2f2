#include "teamlab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <random>
#include <thread>

namespace teamlab {

namespace {

Structure plain_domain(int n) {
  Structure M;
  M.n = n;
  return M;
}

bool exhaustive_scale(const DependencySpec& D, const ProbeOptions& opts) {
  return opts.nmax <= 4 && D.arity <= 2;
}

std::uint64_t npos(int n, int k) { return positions(n, k); }

}  // namespace

std::uint64_t MembershipTable::count() const {
  std::uint64_t c = 0;
  for (auto b : member) c += b;
  return c;
}

MembershipTable membership_table(const DependencySpec& D, int n, int max_positions) {
  std::uint64_t p = npos(n, D.arity);
  if (p > static_cast<std::uint64_t>(max_positions))
    throw ResourceError("membership table over " + std::to_string(p) + " positions exceeds the cap");
  MembershipTable t;
  t.n = n;
  t.k = D.arity;
  t.member.resize(std::size_t(1) << p);
  Structure M = plain_domain(n);
  for (std::uint64_t mask = 0; mask < t.member.size(); ++mask)
    t.member[mask] = dep_membership(D, M, Relation::from_mask(n, D.arity, mask)) ? 1 : 0;
  return t;
}

// ---------------------------------------------------------------------------
// Counterexample re-verification: recompute all memberships through the
// defining-sentence route (bottom-up evaluator) and re-check the
// structural side conditions.

bool reverify_counterexample(const DependencySpec& D, const std::string& property,
                             const Counterexample& cex) {
  Structure M = plain_domain(cex.n);
  auto member = [&](const Relation& R) { return dep_membership_by_sentence(D, M, R); };
  if (property == "empty") {
    Relation empty;
    empty.arity = D.arity;
    return !member(empty);
  }
  if (property == "down") {
    if (cex.relations.size() != 2) return false;
    const Relation& R = cex.relations[0];
    const Relation& S = cex.relations[1];
    return S.subset_of(R) && member(R) && !member(S);
  }
  if (property == "union") {
    if (cex.relations.empty()) {
      Relation empty;
      empty.arity = D.arity;
      return !member(empty);  // the empty family
    }
    if (cex.relations.size() != 3) return false;
    const Relation& R1 = cex.relations[0];
    const Relation& R2 = cex.relations[1];
    const Relation& U = cex.relations[2];
    Relation u = R1;
    u.tuples.insert(u.tuples.end(), R2.tuples.begin(), R2.tuples.end());
    u.normalize();
    return u == U && member(R1) && member(R2) && !member(U);
  }
  if (property == "up") {
    if (cex.relations.size() != 2) return false;
    const Relation& R = cex.relations[0];
    const Relation& S = cex.relations[1];
    return R.subset_of(S) && member(R) && !member(S);
  }
  if (property == "domind") {
    if (cex.relations.size() != 1) return false;
    const Relation& R = cex.relations[0];
    if (R.empty()) return false;
    auto field = fld(R);
    std::vector<Element> sorted(field.begin(), field.end());
    std::map<Element, Element> relabel;
    for (std::size_t i = 0; i < sorted.size(); ++i) relabel[sorted[i]] = static_cast<Element>(i);
    Relation small;
    small.arity = R.arity;
    for (const auto& t : R.tuples) {
      std::vector<Element> s;
      for (Element e : t) s.push_back(relabel[e]);
      small.tuples.push_back(std::move(s));
    }
    small.normalize();
    Structure Mf = plain_domain(static_cast<int>(sorted.size()));
    return member(R) != dep_membership_by_sentence(D, Mf, small);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Probes. All loops run in ascending (n, mask, sub-mask) order so the
// first counterexample is deterministic; parallel runs merge to the
// enumeration-least one.

namespace {

struct ProbeContext {
  const DependencySpec& D;
  const ProbeOptions& opts;
  std::vector<MembershipTable> tables;  // index n-1, when exhaustive

  explicit ProbeContext(const DependencySpec& d, const ProbeOptions& o) : D(d), opts(o) {
    if (exhaustive_scale(d, o))
      for (int n = 1; n <= o.nmax; ++n) tables.push_back(membership_table(d, n, o.max_positions));
  }
};

// Accumulates counterexamples; full() says when scanning can stop.
struct Collector {
  const ProbeOptions& opts;
  std::vector<Counterexample> found;
  bool add(Counterexample c) {
    found.push_back(std::move(c));
    return full();
  }
  bool full() const {
    if (found.empty()) return false;
    return !opts.collect_all || static_cast<int>(found.size()) >= opts.max_counterexamples;
  }
};

Verdict make_verdict(const ProbeContext& ctx, const std::string& property, Collector&& collected) {
  Verdict v;
  v.property = property;
  v.bound = ctx.opts.nmax;
  v.exhaustive = !ctx.tables.empty();
  if (!v.exhaustive) v.seed = ctx.opts.seed;
  if (!collected.found.empty()) {
    v.holds = false;
    v.reverified = true;
    for (const auto& c : collected.found)
      v.reverified = v.reverified && reverify_counterexample(ctx.D, property, c);
    v.cex = collected.found.front();
    v.counterexamples = std::move(collected.found);
  }
  return v;
}

Counterexample cex_of(int n, std::vector<Relation> rels, std::string note) {
  return Counterexample{n, std::move(rels), std::move(note)};
}

// Sampled fallback for scales beyond the exhaustive caps.
std::vector<std::uint64_t> sample_masks(int n, int k, const ProbeOptions& opts) {
  std::uint64_t p = npos(n, k);
  std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(n));
  std::vector<std::uint64_t> out;
  if (p >= 64) {
    // Draw tuple sets directly.
    for (int i = 0; i < opts.sample_count; ++i) out.push_back(rng());
    return out;
  }
  std::uniform_int_distribution<std::uint64_t> dist(0, (std::uint64_t(1) << p) - 1);
  for (int i = 0; i < opts.sample_count; ++i) out.push_back(dist(rng));
  return out;
}

bool member_slow(const DependencySpec& D, int n, std::uint64_t mask) {
  Structure M = plain_domain(n);
  return dep_membership(D, M, Relation::from_mask(n, D.arity, mask));
}

}  // namespace

Verdict probe_empty_team(const DependencySpec& D, const ProbeOptions& opts) {
  ProbeContext ctx(D, opts);
  Collector col{opts, {}};
  for (int n = 1; n <= opts.nmax && !col.full(); ++n) {
    bool in = ctx.tables.empty() ? member_slow(D, n, 0) : ctx.tables[n - 1].contains(0);
    if (!in) {
      Relation empty;
      empty.arity = D.arity;
      col.add(cex_of(n, {empty}, "the empty relation is not a member"));
    }
  }
  return make_verdict(ctx, "empty", std::move(col));
}

Verdict probe_downwards(const DependencySpec& D, const ProbeOptions& opts) {
  ProbeContext ctx(D, opts);
  Collector col{opts, {}};
  for (int n = 1; n <= opts.nmax && !col.full(); ++n) {
    int k = D.arity;
    auto check = [&](std::uint64_t r) {
      bool rin = ctx.tables.empty() ? member_slow(D, n, r) : ctx.tables[n - 1].contains(r);
      if (!rin) return false;
      for (std::uint64_t s = 0;; s = (s - r) & r) {
        bool sin = ctx.tables.empty() ? member_slow(D, n, s) : ctx.tables[n - 1].contains(s);
        if (!sin &&
            col.add(cex_of(n, {Relation::from_mask(n, k, r), Relation::from_mask(n, k, s)},
                           "member with a non-member subset")))
          return true;
        if (s == r) break;
      }
      return col.full();
    };
    if (!ctx.tables.empty()) {
      std::uint64_t total = std::uint64_t(1) << npos(n, k);
      for (std::uint64_t r = 0; r < total; ++r)
        if (check(r)) break;
    } else {
      for (std::uint64_t r : sample_masks(n, k, opts))
        if (check(r)) break;
    }
  }
  return make_verdict(ctx, "down", std::move(col));
}

Verdict probe_union(const DependencySpec& D, const ProbeOptions& opts) {
  ProbeContext ctx(D, opts);
  int k = D.arity;
  Collector col{opts, {}};
  // The empty family first: its union is the empty relation.
  for (int n = 1; n <= opts.nmax && !col.full(); ++n) {
    bool in = ctx.tables.empty() ? member_slow(D, n, 0) : ctx.tables[n - 1].contains(0);
    if (!in &&
        col.add(cex_of(n, {}, "the union of the empty family (the empty relation) is not a member")))
      break;
  }
  // Binary unions; finite families follow by induction.
  for (int n = 1; n <= opts.nmax && !col.full(); ++n) {
    auto members_of = [&](std::vector<std::uint64_t>& out) {
      if (!ctx.tables.empty()) {
        std::uint64_t total = std::uint64_t(1) << npos(n, k);
        for (std::uint64_t r = 0; r < total; ++r)
          if (ctx.tables[n - 1].contains(r)) out.push_back(r);
      } else {
        for (std::uint64_t r : sample_masks(n, k, opts))
          if (member_slow(D, n, r)) out.push_back(r);
      }
    };
    std::vector<std::uint64_t> members;
    members_of(members);
    for (std::uint64_t r1 : members) {
      for (std::uint64_t r2 : members) {
        std::uint64_t u = r1 | r2;
        bool in = ctx.tables.empty() ? member_slow(D, n, u) : ctx.tables[n - 1].contains(u);
        if (!in &&
            col.add(cex_of(n,
                           {Relation::from_mask(n, k, r1), Relation::from_mask(n, k, r2),
                            Relation::from_mask(n, k, u)},
                           "two members with a non-member union")))
          break;
      }
      if (col.full()) break;
    }
  }
  return make_verdict(ctx, "union", std::move(col));
}

Verdict probe_upwards(const DependencySpec& D, const ProbeOptions& opts) {
  ProbeContext ctx(D, opts);
  int k = D.arity;
  Collector col{opts, {}};
  for (int n = 1; n <= opts.nmax && !col.full(); ++n) {
    std::uint64_t full = (npos(n, k) >= 64) ? ~std::uint64_t(0)
                                            : (std::uint64_t(1) << npos(n, k)) - 1;
    auto check = [&](std::uint64_t r) {
      bool rin = ctx.tables.empty() ? member_slow(D, n, r) : ctx.tables[n - 1].contains(r);
      if (!rin) return false;
      std::uint64_t comp = full & ~r;
      for (std::uint64_t w = 0;; w = (w - comp) & comp) {
        std::uint64_t s = r | w;
        bool sin = ctx.tables.empty() ? member_slow(D, n, s) : ctx.tables[n - 1].contains(s);
        if (!sin &&
            col.add(cex_of(n, {Relation::from_mask(n, k, r), Relation::from_mask(n, k, s)},
                           "member with a non-member superset")))
          return true;
        if (w == comp) break;
      }
      return col.full();
    };
    if (!ctx.tables.empty()) {
      std::uint64_t total = std::uint64_t(1) << npos(n, k);
      for (std::uint64_t r = 0; r < total; ++r)
        if (check(r)) break;
    } else {
      for (std::uint64_t r : sample_masks(n, k, opts))
        if (check(r)) break;
    }
  }
  return make_verdict(ctx, "up", std::move(col));
}

Verdict probe_domain_independence(const DependencySpec& D, const ProbeOptions& opts) {
  ProbeContext ctx(D, opts);
  int k = D.arity;
  Collector col{opts, {}};
  // The R = ∅ case is skipped: the model convention for an empty field
  // is unstated, so the probe does not guess.
  for (int n = 1; n <= opts.nmax && !col.full(); ++n) {
    auto check = [&](std::uint64_t r) {
      if (r == 0) return false;
      Relation R = Relation::from_mask(n, k, r);
      auto field = fld(R);
      bool over_n = ctx.tables.empty() ? member_slow(D, n, r) : ctx.tables[n - 1].contains(r);
      std::vector<Element> sorted(field.begin(), field.end());
      std::map<Element, Element> relabel;
      for (std::size_t i = 0; i < sorted.size(); ++i) relabel[sorted[i]] = static_cast<Element>(i);
      Relation small;
      small.arity = k;
      for (const auto& t : R.tuples) {
        std::vector<Element> s;
        for (Element e : t) s.push_back(relabel[e]);
        small.tuples.push_back(std::move(s));
      }
      small.normalize();
      int m = static_cast<int>(sorted.size());
      bool over_fld = !ctx.tables.empty() && m <= opts.nmax
                          ? ctx.tables[m - 1].contains(small.to_mask(m))
                          : dep_membership(D, plain_domain(m), small);
      if (over_n != over_fld)
        return col.add(cex_of(n, {R},
                              over_n ? "member over the full domain, non-member over its field"
                                     : "non-member over the full domain, member over its field"));
      return false;
    };
    if (!ctx.tables.empty()) {
      std::uint64_t total = std::uint64_t(1) << npos(n, k);
      for (std::uint64_t r = 1; r < total; ++r)
        if (check(r)) break;
    } else {
      for (std::uint64_t r : sample_masks(n, k, opts))
        if (check(r)) break;
    }
  }
  return make_verdict(ctx, "domind", std::move(col));
}

std::vector<std::string> probe_property_names() {
  return {"empty", "down", "union", "up", "domind"};
}

Verdict run_probe(const DependencySpec& D, const std::string& property, const ProbeOptions& opts) {
  if (property == "empty") return probe_empty_team(D, opts);
  if (property == "down") return probe_downwards(D, opts);
  if (property == "union") return probe_union(D, opts);
  if (property == "up") return probe_upwards(D, opts);
  if (property == "domind") return probe_domain_independence(D, opts);
  throw DomainError("unknown probe property '" + property + "'");
}

GridReport check_builtin_grid(const Registry& reg, int nmax, int jobs) {
  GridReport report;
  report.nmax = nmax;
  auto names = reg.default_builtin_names();
  auto props = probe_property_names();

  struct Task {
    std::size_t row;
    std::size_t prop;
  };
  std::vector<Task> tasks;
  std::vector<GridRow> rows(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows[i].dependency = names[i];
    rows[i].expected = reg.metadata(names[i]);
    rows[i].verdicts.resize(props.size());
    for (std::size_t j = 0; j < props.size(); ++j) tasks.push_back({i, j});
  }

  ProbeOptions opts;
  opts.nmax = nmax;
  auto run_task = [&](const Task& t) {
    const DependencySpec& D = reg.resolve_descriptor(names[t.row]);
    rows[t.row].verdicts[t.prop] = run_probe(D, props[t.prop], opts);
  };

  if (jobs <= 1) {
    for (const auto& t : tasks) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_task(tasks[i]);
        }
      });
    for (auto& t : pool) t.join();
  }

  report.all_match = true;
  for (auto& row : rows) {
    auto flag_of = [](const Verdict& v) { return v.holds ? Flag::Yes : Flag::No; };
    row.probed.empty_team = flag_of(row.verdicts[0]);
    row.probed.downwards = flag_of(row.verdicts[1]);
    row.probed.union_closed = flag_of(row.verdicts[2]);
    row.probed.upwards = flag_of(row.verdicts[3]);
    row.probed.domain_independent = flag_of(row.verdicts[4]);
    row.matches = row.probed == row.expected;
    // A negative verdict must carry a re-verified counterexample.
    for (const auto& v : row.verdicts)
      if (!v.holds && (!v.cex || !v.reverified)) row.matches = false;
    report.all_match = report.all_match && row.matches;
  }
  report.rows = std::move(rows);
  return report;
}

// ---------------------------------------------------------------------------
// Maximal members and the non-jumping probe.

bool dmax_membership(const DependencySpec& D, const Structure& M, const Relation& R) {
  if (!dep_membership(D, M, R)) return false;
  std::uint64_t p = npos(M.n, D.arity);
  if (p > 63) throw ResourceError("superset search beyond 63 tuple positions");
  std::uint64_t full = (std::uint64_t(1) << p) - 1;
  std::uint64_t r = R.to_mask(M.n);
  std::uint64_t comp = full & ~r;
  for (std::uint64_t w = comp; w != 0; w = (w - 1) & comp) {
    if (dep_membership(D, M, Relation::from_mask(M.n, D.arity, r | w))) return false;
    if (w == 0) break;
  }
  return true;
}

Verdict nonjumping_probe(const DependencySpec& D, const ProbeOptions& opts) {
  ProbeContext ctx(D, opts);
  Verdict v;
  v.property = "nonjumping";
  v.bound = opts.nmax;
  v.exhaustive = !ctx.tables.empty();
  if (!v.exhaustive)
    throw ResourceError("the non-jumping probe needs the exhaustive scale (nmax <= 4, arity <= 2)");
  int k = D.arity;
  for (int n = 1; n <= opts.nmax; ++n) {
    const MembershipTable& table = ctx.tables[n - 1];
    std::uint64_t p = npos(n, k);
    std::uint64_t full = (std::uint64_t(1) << p) - 1;
    auto is_max = [&](std::uint64_t r) {
      if (!table.contains(r)) return false;
      std::uint64_t comp = full & ~r;
      for (std::uint64_t w = comp; w != 0; w = (w - 1) & comp)
        if (table.contains(r | w)) return false;
      return true;
    };
    for (std::uint64_t r = 0; r <= full; ++r) {
      if (!table.contains(r)) continue;
      // Search for a maximal member above r reachable through members.
      bool reached = false;
      std::uint64_t comp = full & ~r;
      // Supersets in ascending order of added tuples.
      std::vector<std::uint64_t> adds;
      for (std::uint64_t w = 0;; w = (w - comp) & comp) {
        adds.push_back(w);
        if (w == comp) break;
      }
      std::sort(adds.begin(), adds.end(), [](std::uint64_t a, std::uint64_t b) {
        int pa = std::popcount(a), pb = std::popcount(b);
        return pa != pb ? pa < pb : a < b;
      });
      for (std::uint64_t w : adds) {
        std::uint64_t rp = r | w;
        if (!is_max(rp)) continue;
        bool chain = true;
        std::uint64_t gap = rp & ~r;
        for (std::uint64_t s = 0;; s = (s - gap) & gap) {
          if (!table.contains(r | s)) {
            chain = false;
            break;
          }
          if (s == gap) break;
        }
        if (chain) {
          reached = true;
          break;
        }
      }
      if (!reached) {
        v.holds = false;
        v.cex = cex_of(n, {Relation::from_mask(n, k, r)},
                       "member with no maximal member reachable through members");
        // Re-verify: membership via the sentence route plus re-running
        // the reachability search on the sentence-route table.
        MembershipTable alt;
        alt.n = n;
        alt.k = k;
        alt.member.resize(std::size_t(1) << p);
        Structure M = plain_domain(n);
        for (std::uint64_t m2 = 0; m2 <= full; ++m2)
          alt.member[m2] =
              dep_membership_by_sentence(D, M, Relation::from_mask(n, k, m2)) ? 1 : 0;
        v.reverified = alt.member == table.member && alt.contains(r);
        return v;
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Ehrenfeucht–Fraïssé equivalence.

namespace {

bool partial_isomorphism(const Structure& M1, const Structure& M2,
                         const std::vector<Element>& a, const std::vector<Element>& b) {
  // Pebbles plus constants must have the same atomic type.
  std::vector<Element> ea = a, eb = b;
  for (const auto& [name, v] : M1.constants) {
    auto it = M2.constants.find(name);
    if (it == M2.constants.end()) return false;
    ea.push_back(v);
    eb.push_back(it->second);
  }
  for (std::size_t i = 0; i < ea.size(); ++i)
    for (std::size_t j = 0; j < ea.size(); ++j)
      if ((ea[i] == ea[j]) != (eb[i] == eb[j])) return false;
  for (const auto& [name, r1] : M1.relations) {
    auto it = M2.relations.find(name);
    if (it == M2.relations.end() || it->second.arity != r1.arity) return false;
    const Relation& r2 = it->second;
    int k = r1.arity;
    std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
    if (ea.empty() && k > 0) continue;
    for (;;) {
      std::vector<Element> t1, t2;
      for (std::size_t i = 0; i < pick.size(); ++i) {
        t1.push_back(ea[pick[i]]);
        t2.push_back(eb[pick[i]]);
      }
      if (r1.contains(t1) != r2.contains(t2)) return false;
      std::size_t i = 0;
      for (; i < pick.size(); ++i) {
        if (++pick[i] < ea.size()) break;
        pick[i] = 0;
      }
      if (i == pick.size()) break;
      if (k == 0) break;
    }
    if (k == 0) {
      std::vector<Element> e;
      if (r1.contains(e) != r2.contains(e)) return false;
    }
  }
  return true;
}

bool ef_game(const Structure& M1, const Structure& M2, std::vector<Element>& a,
             std::vector<Element>& b, int rounds) {
  if (!partial_isomorphism(M1, M2, a, b)) return false;
  if (rounds == 0) return true;
  // Spoiler plays in M1.
  for (Element x = 0; x < M1.n; ++x) {
    bool answered = false;
    for (Element y = 0; y < M2.n && !answered; ++y) {
      a.push_back(x);
      b.push_back(y);
      answered = ef_game(M1, M2, a, b, rounds - 1);
      a.pop_back();
      b.pop_back();
    }
    if (!answered) return false;
  }
  // Spoiler plays in M2.
  for (Element y = 0; y < M2.n; ++y) {
    bool answered = false;
    for (Element x = 0; x < M1.n && !answered; ++x) {
      a.push_back(x);
      b.push_back(y);
      answered = ef_game(M1, M2, a, b, rounds - 1);
      a.pop_back();
      b.pop_back();
    }
    if (!answered) return false;
  }
  return true;
}

}  // namespace

bool ef_equiv(const Structure& M1, const Structure& M2, int rank) {
  if (rank < 0) throw DomainError("quantifier rank must be nonnegative");
  if (!M1.same_signature(M2)) throw DomainError("structures must share a signature");
  std::vector<Element> a, b;
  return ef_game(M1, M2, a, b, rank);
}

// ---------------------------------------------------------------------------
// Step search.

bool verify_step_witness(const DependencySpec& D, const StepWitness& w) {
  // Induced substructure on the smaller domain.
  if (w.a1.n >= w.a2.n) return false;
  Relation induced;
  induced.arity = D.arity;
  for (const auto& t : w.r2.tuples)
    if (std::all_of(t.begin(), t.end(), [&](Element e) { return e < w.a1.n; }))
      induced.tuples.push_back(t);
  induced.normalize();
  if (!(induced == w.r1)) return false;
  if (!w.r1.subset_of(w.s1) || !w.s1.subset_of(w.r2)) return false;
  if (!dep_membership_by_sentence(D, w.a1, w.r1)) return false;
  if (!dep_membership_by_sentence(D, w.a2, w.r2)) return false;
  if (dep_membership_by_sentence(D, w.a2, w.s1)) return false;
  Structure s1 = w.a1, s2 = w.a2;
  s1.relations["R"] = w.r1;
  s2.relations["R"] = w.r2;
  return ef_equiv(s1, s2, w.rank);
}

std::vector<StepWitness> step_search(const DependencySpec& D, const StepSearchOptions& opts) {
  std::vector<StepWitness> out;
  int k = D.arity;
  for (int n2 = 2; n2 <= opts.nmax; ++n2) {
    std::uint64_t p2 = npos(n2, k);
    if (p2 > static_cast<std::uint64_t>(opts.max_positions))
      throw ResourceError("step search beyond the position cap");
    MembershipTable t2 = membership_table(D, n2, opts.max_positions);
    // Substructure domains are prefixes {0..n1-1}: every witness has a
    // label-permuted copy of this shape.
    for (int n1 = 1; n1 < n2; ++n1) {
      MembershipTable t1 = membership_table(D, n1, opts.max_positions);
      std::uint64_t total2 = std::uint64_t(1) << p2;
      for (std::uint64_t m2 = 0; m2 < total2; ++m2) {
        if (!t2.contains(m2)) continue;
        Relation r2 = Relation::from_mask(n2, k, m2);
        Relation r1;
        r1.arity = k;
        for (const auto& t : r2.tuples)
          if (std::all_of(t.begin(), t.end(), [&](Element e) { return e < n1; }))
            r1.tuples.push_back(t);
        r1.normalize();
        if (!t1.contains(r1.to_mask(n1))) continue;
        Structure a1 = plain_domain(n1), a2 = plain_domain(n2);
        {
          Structure s1 = a1, s2 = a2;
          s1.relations["R"] = r1;
          s2.relations["R"] = r2;
          if (!ef_equiv(s1, s2, opts.rank)) continue;
        }
        // Intermediate relations r1 ⊆ s ⊆ r2 that fall outside D.
        std::uint64_t m1 = r1.to_mask(n2);
        std::uint64_t gap = m2 & ~m1;
        for (std::uint64_t w = 0;; w = (w - gap) & gap) {
          std::uint64_t ms = m1 | w;
          if (!t2.contains(ms)) {
            StepWitness wit;
            wit.a1 = a1;
            wit.a2 = a2;
            wit.r1 = r1;
            wit.r2 = r2;
            wit.s1 = Relation::from_mask(n2, k, ms);
            wit.rank = opts.rank;
            wit.verified = verify_step_witness(D, wit);
            if (wit.verified) {
              out.push_back(std::move(wit));
              if (opts.max_witnesses > 0 &&
                  static_cast<int>(out.size()) >= opts.max_witnesses)
                return out;
            }
          }
          if (w == gap) break;
        }
      }
    }
  }
  return out;
}

}  // namespace teamlab

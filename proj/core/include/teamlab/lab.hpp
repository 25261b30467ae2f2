#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teamlab/atoms.hpp"
#include "teamlab/model.hpp"
#include "teamlab/tarski.hpp"

namespace teamlab {

struct Counterexample {
  int n = 0;
  std::vector<Relation> relations;  // probe-specific payload, in role order
  std::string note;
};

struct Verdict {
  std::string property;
  bool holds = true;
  int bound = 0;
  std::optional<Counterexample> cex;              // enumeration-least, when found
  std::vector<Counterexample> counterexamples;    // all collected (first included)
  bool reverified = false;  // counterexamples confirmed through the sentence route
  bool exhaustive = true;   // false when the search was sampled
  std::optional<std::uint64_t> seed;
};

struct ProbeOptions {
  int nmax = 3;
  int jobs = 1;
  int max_positions = kDefaultMaxPositions;
  /// Probes stop at the first counterexample unless asked to collect
  /// them all (bounded below).
  bool collect_all = false;
  int max_counterexamples = 100;
  /// Beyond the exhaustive caps (nmax ≤ 4, arity ≤ 2) probes switch to
  /// seeded random sampling of this many relations per domain size.
  std::uint64_t seed = 1;
  int sample_count = 2000;
};

/// Membership of every relation mask at one (n, k), precomputed once.
struct MembershipTable {
  int n = 1;
  int k = 1;
  std::vector<std::uint8_t> member;  // indexed by relation mask
  bool contains(std::uint64_t mask) const { return member[mask] != 0; }
  std::uint64_t count() const;
};

MembershipTable membership_table(const DependencySpec& D, int n, int max_positions = kDefaultMaxPositions);

Verdict probe_empty_team(const DependencySpec& D, const ProbeOptions& opts = {});
Verdict probe_downwards(const DependencySpec& D, const ProbeOptions& opts = {});
Verdict probe_union(const DependencySpec& D, const ProbeOptions& opts = {});
Verdict probe_upwards(const DependencySpec& D, const ProbeOptions& opts = {});
Verdict probe_domain_independence(const DependencySpec& D, const ProbeOptions& opts = {});

Verdict run_probe(const DependencySpec& D, const std::string& property, const ProbeOptions& opts = {});
std::vector<std::string> probe_property_names();

/// Probed flags vs the stored metadata of the seven default built-ins.
struct GridRow {
  std::string dependency;
  ClosureFlags expected;
  ClosureFlags probed;
  bool matches = false;
  std::vector<Verdict> verdicts;
};

struct GridReport {
  int nmax = 3;
  std::vector<GridRow> rows;
  bool all_match = false;
};

GridReport check_builtin_grid(const Registry& reg, int nmax, int jobs = 1);

/// (M, R) ∈ D and no proper superset of R is in D. The full superset
/// lattice is searched.
bool dmax_membership(const DependencySpec& D, const Structure& M, const Relation& R);

/// Every member (M, R) must reach some maximal member R' ⊇ R through
/// members only (all S with R ⊆ S ⊆ R' in D).
Verdict nonjumping_probe(const DependencySpec& D, const ProbeOptions& opts = {});

/// Duplicator wins the rank-round Ehrenfeucht–Fraïssé game, i.e. the
/// structures agree on all sentences of quantifier rank ≤ rank.
bool ef_equiv(const Structure& M1, const Structure& M2, int rank);

/// One step of the forbidden configuration at finite scale: an induced
/// substructure pair that is rank-k equivalent, both in D, with a
/// non-member sandwiched between the relations.
struct StepWitness {
  Structure a1, a2;
  Relation r1, r2, s1;
  int rank = 0;
  bool verified = false;
};

struct StepSearchOptions {
  int nmax = 3;
  int rank = 1;
  int max_witnesses = 16;  // 0 = collect all
  int max_positions = kDefaultMaxPositions;
};

std::vector<StepWitness> step_search(const DependencySpec& D, const StepSearchOptions& opts = {});

/// Re-checks all witness conditions through the independent membership
/// route; used before any witness is emitted.
bool verify_step_witness(const DependencySpec& D, const StepWitness& w);

/// Re-checks a probe counterexample through the sentence route.
bool reverify_counterexample(const DependencySpec& D, const std::string& property,
                             const Counterexample& cex);

}  // namespace teamlab

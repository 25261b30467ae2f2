#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>

#include "teamlab/atoms.hpp"
#include "teamlab/model.hpp"
#include "teamlab/syntax.hpp"

namespace teamlab {

struct EvalOptions {
  /// Metadata-gated prunings: disjoint splits for downwards-closed
  /// disjunctions, singleton choices for downwards-closed existential
  /// bodies, constant-singleton choices for constancy-pinned variables.
  bool pruning = true;
  /// Evaluate each subformula on the team restricted to its free
  /// variables (lax semantics is local).
  bool locality = true;
  bool memo = true;
  /// Abort the call once this many search steps have been taken.
  std::uint64_t budget = 400'000'000;
  /// Largest allowed assignment universe n^|V| during evaluation.
  std::uint64_t max_universe = std::uint64_t(1) << 24;

  static EvalOptions naive() {
    EvalOptions o;
    o.pruning = false;
    o.locality = false;
    return o;
  }
};

/// Team satisfaction under the lax semantics: disjunction splits into a
/// possibly overlapping cover, existentials range over set-valued choice
/// functions. Memoization is per call.
bool eval_team(const Structure& M, const Team& X, const FormulaPtr& f,
               const Registry& reg, const EvalOptions& opts = {});

/// Reusable evaluation state for sweeps over many teams of one structure:
/// memo and per-node analyses persist across eval() calls.
class TeamEvalSession {
 public:
  TeamEvalSession(const Structure& M, const Registry& reg, EvalOptions opts = {});
  ~TeamEvalSession();
  TeamEvalSession(const TeamEvalSession&) = delete;
  TeamEvalSession& operator=(const TeamEvalSession&) = delete;

  bool eval(const Team& X, const FormulaPtr& f);

  /// Sweep entry point: evaluates the team encoded as a bitmask over the
  /// assignment rows of `vars` (sorted), bit i standing for the row
  /// tuple_from_index(n, |vars|, i). Skips Team construction.
  bool eval_mask(const FormulaPtr& f, const std::vector<std::string>& vars, std::uint64_t mask);

  void clear();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  friend bool eval_team(const Structure&, const Team&, const FormulaPtr&,
                        const Registry&, const EvalOptions&);
};

/// True iff team truth of the first order formula f equals pointwise
/// Tarskian truth on X. f must be dependency-free and ⊔-free.
bool check_flatness(const Structure& M, const Team& X, const FormulaPtr& f, const Registry& reg);

/// Recomputes the evaluation, printing witnessing covers and choice
/// teams per rule.
void explain_eval(const Structure& M, const Team& X, const FormulaPtr& f,
                  const Registry& reg, std::ostream& os);

/// All dependency atoms of f have the given flag set to yes.
bool all_atoms_flagged(const FormulaPtr& f, const Registry& reg, Flag ClosureFlags::* prop);

}  // namespace teamlab

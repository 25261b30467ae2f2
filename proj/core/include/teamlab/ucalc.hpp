#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teamlab/atoms.hpp"
#include "teamlab/model.hpp"
#include "teamlab/syntax.hpp"

namespace teamlab {

/// χ ∧ χ' as a single U-sentence: rename the existential blocks apart,
/// identify the universal tuples, conjoin bodies and matrices.
USentence conjoin_u(const USentence& chi, const USentence& chi2);

/// ∃v χ[v/a] for a constant a occurring in χ; v is fresh and prepended
/// to the existential block.
USentence existentialize_constant(const USentence& chi, const std::string& a);

/// The relation-free translation χ'(w...): each conjunct R t... of η
/// becomes (⊤ ∨ (ne(w...) ∧ t... = w...)), the matrix keeps its shape,
/// and the existential block is pinned by a constancy atom. For every
/// structure M and team X ⊇ w...:  M ⊨_X χ'(w)  iff  (M, X(w)) ⊨ χ(R).
FormulaPtr translate_u(const USentence& chi, const std::vector<std::string>& wvars);

/// Global disjunction of the individual translations.
FormulaPtr translate_disjunction(const std::vector<USentence>& chis,
                                 const std::vector<std::string>& wvars);

/// D^(P) x... as D x... ∧ ⋀ P x. Requires D domain independent.
FormulaPtr relativize_atom(const Registry& reg, const std::string& dep,
                           const std::string& pred, const std::vector<std::string>& xvars);

struct Mismatch {
  Structure m;
  std::optional<Team> team;
  std::optional<Relation> rel;
  std::string note;
};

struct EquivReport {
  bool equivalent = true;
  std::uint64_t cases = 0;
  bool exhaustive = true;
  std::optional<std::uint64_t> seed;
  std::optional<Mismatch> first;
};

/// Tarskian equivalence of two sentences over signature {R} plus the
/// given constants, over every (A, R) with |A| ≤ nmax and every
/// interpretation of the constants.
EquivReport certify_sentence_pair(const FormulaPtr& lhs, const FormulaPtr& rhs,
                                  const std::string& rel, int arity,
                                  const std::set<std::string>& constants, int nmax);

struct TranslationCertOptions {
  int nmax = 3;
  int pad_vars = 1;  // extra team columns beyond w
  /// When the team space exceeds this many positions, sample instead.
  int max_positions = kDefaultMaxPositions;
  std::uint64_t seed = 1;
  int sample_count = 10000;
};

/// The biconditional eval_team(M, X, χ') ⟺ (M, X(w)) ⊨ χ over all
/// structures (empty relational signature) and teams within bounds.
EquivReport certify_translation(const USentence& chi, const FormulaPtr& translated,
                                const std::vector<std::string>& wvars, const Registry& reg,
                                const TranslationCertOptions& opts = {});

/// eval_team of the relativized formula ⟺ (P^M, X(x)) ∈ D, exhaustively
/// over all structures n ≤ nmax, all nonempty P, all teams over xvars.
EquivReport certify_relativization(const Registry& reg, const DependencySpec& D,
                                   const std::string& pred, const std::vector<std::string>& xvars,
                                   int nmax = 3);

/// Brute-force equivalence of two formulas as team properties: all
/// structures over their joint relational signature with |A| ≤ nmax,
/// all teams over the joint free variables.
EquivReport certify_formula_pair(const FormulaPtr& lhs, const FormulaPtr& rhs,
                                 const Registry& reg, int nmax,
                                 int max_positions = kDefaultMaxPositions);

}  // namespace teamlab

#pragma once

#include "teamlab/atoms.hpp"
#include "teamlab/model.hpp"
#include "teamlab/syntax.hpp"

namespace teamlab {

/// Classical single-assignment first order truth. The formula must be
/// dependency-free and global-disjunction-free; quantifiers range over
/// the whole domain.
bool eval_tarski(const Structure& M, const Assignment& s, const FormulaPtr& f);

/// (A, R) ∈ D, where A is M's domain. Built-ins are decided directly as
/// relation properties; user dependencies evaluate their sentence D(R).
bool dep_membership(const DependencySpec& D, const Structure& M, const Relation& R);

/// The defining first order sentence D(R) over signature {R}; built for
/// built-ins, stored for user dependencies.
FormulaPtr defining_sentence(const DependencySpec& D);

/// Membership recomputed through the defining sentence — the second
/// route used by counterexample re-verification.
bool dep_membership_by_sentence(const DependencySpec& D, const Structure& M, const Relation& R);

/// Bottom-up evaluator computing satisfying-assignment sets; an
/// independently coded route to sentence truth.
bool sentence_truth_bottom_up(const Structure& M, const FormulaPtr& sentence);

}  // namespace teamlab

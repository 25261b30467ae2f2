#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "teamlab/atoms.hpp"
#include "teamlab/model.hpp"
#include "teamlab/syntax.hpp"

namespace teamlab {

/// Structure file: UTF-8, line oriented, '#' comments.
///   domain 3
///   rel R/2 = (0,1) (1,2)
///   const a = 0
///   pred P = 0 1
Structure parse_structure(std::istream& in);
Structure parse_structure_file(const std::string& path);

/// Command line team literal: ';'-separated assignments of var=value
/// pairs, e.g. "x=0,y=1; x=1,y=1". All assignments share one variable set.
Team parse_team_literal(const std::string& text, const Structure& M);

/// Dependency definition file: lines `dep NAME ARITY := SENTENCE`
/// with the sentence over signature {R}; '#' comments. Definitions are
/// registered into `reg`.
void load_dependency_file(const std::string& path, Registry& reg);

/// U-sentence fixture file: one sentence per line in the formula
/// grammar, '#' comments. The relation symbol must be R; its arity is
/// inferred from use. Returns sentences with their source lines.
struct UFixture {
  USentence sentence;
  std::string source;
  std::string comment;  // nearest preceding comment, if any
};
std::vector<UFixture> load_u_sentences(const std::string& path,
                                       const std::set<std::string>& constants = {});
std::vector<UFixture> parse_u_sentences(std::istream& in,
                                        const std::set<std::string>& constants = {});

std::string print_relation(const Relation& R);

}  // namespace teamlab

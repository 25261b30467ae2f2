#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teamlab/syntax.hpp"

namespace teamlab {

using Element = int;

/// Finite k-ary relation over domain elements 0..n-1.
/// Tuples are kept sorted and deduplicated.
struct Relation {
  int arity = 0;
  std::vector<std::vector<Element>> tuples;

  void normalize();
  bool contains(const std::vector<Element>& t) const;
  bool subset_of(const Relation& other) const;
  bool empty() const { return tuples.empty(); }
  std::size_t size() const { return tuples.size(); }

  /// Lexicographic tuple index: (t0..tk-1) -> sum ti * n^(k-1-i).
  static Relation from_mask(int n, int k, std::uint64_t mask);
  std::uint64_t to_mask(int n) const;

  friend bool operator==(const Relation&, const Relation&) = default;
  friend auto operator<=>(const Relation&, const Relation&) = default;
};

std::uint64_t tuple_index(int n, const std::vector<Element>& t);
std::vector<Element> tuple_from_index(int n, int k, std::uint64_t idx);

/// Finite structure: domain {0..n-1}, named relations, named constants,
/// and an optional distinguished unary predicate (also listed in relations).
struct Structure {
  int n = 1;
  std::map<std::string, Relation> relations;
  std::map<std::string, Element> constants;
  std::optional<std::string> pred;

  void validate() const;  // throws DomainError on violated invariants
  bool same_signature(const Structure& other) const;
};

using Assignment = std::map<std::string, Element>;

/// Team: set of assignments sharing the variable domain `vars`.
/// Rows store values in vars order, sorted and deduplicated.
struct Team {
  std::vector<std::string> vars;
  std::vector<std::vector<Element>> rows;

  void normalize();
  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }
  int var_index(const std::string& v) const;  // -1 if absent

  static Team empty_team(std::vector<std::string> vars);
  /// {ε}: the singleton team over no variables.
  static Team singleton_empty();
  static Team of(std::vector<std::string> vars, std::vector<std::vector<Element>> rows);

  std::vector<Assignment> assignments() const;
  std::string print() const;

  friend bool operator==(const Team&, const Team&) = default;
};

/// X(v...) — projection to a variable tuple, repeats allowed.
Relation team_projection(const Team& X, const std::vector<std::string>& tuple);

/// X[M/v] — every member extended with every domain element.
Team extend_universal(const Team& X, const std::string& v, const Structure& M);

/// X[H/v] — set-valued choice extension; H must be total on X with
/// nonempty values.
Team extend_choice(const Team& X, const std::string& v,
                   const std::map<Assignment, std::vector<Element>>& H);

/// Elements occurring in any tuple position of R.
std::set<Element> fld(const Relation& R);

inline constexpr int kDefaultMaxPositions = 16;

/// n^k, guarded against overflow past 2^62.
std::uint64_t positions(int n, int k);

/// Streams all 2^(n^k) relations in ascending bitmask order.
class RelationEnumerator {
 public:
  RelationEnumerator(int n, int k, int max_positions = kDefaultMaxPositions);
  bool next(Relation& out);
  std::uint64_t total() const { return total_; }

 private:
  int n_, k_;
  std::uint64_t mask_ = 0;
  std::uint64_t total_;
  bool done_ = false;
};

/// Streams all 2^(n^|V|) teams with domain V in ascending bitmask order.
class TeamEnumerator {
 public:
  TeamEnumerator(int n, std::vector<std::string> vars,
                 int max_positions = kDefaultMaxPositions);
  bool next(Team& out);
  std::uint64_t total() const { return total_; }

 private:
  int n_;
  std::vector<std::string> vars_;
  std::uint64_t mask_ = 0;
  std::uint64_t total_;
  bool done_ = false;
};

Team team_from_mask(int n, const std::vector<std::string>& vars, std::uint64_t mask);
std::uint64_t team_to_mask(int n, const Team& X);

}  // namespace teamlab

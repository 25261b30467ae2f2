#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace teamlab {

class Registry;

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(const std::string& msg, int line, int col);
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ArityError : std::runtime_error {
  explicit ArityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RegistryError : std::runtime_error {
  explicit RegistryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A term is a variable or a constant symbol. Which identifiers denote
/// constants is decided by the parse context, never by spelling.
struct Term {
  enum class Kind { Var, Const };
  Kind kind = Kind::Var;
  std::string name;

  static Term var(std::string n) { return {Kind::Var, std::move(n)}; }
  static Term cons(std::string n) { return {Kind::Const, std::move(n)}; }
  bool is_var() const { return kind == Kind::Var; }
  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

/// First order literal: R(t...) / !R(t...) / t = t' / t != t'.
struct Literal {
  bool positive = true;
  bool is_equality = false;
  std::string rel;         // relation symbol, empty for equalities
  std::vector<Term> args;  // equalities have exactly two

  friend bool operator==(const Literal&, const Literal&) = default;
};

enum class Conn { Lit, And, Or, GlobalOr, Exists, Forall, Atom };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Immutable NNF tree. Negation lives only inside Literal. Atom nodes
/// carry the dependency's base name and its argument groups (two groups
/// for the ';'-separated atoms, one otherwise); arguments are variables.
struct Formula {
  Conn kind = Conn::Lit;
  Literal lit;                                   // Lit
  FormulaPtr lhs, rhs;                           // And / Or / GlobalOr
  std::string var;                               // Exists / Forall
  FormulaPtr body;                               // Exists / Forall
  std::string atom;                              // Atom base name
  std::vector<std::vector<std::string>> groups;  // Atom argument groups
  std::vector<std::string> fv;                   // cached free variables, sorted
};

FormulaPtr f_lit(Literal lit);
FormulaPtr f_and(FormulaPtr a, FormulaPtr b);
FormulaPtr f_or(FormulaPtr a, FormulaPtr b);
FormulaPtr f_gor(FormulaPtr a, FormulaPtr b);
FormulaPtr f_exists(std::string v, FormulaPtr body);
FormulaPtr f_forall(std::string v, FormulaPtr body);
FormulaPtr f_atom(std::string name, std::vector<std::vector<std::string>> groups);

/// Conjunction/disjunction of a list; empty list yields `fallback`.
FormulaPtr f_and_all(std::vector<FormulaPtr> parts, FormulaPtr fallback);
FormulaPtr f_or_all(std::vector<FormulaPtr> parts, FormulaPtr fallback);

std::set<std::string> free_variables(const FormulaPtr& f);
std::set<std::string> constants_of(const FormulaPtr& f);
/// All variable names occurring in f, free or bound.
std::set<std::string> all_variables(const FormulaPtr& f);
/// Relation symbols with their arities, as used in literals of f.
std::map<std::string, int> relation_symbols(const FormulaPtr& f);
bool contains_atom(const FormulaPtr& f);
bool contains_global_or(const FormulaPtr& f);
bool contains_relation(const FormulaPtr& f, const std::string& rel);

std::string pretty_print(const FormulaPtr& f);
std::string print_term(const Term& t);
std::string print_literal(const Literal& l);

/// Capture-avoiding substitution of a free variable by another variable.
FormulaPtr substitute_var(const FormulaPtr& f, const std::string& from, const std::string& to);
/// Replace every occurrence of the constant `from` by the variable `to`.
FormulaPtr substitute_const_by_var(const FormulaPtr& f, const std::string& from, const std::string& to);

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b);

/// Deterministic source of internal variable names "_v0", "_v1", ...
/// skipping anything in `used`. User identifiers may not start with '_'.
class FreshVars {
 public:
  explicit FreshVars(std::set<std::string> used = {}) : used_(std::move(used)) {}
  void reserve(const std::set<std::string>& more);
  std::string next();

 private:
  std::set<std::string> used_;
  int counter_ = 0;
};

struct ParseContext {
  const Registry* registry = nullptr;      // resolves user atom arities
  std::set<std::string> constants;         // identifiers denoting constants
  std::map<std::string, int> relations;    // declared relation arities (optional)
  bool allow_reserved = false;             // accept identifiers starting with '_'
};

FormulaPtr parse_formula(const std::string& text, const ParseContext& ctx = {});

/// The constrained sentence shape E x... (eta && A y... (!R(y...) or theta)):
/// x and y disjoint tuples of distinct variables, eta a conjunction of
/// literals over {R, constants} with R only positive and variables in x,
/// theta R-free with free variables in x ∪ y.
struct USentence {
  std::string rel = "R";
  int rel_arity = 1;
  std::vector<std::string> exist_vars;
  std::vector<std::string> univ_vars;
  std::vector<Literal> eta;
  FormulaPtr theta;

  FormulaPtr to_formula() const;
  std::set<std::string> constants() const;
  std::string print() const;
};

USentence validate_u_sentence(const FormulaPtr& sentence, const std::string& rel, int rel_arity);

}  // namespace teamlab

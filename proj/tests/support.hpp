#pragma once

// Shared test support: random generators, the independent Tarskian
// recursion used as differential oracle, and the rank-k characteristic
// sentence construction behind the EF oracle.

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "teamlab/lab.hpp"
#include "teamlab/model.hpp"
#include "teamlab/syntax.hpp"
#include "teamlab/tarski.hpp"

namespace testsupport {

using namespace teamlab;

// ---------------------------------------------------------------------------
// Independent Tarskian evaluator (textbook recursion, coded separately
// from the library's).

inline bool oracle_tarski(const Structure& M, std::map<std::string, Element> env,
                          const FormulaPtr& f) {
  auto value = [&](const Term& t) -> Element {
    if (t.kind == Term::Kind::Const) return M.constants.at(t.name);
    return env.at(t.name);
  };
  if (f->kind == Conn::Lit) {
    const Literal& l = f->lit;
    bool b;
    if (l.is_equality) {
      b = value(l.args[0]) == value(l.args[1]);
    } else {
      std::vector<Element> tup;
      for (auto& a : l.args) tup.push_back(value(a));
      const Relation& r = M.relations.at(l.rel);
      b = false;
      for (auto& t : r.tuples)
        if (t == tup) {
          b = true;
          break;
        }
    }
    return l.positive == b;
  }
  if (f->kind == Conn::And) return oracle_tarski(M, env, f->lhs) && oracle_tarski(M, env, f->rhs);
  if (f->kind == Conn::Or) return oracle_tarski(M, env, f->lhs) || oracle_tarski(M, env, f->rhs);
  if (f->kind == Conn::Exists) {
    for (Element m = 0; m < M.n; ++m) {
      env[f->var] = m;
      if (oracle_tarski(M, env, f->body)) return true;
    }
    return false;
  }
  if (f->kind == Conn::Forall) {
    for (Element m = 0; m < M.n; ++m) {
      env[f->var] = m;
      if (!oracle_tarski(M, env, f->body)) return false;
    }
    return true;
  }
  throw std::logic_error("oracle_tarski: first order formulas only");
}

// ---------------------------------------------------------------------------
// Random generators.

struct GenOptions {
  std::vector<std::string> vars = {"x", "y"};
  std::map<std::string, int> relations = {{"S", 2}};
  std::vector<std::string> atoms;  // built-in base names to draw from
  int max_depth = 3;
  bool allow_gor = false;
  std::vector<std::string> constants;
};

inline const std::string& pick(std::mt19937_64& rng, const std::vector<std::string>& pool) {
  return pool[rng() % pool.size()];
}

inline Term random_term(std::mt19937_64& rng, const GenOptions& g) {
  if (!g.constants.empty() && rng() % 4 == 0) return Term::cons(pick(rng, g.constants));
  return Term::var(pick(rng, g.vars));
}

inline FormulaPtr random_literal(std::mt19937_64& rng, const GenOptions& g) {
  bool positive = rng() % 2 == 0;
  if (g.relations.empty() || rng() % 2 == 0)
    return f_lit(Literal{positive, true, "", {random_term(rng, g), random_term(rng, g)}});
  auto it = g.relations.begin();
  std::advance(it, static_cast<long>(rng() % g.relations.size()));
  std::vector<Term> args;
  for (int i = 0; i < it->second; ++i) args.push_back(random_term(rng, g));
  return f_lit(Literal{positive, false, it->first, std::move(args)});
}

inline FormulaPtr random_atom(std::mt19937_64& rng, const GenOptions& g) {
  const std::string& name = pick(rng, g.atoms);
  auto var_group = [&](int len) {
    std::vector<std::string> vs;
    for (int i = 0; i < len; ++i) vs.push_back(pick(rng, g.vars));
    return vs;
  };
  if (name == "dep" || name == "anon" || name == "indep")
    return f_atom(name, {var_group(1 + static_cast<int>(rng() % 2)), var_group(1)});
  if (name == "inc" || name == "exc") {
    int len = 1 + static_cast<int>(rng() % 2);
    return f_atom(name, {var_group(len), var_group(len)});
  }
  if (name == "ne") return f_atom(name, {var_group(static_cast<int>(rng() % 3))});
  return f_atom(name, {var_group(1 + static_cast<int>(rng() % 2))});
}

inline FormulaPtr random_formula(std::mt19937_64& rng, const GenOptions& g, int depth = 0) {
  bool at_leaf = depth >= g.max_depth;
  int roll = static_cast<int>(rng() % 100);
  if (at_leaf || roll < 30) {
    if (!g.atoms.empty() && rng() % 3 == 0) return random_atom(rng, g);
    return random_literal(rng, g);
  }
  if (roll < 50) return f_and(random_formula(rng, g, depth + 1), random_formula(rng, g, depth + 1));
  if (roll < 70) return f_or(random_formula(rng, g, depth + 1), random_formula(rng, g, depth + 1));
  if (g.allow_gor && roll < 76)
    return f_gor(random_formula(rng, g, depth + 1), random_formula(rng, g, depth + 1));
  if (roll < 88) return f_exists(pick(rng, g.vars), random_formula(rng, g, depth + 1));
  return f_forall(pick(rng, g.vars), random_formula(rng, g, depth + 1));
}

inline Structure random_structure(std::mt19937_64& rng, int n,
                                  const std::map<std::string, int>& relations,
                                  const std::vector<std::string>& constants = {}) {
  Structure M;
  M.n = n;
  for (const auto& [name, arity] : relations) {
    std::uint64_t p = positions(n, arity);
    std::uint64_t mask = rng() & ((p >= 64) ? ~std::uint64_t(0) : ((std::uint64_t(1) << p) - 1));
    M.relations[name] = Relation::from_mask(n, arity, mask);
  }
  for (const auto& c : constants) M.constants[c] = static_cast<Element>(rng() % n);
  return M;
}

inline Team random_team(std::mt19937_64& rng, int n, const std::vector<std::string>& vars) {
  std::uint64_t p = positions(n, static_cast<int>(vars.size()));
  std::uint64_t mask = rng() & ((std::uint64_t(1) << p) - 1);
  return team_from_mask(n, vars, mask);
}

inline Assignment random_assignment(std::mt19937_64& rng, int n,
                                    const std::vector<std::string>& vars) {
  Assignment s;
  for (const auto& v : vars) s[v] = static_cast<Element>(rng() % n);
  return s;
}

// ---------------------------------------------------------------------------
// Rank-k characteristic sentences: two structures agree on all sentences
// of quantifier rank <= k iff each satisfies the other's characteristic
// sentence. Used as the sentence-level oracle for ef_equiv.

inline FormulaPtr atomic_type(const Structure& M, const std::vector<Element>& pebbles) {
  std::vector<Term> terms;
  std::vector<Element> values;
  for (std::size_t i = 0; i < pebbles.size(); ++i) {
    terms.push_back(Term::var("v" + std::to_string(i)));
    values.push_back(pebbles[i]);
  }
  for (const auto& [name, val] : M.constants) {
    terms.push_back(Term::cons(name));
    values.push_back(val);
  }
  std::vector<FormulaPtr> lits;
  for (std::size_t i = 0; i < terms.size(); ++i)
    for (std::size_t j = i + 1; j < terms.size(); ++j)
      lits.push_back(f_lit(Literal{values[i] == values[j], true, "", {terms[i], terms[j]}}));
  for (const auto& [rel, r] : M.relations) {
    int k = r.arity;
    if (k == 0) {
      lits.push_back(f_lit(Literal{r.contains({}), false, rel, {}}));
      continue;
    }
    if (terms.empty()) continue;
    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    for (;;) {
      std::vector<Term> args;
      std::vector<Element> vals;
      for (auto i : idx) {
        args.push_back(terms[i]);
        vals.push_back(values[i]);
      }
      lits.push_back(f_lit(Literal{r.contains(vals), false, rel, args}));
      std::size_t i = 0;
      for (; i < idx.size(); ++i) {
        if (++idx[i] < terms.size()) break;
        idx[i] = 0;
      }
      if (i == idx.size()) break;
    }
  }
  Term self = terms.empty() ? Term::var("v0") : terms[0];
  FormulaPtr top = f_lit(Literal{true, true, "", {self, self}});
  if (terms.empty()) {
    // No pebbles, no constants: the atomic type carries relation facts
    // on nullary relations only.
    return f_and_all(lits, f_forall("v0", top));
  }
  return f_and_all(lits, top);
}

inline FormulaPtr characteristic(const Structure& M, std::vector<Element>& pebbles, int rank) {
  if (rank == 0) return atomic_type(M, pebbles);
  std::string v = "v" + std::to_string(pebbles.size());
  std::vector<FormulaPtr> children;
  for (Element c = 0; c < M.n; ++c) {
    pebbles.push_back(c);
    children.push_back(characteristic(M, pebbles, rank - 1));
    pebbles.pop_back();
  }
  // Deduplicate structurally identical children.
  std::vector<FormulaPtr> unique;
  std::set<std::string> seen;
  for (const auto& c : children)
    if (seen.insert(pretty_print(c)).second) unique.push_back(c);
  std::vector<FormulaPtr> parts;
  for (const auto& c : unique) parts.push_back(f_exists(v, c));
  parts.push_back(f_forall(v, f_or_all(unique, nullptr)));
  return f_and_all(parts, nullptr);
}

inline FormulaPtr characteristic_sentence(const Structure& M, int rank) {
  std::vector<Element> pebbles;
  return characteristic(M, pebbles, rank);
}

inline bool ef_oracle(const Structure& M1, const Structure& M2, int rank) {
  return eval_tarski(M2, {}, characteristic_sentence(M1, rank)) &&
         eval_tarski(M1, {}, characteristic_sentence(M2, rank));
}

// ---------------------------------------------------------------------------
// Mutation helper: replaces every nonemptiness atom by a tautological
// literal, which silently forgets the membership constraints of a
// translated sentence.

inline FormulaPtr drop_ne_atoms(const FormulaPtr& f) {
  switch (f->kind) {
    case Conn::Atom:
      if (f->atom == "ne" && !f->groups[0].empty()) {
        Term w = Term::var(f->groups[0][0]);
        return f_lit(Literal{true, true, "", {w, w}});
      }
      return f;
    case Conn::Lit:
      return f;
    case Conn::And:
      return f_and(drop_ne_atoms(f->lhs), drop_ne_atoms(f->rhs));
    case Conn::Or:
      return f_or(drop_ne_atoms(f->lhs), drop_ne_atoms(f->rhs));
    case Conn::GlobalOr:
      return f_gor(drop_ne_atoms(f->lhs), drop_ne_atoms(f->rhs));
    case Conn::Exists:
      return f_exists(f->var, drop_ne_atoms(f->body));
    case Conn::Forall:
      return f_forall(f->var, drop_ne_atoms(f->body));
  }
  return f;
}

}  // namespace testsupport

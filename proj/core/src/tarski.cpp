#include "teamlab/tarski.hpp"

#include <algorithm>

namespace teamlab {

namespace {

Element term_value(const Structure& M, const Assignment& s, const Term& t) {
  if (t.is_var()) {
    auto it = s.find(t.name);
    if (it == s.end()) throw DomainError("unbound variable '" + t.name + "'");
    return it->second;
  }
  auto it = M.constants.find(t.name);
  if (it == M.constants.end()) throw DomainError("unknown constant '" + t.name + "'");
  return it->second;
}

bool literal_truth(const Structure& M, const Assignment& s, const Literal& l) {
  bool base;
  if (l.is_equality) {
    base = term_value(M, s, l.args[0]) == term_value(M, s, l.args[1]);
  } else {
    auto it = M.relations.find(l.rel);
    if (it == M.relations.end()) throw DomainError("unknown relation '" + l.rel + "'");
    if (it->second.arity != static_cast<int>(l.args.size()))
      throw ArityError("relation '" + l.rel + "' has arity " + std::to_string(it->second.arity));
    std::vector<Element> t;
    t.reserve(l.args.size());
    for (const auto& a : l.args) t.push_back(term_value(M, s, a));
    base = it->second.contains(t);
  }
  return l.positive ? base : !base;
}

}  // namespace

bool eval_tarski(const Structure& M, const Assignment& s, const FormulaPtr& f) {
  switch (f->kind) {
    case Conn::Lit:
      return literal_truth(M, s, f->lit);
    case Conn::And:
      return eval_tarski(M, s, f->lhs) && eval_tarski(M, s, f->rhs);
    case Conn::Or:
      return eval_tarski(M, s, f->lhs) || eval_tarski(M, s, f->rhs);
    case Conn::GlobalOr:
      throw DomainError("global disjunction has no single-assignment semantics");
    case Conn::Exists: {
      Assignment s2 = s;
      for (Element m = 0; m < M.n; ++m) {
        s2[f->var] = m;
        if (eval_tarski(M, s2, f->body)) return true;
      }
      return false;
    }
    case Conn::Forall: {
      Assignment s2 = s;
      for (Element m = 0; m < M.n; ++m) {
        s2[f->var] = m;
        if (!eval_tarski(M, s2, f->body)) return false;
      }
      return true;
    }
    case Conn::Atom:
      throw DomainError("dependency atom '" + f->atom + "' in a first order context");
  }
  return false;
}

// ---------------------------------------------------------------------------
// Membership

namespace {

// Split a tuple of R into its two groups at position k1.
std::pair<std::vector<Element>, std::vector<Element>> split_at(const std::vector<Element>& t, int k1) {
  return {std::vector<Element>(t.begin(), t.begin() + k1),
          std::vector<Element>(t.begin() + k1, t.end())};
}

bool builtin_membership(const DependencySpec& D, const Structure& M, const Relation& R) {
  const auto& ts = R.tuples;
  switch (D.tag) {
    case Builtin::Dep: {
      for (const auto& a : ts)
        for (const auto& b : ts) {
          auto [ax, ay] = split_at(a, D.split);
          auto [bx, by] = split_at(b, D.split);
          if (ax == bx && ay != by) return false;
        }
      return true;
    }
    case Builtin::Inc: {
      std::set<std::vector<Element>> right;
      for (const auto& t : ts) right.insert(split_at(t, D.split).second);
      for (const auto& t : ts)
        if (!right.count(split_at(t, D.split).first)) return false;
      return true;
    }
    case Builtin::Exc: {
      std::set<std::vector<Element>> left, right;
      for (const auto& t : ts) {
        auto [l, r] = split_at(t, D.split);
        left.insert(l);
        right.insert(r);
      }
      for (const auto& l : left)
        if (right.count(l)) return false;
      return true;
    }
    case Builtin::Anon: {
      for (const auto& a : ts) {
        auto [ax, ay] = split_at(a, D.split);
        bool mate = false;
        for (const auto& b : ts) {
          auto [bx, by] = split_at(b, D.split);
          if (ax == bx && ay != by) {
            mate = true;
            break;
          }
        }
        if (!mate) return false;
      }
      return true;
    }
    case Builtin::Indep: {
      std::set<std::vector<Element>> left, right;
      for (const auto& t : ts) {
        auto [l, r] = split_at(t, D.split);
        left.insert(l);
        right.insert(r);
      }
      for (const auto& l : left)
        for (const auto& r : right) {
          std::vector<Element> t = l;
          t.insert(t.end(), r.begin(), r.end());
          if (!R.contains(t)) return false;
        }
      return true;
    }
    case Builtin::Ne:
      return !ts.empty();
    case Builtin::Const:
      return ts.size() <= 1;
    case Builtin::All:
      return ts.size() == positions(M.n, D.arity);
    case Builtin::User:
      break;
  }
  throw DomainError("not a built-in dependency");
}

}  // namespace

bool dep_membership(const DependencySpec& D, const Structure& M, const Relation& R) {
  if (R.arity != D.arity && !(R.tuples.empty() && R.arity == 0))
    throw ArityError("relation arity " + std::to_string(R.arity) + " does not match dependency '" +
                     D.name + "' of arity " + std::to_string(D.arity));
  if (D.tag != Builtin::User) return builtin_membership(D, M, R);
  Structure A;
  A.n = M.n;
  Relation r = R;
  r.arity = D.arity;
  A.relations["R"] = std::move(r);
  return eval_tarski(A, {}, D.sentence);
}

// ---------------------------------------------------------------------------
// Defining sentences

namespace {

std::vector<Term> var_terms(const std::string& prefix, int count) {
  std::vector<Term> out;
  for (int i = 0; i < count; ++i) out.push_back(Term::var(prefix + std::to_string(i)));
  return out;
}

std::vector<std::string> var_names(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<Term> concat(std::vector<Term> a, const std::vector<Term>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

FormulaPtr close_forall(const std::vector<std::string>& vs, FormulaPtr f) {
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) f = f_forall(*it, f);
  return f;
}

FormulaPtr close_exists(const std::vector<std::string>& vs, FormulaPtr f) {
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) f = f_exists(*it, f);
  return f;
}

FormulaPtr rel_lit(bool positive, const std::vector<Term>& args) {
  return f_lit(Literal{positive, false, "R", args});
}

FormulaPtr tuples_equal(const std::vector<Term>& a, const std::vector<Term>& b, bool positive) {
  std::vector<FormulaPtr> parts;
  for (std::size_t i = 0; i < a.size(); ++i)
    parts.push_back(f_lit(Literal{positive, true, "", {a[i], b[i]}}));
  // Empty tuples: x⃗ = y⃗ over zero components is vacuously true; its
  // negation needs a canonical false.
  if (parts.empty()) {
    Term z = Term::var("z");
    FormulaPtr eq = f_lit(Literal{positive, true, "", {z, z}});
    return positive ? close_forall({"z"}, eq) : close_exists({"z"}, eq);
  }
  return positive ? f_and_all(parts, nullptr) : f_or_all(parts, nullptr);
}

}  // namespace

FormulaPtr defining_sentence(const DependencySpec& D) {
  if (D.tag == Builtin::User) return D.sentence;
  int k = D.arity;
  int k1 = D.split;
  int k2 = k - (k1 < 0 ? 0 : k1);
  switch (D.tag) {
    case Builtin::Dep: {
      // A u0..A v0.. (!R(u) or !R(v) or u_left = v_left -> .. ) in NNF:
      // same left parts force equal right parts.
      auto u = var_terms("u", k);
      auto v = var_terms("v", k);
      std::vector<Term> ul(u.begin(), u.begin() + k1), ur(u.begin() + k1, u.end());
      std::vector<Term> vl(v.begin(), v.begin() + k1), vr(v.begin() + k1, v.end());
      FormulaPtr body = f_or(rel_lit(false, u),
                             f_or(rel_lit(false, v),
                                  k1 == 0 ? tuples_equal(ur, vr, true)
                                          : f_or(tuples_equal(ul, vl, false),
                                                 tuples_equal(ur, vr, true))));
      return close_forall(var_names("u", k), close_forall(var_names("v", k), body));
    }
    case Builtin::Inc: {
      // Left projection contained in the right projection.
      auto u = var_terms("u", k);
      std::vector<Term> ul(u.begin(), u.begin() + k1);
      auto w = var_terms("w", k);
      std::vector<Term> wl(w.begin(), w.begin() + k1);
      FormulaPtr witness =
          close_exists(var_names("w", k),
                       f_and(rel_lit(true, w), tuples_equal(std::vector<Term>(w.begin() + k1, w.end()),
                                                            ul, true)));
      (void)wl;
      FormulaPtr body = f_or(rel_lit(false, u), witness);
      return close_forall(var_names("u", k), body);
    }
    case Builtin::Exc: {
      // No tuple's left part equals any tuple's right part.
      auto u = var_terms("u", k);
      auto v = var_terms("v", k);
      std::vector<Term> ul(u.begin(), u.begin() + k1);
      std::vector<Term> vr(v.begin() + k1, v.end());
      FormulaPtr body =
          f_or(rel_lit(false, u), f_or(rel_lit(false, v), tuples_equal(ul, vr, false)));
      return close_forall(var_names("u", k), close_forall(var_names("v", k), body));
    }
    case Builtin::Anon: {
      auto u = var_terms("u", k);
      auto w = var_terms("w", k2);
      std::vector<Term> ul(u.begin(), u.begin() + k1), ur(u.begin() + k1, u.end());
      FormulaPtr mate = close_exists(
          var_names("w", k2),
          f_and(rel_lit(true, concat(ul, w)), tuples_equal(ur, w, false)));
      FormulaPtr body = f_or(rel_lit(false, u), mate);
      return close_forall(var_names("u", k), body);
    }
    case Builtin::Indep: {
      auto u = var_terms("u", k);
      auto v = var_terms("v", k);
      std::vector<Term> ul(u.begin(), u.begin() + k1);
      std::vector<Term> vr(v.begin() + k1, v.end());
      FormulaPtr body = f_or(rel_lit(false, u),
                             f_or(rel_lit(false, v), rel_lit(true, concat(ul, vr))));
      return close_forall(var_names("u", k), close_forall(var_names("v", k), body));
    }
    case Builtin::Ne:
      return close_exists(var_names("u", k), rel_lit(true, var_terms("u", k)));
    case Builtin::Const: {
      auto u = var_terms("u", k);
      auto v = var_terms("v", k);
      FormulaPtr body =
          f_or(rel_lit(false, u), f_or(rel_lit(false, v), tuples_equal(u, v, true)));
      return close_forall(var_names("u", k), close_forall(var_names("v", k), body));
    }
    case Builtin::All:
      return close_forall(var_names("u", k), rel_lit(true, var_terms("u", k)));
    case Builtin::User:
      break;
  }
  throw DomainError("no defining sentence");
}

bool dep_membership_by_sentence(const DependencySpec& D, const Structure& M, const Relation& R) {
  Structure A;
  A.n = M.n;
  Relation r = R;
  r.arity = D.arity;
  A.relations["R"] = std::move(r);
  return sentence_truth_bottom_up(A, defining_sentence(D));
}

// ---------------------------------------------------------------------------
// Bottom-up assignment-set evaluation: computes the set of satisfying
// assignments over the formula's free variables by set operations, a
// deliberately different algorithm from the top-down recursion above.

namespace {

struct AssignmentSet {
  std::vector<std::string> vars;                 // sorted
  std::set<std::vector<Element>> rows;           // values in vars order
};

AssignmentSet expand_to(const AssignmentSet& a, const std::vector<std::string>& vars, int n) {
  AssignmentSet out;
  out.vars = vars;
  std::vector<int> src(vars.size(), -1);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto it = std::find(a.vars.begin(), a.vars.end(), vars[i]);
    if (it != a.vars.end()) src[i] = static_cast<int>(it - a.vars.begin());
  }
  for (const auto& row : a.rows) {
    std::vector<std::vector<Element>> acc{{}};
    for (std::size_t i = 0; i < vars.size(); ++i) {
      std::vector<std::vector<Element>> next;
      for (auto& partial : acc) {
        if (src[i] >= 0) {
          auto copy = partial;
          copy.push_back(row[static_cast<std::size_t>(src[i])]);
          next.push_back(std::move(copy));
        } else {
          for (Element m = 0; m < n; ++m) {
            auto copy = partial;
            copy.push_back(m);
            next.push_back(std::move(copy));
          }
        }
      }
      acc = std::move(next);
    }
    for (auto& r : acc) out.rows.insert(std::move(r));
  }
  return out;
}

std::vector<std::string> union_vars(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

AssignmentSet sets_union(const AssignmentSet& a, const AssignmentSet& b, int n) {
  auto vars = union_vars(a.vars, b.vars);
  AssignmentSet ea = expand_to(a, vars, n);
  AssignmentSet eb = expand_to(b, vars, n);
  for (const auto& r : eb.rows) ea.rows.insert(r);
  return ea;
}

AssignmentSet sets_intersect(const AssignmentSet& a, const AssignmentSet& b, int n) {
  auto vars = union_vars(a.vars, b.vars);
  AssignmentSet ea = expand_to(a, vars, n);
  AssignmentSet eb = expand_to(b, vars, n);
  AssignmentSet out;
  out.vars = vars;
  for (const auto& r : ea.rows)
    if (eb.rows.count(r)) out.rows.insert(r);
  return out;
}

AssignmentSet project_out(const AssignmentSet& a, const std::string& v) {
  auto it = std::find(a.vars.begin(), a.vars.end(), v);
  if (it == a.vars.end()) return a;
  std::size_t idx = static_cast<std::size_t>(it - a.vars.begin());
  AssignmentSet out;
  out.vars = a.vars;
  out.vars.erase(out.vars.begin() + static_cast<long>(idx));
  for (const auto& r : a.rows) {
    std::vector<Element> s = r;
    s.erase(s.begin() + static_cast<long>(idx));
    out.rows.insert(std::move(s));
  }
  return out;
}

// Rows whose every v-extension lies in `a`.
AssignmentSet divide_forall(const AssignmentSet& a, const std::string& v, int n) {
  auto it = std::find(a.vars.begin(), a.vars.end(), v);
  if (it == a.vars.end()) return a;
  std::size_t idx = static_cast<std::size_t>(it - a.vars.begin());
  std::map<std::vector<Element>, int> counts;
  for (const auto& r : a.rows) {
    std::vector<Element> s = r;
    s.erase(s.begin() + static_cast<long>(idx));
    counts[s]++;
  }
  AssignmentSet out;
  out.vars = a.vars;
  out.vars.erase(out.vars.begin() + static_cast<long>(idx));
  for (const auto& [row, c] : counts)
    if (c == n) out.rows.insert(row);
  return out;
}

AssignmentSet eval_set(const Structure& M, const FormulaPtr& f) {
  switch (f->kind) {
    case Conn::Lit: {
      const Literal& l = f->lit;
      AssignmentSet out;
      std::vector<std::string> vars;
      for (const auto& t : l.args)
        if (t.is_var()) vars.push_back(t.name);
      std::sort(vars.begin(), vars.end());
      vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
      out.vars = vars;
      // Enumerate all assignments of the literal's variables.
      std::uint64_t total = positions(M.n, static_cast<int>(vars.size()));
      for (std::uint64_t i = 0; i < total; ++i) {
        auto row = tuple_from_index(M.n, static_cast<int>(vars.size()), i);
        Assignment s;
        for (std::size_t j = 0; j < vars.size(); ++j) s[vars[j]] = row[j];
        if (literal_truth(M, s, l)) out.rows.insert(row);
      }
      return out;
    }
    case Conn::And:
      return sets_intersect(eval_set(M, f->lhs), eval_set(M, f->rhs), M.n);
    case Conn::Or:
      return sets_union(eval_set(M, f->lhs), eval_set(M, f->rhs), M.n);
    case Conn::GlobalOr:
      throw DomainError("global disjunction has no single-assignment semantics");
    case Conn::Exists: {
      AssignmentSet b = eval_set(M, f->body);
      if (std::find(b.vars.begin(), b.vars.end(), f->var) == b.vars.end()) {
        // Vacuous: true iff the body is satisfiable (domain nonempty).
        return b;
      }
      return project_out(b, f->var);
    }
    case Conn::Forall: {
      AssignmentSet b = eval_set(M, f->body);
      if (std::find(b.vars.begin(), b.vars.end(), f->var) == b.vars.end()) return b;
      return divide_forall(b, f->var, M.n);
    }
    case Conn::Atom:
      throw DomainError("dependency atom in a first order context");
  }
  return {};
}

}  // namespace

bool sentence_truth_bottom_up(const Structure& M, const FormulaPtr& sentence) {
  if (!sentence->fv.empty()) throw DomainError("not a sentence");
  AssignmentSet s = eval_set(M, sentence);
  return !s.rows.empty();
}

}  // namespace teamlab

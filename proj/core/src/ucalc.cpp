#include "teamlab/ucalc.hpp"

#include <algorithm>
#include <random>

#include "teamlab/tarski.hpp"
#include "teamlab/teamsem.hpp"

namespace teamlab {

namespace {

std::set<std::string> names_of(const USentence& u) {
  std::set<std::string> used(u.exist_vars.begin(), u.exist_vars.end());
  used.insert(u.univ_vars.begin(), u.univ_vars.end());
  auto theta_vars = all_variables(u.theta);
  used.insert(theta_vars.begin(), theta_vars.end());
  for (const auto& l : u.eta)
    for (const auto& t : l.args)
      if (t.is_var()) used.insert(t.name);
  auto consts = u.constants();
  used.insert(consts.begin(), consts.end());
  return used;
}

Literal rename_literal_var(const Literal& l, const std::string& from, const std::string& to) {
  Literal out = l;
  for (auto& t : out.args)
    if (t.is_var() && t.name == from) t.name = to;
  return out;
}

}  // namespace

USentence conjoin_u(const USentence& chi, const USentence& chi2) {
  if (chi.rel != chi2.rel || chi.rel_arity != chi2.rel_arity)
    throw DomainError("the two sentences must share the relation signature");

  // Fresh names for the second existential block, then identify the
  // universal tuples.
  FreshVars fresh(names_of(chi));
  fresh.reserve(names_of(chi2));

  USentence right = chi2;
  for (std::size_t i = 0; i < right.exist_vars.size(); ++i) {
    std::string nv = fresh.next();
    std::string old = right.exist_vars[i];
    right.exist_vars[i] = nv;
    for (auto& l : right.eta) l = rename_literal_var(l, old, nv);
    right.theta = substitute_var(right.theta, old, nv);
  }
  // Identify universal tuples via fresh temporaries: a direct rename
  // could collide when the tuples permute shared names.
  std::vector<std::string> temps;
  for (std::size_t i = 0; i < right.univ_vars.size(); ++i) {
    temps.push_back(fresh.next());
    right.theta = substitute_var(right.theta, right.univ_vars[i], temps[i]);
  }
  for (std::size_t i = 0; i < right.univ_vars.size(); ++i) {
    right.theta = substitute_var(right.theta, temps[i], chi.univ_vars[i]);
    right.univ_vars[i] = chi.univ_vars[i];
  }

  USentence out;
  out.rel = chi.rel;
  out.rel_arity = chi.rel_arity;
  out.exist_vars = chi.exist_vars;
  out.exist_vars.insert(out.exist_vars.end(), right.exist_vars.begin(), right.exist_vars.end());
  out.univ_vars = chi.univ_vars;
  out.eta = chi.eta;
  out.eta.insert(out.eta.end(), right.eta.begin(), right.eta.end());
  out.theta = f_and(chi.theta, right.theta);
  return validate_u_sentence(out.to_formula(), out.rel, out.rel_arity);
}

USentence existentialize_constant(const USentence& chi, const std::string& a) {
  if (!chi.constants().count(a))
    throw DomainError("constant '" + a + "' does not occur in the sentence");
  FreshVars fresh(names_of(chi));
  std::string v = fresh.next();
  USentence out = chi;
  for (auto& l : out.eta)
    for (auto& t : l.args)
      if (!t.is_var() && t.name == a) t = Term::var(v);
  out.theta = substitute_const_by_var(out.theta, a, v);
  out.exist_vars.insert(out.exist_vars.begin(), v);
  return validate_u_sentence(out.to_formula(), out.rel, out.rel_arity);
}

FormulaPtr translate_u(const USentence& chi, const std::vector<std::string>& wvars) {
  if (static_cast<int>(wvars.size()) != chi.rel_arity)
    throw ArityError("need " + std::to_string(chi.rel_arity) + " team variables");
  auto used = names_of(chi);
  for (const auto& w : wvars)
    if (used.count(w)) throw DomainError("team variable '" + w + "' occurs in the sentence");

  // ⊤ as an always-true literal over the team variables.
  FormulaPtr top = f_lit(Literal{true, true, "", {Term::var(wvars[0]), Term::var(wvars[0])}});

  std::vector<FormulaPtr> parts;
  if (!chi.exist_vars.empty()) parts.push_back(f_atom("const", {chi.exist_vars}));
  for (const auto& l : chi.eta) {
    if (!l.is_equality && l.rel == chi.rel) {
      // R t...  ->  (⊤ or (ne(w...) and t... = w...))
      std::vector<FormulaPtr> eqs;
      eqs.push_back(f_atom("ne", {wvars}));
      for (std::size_t i = 0; i < l.args.size(); ++i)
        eqs.push_back(f_lit(Literal{true, true, "", {l.args[i], Term::var(wvars[i])}}));
      parts.push_back(f_or(top, f_and_all(eqs, nullptr)));
    } else {
      // Identity literals pass through unchanged.
      parts.push_back(f_lit(l));
    }
  }
  FormulaPtr theta = chi.theta;
  for (std::size_t i = 0; i < chi.univ_vars.size(); ++i)
    theta = substitute_var(theta, chi.univ_vars[i], wvars[i]);
  parts.push_back(theta);

  FormulaPtr body = f_and_all(parts, top);
  for (auto it = chi.exist_vars.rbegin(); it != chi.exist_vars.rend(); ++it)
    body = f_exists(*it, body);
  return body;
}

FormulaPtr translate_disjunction(const std::vector<USentence>& chis,
                                 const std::vector<std::string>& wvars) {
  if (chis.empty()) throw DomainError("empty disjunction");
  FormulaPtr acc = translate_u(chis[0], wvars);
  for (std::size_t i = 1; i < chis.size(); ++i) acc = f_gor(acc, translate_u(chis[i], wvars));
  return acc;
}

FormulaPtr relativize_atom(const Registry& reg, const std::string& dep, const std::string& pred,
                           const std::vector<std::string>& xvars) {
  const DependencySpec& D = reg.resolve_descriptor(dep);
  if (D.flags.domain_independent != Flag::Yes)
    throw DomainError("dependency '" + D.name +
                      "' is not known to be domain independent; relativization by conjunction "
                      "is only sound for domain independent dependencies");
  if (static_cast<int>(xvars.size()) != D.arity)
    throw ArityError("dependency '" + D.name + "' has arity " + std::to_string(D.arity));
  std::vector<std::vector<std::string>> groups;
  if (D.two_group()) {
    groups.push_back({xvars.begin(), xvars.begin() + D.split});
    groups.push_back({xvars.begin() + D.split, xvars.end()});
  } else {
    groups.push_back(xvars);
  }
  FormulaPtr f = f_atom(dep.substr(0, dep.find('(')), groups);
  std::vector<std::string> distinct = xvars;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (const auto& x : distinct)
    f = f_and(f, f_lit(Literal{true, false, pred, {Term::var(x)}}));
  return f;
}

// ---------------------------------------------------------------------------
// Brute-force certification.

namespace {

// All structures over signature {rel/arity} ∪ constants with domain n.
template <typename Fn>
bool for_each_structure(const std::string& rel, int arity, const std::set<std::string>& constants,
                        int n, int max_positions, Fn&& fn) {
  std::uint64_t p = positions(n, arity);
  if (p > static_cast<std::uint64_t>(max_positions))
    throw ResourceError("structure enumeration beyond the position cap");
  std::uint64_t total = std::uint64_t(1) << p;
  std::uint64_t cinterps = positions(n, static_cast<int>(constants.size()));
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (std::uint64_t ci = 0; ci < cinterps; ++ci) {
      Structure M;
      M.n = n;
      M.relations[rel] = Relation::from_mask(n, arity, mask);
      auto vals = tuple_from_index(n, static_cast<int>(constants.size()), ci);
      std::size_t i = 0;
      for (const auto& c : constants) M.constants[c] = vals[i++];
      if (!fn(M)) return false;
    }
  }
  return true;
}

}  // namespace

EquivReport certify_sentence_pair(const FormulaPtr& lhs, const FormulaPtr& rhs,
                                  const std::string& rel, int arity,
                                  const std::set<std::string>& constants, int nmax) {
  EquivReport report;
  for (int n = 1; n <= nmax && report.equivalent; ++n) {
    for_each_structure(rel, arity, constants, n, kDefaultMaxPositions, [&](const Structure& M) {
      ++report.cases;
      bool a = eval_tarski(M, {}, lhs);
      bool b = eval_tarski(M, {}, rhs);
      if (a != b) {
        report.equivalent = false;
        report.first = Mismatch{M, std::nullopt, M.relations.at(rel),
                                a ? "left side true, right side false"
                                  : "left side false, right side true"};
        return false;
      }
      return true;
    });
  }
  return report;
}

EquivReport certify_translation(const USentence& chi, const FormulaPtr& translated,
                                const std::vector<std::string>& wvars, const Registry& reg,
                                const TranslationCertOptions& opts) {
  EquivReport report;
  if (!chi.constants().empty())
    throw DomainError("translation certification expects constant-free sentences");

  // Team domain: w plus padding columns the translation must ignore.
  std::vector<std::string> domain = wvars;
  for (int i = 0; i < opts.pad_vars; ++i) {
    std::string pad = "u" + std::to_string(i);
    while (std::find(domain.begin(), domain.end(), pad) != domain.end() ||
           names_of(chi).count(pad))
      pad += "'";
    domain.push_back(pad);
  }

  FormulaPtr chi_fo = chi.to_formula();
  for (int n = 1; n <= opts.nmax && report.equivalent; ++n) {
    Structure M;
    M.n = n;
    TeamEvalSession session(M, reg);
    auto check_team = [&](const Team& X) {
      ++report.cases;
      bool lhs = session.eval(X, translated);
      Structure MR;
      MR.n = n;
      MR.relations[chi.rel] = team_projection(X, wvars);
      bool rhs = eval_tarski(MR, {}, chi_fo);
      if (lhs != rhs) {
        report.equivalent = false;
        report.first = Mismatch{M, X, MR.relations.at(chi.rel),
                                lhs ? "translation true, sentence false on the projection"
                                    : "translation false, sentence true on the projection"};
        return false;
      }
      return true;
    };
    std::uint64_t p = positions(n, static_cast<int>(domain.size()));
    if (p <= static_cast<std::uint64_t>(opts.max_positions)) {
      std::uint64_t total = std::uint64_t(1) << p;
      for (std::uint64_t mask = 0; mask < total; ++mask)
        if (!check_team(team_from_mask(n, domain, mask))) break;
    } else {
      report.exhaustive = false;
      report.seed = opts.seed;
      std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(n));
      for (int i = 0; i < opts.sample_count; ++i) {
        // Sample by row: each assignment joins with probability 1/2.
        Team X;
        X.vars = domain;
        for (std::uint64_t row = 0; row < p; ++row)
          if (rng() & 1)
            X.rows.push_back(tuple_from_index(n, static_cast<int>(domain.size()), row));
        X.normalize();
        if (!check_team(X)) break;
      }
    }
  }
  return report;
}

EquivReport certify_relativization(const Registry& reg, const DependencySpec& D,
                                   const std::string& pred, const std::vector<std::string>& xvars,
                                   int nmax) {
  EquivReport report;
  FormulaPtr f = relativize_atom(reg, D.name, pred, xvars);
  for (int n = 1; n <= nmax && report.equivalent; ++n) {
    // All nonempty P; the empty predicate would need an empty-domain
    // model on the right side, which the model convention excludes.
    for (std::uint64_t pm = 1; pm < (std::uint64_t(1) << n); ++pm) {
      Structure M;
      M.n = n;
      Relation P;
      P.arity = 1;
      std::vector<Element> pelems;
      for (Element e = 0; e < n; ++e)
        if (pm & (std::uint64_t(1) << e)) {
          P.tuples.push_back({e});
          pelems.push_back(e);
        }
      M.relations[pred] = P;
      M.pred = pred;
      TeamEvalSession session(M, reg);

      std::map<Element, Element> relabel;
      for (std::size_t i = 0; i < pelems.size(); ++i) relabel[pelems[i]] = static_cast<Element>(i);
      Structure MP;
      MP.n = static_cast<int>(pelems.size());

      TeamEnumerator teams(n, xvars);
      Team X;
      while (teams.next(X)) {
        ++report.cases;
        bool lhs = session.eval(X, f);
        Relation proj = team_projection(X, xvars);
        bool inside = std::all_of(proj.tuples.begin(), proj.tuples.end(), [&](const auto& t) {
          return std::all_of(t.begin(), t.end(), [&](Element e) { return relabel.count(e); });
        });
        bool rhs = false;
        if (inside) {
          Relation mapped;
          mapped.arity = proj.arity;
          for (const auto& t : proj.tuples) {
            std::vector<Element> s;
            for (Element e : t) s.push_back(relabel[e]);
            mapped.tuples.push_back(std::move(s));
          }
          mapped.normalize();
          rhs = dep_membership(D, MP, mapped);
        }
        if (lhs != rhs) {
          report.equivalent = false;
          report.first = Mismatch{M, X, proj,
                                  lhs ? "formula true, relativized membership false"
                                      : "formula false, relativized membership true"};
          return report;
        }
      }
    }
  }
  return report;
}

EquivReport certify_formula_pair(const FormulaPtr& lhs, const FormulaPtr& rhs, const Registry& reg,
                                 int nmax, int max_positions) {
  EquivReport report;
  auto rels = relation_symbols(lhs);
  for (const auto& [r, k] : relation_symbols(rhs)) {
    auto it = rels.find(r);
    if (it == rels.end())
      rels.emplace(r, k);
    else if (it->second != k)
      throw ArityError("relation '" + r + "' has conflicting arities in the two formulas");
  }
  std::set<std::string> consts = constants_of(lhs);
  for (const auto& c : constants_of(rhs)) consts.insert(c);
  std::vector<std::string> vars;
  {
    auto fv = free_variables(lhs);
    for (const auto& v : free_variables(rhs)) fv.insert(v);
    vars.assign(fv.begin(), fv.end());
  }

  for (int n = 1; n <= nmax && report.equivalent; ++n) {
    // Enumerate every relation interpretation, constant interpretation,
    // and team over the joint free variables.
    std::vector<std::pair<std::string, int>> rlist(rels.begin(), rels.end());
    std::vector<std::uint64_t> rtotals;
    std::uint64_t combos = 1;
    for (const auto& [r, k] : rlist) {
      std::uint64_t p = positions(n, k);
      if (p > static_cast<std::uint64_t>(max_positions))
        throw ResourceError("relation '" + r + "' beyond the position cap");
      rtotals.push_back(std::uint64_t(1) << p);
      combos *= rtotals.back();
    }
    std::uint64_t cinterps = positions(n, static_cast<int>(consts.size()));
    for (std::uint64_t rc = 0; rc < combos && report.equivalent; ++rc) {
      std::uint64_t rest = rc;
      Structure M;
      M.n = n;
      for (std::size_t i = 0; i < rlist.size(); ++i) {
        M.relations[rlist[i].first] = Relation::from_mask(n, rlist[i].second, rest % rtotals[i]);
        rest /= rtotals[i];
      }
      for (std::uint64_t ci = 0; ci < cinterps && report.equivalent; ++ci) {
        auto vals = tuple_from_index(n, static_cast<int>(consts.size()), ci);
        std::size_t i = 0;
        for (const auto& c : consts) M.constants[c] = vals[i++];
        TeamEvalSession session(M, reg);
        TeamEnumerator teams(n, vars);
        Team X;
        while (teams.next(X)) {
          ++report.cases;
          bool a = session.eval(X, lhs);
          bool b = session.eval(X, rhs);
          if (a != b) {
            report.equivalent = false;
            report.first = Mismatch{M, X, std::nullopt,
                                    a ? "left formula true, right formula false"
                                      : "left formula false, right formula true"};
            break;
          }
        }
      }
    }
  }
  return report;
}

}  // namespace teamlab

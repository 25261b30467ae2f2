// teamlab: evaluate team-semantics formulas over finite structures,
// classify dependency atoms by exhaustive search, and certify the
// dependency-to-formula translations by brute force.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "teamlab/io.hpp"
#include "teamlab/lab.hpp"
#include "teamlab/teamsem.hpp"
#include "teamlab/ucalc.hpp"

using json = nlohmann::json;
using namespace teamlab;

namespace {

constexpr const char* kVersion = "0.1.0";

json flags_json(const ClosureFlags& f) {
  auto sym = [](Flag x) { return x == Flag::Yes ? "+" : x == Flag::No ? "-" : "?"; };
  return json{{"empty", sym(f.empty_team)},
              {"down", sym(f.downwards)},
              {"union", sym(f.union_closed)},
              {"up", sym(f.upwards)},
              {"domind", sym(f.domain_independent)}};
}

json relation_json(const Relation& r) {
  json tuples = json::array();
  for (const auto& t : r.tuples) tuples.push_back(t);
  return json{{"arity", r.arity}, {"tuples", tuples}};
}

json verdict_json(const Verdict& v) {
  json out{{"property", v.property},
           {"holds", v.holds},
           {"bound", v.bound},
           {"exhaustive", v.exhaustive}};
  if (v.seed) out["seed"] = *v.seed;
  auto cex_json = [&](const Counterexample& c) {
    json relations = json::array();
    for (const auto& r : c.relations) relations.push_back(relation_json(r));
    return json{{"n", c.n},
                {"relations", relations},
                {"note", c.note},
                {"reverified", v.reverified}};
  };
  if (v.cex) out["counterexample"] = cex_json(*v.cex);
  if (v.counterexamples.size() > 1) {
    json all = json::array();
    for (const auto& c : v.counterexamples) all.push_back(cex_json(c));
    out["counterexamples"] = all;
  }
  return out;
}

json cert_json(const EquivReport& r) {
  json out{{"equivalent", r.equivalent}, {"cases", r.cases}, {"exhaustive", r.exhaustive}};
  if (r.seed) out["seed"] = *r.seed;
  if (r.first) {
    json m{{"n", r.first->m.n}, {"note", r.first->note}};
    if (r.first->team) m["team"] = r.first->team->print();
    if (r.first->rel) m["relation"] = relation_json(*r.first->rel);
    out["mismatch"] = m;
  }
  return out;
}

json envelope(const std::string& command, json params, json result) {
  return json{{"command", command},
              {"version", kVersion},
              {"params", std::move(params)},
              {"result", std::move(result)}};
}

void emit(const json& report) { std::cout << report.dump(2) << "\n"; }

struct CommonState {
  std::string deps_file;
  Registry registry;
  void load_deps() {
    if (!deps_file.empty()) load_dependency_file(deps_file, registry);
  }
};

int run_eval(const std::string& structure_file, const std::string& formula_text,
             const std::string& team_literal, const std::string& team_vars, bool empty_team,
             bool explain, CommonState& state) {
  Structure M = parse_structure_file(structure_file);
  state.load_deps();
  ParseContext ctx;
  ctx.registry = &state.registry;
  for (const auto& [name, value] : M.constants) ctx.constants.insert(name);
  for (const auto& [name, rel] : M.relations) ctx.relations[name] = rel.arity;
  FormulaPtr f = parse_formula(formula_text, ctx);

  Team X;
  if (empty_team || !team_vars.empty()) {
    std::vector<std::string> vars;
    std::istringstream is(team_vars);
    std::string v;
    while (std::getline(is, v, ','))
      if (!v.empty()) vars.push_back(v);
    X = Team::empty_team(vars);
    if (!team_literal.empty())
      throw DomainError("--empty-team and --team are mutually exclusive");
  } else if (!team_literal.empty()) {
    X = parse_team_literal(team_literal, M);
  } else {
    X = Team::singleton_empty();  // sentence evaluation
  }

  bool truth = eval_team(M, X, f, state.registry);
  std::cout << (truth ? "true" : "false") << "\n";
  if (explain) explain_eval(M, X, f, state.registry, std::cout);
  return truth ? 0 : 1;
}

int run_probe(const std::string& descriptor, int nmax, const std::string& props_text, int jobs,
              std::uint64_t seed, int sample_count, bool collect_all, CommonState& state) {
  state.load_deps();
  const DependencySpec& D = state.registry.resolve_descriptor(descriptor);
  std::vector<std::string> props;
  if (props_text.empty()) {
    props = probe_property_names();
  } else {
    std::istringstream is(props_text);
    std::string p;
    while (std::getline(is, p, ','))
      if (!p.empty()) props.push_back(p);
  }
  ProbeOptions opts;
  opts.nmax = nmax;
  opts.jobs = jobs;
  opts.seed = seed;
  opts.sample_count = sample_count;
  opts.collect_all = collect_all;

  json verdicts = json::array();
  bool consistent = true;
  for (const auto& p : props) {
    Verdict v = run_probe(D, p, opts);
    // Consistency with stored metadata; unknown never conflicts.
    Flag stored = Flag::Unknown;
    if (p == "empty") stored = D.flags.empty_team;
    if (p == "down") stored = D.flags.downwards;
    if (p == "union") stored = D.flags.union_closed;
    if (p == "up") stored = D.flags.upwards;
    if (p == "domind") stored = D.flags.domain_independent;
    if (stored == Flag::Yes && !v.holds) consistent = false;
    if (stored == Flag::No && v.holds) consistent = false;
    if (!v.holds && (!v.cex || !v.reverified)) consistent = false;
    verdicts.push_back(verdict_json(v));
  }
  emit(envelope("probe",
                json{{"dependency", D.name},
                     {"nmax", nmax},
                     {"props", props},
                     {"jobs", jobs},
                     {"seed", seed}},
                json{{"dependency", D.name},
                     {"verdicts", verdicts},
                     {"consistent_with_metadata", consistent}}));
  return consistent ? 0 : 1;
}

int run_table1(int nmax, int jobs, CommonState& state) {
  GridReport report = check_builtin_grid(state.registry, nmax, jobs);
  json rows = json::array();
  for (const auto& row : report.rows) {
    json verdicts = json::array();
    for (const auto& v : row.verdicts) verdicts.push_back(verdict_json(v));
    rows.push_back(json{{"dependency", row.dependency},
                        {"expected", flags_json(row.expected)},
                        {"probed", flags_json(row.probed)},
                        {"matches", row.matches},
                        {"verdicts", verdicts}});
  }
  emit(envelope("table1", json{{"nmax", nmax}, {"jobs", jobs}},
                json{{"nmax", report.nmax}, {"rows", rows}, {"all_match", report.all_match}}));
  return report.all_match ? 0 : 1;
}

int run_translate(const std::string& ufile, const std::string& vars_text, int nmax, int pad,
                  std::uint64_t seed, int sample_count, CommonState& state) {
  std::vector<std::string> wvars;
  std::istringstream is(vars_text);
  std::string v;
  while (std::getline(is, v, ','))
    if (!v.empty()) wvars.push_back(v);
  if (wvars.empty()) throw DomainError("--vars needs at least one variable");

  auto fixtures = load_u_sentences(ufile);
  TranslationCertOptions opts;
  opts.nmax = nmax;
  opts.pad_vars = pad;
  opts.seed = seed;
  opts.sample_count = sample_count;

  json items = json::array();
  bool all_ok = true;
  for (const auto& fx : fixtures) {
    FormulaPtr t = translate_u(fx.sentence, wvars);
    EquivReport r = certify_translation(fx.sentence, t, wvars, state.registry, opts);
    all_ok = all_ok && r.equivalent;
    items.push_back(json{{"input", fx.source},
                         {"comment", fx.comment},
                         {"formula", pretty_print(t)},
                         {"certification", cert_json(r)}});
  }
  emit(envelope("translate",
                json{{"file", ufile},
                     {"vars", wvars},
                     {"nmax", nmax},
                     {"pad", pad},
                     {"seed", seed},
                     {"sample_count", sample_count}},
                json{{"translations", items}, {"all_equivalent", all_ok}}));
  return all_ok ? 0 : 1;
}

int run_relativize(const std::string& descriptor, const std::string& pred, int nmax,
                   CommonState& state) {
  state.load_deps();
  const DependencySpec& D = state.registry.resolve_descriptor(descriptor);
  std::vector<std::string> xvars;
  for (int i = 0; i < D.arity; ++i) xvars.push_back("x" + std::to_string(i));
  FormulaPtr f = relativize_atom(state.registry, D.name, pred, xvars);
  EquivReport r = certify_relativization(state.registry, D, pred, xvars, nmax);
  emit(envelope("relativize",
                json{{"dependency", D.name}, {"pred", pred}, {"nmax", nmax}},
                json{{"dependency", D.name},
                     {"pred", pred},
                     {"vars", xvars},
                     {"formula", pretty_print(f)},
                     {"certification", cert_json(r)}}));
  return r.equivalent ? 0 : 1;
}

int run_stepsearch(const std::string& descriptor, int nmax, int rank, int max_witnesses,
                   CommonState& state) {
  state.load_deps();
  const DependencySpec& D = state.registry.resolve_descriptor(descriptor);
  StepSearchOptions opts;
  opts.nmax = nmax;
  opts.rank = rank;
  opts.max_witnesses = max_witnesses;
  auto witnesses = step_search(D, opts);
  json items = json::array();
  bool all_verified = true;
  for (const auto& w : witnesses) {
    all_verified = all_verified && w.verified;
    items.push_back(json{{"n1", w.a1.n},
                         {"n2", w.a2.n},
                         {"r1", relation_json(w.r1)},
                         {"r2", relation_json(w.r2)},
                         {"s1", relation_json(w.s1)},
                         {"rank", w.rank},
                         {"verified", w.verified}});
  }
  emit(envelope(
      "stepsearch", json{{"dependency", D.name}, {"nmax", nmax}, {"rank", rank}},
      json{{"dependency", D.name},
           {"witnesses", items},
           {"note", "witnesses are rank-bounded evidence only; an empty list does not "
                    "establish strong first-orderness"}}));
  return all_verified ? 0 : 1;
}

int run_nonjumping(const std::string& descriptor, int nmax, CommonState& state) {
  state.load_deps();
  const DependencySpec& D = state.registry.resolve_descriptor(descriptor);
  ProbeOptions opts;
  opts.nmax = nmax;
  Verdict v = nonjumping_probe(D, opts);
  emit(envelope("nonjumping", json{{"dependency", D.name}, {"nmax", nmax}},
                json{{"dependency", D.name}, {"verdict", verdict_json(v)}}));
  return v.holds ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-model laboratory for team semantics"};
  app.require_subcommand(1);
  CommonState state;

  // eval
  std::string structure_file, formula_text, team_literal, team_vars;
  bool empty_team = false, explain = false;
  auto* eval = app.add_subcommand("eval", "evaluate a formula on a team");
  eval->add_option("structure", structure_file, "structure file")->required();
  eval->add_option("formula", formula_text, "formula text")->required();
  eval->add_option("--team", team_literal, "team literal, e.g. \"x=0,y=1; x=1,y=1\"");
  eval->add_option("--team-vars", team_vars, "variable domain for --empty-team");
  eval->add_flag("--empty-team", empty_team, "evaluate on the empty team over --team-vars");
  eval->add_flag("--explain", explain, "print witnessing covers and choice teams");
  eval->add_option("--deps", state.deps_file, "dependency definition file");

  // probe
  std::string probe_dep, probe_props;
  int nmax = 3, jobs = 1, sample_count = 2000, pad = 1, rank = 1, max_witnesses = 16;
  std::uint64_t seed = 1;
  auto* probe = app.add_subcommand("probe", "probe closure properties of a dependency");
  probe->add_option("dependency", probe_dep, "descriptor, e.g. dep(1;1) or a registered name")
      ->required();
  probe->add_option("--nmax", nmax, "domain size bound");
  probe->add_option("--props", probe_props, "comma list of empty,down,union,up,domind");
  probe->add_option("--jobs", jobs, "worker threads");
  probe->add_option("--seed", seed, "seed for sampled scales");
  probe->add_option("--sample-count", sample_count, "samples per domain size beyond the caps");
  bool collect_all = false;
  probe->add_flag("--all-counterexamples", collect_all, "keep scanning past the first counterexample");
  probe->add_option("--deps", state.deps_file, "dependency definition file");

  // table1
  auto* table1 = app.add_subcommand("table1", "reproduce the closure grid of the built-ins");
  table1->add_option("--nmax", nmax, "domain size bound");
  table1->add_option("--jobs", jobs, "worker threads");

  // translate
  std::string ufile, vars_text;
  auto* translate = app.add_subcommand("translate", "translate shaped sentences and certify");
  translate->add_option("ufile", ufile, "fixture file, one sentence per line")->required();
  translate->add_option("--vars", vars_text, "team variables, e.g. w or w1,w2")->required();
  translate->add_option("--nmax", nmax, "domain size bound");
  translate->add_option("--pad", pad, "extra team columns");
  translate->add_option("--seed", seed, "sampling seed");
  translate->add_option("--sample-count", sample_count, "sampled teams beyond the caps");

  // relativize
  std::string rel_dep, pred = "P";
  auto* relativize = app.add_subcommand("relativize", "relativize an atom to a predicate");
  relativize->add_option("dependency", rel_dep, "descriptor")->required();
  relativize->add_option("--pred", pred, "unary predicate name");
  relativize->add_option("--nmax", nmax, "domain size bound");
  relativize->add_option("--deps", state.deps_file, "dependency definition file");

  // stepsearch
  std::string step_dep;
  auto* stepsearch = app.add_subcommand("stepsearch", "search for forbidden-step configurations");
  stepsearch->add_option("dependency", step_dep, "descriptor")->required();
  stepsearch->add_option("--nmax", nmax, "domain size bound");
  stepsearch->add_option("--rank", rank, "quantifier rank of the equivalence check");
  stepsearch->add_option("--max-witnesses", max_witnesses, "stop after this many (0 = all)");
  stepsearch->add_option("--deps", state.deps_file, "dependency definition file");

  // nonjumping
  std::string nj_dep;
  auto* nonjumping = app.add_subcommand("nonjumping", "check the climb to maximal members");
  nonjumping->add_option("dependency", nj_dep, "descriptor")->required();
  nonjumping->add_option("--nmax", nmax, "domain size bound");
  nonjumping->add_option("--deps", state.deps_file, "dependency definition file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (eval->parsed())
      return run_eval(structure_file, formula_text, team_literal, team_vars, empty_team, explain,
                      state);
    if (probe->parsed())
      return run_probe(probe_dep, nmax, probe_props, jobs, seed, sample_count, collect_all, state);
    if (table1->parsed()) return run_table1(nmax, jobs, state);
    if (translate->parsed())
      return run_translate(ufile, vars_text, nmax, pad, seed, sample_count, state);
    if (relativize->parsed()) return run_relativize(rel_dep, pred, nmax, state);
    if (stepsearch->parsed()) return run_stepsearch(step_dep, nmax, rank, max_witnesses, state);
    if (nonjumping->parsed()) return run_nonjumping(nj_dep, nmax, state);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

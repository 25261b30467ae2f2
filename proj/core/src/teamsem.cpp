#include "teamlab/teamsem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <unordered_map>

#include "teamlab/tarski.hpp"

namespace teamlab {

bool all_atoms_flagged(const FormulaPtr& f, const Registry& reg, Flag ClosureFlags::* prop) {
  switch (f->kind) {
    case Conn::Lit:
      return true;
    case Conn::And:
    case Conn::Or:
    case Conn::GlobalOr:
      return all_atoms_flagged(f->lhs, reg, prop) && all_atoms_flagged(f->rhs, reg, prop);
    case Conn::Exists:
    case Conn::Forall:
      return all_atoms_flagged(f->body, reg, prop);
    case Conn::Atom: {
      std::vector<int> sizes;
      for (const auto& g : f->groups) sizes.push_back(static_cast<int>(g.size()));
      const DependencySpec& spec = reg.resolve(f->atom, sizes);
      return spec.flags.*prop == Flag::Yes;
    }
  }
  return false;
}

namespace {

// Internal team representation: the variable domain is a sorted name
// list; a team is a bitmask over the n^|vars| assignment rows, indexed
// in mixed radix with the first variable most significant. Universes
// beyond 128 rows are out of range for the evaluator.

struct Dom {
  std::vector<std::string> vars;
  std::uint64_t size = 1;  // n^|vars|
};

using Mask = unsigned __int128;

struct MaskHash {
  std::size_t operator()(Mask m) const {
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    std::uint64_t hi = static_cast<std::uint64_t>(m >> 64);
    std::uint64_t h = lo * 0x9e3779b97f4a7c15ULL;
    h ^= hi + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct MemoSlot {
  bool flat = false;
  std::vector<std::int8_t> dense;
  std::unordered_map<Mask, bool, MaskHash> sparse;
};

int find_var(const std::vector<std::string>& vars, const std::string& v) {
  auto it = std::lower_bound(vars.begin(), vars.end(), v);
  if (it == vars.end() || *it != v) return -1;
  return static_cast<int>(it - vars.begin());
}

struct Engine {
  const Structure& M;
  const Registry& reg;
  EvalOptions opts;
  std::uint64_t steps = 0;

  std::vector<Dom> doms;
  std::map<std::vector<std::string>, int> dom_ids;

  // Everything a node needs at one domain, interned once: the locality
  // projection decision, the memo slot, and the literal row mask.
  struct NodeDomInfo {
    int tgt_dom = -1;  // == own dom when no projection applies
    bool fv_missing = false;
    const std::vector<std::uint32_t>* proj = nullptr;
    bool lit_ready = false;
    Mask lit_sat = 0;
    bool table_built = false;
    MemoSlot memo;
  };

  std::unordered_map<std::uint64_t, NodeDomInfo> node_dom_info;
  std::map<std::pair<int, int>, std::vector<std::uint32_t>> proj_tables;
  std::map<std::pair<int, int>, std::vector<std::uint16_t>> mask_proj_tables;
  std::map<const Formula*, const DependencySpec*> atom_specs;
  std::map<std::pair<const Formula*, std::string>, bool> pinned_cache;
  std::map<const Formula*, bool> dc_cache;

  // Dense universes get their whole truth table computed eagerly; the
  // sweeps over all teams of a structure then run on array lookups.
  static constexpr std::uint64_t kTableBits = 12;
  // Sparse memo entries per (node, domain) stop growing past this; a
  // degenerate search must not drag gigabytes behind it.
  static constexpr std::size_t kSparseMemoCap = std::size_t(1) << 21;
  bool use_tables() const { return opts.memo && opts.locality && opts.pruning; }

  explicit Engine(const Structure& m, const Registry& r, EvalOptions o) : M(m), reg(r), opts(o) {}

  void step(std::uint64_t cost = 1) {
    steps += cost;
    if (steps > opts.budget)
      throw ResourceError("evaluation budget exceeded (" + std::to_string(opts.budget) + " steps)");
  }

  int intern(std::vector<std::string> vars) {
    auto it = dom_ids.find(vars);
    if (it != dom_ids.end()) return it->second;
    std::uint64_t size = positions(M.n, static_cast<int>(vars.size()));
    if (size > 128 || size > opts.max_universe)
      throw ResourceError("assignment universe of " + std::to_string(size) +
                          " rows is beyond the evaluator's range");
    Dom d;
    d.vars = vars;
    d.size = size;
    doms.push_back(std::move(d));
    int id = static_cast<int>(doms.size()) - 1;
    if (id >= 128) throw ResourceError("too many distinct variable domains in one evaluation");
    dom_ids.emplace(std::move(vars), id);
    return id;
  }

  std::uint64_t weight(const Dom& d, int var_pos) const {
    return positions(M.n, static_cast<int>(d.vars.size()) - 1 - var_pos);
  }

  // Row map for projecting src-domain rows onto tgt (tgt.vars ⊆ src.vars).
  const std::vector<std::uint32_t>& proj_table(int src, int tgt) {
    auto key = std::make_pair(src, tgt);
    auto it = proj_tables.find(key);
    if (it != proj_tables.end()) return it->second;
    const Dom& s = doms[static_cast<std::size_t>(src)];
    const Dom& t = doms[static_cast<std::size_t>(tgt)];
    std::vector<std::uint32_t> table(s.size);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> wmap;  // src weight -> tgt weight
    for (std::size_t i = 0; i < t.vars.size(); ++i) {
      int sp = find_var(s.vars, t.vars[i]);
      wmap.emplace_back(weight(s, sp), weight(t, static_cast<int>(i)));
    }
    for (std::uint64_t row = 0; row < s.size; ++row) {
      std::uint64_t out = 0;
      for (std::size_t i = 0; i < t.vars.size(); ++i) {
        std::uint64_t digit = (row / wmap[i].first) % static_cast<std::uint64_t>(M.n);
        out += digit * wmap[i].second;
      }
      table[row] = static_cast<std::uint32_t>(out);
    }
    return proj_tables.emplace(key, std::move(table)).first->second;
  }

  Mask project(Mask mask, int src, int tgt) {
    if (src == tgt) return mask;
    const auto& table = proj_table(src, tgt);
    Mask out = 0;
    for (std::uint64_t row = 0; row < doms[static_cast<std::size_t>(src)].size; ++row)
      if (mask & (Mask(1) << row)) out |= Mask(1) << table[row];
    return out;
  }

  // Whole-mask projection table for dense universes.
  const std::vector<std::uint16_t>& mask_proj(int src, int tgt) {
    auto key = std::make_pair(src, tgt);
    auto it = mask_proj_tables.find(key);
    if (it != mask_proj_tables.end()) return it->second;
    const auto& rows = proj_table(src, tgt);
    std::uint64_t size = doms[static_cast<std::size_t>(src)].size;
    std::vector<std::uint16_t> table(std::size_t(1) << size);
    for (std::uint64_t m = 0; m < table.size(); ++m) {
      std::uint16_t out = 0;
      for (std::uint64_t row = 0; row < size; ++row)
        if (m & (std::uint64_t(1) << row)) out |= std::uint16_t(1) << rows[row];
      table[m] = out;
    }
    return mask_proj_tables.emplace(key, std::move(table)).first->second;
  }

  const DependencySpec& atom_spec(const Formula* f) {
    auto it = atom_specs.find(f);
    if (it != atom_specs.end()) return *it->second;
    std::vector<int> sizes;
    for (const auto& g : f->groups) sizes.push_back(static_cast<int>(g.size()));
    const DependencySpec& spec = reg.resolve(f->atom, sizes);
    atom_specs.emplace(f, &spec);
    return spec;
  }

  bool downwards_closed(const FormulaPtr& f) {
    auto it = dc_cache.find(f.get());
    if (it != dc_cache.end()) return it->second;
    bool dc = all_atoms_flagged(f, reg, &ClosureFlags::downwards);
    dc_cache.emplace(f.get(), dc);
    return dc;
  }

  // Every team satisfying f is constant on v: v is reached through a
  // constancy atom (or a var=constant literal) along conjunctive paths.
  bool pinned(const std::string& v, const FormulaPtr& f) {
    auto key = std::make_pair(f.get(), v);
    auto it = pinned_cache.find(key);
    if (it != pinned_cache.end()) return it->second;
    bool p = false;
    switch (f->kind) {
      case Conn::Lit:
        p = f->lit.is_equality && f->lit.positive &&
            ((f->lit.args[0].is_var() && f->lit.args[0].name == v && !f->lit.args[1].is_var()) ||
             (f->lit.args[1].is_var() && f->lit.args[1].name == v && !f->lit.args[0].is_var()));
        break;
      case Conn::And:
        p = pinned(v, f->lhs) || pinned(v, f->rhs);
        break;
      case Conn::Or:
        p = false;
        break;
      case Conn::GlobalOr:
        p = pinned(v, f->lhs) && pinned(v, f->rhs);
        break;
      case Conn::Exists:
      case Conn::Forall:
        p = f->var != v && pinned(v, f->body);
        break;
      case Conn::Atom: {
        const DependencySpec& spec = atom_spec(f.get());
        bool constant_atom = spec.tag == Builtin::Const ||
                             (spec.tag == Builtin::Dep && spec.split == 0);
        if (constant_atom) {
          const auto& grp = f->groups.back();
          p = std::find(grp.begin(), grp.end(), v) != grp.end();
        }
        break;
      }
    }
    pinned_cache.emplace(key, p);
    return p;
  }

  NodeDomInfo& info_for(const Formula* f, int dom) {
    std::uint64_t key = (reinterpret_cast<std::uint64_t>(f) << 7) | static_cast<std::uint64_t>(dom);
    auto it = node_dom_info.find(key);
    if (it != node_dom_info.end()) return it->second;
    NodeDomInfo info;
    const Dom& d = doms[static_cast<std::size_t>(dom)];
    info.tgt_dom = dom;
    if (opts.locality) {
      std::vector<std::string> tgt;
      for (const auto& v : f->fv)
        if (find_var(d.vars, v) >= 0) tgt.push_back(v);
      info.fv_missing = tgt.size() < f->fv.size();
      if (tgt.size() < d.vars.size()) {
        info.tgt_dom = intern(tgt);
        info.proj = &proj_table(dom, info.tgt_dom);
      }
    }
    if (opts.memo && info.tgt_dom == dom && d.size <= 16) {
      info.memo.flat = true;
      info.memo.dense.assign(std::size_t(1) << d.size, -1);
    }
    return node_dom_info.emplace(key, std::move(info)).first->second;
  }

  bool eval(const FormulaPtr& f, int dom, Mask mask) {
    step();
    NodeDomInfo& info = info_for(f.get(), dom);
    if (info.fv_missing && mask != 0)
      throw DomainError("free variable of the formula missing from the team domain");
    if (info.tgt_dom != dom) {
      // Locality: lax semantics is local, so the truth on X equals the
      // truth on X restricted to the free variables.
      const auto& table = *info.proj;
      Mask pm = 0;
      std::uint64_t size = doms[static_cast<std::size_t>(dom)].size;
      for (std::uint64_t row = 0; row < size; ++row)
        if (mask & (Mask(1) << row)) pm |= Mask(1) << table[row];
      return eval(f, info.tgt_dom, pm);
    }

    if (use_tables() && doms[static_cast<std::size_t>(dom)].size <= kTableBits &&
        !info.table_built && tableable(f, dom))
      build_table(f, info, dom);

    if (opts.memo) {
      if (info.memo.flat) {
        std::int8_t v = info.memo.dense[static_cast<std::size_t>(mask)];
        if (v >= 0) return v != 0;
      } else {
        auto it = info.memo.sparse.find(mask);
        if (it != info.memo.sparse.end()) return it->second;
      }
    }
    bool result = eval_node(f, info, dom, mask);
    if (opts.memo) {
      if (info.memo.flat)
        info.memo.dense[static_cast<std::size_t>(mask)] = result ? 1 : 0;
      else if (info.memo.sparse.size() < kSparseMemoCap)
        info.memo.sparse[mask] = result;
    }
    return result;
  }

  bool eval_node(const FormulaPtr& f, NodeDomInfo& info, int dom, Mask mask) {
    switch (f->kind) {
      case Conn::Lit: {
        if (!info.lit_ready) {
          const Dom& d = doms[static_cast<std::size_t>(dom)];
          Mask sat = 0;
          for (std::uint64_t row = 0; row < d.size; ++row) {
            Assignment s;
            auto vals = tuple_from_index(M.n, static_cast<int>(d.vars.size()), row);
            for (std::size_t i = 0; i < d.vars.size(); ++i) s[d.vars[i]] = vals[i];
            FormulaPtr lit = f_lit(f->lit);
            if (eval_tarski(M, s, lit)) sat |= Mask(1) << row;
          }
          info.lit_sat = sat;
          info.lit_ready = true;
        }
        return (mask & ~info.lit_sat) == 0;
      }
      case Conn::And:
        return eval(f->lhs, dom, mask) && eval(f->rhs, dom, mask);
      case Conn::GlobalOr:
        return eval(f->lhs, dom, mask) || eval(f->rhs, dom, mask);
      case Conn::Or:
        return eval_or(f, dom, mask);
      case Conn::Atom:
        return eval_atom(f, dom, mask);
      case Conn::Forall:
        return eval_forall(f, dom, mask);
      case Conn::Exists:
        return eval_exists(f, dom, mask);
    }
    return false;
  }

  bool eval_or(const FormulaPtr& f, int dom, Mask mask) {
    if (opts.pruning && downwards_closed(f->lhs) && downwards_closed(f->rhs)) {
      // Disjoint splits suffice for downwards closed disjuncts.
      Mask y = mask;
      for (;;) {
        step();
        if (eval(f->lhs, dom, y) && eval(f->rhs, dom, mask & ~y)) return true;
        if (y == 0) break;
        y = (y - 1) & mask;
      }
      return false;
    }
    // Lax split: X = Y ∪ Z with Y, Z ⊆ X possibly overlapping.
    Mask y = mask;
    for (;;) {
      step();
      if (eval(f->lhs, dom, y)) {
        Mask rest = mask & ~y;
        Mask w = 0;
        for (;;) {
          step();
          if (eval(f->rhs, dom, rest | w)) return true;
          w = (w - y) & y;  // ascending submask walk of y
          if (w == 0) break;
        }
      }
      if (y == 0) break;
      y = (y - 1) & mask;
    }
    return false;
  }

  bool eval_atom(const FormulaPtr& f, int dom, Mask mask) {
    const DependencySpec& spec = atom_spec(f.get());
    const Dom& d = doms[static_cast<std::size_t>(dom)];
    std::vector<std::string> tuple;
    for (const auto& g : f->groups) tuple.insert(tuple.end(), g.begin(), g.end());
    std::vector<int> pos;
    for (const auto& v : tuple) {
      int p = find_var(d.vars, v);
      if (p < 0) {
        if (mask != 0) throw DomainError("atom variable '" + v + "' missing from the team domain");
        p = 0;  // irrelevant on the empty team
      }
      pos.push_back(p);
    }
    Relation r;
    r.arity = static_cast<int>(tuple.size());
    for (std::uint64_t row = 0; row < d.size; ++row) {
      if (!(mask & (Mask(1) << row))) continue;
      auto vals = tuple_from_index(M.n, static_cast<int>(d.vars.size()), row);
      std::vector<Element> t;
      t.reserve(pos.size());
      for (int p : pos) t.push_back(vals[static_cast<std::size_t>(p)]);
      r.tuples.push_back(std::move(t));
    }
    r.normalize();
    return dep_membership(spec, M, r);
  }

  // Extension bookkeeping for quantifiers: drop v's old column, then
  // re-add v. base maps each off-v row to the extended row with v=0.
  struct Extension {
    int off_dom;   // dom minus v
    int ext_dom;   // off_dom plus v
    std::uint64_t stride;
  };

  std::map<std::pair<int, std::string>, Extension> ext_cache;
  std::map<std::pair<const Formula*, int>, bool> tableable_cache;

  // Eager tables are sound only when every per-mask evaluation in the
  // subtree stays inside the dense regime; a quantifier whose extension
  // universe outgrows it would drag arbitrary teams into deep searches.
  bool tableable(const FormulaPtr& f, int dom) {
    auto key = std::make_pair(f.get(), dom);
    auto it = tableable_cache.find(key);
    if (it != tableable_cache.end()) return it->second;
    bool ok = true;
    switch (f->kind) {
      case Conn::Lit:
      case Conn::Atom:
        break;
      case Conn::And:
      case Conn::Or:
      case Conn::GlobalOr:
        ok = tableable(f->lhs, dom) && tableable(f->rhs, dom);
        break;
      case Conn::Exists:
      case Conn::Forall: {
        const Dom& d = doms[static_cast<std::size_t>(dom)];
        std::size_t off = d.vars.size();
        if (std::binary_search(d.vars.begin(), d.vars.end(), f->var)) --off;
        std::uint64_t ext_size = positions(M.n, static_cast<int>(off) + 1);
        if (ext_size > kTableBits) {
          ok = false;
        } else {
          Extension e = extension(dom, f->var);
          ok = tableable(f->body, e.ext_dom);
        }
        break;
      }
    }
    tableable_cache.emplace(key, ok);
    return ok;
  }

  Extension extension(int dom, const std::string& v) {
    auto key = std::make_pair(dom, v);
    auto it = ext_cache.find(key);
    if (it != ext_cache.end()) return it->second;
    const Dom& d = doms[static_cast<std::size_t>(dom)];
    std::vector<std::string> off = d.vars;
    off.erase(std::remove(off.begin(), off.end(), v), off.end());
    std::vector<std::string> ext = off;
    ext.insert(std::lower_bound(ext.begin(), ext.end(), v), v);
    Extension e;
    e.off_dom = intern(off);
    e.ext_dom = intern(ext);
    int vp = find_var(doms[static_cast<std::size_t>(e.ext_dom)].vars, v);
    e.stride = weight(doms[static_cast<std::size_t>(e.ext_dom)], vp);
    ext_cache.emplace(key, e);
    return e;
  }

  // Row of the extended domain reached from off-v row p with value a.
  std::uint64_t embed(const Extension& e, std::uint64_t p, Element a) {
    const Dom& od = doms[static_cast<std::size_t>(e.off_dom)];
    const Dom& ed = doms[static_cast<std::size_t>(e.ext_dom)];
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < od.vars.size(); ++i) {
      std::uint64_t digit = (p / weight(od, static_cast<int>(i))) % static_cast<std::uint64_t>(M.n);
      int ep = find_var(ed.vars, od.vars[i]);
      out += digit * weight(ed, ep);
    }
    return out + static_cast<std::uint64_t>(a) * e.stride;
  }

  bool eval_forall(const FormulaPtr& f, int dom, Mask mask) {
    Extension e = extension(dom, f->var);
    Mask p = project(mask, dom, e.off_dom);
    Mask y = 0;
    const Dom& od = doms[static_cast<std::size_t>(e.off_dom)];
    for (std::uint64_t row = 0; row < od.size; ++row) {
      if (!(p & (Mask(1) << row))) continue;
      for (Element a = 0; a < M.n; ++a) y |= Mask(1) << embed(e, row, a);
    }
    return eval(f->body, e.ext_dom, y);
  }

  // Per-(node, domain) plan for the existential search: domains, the
  // per-group option bitsets, and a dense shortcut into the body table.
  struct ExistsPlan {
    bool v_free = false;
    int off_dom = -1;
    int group_dom = -1;
    int cand_dom = -1;
    Extension ce{};
    bool pinned_v = false;
    bool dc_body = false;
    // option_bits[g][a]: candidate rows contributed by group row g at value a
    std::vector<std::vector<Mask>> option_bits;
    const std::int8_t* body_table = nullptr;
    const std::uint16_t* body_proj = nullptr;
  };
  std::map<std::pair<const Formula*, int>, ExistsPlan> exists_plans;

  const ExistsPlan& exists_plan(const FormulaPtr& f, int dom) {
    auto key = std::make_pair(f.get(), dom);
    auto it = exists_plans.find(key);
    if (it != exists_plans.end()) return it->second;
    ExistsPlan plan;
    const std::string& v = f->var;
    Extension e = extension(dom, v);
    plan.off_dom = e.off_dom;
    plan.v_free = std::binary_search(f->body->fv.begin(), f->body->fv.end(), v);
    if (opts.locality && !plan.v_free) return exists_plans.emplace(key, plan).first->second;

    plan.group_dom = e.off_dom;
    if (opts.locality) {
      std::vector<std::string> g;
      for (const auto& w : f->body->fv)
        if (w != v && find_var(doms[static_cast<std::size_t>(e.off_dom)].vars, w) >= 0)
          g.push_back(w);
      plan.group_dom = intern(g);
    }
    std::vector<std::string> cand_vars = doms[static_cast<std::size_t>(plan.group_dom)].vars;
    cand_vars.insert(std::lower_bound(cand_vars.begin(), cand_vars.end(), v), v);
    plan.cand_dom = intern(cand_vars);
    plan.ce.off_dom = plan.group_dom;
    plan.ce.ext_dom = plan.cand_dom;
    plan.ce.stride = weight(doms[static_cast<std::size_t>(plan.cand_dom)],
                            find_var(doms[static_cast<std::size_t>(plan.cand_dom)].vars, v));
    plan.pinned_v = opts.pruning && pinned(v, f->body);
    plan.dc_body = opts.pruning && downwards_closed(f->body);
    std::uint64_t gsize = doms[static_cast<std::size_t>(plan.group_dom)].size;
    plan.option_bits.resize(gsize);
    for (std::uint64_t g = 0; g < gsize; ++g) {
      plan.option_bits[g].resize(static_cast<std::size_t>(M.n));
      for (Element a = 0; a < M.n; ++a)
        plan.option_bits[g][static_cast<std::size_t>(a)] = Mask(1) << embed(plan.ce, g, a);
    }
    // Dense shortcut when the body is table-backed over the candidate
    // domain.
    if (use_tables() && doms[static_cast<std::size_t>(plan.cand_dom)].size <= kTableBits &&
        tableable(f->body, plan.cand_dom)) {
      NodeDomInfo* bi = &info_for(f->body.get(), plan.cand_dom);
      int eff = bi->tgt_dom;
      if (eff != plan.cand_dom) bi = &info_for(f->body.get(), eff);
      if (!bi->table_built) build_table(f->body, *bi, eff);
      plan.body_table = bi->memo.dense.data();
      plan.body_proj = eff == plan.cand_dom ? nullptr : mask_proj(plan.cand_dom, eff).data();
    }
    return exists_plans.emplace(key, std::move(plan)).first->second;
  }

  bool eval_exists(const FormulaPtr& f, int dom, Mask mask) {
    const ExistsPlan& plan = exists_plan(f, dom);
    Mask p = project(mask, dom, plan.off_dom);
    if (opts.locality && !plan.v_free) {
      // The choice value never matters; any covering choice projects to
      // the off-v team.
      return eval(f->body, plan.off_dom, p);
    }

    auto body_value = [&](Mask y) {
      if (plan.body_table) {
        std::uint64_t m = static_cast<std::uint64_t>(y);
        return plan.body_table[plan.body_proj ? plan.body_proj[m] : m] != 0;
      }
      return eval(f->body, plan.cand_dom, y);
    };

    // Rows of the extension grouped by the coordinates the body can
    // see. With locality the group key is fv(body) minus v, otherwise
    // every off-v row is its own group.
    std::vector<std::uint64_t> groups;  // distinct group rows, ascending
    {
      Mask gm = project(p, plan.off_dom, plan.group_dom);
      const Dom& gd = doms[static_cast<std::size_t>(plan.group_dom)];
      for (std::uint64_t row = 0; row < gd.size; ++row)
        if (gm & (Mask(1) << row)) groups.push_back(row);
    }
    std::size_t m = groups.size();
    if (m == 0) return body_value(0);

    if (plan.pinned_v) {
      // Only constant choice functions can satisfy a body that pins v.
      for (Element a = 0; a < M.n; ++a) {
        step();
        Mask y = 0;
        for (std::uint64_t g : groups) y |= plan.option_bits[g][static_cast<std::size_t>(a)];
        if (body_value(y)) return true;
      }
      return false;
    }

    bool dc = plan.dc_body;
    std::uint64_t options = dc ? static_cast<std::uint64_t>(M.n)
                               : (std::uint64_t(1) << M.n) - 1;
    double total = std::pow(static_cast<double>(options), static_cast<double>(m));
    if (total > static_cast<double>(opts.budget))
      throw ResourceError("existential search space of ~" + std::to_string(total) +
                          " candidates exceeds the budget");

    // Odometer over per-group choices: a single value when the body is
    // downwards closed, a nonempty value set otherwise.
    std::vector<std::uint64_t> code(m, 0);
    std::vector<Mask> bits(m);
    auto group_bits = [&](std::size_t i) {
      std::uint64_t c = code[i];
      const auto& opts_g = plan.option_bits[groups[i]];
      Mask y = 0;
      if (dc) {
        y = opts_g[static_cast<std::size_t>(c)];
      } else {
        for (Element a = 0; a < M.n; ++a)
          if ((c + 1) & (std::uint64_t(1) << a)) y |= opts_g[static_cast<std::size_t>(a)];
      }
      return y;
    };
    for (std::size_t i = 0; i < m; ++i) bits[i] = group_bits(i);
    for (;;) {
      step();
      Mask y = 0;
      for (std::size_t i = 0; i < m; ++i) y |= bits[i];
      if (body_value(y)) return true;
      std::size_t i = 0;
      for (; i < m; ++i) {
        if (++code[i] < options) {
          bits[i] = group_bits(i);
          break;
        }
        code[i] = 0;
        bits[i] = group_bits(i);
      }
      if (i == m) break;
    }
    return false;
  }

  // Dense-table construction. A child of a connective lives, after its
  // locality projection, over a sub-domain of the parent's, so its table
  // exists whenever the parent's does; reads go through a whole-mask
  // projection table.
  struct TableRef {
    const std::int8_t* table;
    const std::uint16_t* proj;  // null when the domains coincide
    bool operator()(std::uint64_t m) const {
      return table[proj ? proj[m] : m] != 0;
    }
  };

  TableRef table_ref(const FormulaPtr& child, int dom) {
    NodeDomInfo* ci = &info_for(child.get(), dom);
    int tgt = ci->tgt_dom;
    if (tgt != dom) ci = &info_for(child.get(), tgt);
    if (!ci->table_built) build_table(child, *ci, tgt);
    TableRef ref;
    ref.table = ci->memo.dense.data();
    ref.proj = tgt == dom ? nullptr : mask_proj(dom, tgt).data();
    return ref;
  }

  void build_table(const FormulaPtr& f, NodeDomInfo& info, int dom) {
    info.table_built = true;
    const Dom& d = doms[static_cast<std::size_t>(dom)];
    std::uint64_t total = std::uint64_t(1) << d.size;
    if (!info.memo.flat) {
      info.memo.flat = true;
      info.memo.dense.assign(total, -1);
    }
    step(total);
    auto& dense = info.memo.dense;
    switch (f->kind) {
      case Conn::Lit: {
        eval_node(f, info, dom, 0);  // forces the literal row mask
        Mask sat = info.lit_sat;
        for (std::uint64_t m = 0; m < total; ++m)
          dense[m] = (static_cast<Mask>(m) & ~sat) == 0 ? 1 : 0;
        break;
      }
      case Conn::And: {
        TableRef l = table_ref(f->lhs, dom), r = table_ref(f->rhs, dom);
        for (std::uint64_t m = 0; m < total; ++m) dense[m] = (l(m) && r(m)) ? 1 : 0;
        break;
      }
      case Conn::GlobalOr: {
        TableRef l = table_ref(f->lhs, dom), r = table_ref(f->rhs, dom);
        for (std::uint64_t m = 0; m < total; ++m) dense[m] = (l(m) || r(m)) ? 1 : 0;
        break;
      }
      case Conn::Or: {
        TableRef l = table_ref(f->lhs, dom), r = table_ref(f->rhs, dom);
        bool disjoint =
            opts.pruning && downwards_closed(f->lhs) && downwards_closed(f->rhs);
        std::uint64_t work = 0;
        for (std::uint64_t x = 0; x < total; ++x) {
          bool res = false;
          if (disjoint) {
            for (std::uint64_t y = x;; y = (y - 1) & x) {
              ++work;
              if (l(y) && r(x & ~y)) {
                res = true;
                break;
              }
              if (y == 0) break;
            }
          } else {
            for (std::uint64_t y = x; !res; y = (y - 1) & x) {
              ++work;
              if (l(y)) {
                std::uint64_t rest = x & ~y;
                for (std::uint64_t w = 0;; w = (w - y) & y) {
                  ++work;
                  if (r(rest | w)) {
                    res = true;
                    break;
                  }
                  if (w == y) break;
                }
              }
              if (y == 0) break;
            }
          }
          dense[x] = res ? 1 : 0;
          if (work > (std::uint64_t(1) << 22)) {
            step(work);
            work = 0;
          }
        }
        step(work);
        break;
      }
      case Conn::Atom:
      case Conn::Exists:
      case Conn::Forall:
        for (std::uint64_t m = 0; m < total; ++m)
          dense[m] = eval_node(f, info, dom, static_cast<Mask>(m)) ? 1 : 0;
        break;
    }
  }
};

std::pair<int, Mask> team_to_internal(Engine& eng, const Team& X, const FormulaPtr& f) {
  std::vector<std::string> vars = X.vars;
  for (std::size_t i = 1; i < vars.size(); ++i)
    if (vars[i] == vars[i - 1]) throw DomainError("duplicate variable in team domain");
  // An empty team may carry any domain; extend it so the free variables
  // resolve.
  std::vector<std::string> full = vars;
  for (const auto& v : f->fv)
    if (std::find(full.begin(), full.end(), v) == full.end()) {
      if (!X.rows.empty())
        throw DomainError("free variable '" + v + "' missing from the team domain");
      full.push_back(v);
    }
  std::sort(full.begin(), full.end());
  full.erase(std::unique(full.begin(), full.end()), full.end());

  // With locality on, restrict to the free variables up front so large
  // carrier domains stay out of the mask universe.
  std::vector<std::string> used;
  if (eng.opts.locality) {
    used = {f->fv.begin(), f->fv.end()};
  } else {
    used = full;
  }
  int dom = eng.intern(used);
  const Dom& d = eng.doms[static_cast<std::size_t>(dom)];
  std::vector<int> src(d.vars.size(), -1);
  for (std::size_t i = 0; i < d.vars.size(); ++i) {
    auto it = std::find(X.vars.begin(), X.vars.end(), d.vars[i]);
    src[i] = it == X.vars.end() ? -1 : static_cast<int>(it - X.vars.begin());
  }
  Mask mask = 0;
  for (const auto& row : X.rows) {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < d.vars.size(); ++i) {
      Element val = src[i] >= 0 ? row[static_cast<std::size_t>(src[i])] : 0;
      idx += static_cast<std::uint64_t>(val) * eng.weight(d, static_cast<int>(i));
    }
    mask |= Mask(1) << idx;
  }
  return {dom, mask};
}

}  // namespace

struct TeamEvalSession::Impl {
  Engine eng;
  Impl(const Structure& M, const Registry& reg, EvalOptions opts) : eng(M, reg, opts) {}
};

TeamEvalSession::TeamEvalSession(const Structure& M, const Registry& reg, EvalOptions opts)
    : impl_(std::make_unique<Impl>(M, reg, opts)) {
  M.validate();
}

TeamEvalSession::~TeamEvalSession() = default;

bool TeamEvalSession::eval(const Team& X, const FormulaPtr& f) {
  impl_->eng.steps = 0;
  auto [dom, mask] = team_to_internal(impl_->eng, X, f);
  return impl_->eng.eval(f, dom, mask);
}

bool TeamEvalSession::eval_mask(const FormulaPtr& f, const std::vector<std::string>& vars,
                                std::uint64_t mask) {
  if (!std::is_sorted(vars.begin(), vars.end()))
    throw DomainError("eval_mask needs the variable domain in sorted order");
  impl_->eng.steps = 0;
  int dom = impl_->eng.intern(vars);
  if (impl_->eng.doms[static_cast<std::size_t>(dom)].size < 64 &&
      mask >> impl_->eng.doms[static_cast<std::size_t>(dom)].size)
    throw DomainError("team mask has bits outside the assignment universe");
  return impl_->eng.eval(f, dom, static_cast<Mask>(mask));
}

void TeamEvalSession::clear() {
  EvalOptions opts = impl_->eng.opts;
  const Structure& M = impl_->eng.M;
  const Registry& reg = impl_->eng.reg;
  impl_ = std::make_unique<Impl>(M, reg, opts);
}

bool eval_team(const Structure& M, const Team& X, const FormulaPtr& f, const Registry& reg,
               const EvalOptions& opts) {
  TeamEvalSession session(M, reg, opts);
  return session.eval(X, f);
}

bool check_flatness(const Structure& M, const Team& X, const FormulaPtr& f, const Registry& reg) {
  if (contains_atom(f) || contains_global_or(f))
    throw DomainError("flatness only concerns plain first order formulas");
  bool team_truth = eval_team(M, X, f, reg);
  bool pointwise = true;
  for (const auto& s : X.assignments())
    if (!eval_tarski(M, s, f)) {
      pointwise = false;
      break;
    }
  return team_truth == pointwise;
}

// ---------------------------------------------------------------------------
// Explanation: re-runs the evaluation, printing the witnesses per rule.

namespace {

struct Explainer {
  const Structure& M;
  const Registry& reg;
  TeamEvalSession session;
  std::ostream& os;

  Explainer(const Structure& m, const Registry& r, std::ostream& o)
      : M(m), reg(r), session(m, r), os(o) {}

  void indent(int depth) {
    for (int i = 0; i < depth; ++i) os << "  ";
  }

  Team restrict_team(const Team& X, const std::vector<std::string>& fv) {
    std::vector<std::string> vars;
    for (const auto& v : X.vars)
      if (std::find(fv.begin(), fv.end(), v) != fv.end()) vars.push_back(v);
    std::vector<int> idx;
    for (const auto& v : vars) idx.push_back(X.var_index(v));
    std::vector<std::vector<Element>> rows;
    for (const auto& r : X.rows) {
      std::vector<Element> row;
      for (int i : idx) row.push_back(r[static_cast<std::size_t>(i)]);
      rows.push_back(std::move(row));
    }
    return Team::of(std::move(vars), std::move(rows));
  }

  std::vector<Team> subteams(const Team& X) {
    std::vector<Team> out;
    std::size_t count = X.rows.size();
    for (std::uint64_t sel = 0; sel < (std::uint64_t(1) << count); ++sel) {
      Team t;
      t.vars = X.vars;
      for (std::size_t i = 0; i < count; ++i)
        if (sel & (std::uint64_t(1) << i)) t.rows.push_back(X.rows[i]);
      out.push_back(std::move(t));
    }
    return out;
  }

  void explain(const FormulaPtr& f, const Team& X, int depth) {
    bool holds = session.eval(X, f);
    indent(depth);
    switch (f->kind) {
      case Conn::Lit:
        os << "literal " << print_literal(f->lit) << " on " << X.print() << ": "
           << (holds ? "true" : "false");
        if (!holds) {
          for (const auto& s : X.assignments()) {
            FormulaPtr lit = f_lit(f->lit);
            if (!eval_tarski(M, s, lit)) {
              os << "  (fails at ";
              bool first = true;
              for (const auto& [k, v] : s) {
                if (!first) os << ",";
                os << k << "=" << v;
                first = false;
              }
              os << ")";
              break;
            }
          }
        }
        os << "\n";
        break;
      case Conn::And:
        os << "and on " << X.print() << ": " << (holds ? "true" : "false") << "\n";
        explain(f->lhs, X, depth + 1);
        explain(f->rhs, X, depth + 1);
        break;
      case Conn::GlobalOr: {
        os << "gor on " << X.print() << ": " << (holds ? "true" : "false") << "\n";
        if (holds) {
          if (session.eval(X, f->lhs)) explain(f->lhs, X, depth + 1);
          else explain(f->rhs, X, depth + 1);
        }
        break;
      }
      case Conn::Or: {
        os << "or on " << X.print() << ": " << (holds ? "true" : "false");
        if (holds) {
          for (const auto& y : subteams(X)) {
            if (!session.eval(y, f->lhs)) continue;
            Team rest;
            rest.vars = X.vars;
            for (const auto& r : X.rows)
              if (std::find(y.rows.begin(), y.rows.end(), r) == y.rows.end())
                rest.rows.push_back(r);
            bool done = false;
            for (const auto& w : subteams(y)) {
              Team z;
              z.vars = X.vars;
              z.rows = rest.rows;
              z.rows.insert(z.rows.end(), w.rows.begin(), w.rows.end());
              z.normalize();
              if (session.eval(z, f->rhs)) {
                os << "  cover Y=" << y.print() << " Z=" << z.print() << "\n";
                explain(f->lhs, y, depth + 1);
                explain(f->rhs, z, depth + 1);
                done = true;
                break;
              }
            }
            if (done) return;
          }
        }
        os << "\n";
        break;
      }
      case Conn::Forall: {
        Team y = extend_universal(X, f->var, M);
        os << "A " << f->var << ". on " << X.print() << ": " << (holds ? "true" : "false")
           << "  extension " << y.print() << "\n";
        explain(f->body, y, depth + 1);
        break;
      }
      case Conn::Exists: {
        os << "E " << f->var << ". on " << X.print() << ": " << (holds ? "true" : "false");
        if (holds) {
          Team full = extend_universal(X, f->var, M);
          // Search covering subteams of the full extension, smallest first.
          std::vector<Team> cands = subteams(full);
          std::stable_sort(cands.begin(), cands.end(),
                           [](const Team& a, const Team& b) { return a.rows.size() < b.rows.size(); });
          std::vector<std::string> offv;
          for (const auto& w : X.vars)
            if (w != f->var) offv.push_back(w);
          Relation want = team_projection(X, offv);
          for (const auto& y : cands) {
            if (team_projection(y, offv) != want) continue;
            if (session.eval(y, f->body)) {
              os << "  choice team " << y.print() << "\n";
              explain(f->body, y, depth + 1);
              return;
            }
          }
        }
        os << "\n";
        break;
      }
      case Conn::Atom: {
        std::vector<std::string> tuple;
        for (const auto& g : f->groups) tuple.insert(tuple.end(), g.begin(), g.end());
        os << "atom " << f->atom << " on " << X.print() << ": " << (holds ? "true" : "false");
        if (!X.rows.empty() || !tuple.empty()) {
          Team padded = X;
          for (const auto& v : tuple)
            if (padded.var_index(v) < 0 && padded.rows.empty()) padded.vars.push_back(v);
          Relation r = team_projection(padded, tuple);
          os << "  projection ";
          os << "{";
          for (std::size_t i = 0; i < r.tuples.size(); ++i) {
            if (i) os << ",";
            os << "(";
            for (std::size_t j = 0; j < r.tuples[i].size(); ++j) {
              if (j) os << ",";
              os << r.tuples[i][j];
            }
            os << ")";
          }
          os << "}";
        }
        os << "\n";
        break;
      }
    }
  }
};

}  // namespace

void explain_eval(const Structure& M, const Team& X, const FormulaPtr& f, const Registry& reg,
                  std::ostream& os) {
  Explainer ex(M, reg, os);
  ex.explain(f, X, 0);
}

}  // namespace teamlab

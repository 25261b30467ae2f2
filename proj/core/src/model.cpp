#include "teamlab/model.hpp"

#include <algorithm>
#include <sstream>

namespace teamlab {

void Relation::normalize() {
  std::sort(tuples.begin(), tuples.end());
  tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
}

bool Relation::contains(const std::vector<Element>& t) const {
  return std::binary_search(tuples.begin(), tuples.end(), t);
}

bool Relation::subset_of(const Relation& other) const {
  if (arity != other.arity) return false;
  return std::all_of(tuples.begin(), tuples.end(),
                     [&](const auto& t) { return other.contains(t); });
}

std::uint64_t tuple_index(int n, const std::vector<Element>& t) {
  std::uint64_t idx = 0;
  for (Element e : t) idx = idx * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(e);
  return idx;
}

std::vector<Element> tuple_from_index(int n, int k, std::uint64_t idx) {
  std::vector<Element> t(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    t[static_cast<std::size_t>(i)] = static_cast<Element>(idx % static_cast<std::uint64_t>(n));
    idx /= static_cast<std::uint64_t>(n);
  }
  return t;
}

Relation Relation::from_mask(int n, int k, std::uint64_t mask) {
  Relation r;
  r.arity = k;
  std::uint64_t p = positions(n, k);
  for (std::uint64_t i = 0; i < p; ++i)
    if (mask & (std::uint64_t(1) << i)) r.tuples.push_back(tuple_from_index(n, k, i));
  r.normalize();
  return r;
}

std::uint64_t Relation::to_mask(int n) const {
  std::uint64_t p = positions(n, arity);
  if (p > 64) throw ResourceError("relation too large for a 64-bit mask");
  std::uint64_t mask = 0;
  for (const auto& t : tuples) mask |= std::uint64_t(1) << tuple_index(n, t);
  return mask;
}

void Structure::validate() const {
  if (n < 1) throw DomainError("domain size must be at least 1");
  for (const auto& [name, rel] : relations) {
    for (const auto& t : rel.tuples) {
      if (static_cast<int>(t.size()) != rel.arity)
        throw DomainError("relation '" + name + "' has a tuple of wrong arity");
      for (Element e : t)
        if (e < 0 || e >= n)
          throw DomainError("relation '" + name + "' mentions element out of range");
    }
  }
  for (const auto& [name, v] : constants)
    if (v < 0 || v >= n) throw DomainError("constant '" + name + "' out of range");
  if (pred) {
    auto it = relations.find(*pred);
    if (it == relations.end() || it->second.arity != 1)
      throw DomainError("distinguished predicate '" + *pred + "' must be a declared unary relation");
  }
}

bool Structure::same_signature(const Structure& other) const {
  if (constants.size() != other.constants.size() || relations.size() != other.relations.size())
    return false;
  for (const auto& [name, rel] : relations) {
    auto it = other.relations.find(name);
    if (it == other.relations.end() || it->second.arity != rel.arity) return false;
  }
  for (const auto& [name, v] : constants)
    if (!other.constants.count(name)) return false;
  return true;
}

void Team::normalize() {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
}

int Team::var_index(const std::string& v) const {
  auto it = std::find(vars.begin(), vars.end(), v);
  return it == vars.end() ? -1 : static_cast<int>(it - vars.begin());
}

Team Team::empty_team(std::vector<std::string> vars) {
  Team t;
  t.vars = std::move(vars);
  return t;
}

Team Team::singleton_empty() {
  Team t;
  t.rows.push_back({});
  return t;
}

Team Team::of(std::vector<std::string> vars, std::vector<std::vector<Element>> rows) {
  Team t;
  t.vars = std::move(vars);
  t.rows = std::move(rows);
  for (const auto& r : t.rows)
    if (r.size() != t.vars.size()) throw DomainError("team row width does not match the domain");
  t.normalize();
  return t;
}

std::vector<Assignment> Team::assignments() const {
  std::vector<Assignment> out;
  for (const auto& r : rows) {
    Assignment a;
    for (std::size_t i = 0; i < vars.size(); ++i) a[vars[i]] = r[i];
    out.push_back(std::move(a));
  }
  return out;
}

std::string Team::print() const {
  std::ostringstream os;
  os << "{";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r) os << "; ";
    if (vars.empty()) os << "()";
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (i) os << ",";
      os << vars[i] << "=" << rows[r][i];
    }
  }
  os << "}";
  return os.str();
}

Relation team_projection(const Team& X, const std::vector<std::string>& tuple) {
  std::vector<int> idx;
  idx.reserve(tuple.size());
  for (const auto& v : tuple) {
    int i = X.var_index(v);
    if (i < 0) throw DomainError("unknown variable '" + v + "' in projection");
    idx.push_back(i);
  }
  Relation r;
  r.arity = static_cast<int>(tuple.size());
  for (const auto& row : X.rows) {
    std::vector<Element> t;
    t.reserve(idx.size());
    for (int i : idx) t.push_back(row[static_cast<std::size_t>(i)]);
    r.tuples.push_back(std::move(t));
  }
  r.normalize();
  return r;
}

Team extend_universal(const Team& X, const std::string& v, const Structure& M) {
  int pos = X.var_index(v);
  Team out;
  out.vars = X.vars;
  if (pos < 0) {
    out.vars.push_back(v);
    pos = static_cast<int>(out.vars.size()) - 1;
  }
  for (const auto& row : X.rows) {
    std::vector<Element> ext = row;
    if (static_cast<std::size_t>(pos) == row.size()) ext.push_back(0);
    for (Element m = 0; m < M.n; ++m) {
      ext[static_cast<std::size_t>(pos)] = m;
      out.rows.push_back(ext);
    }
  }
  out.normalize();
  return out;
}

Team extend_choice(const Team& X, const std::string& v,
                   const std::map<Assignment, std::vector<Element>>& H) {
  int pos = X.var_index(v);
  Team out;
  out.vars = X.vars;
  if (pos < 0) {
    out.vars.push_back(v);
    pos = static_cast<int>(out.vars.size()) - 1;
  }
  for (const auto& row : X.rows) {
    Assignment a;
    for (std::size_t i = 0; i < X.vars.size(); ++i) a[X.vars[i]] = row[i];
    auto it = H.find(a);
    if (it == H.end()) throw DomainError("choice function undefined on a team member");
    if (it->second.empty()) throw DomainError("choice function takes an empty value");
    std::vector<Element> ext = row;
    if (static_cast<std::size_t>(pos) == row.size()) ext.push_back(0);
    for (Element m : it->second) {
      ext[static_cast<std::size_t>(pos)] = m;
      out.rows.push_back(ext);
    }
  }
  out.normalize();
  return out;
}

std::set<Element> fld(const Relation& R) {
  std::set<Element> out;
  for (const auto& t : R.tuples) out.insert(t.begin(), t.end());
  return out;
}

std::uint64_t positions(int n, int k) {
  if (n < 1 || k < 0) throw DomainError("positions: need n >= 1, k >= 0");
  std::uint64_t p = 1;
  for (int i = 0; i < k; ++i) {
    if (p > (std::uint64_t(1) << 62) / static_cast<std::uint64_t>(n))
      throw ResourceError("n^k overflows the supported range");
    p *= static_cast<std::uint64_t>(n);
  }
  return p;
}

static std::uint64_t guarded_positions(int n, int k, int max_positions) {
  std::uint64_t p = positions(n, k);
  if (p > static_cast<std::uint64_t>(max_positions))
    throw ResourceError("enumeration over " + std::to_string(p) +
                        " tuple positions exceeds the cap of " + std::to_string(max_positions));
  return p;
}

RelationEnumerator::RelationEnumerator(int n, int k, int max_positions) : n_(n), k_(k) {
  std::uint64_t p = guarded_positions(n, k, max_positions);
  total_ = std::uint64_t(1) << p;
}

bool RelationEnumerator::next(Relation& out) {
  if (done_) return false;
  out = Relation::from_mask(n_, k_, mask_);
  if (++mask_ == total_) done_ = true;
  return true;
}

Team team_from_mask(int n, const std::vector<std::string>& vars, std::uint64_t mask) {
  Team t;
  t.vars = vars;
  std::uint64_t p = positions(n, static_cast<int>(vars.size()));
  for (std::uint64_t i = 0; i < p; ++i)
    if (mask & (std::uint64_t(1) << i))
      t.rows.push_back(tuple_from_index(n, static_cast<int>(vars.size()), i));
  t.normalize();
  return t;
}

std::uint64_t team_to_mask(int n, const Team& X) {
  std::uint64_t p = positions(n, static_cast<int>(X.vars.size()));
  if (p > 64) throw ResourceError("team too large for a 64-bit mask");
  std::uint64_t mask = 0;
  for (const auto& r : X.rows) mask |= std::uint64_t(1) << tuple_index(n, r);
  return mask;
}

TeamEnumerator::TeamEnumerator(int n, std::vector<std::string> vars, int max_positions)
    : n_(n), vars_(std::move(vars)) {
  std::uint64_t p = guarded_positions(n, static_cast<int>(vars_.size()), max_positions);
  total_ = std::uint64_t(1) << p;
}

bool TeamEnumerator::next(Team& out) {
  if (done_) return false;
  out = team_from_mask(n_, vars_, mask_);
  if (++mask_ == total_) done_ = true;
  return true;
}

}  // namespace teamlab

#include "teamlab/atoms.hpp"

#include <algorithm>

namespace teamlab {

bool DependencySpec::two_group() const {
  return tag == Builtin::Dep || tag == Builtin::Inc || tag == Builtin::Exc ||
         tag == Builtin::Anon || tag == Builtin::Indep;
}

const char* builtin_base_name(Builtin tag) {
  switch (tag) {
    case Builtin::Dep: return "dep";
    case Builtin::Inc: return "inc";
    case Builtin::Exc: return "exc";
    case Builtin::Anon: return "anon";
    case Builtin::Indep: return "indep";
    case Builtin::Ne: return "ne";
    case Builtin::Const: return "const";
    case Builtin::All: return "all";
    case Builtin::User: return "user";
  }
  return "?";
}

ClosureFlags builtin_flags(Builtin tag) {
  const Flag Y = Flag::Yes, N = Flag::No;
  switch (tag) {
    case Builtin::Dep:   return {Y, Y, N, N, Y};
    case Builtin::Inc:   return {Y, N, Y, N, Y};
    case Builtin::Exc:   return {Y, Y, N, N, Y};
    case Builtin::Anon:  return {Y, N, Y, N, Y};
    case Builtin::Indep: return {Y, N, N, N, Y};
    case Builtin::Ne:    return {N, N, N, Y, Y};
    case Builtin::All:   return {N, N, N, Y, N};
    // Constancy is the degenerate functional dependence; same row.
    case Builtin::Const: return {Y, Y, N, N, Y};
    case Builtin::User:  return {};
  }
  return {};
}

std::string canonical_dep_name(Builtin tag, int k1, int k2) {
  std::string base = builtin_base_name(tag);
  switch (tag) {
    case Builtin::Dep:
    case Builtin::Inc:
    case Builtin::Exc:
    case Builtin::Anon:
    case Builtin::Indep:
      return base + "(" + std::to_string(k1) + ";" + std::to_string(k2) + ")";
    default:
      return base + "(" + std::to_string(k1) + ")";
  }
}

static Builtin tag_of_base(const std::string& base) {
  if (base == "dep") return Builtin::Dep;
  if (base == "inc") return Builtin::Inc;
  if (base == "exc") return Builtin::Exc;
  if (base == "anon") return Builtin::Anon;
  if (base == "indep") return Builtin::Indep;
  if (base == "ne") return Builtin::Ne;
  if (base == "const") return Builtin::Const;
  if (base == "all") return Builtin::All;
  return Builtin::User;
}

Registry::Registry() {
  intern(Builtin::Dep, 1, 1);
  intern(Builtin::Inc, 1, 1);
  intern(Builtin::Exc, 1, 1);
  intern(Builtin::Anon, 1, 1);
  intern(Builtin::Indep, 1, 1);
  intern(Builtin::Ne, 1, 0);
  intern(Builtin::Const, 1, 0);
  intern(Builtin::All, 1, 0);
}

const DependencySpec& Registry::intern(Builtin tag, int k1, int k2) const {
  std::string name = canonical_dep_name(tag, k1, k2);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = specs_.find(name);
  if (it != specs_.end()) return *it->second;
  auto spec = std::make_unique<DependencySpec>();
  spec->name = name;
  spec->tag = tag;
  spec->arity = k1 + k2;
  spec->split = spec->two_group() ? k1 : -1;
  if (!spec->two_group()) spec->arity = k1;
  spec->flags = builtin_flags(tag);
  auto [pos, ok] = specs_.emplace(name, std::move(spec));
  (void)ok;
  return *pos->second;
}

const DependencySpec& Registry::register_user(const std::string& name, int arity,
                                              FormulaPtr sentence) {
  if (tag_of_base(name) != Builtin::User)
    throw RegistryError("'" + name + "' is a built-in dependency name");
  if (name.empty() || name[0] == '_')
    throw RegistryError("dependency names may not start with '_'");
  if (arity < 0) throw RegistryError("dependency arity must be nonnegative");
  if (!sentence->fv.empty())
    throw RegistryError("the defining sentence must be closed");
  if (contains_atom(sentence) || contains_global_or(sentence))
    throw RegistryError("the defining sentence must be plain first order");
  if (!constants_of(sentence).empty())
    throw RegistryError("the defining sentence may not use constants");
  auto rels = relation_symbols(sentence);
  for (const auto& [r, k] : rels) {
    if (r != "R") throw RegistryError("the defining sentence must be over signature {R}");
    if (k != arity)
      throw RegistryError("R has arity " + std::to_string(k) + " in the sentence, expected " +
                          std::to_string(arity));
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (specs_.count(name)) throw RegistryError("dependency '" + name + "' is already registered");
  auto spec = std::make_unique<DependencySpec>();
  spec->name = name;
  spec->tag = Builtin::User;
  spec->arity = arity;
  spec->sentence = std::move(sentence);
  auto [pos, ok] = specs_.emplace(name, std::move(spec));
  (void)ok;
  return *pos->second;
}

const DependencySpec* Registry::find(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = specs_.find(name);
  return it == specs_.end() ? nullptr : it->second.get();
}

const DependencySpec& Registry::resolve(const std::string& base,
                                        const std::vector<int>& group_sizes) const {
  Builtin tag = tag_of_base(base);
  if (tag == Builtin::User) {
    const DependencySpec* spec = find(base);
    if (!spec) throw RegistryError("unknown dependency '" + base + "'");
    if (group_sizes.size() != 1 || group_sizes[0] != spec->arity)
      throw ArityError("atom '" + base + "' has arity " + std::to_string(spec->arity));
    return *spec;
  }
  bool two = tag == Builtin::Dep || tag == Builtin::Inc || tag == Builtin::Exc ||
             tag == Builtin::Anon || tag == Builtin::Indep;
  if (two) {
    if (group_sizes.size() != 2)
      throw ArityError("atom '" + base + "' needs two argument groups");
    if ((tag == Builtin::Inc || tag == Builtin::Exc) && group_sizes[0] != group_sizes[1])
      throw ArityError("atom '" + base + "' needs groups of the same length");
    return intern(tag, group_sizes[0], group_sizes[1]);
  }
  if (group_sizes.size() != 1)
    throw ArityError("atom '" + base + "' takes one argument group");
  return intern(tag, group_sizes[0], 0);
}

const DependencySpec& Registry::resolve_descriptor(const std::string& text) const {
  auto lp = text.find('(');
  if (lp == std::string::npos) {
    Builtin tag = tag_of_base(text);
    if (tag == Builtin::User) {
      const DependencySpec* spec = find(text);
      if (!spec) throw RegistryError("unknown dependency '" + text + "'");
      return *spec;
    }
    bool two = text == "dep" || text == "inc" || text == "exc" || text == "anon" || text == "indep";
    return intern(tag, 1, two ? 1 : 0);
  }
  if (text.back() != ')') throw RegistryError("malformed dependency descriptor '" + text + "'");
  std::string base = text.substr(0, lp);
  std::string inner = text.substr(lp + 1, text.size() - lp - 2);
  Builtin tag = tag_of_base(base);
  if (tag == Builtin::User) throw RegistryError("malformed dependency descriptor '" + text + "'");
  auto semi = inner.find(';');
  auto to_int = [&](const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw RegistryError("malformed arity in descriptor '" + text + "'");
    return std::stoi(s);
  };
  if (semi == std::string::npos) return resolve(base, {to_int(inner)});
  return resolve(base, {to_int(inner.substr(0, semi)), to_int(inner.substr(semi + 1))});
}

ClosureFlags Registry::metadata(const std::string& name) const {
  return resolve_descriptor(name).flags;
}

std::vector<std::string> Registry::default_builtin_names() const {
  return {"dep(1;1)", "inc(1;1)", "exc(1;1)", "anon(1;1)", "indep(1;1)", "ne(1)", "all(1)"};
}

std::vector<std::string> Registry::user_names() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, spec] : specs_)
    if (spec->tag == Builtin::User) out.push_back(name);
  return out;
}

}  // namespace teamlab

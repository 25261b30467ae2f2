#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "teamlab/syntax.hpp"

namespace teamlab {

enum class Builtin { Dep, Inc, Exc, Anon, Indep, Ne, Const, All, User };

enum class Flag { Yes, No, Unknown };

struct ClosureFlags {
  Flag empty_team = Flag::Unknown;
  Flag downwards = Flag::Unknown;
  Flag union_closed = Flag::Unknown;
  Flag upwards = Flag::Unknown;
  Flag domain_independent = Flag::Unknown;

  friend bool operator==(const ClosureFlags&, const ClosureFlags&) = default;
};

/// A k-ary dependency: a built-in tag or a first order sentence D(R)
/// over signature {R}, plus closure metadata. Two-group built-ins
/// (dep, inc, exc, anon, indep) record the split as k1; arity is k1+k2.
struct DependencySpec {
  std::string name;
  Builtin tag = Builtin::User;
  int arity = 0;
  int split = -1;
  FormulaPtr sentence;  // definition for user dependencies, null for built-ins
  ClosureFlags flags;

  bool two_group() const;
};

const char* builtin_base_name(Builtin tag);
ClosureFlags builtin_flags(Builtin tag);
std::string canonical_dep_name(Builtin tag, int k1, int k2);

class Registry {
 public:
  /// Preloads the default-arity built-ins: dep(1;1), inc(1;1), exc(1;1),
  /// anon(1;1), indep(1;1), ne(1), const(1), all(1).
  Registry();

  const DependencySpec& register_user(const std::string& name, int arity, FormulaPtr sentence);

  const DependencySpec* find(const std::string& name) const;

  /// Resolve an atom occurrence by base name and argument group sizes,
  /// materializing built-in instances on demand.
  const DependencySpec& resolve(const std::string& base, const std::vector<int>& group_sizes) const;

  /// Resolve "dep", "dep(2;1)", "ne(0)" or a user name.
  const DependencySpec& resolve_descriptor(const std::string& text) const;

  ClosureFlags metadata(const std::string& name) const;

  std::vector<std::string> default_builtin_names() const;
  std::vector<std::string> user_names() const;

 private:
  const DependencySpec& intern(Builtin tag, int k1, int k2) const;

  mutable std::mutex mu_;
  mutable std::map<std::string, std::unique_ptr<DependencySpec>> specs_;
};

}  // namespace teamlab

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "teamlab/io.hpp"

using json = nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

std::string binary_path() {
  const char* bin = std::getenv("TEAMLAB_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "TEAMLAB_BIN must point at the teamlab binary");
  return bin;
}

RunResult run_cli(const std::string& args) {
  std::string cmd = binary_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = std::string("/tmp/teamlab_cli_") + name;
  std::ofstream f(path);
  f << content;
  return path;
}

// ---------------------------------------------------------------------------
// A small JSON Schema checker covering the subset the shipped schema
// uses: type, required, properties, items, enum, const, $ref into
// definitions, allOf and if/then.

class SchemaChecker {
 public:
  explicit SchemaChecker(json schema) : root_(std::move(schema)) {}

  bool validate(const json& value, const json& schema, std::string& why) const {
    if (schema.contains("$ref")) {
      const json& target = resolve(schema["$ref"].get<std::string>());
      return validate(value, target, why);
    }
    if (schema.contains("const") && value != schema["const"]) {
      why = "const mismatch";
      return false;
    }
    if (schema.contains("enum")) {
      bool ok = false;
      for (const auto& e : schema["enum"]) ok = ok || value == e;
      if (!ok) {
        why = "value not in enum: " + value.dump();
        return false;
      }
    }
    if (schema.contains("type")) {
      std::string t = schema["type"].get<std::string>();
      bool ok = (t == "object" && value.is_object()) || (t == "array" && value.is_array()) ||
                (t == "string" && value.is_string()) || (t == "boolean" && value.is_boolean()) ||
                (t == "integer" && value.is_number_integer()) ||
                (t == "number" && value.is_number());
      if (!ok) {
        why = "expected type " + t + ", got " + value.dump().substr(0, 40);
        return false;
      }
    }
    if (schema.contains("required"))
      for (const auto& key : schema["required"]) {
        if (!value.contains(key.get<std::string>())) {
          why = "missing required key '" + key.get<std::string>() + "'";
          return false;
        }
      }
    if (schema.contains("properties") && value.is_object())
      for (const auto& [key, sub] : schema["properties"].items()) {
        if (!value.contains(key)) continue;
        if (!validate(value.at(key), sub, why)) {
          why = "at '" + key + "': " + why;
          return false;
        }
      }
    if (schema.contains("items") && value.is_array())
      for (const auto& item : value)
        if (!validate(item, schema["items"], why)) {
          why = "in array item: " + why;
          return false;
        }
    if (schema.contains("allOf"))
      for (const auto& sub : schema["allOf"])
        if (!validate(value, sub, why)) return false;
    if (schema.contains("if")) {
      std::string ignore;
      if (validate(value, schema["if"], ignore) && schema.contains("then"))
        if (!validate(value, schema["then"], why)) return false;
    }
    return true;
  }

  bool validate(const json& value, std::string& why) const {
    return validate(value, root_, why);
  }

 private:
  const json& resolve(const std::string& ref) const {
    // Only "#/definitions/NAME" is used.
    auto pos = ref.find_last_of('/');
    return root_.at("definitions").at(ref.substr(pos + 1));
  }

  json root_;
};

SchemaChecker& schema() {
  static SchemaChecker checker = [] {
    std::ifstream in(std::string(TEAMLAB_SCHEMA_DIR) + "/report.json");
    REQUIRE_MESSAGE(in.good(), "schema file must ship with the repository");
    json s;
    in >> s;
    return SchemaChecker(std::move(s));
  }();
  return checker;
}

void check_schema(const std::string& text) {
  json report = json::parse(text);
  std::string why;
  bool ok = schema().validate(report, why);
  CAPTURE(why);
  CHECK(ok);
}

}  // namespace

TEST_CASE("eval command") {
  std::string m = write_temp("m.struct", "domain 2\nrel R/2 = (0,1) (1,1)\n");

  SUBCASE("the inclusion example") {
    RunResult r = run_cli("eval " + m + " --team \"x=0,y=1; x=1,y=1\" \"inc(y ; x)\"");
    CHECK(r.exit_code == 0);
    CHECK(r.out.substr(0, 4) == "true");
  }
  SUBCASE("false results exit 1") {
    RunResult r = run_cli("eval " + m + " --team \"x=0,y=1; x=1,y=1\" \"inc(x ; y)\"");
    CHECK(r.exit_code == 1);
    CHECK(r.out.substr(0, 5) == "false");
  }
  SUBCASE("sentences run on the singleton empty team") {
    std::string s = write_temp("s.struct", "domain 2\nrel R/1 = (0)\n");
    RunResult r = run_cli("eval " + s + " \"E x. (R(x) and A y. (!R(y) or y = x))\"");
    CHECK(r.exit_code == 0);
    CHECK(r.out.substr(0, 4) == "true");
  }
  SUBCASE("malformed input exits 2") {
    CHECK(run_cli("eval " + m + " \"R(x\"").exit_code == 2);
    CHECK(run_cli("eval /tmp/does_not_exist.struct \"ne()\"").exit_code == 2);
    CHECK(run_cli("eval " + m + " \"!(R(x, y) or R(y, x))\"").exit_code == 2);
  }
  SUBCASE("empty team") {
    RunResult r = run_cli("eval " + m + " --empty-team --team-vars x \"ne(x)\"");
    CHECK(r.exit_code == 1);
    RunResult r2 = run_cli("eval " + m + " --empty-team --team-vars x \"const(x)\"");
    CHECK(r2.exit_code == 0);
  }
  SUBCASE("explanations print witnesses") {
    RunResult r = run_cli("eval " + m + " --explain --team \"x=0,y=1; x=1,y=1\" " +
                          "\"inc(y ; x) and E z. dep(z ; z)\"");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("choice team") != std::string::npos);
  }
}

TEST_CASE("probe command emits schema-valid reports") {
  RunResult r = run_cli("probe ne --props empty --nmax 2");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
  json report = json::parse(r.out);
  const json& verdict = report["result"]["verdicts"][0];
  CHECK_FALSE(verdict["holds"].get<bool>());
  CHECK(verdict["counterexample"]["reverified"].get<bool>());

  // The counterexample re-verifies through the eval command: the empty
  // team must not satisfy the nonemptiness atom.
  std::string m = write_temp("n1.struct", "domain 1\n");
  RunResult reval = run_cli("eval " + m + " --empty-team --team-vars v0 \"ne(v0)\"");
  CHECK(reval.exit_code == 1);
}

TEST_CASE("probe counterexamples replay through eval") {
  RunResult r = run_cli("probe inc --props down --nmax 3");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
  json report = json::parse(r.out);
  const json& cex = report["result"]["verdicts"][0]["counterexample"];
  int n = cex["n"].get<int>();
  std::string m = write_temp("replay.struct", "domain " + std::to_string(n) + "\n");

  auto team_option = [](const json& rel) {
    std::ostringstream os;
    os << "\"";
    bool first_row = true;
    for (const auto& t : rel["tuples"]) {
      if (!first_row) os << "; ";
      first_row = false;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) os << ",";
        os << "v" << i << "=" << t[i].get<int>();
      }
    }
    os << "\"";
    return os.str();
  };
  // The member satisfies the atom, the dropped-tuple subset does not.
  RunResult in_r = run_cli("eval " + m + " --team " + team_option(cex["relations"][0]) +
                           " \"inc(v0 ; v1)\"");
  CHECK(in_r.exit_code == 0);
  RunResult out_r = run_cli("eval " + m + " --team " + team_option(cex["relations"][1]) +
                            " \"inc(v0 ; v1)\"");
  CHECK(out_r.exit_code == 1);
}

TEST_CASE("table1 command") {
  RunResult r = run_cli("table1 --nmax 2");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
  json report = json::parse(r.out);
  CHECK(report["result"]["all_match"].get<bool>());
  CHECK(report["result"]["rows"].size() == 7);
}

TEST_CASE("translate command") {
  std::string file = std::string(TEAMLAB_FIXTURE_DIR) + "/u_k1.txt";
  RunResult r = run_cli("translate " + file + " --vars w --nmax 2");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
  json report = json::parse(r.out);
  CHECK(report["result"]["all_equivalent"].get<bool>());
  CHECK(report["result"]["translations"].size() >= 5);
  for (const auto& item : report["result"]["translations"])
    CHECK(item["certification"]["equivalent"].get<bool>());
}

TEST_CASE("relativize command") {
  RunResult r = run_cli("relativize \"inc(1;1)\" --pred P --nmax 2");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
  json report = json::parse(r.out);
  CHECK(report["result"]["certification"]["equivalent"].get<bool>());
  // Totality is refused with an error.
  CHECK(run_cli("relativize all --pred P --nmax 2").exit_code == 2);
}

TEST_CASE("stepsearch command") {
  RunResult r = run_cli("stepsearch const --nmax 3 --rank 2");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
  json report = json::parse(r.out);
  CHECK(report["result"]["witnesses"].empty());

  RunResult r2 = run_cli("stepsearch \"all(1)\" --nmax 2 --rank 1");
  CHECK(r2.exit_code == 0);
  check_schema(r2.out);
  json report2 = json::parse(r2.out);
  CHECK_FALSE(report2["result"]["witnesses"].empty());
  for (const auto& w : report2["result"]["witnesses"]) CHECK(w["verified"].get<bool>());
}

TEST_CASE("nonjumping command") {
  RunResult r = run_cli("nonjumping dep --nmax 2");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
}

TEST_CASE("user dependencies load from a definition file") {
  std::string deps = write_temp("user.deps", "# nonempty relations\ndep nonempty 1 := E x. R(x)\n");
  RunResult r = run_cli("probe nonempty --deps " + deps + " --nmax 2");
  CHECK(r.exit_code == 0);
  check_schema(r.out);
  json report = json::parse(r.out);
  // Same verdicts as the built-in ne row.
  for (const auto& v : report["result"]["verdicts"]) {
    const std::string prop = v["property"].get<std::string>();
    bool holds = v["holds"].get<bool>();
    CHECK(holds == (prop == "up" || prop == "domind"));
  }

  std::string m = write_temp("u.struct", "domain 2\nrel R/1 = (0)\n");
  RunResult reval =
      run_cli("eval " + m + " --deps " + deps + " --team \"x=0; x=1\" \"D[nonempty](x)\"");
  CHECK(reval.exit_code == 0);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("probe").exit_code == 2);
  CHECK(run_cli("probe nosuchdep").exit_code == 2);
  CHECK(run_cli("frobnicate x").exit_code == 2);
}

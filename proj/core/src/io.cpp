#include "teamlab/io.hpp"

#include <fstream>
#include <sstream>

namespace teamlab {

namespace {

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return strip(pos == std::string::npos ? line : line.substr(0, pos));
}

int parse_int(const std::string& s, const std::string& what, int lineno) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected " + what + ", got '" + s + "'", lineno, 1);
  }
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

}  // namespace

Structure parse_structure(std::istream& in) {
  Structure M;
  bool have_domain = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = strip_comment(line);
    if (body.empty()) continue;
    std::istringstream is(body);
    std::string head;
    is >> head;
    if (head == "domain") {
      std::string rest;
      is >> rest;
      M.n = parse_int(rest, "a domain size", lineno);
      have_domain = true;
    } else if (head == "rel" || head == "pred") {
      std::string decl;
      is >> decl;
      std::string name;
      int arity = 1;
      if (head == "rel") {
        auto slash = decl.find('/');
        if (slash == std::string::npos)
          throw ParseError("expected NAME/ARITY after 'rel'", lineno, 1);
        name = decl.substr(0, slash);
        arity = parse_int(decl.substr(slash + 1), "an arity", lineno);
      } else {
        name = decl;
      }
      std::string eq;
      is >> eq;
      if (eq != "=") throw ParseError("expected '=' in relation declaration", lineno, 1);
      Relation r;
      r.arity = arity;
      std::string rest;
      std::getline(is, rest);
      if (head == "pred") {
        for (const auto& w : split_ws(rest)) r.tuples.push_back({parse_int(w, "an element", lineno)});
      } else {
        // Tuples look like (0,1) separated by spaces.
        std::string cur;
        for (char c : rest) {
          if (c == '(') {
            cur.clear();
          } else if (c == ')') {
            std::vector<Element> t;
            std::istringstream ts(cur);
            std::string piece;
            while (std::getline(ts, piece, ',')) {
              piece = strip(piece);
              if (!piece.empty()) t.push_back(parse_int(piece, "an element", lineno));
            }
            if (static_cast<int>(t.size()) != arity)
              throw ParseError("tuple arity mismatch in relation '" + name + "'", lineno, 1);
            r.tuples.push_back(std::move(t));
          } else {
            cur += c;
          }
        }
      }
      r.normalize();
      if (M.relations.count(name))
        throw ParseError("relation '" + name + "' declared twice", lineno, 1);
      M.relations[name] = std::move(r);
      if (head == "pred") {
        if (M.pred) throw ParseError("only one distinguished predicate is supported", lineno, 1);
        M.pred = name;
      }
    } else if (head == "const") {
      std::string name, eq, val;
      is >> name >> eq >> val;
      if (eq != "=") throw ParseError("expected '=' in constant declaration", lineno, 1);
      if (M.constants.count(name))
        throw ParseError("constant '" + name + "' declared twice", lineno, 1);
      M.constants[name] = parse_int(val, "an element", lineno);
    } else {
      throw ParseError("unknown directive '" + head + "'", lineno, 1);
    }
  }
  if (!have_domain) throw ParseError("missing 'domain' line", lineno, 1);
  M.validate();
  return M;
}

Structure parse_structure_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open structure file '" + path + "'", 0, 0);
  return parse_structure(in);
}

Team parse_team_literal(const std::string& text, const Structure& M) {
  Team t;
  std::istringstream rows(text);
  std::string row;
  bool first = true;
  while (std::getline(rows, row, ';')) {
    row = strip(row);
    if (row.empty()) continue;
    std::map<std::string, Element> a;
    std::istringstream pairs(row);
    std::string pair;
    while (std::getline(pairs, pair, ',')) {
      auto eq = pair.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected var=value in team literal", 1, 1);
      std::string var = strip(pair.substr(0, eq));
      std::string val = strip(pair.substr(eq + 1));
      if (var.empty()) throw ParseError("empty variable name in team literal", 1, 1);
      Element e = parse_int(val, "an element", 1);
      if (e < 0 || e >= M.n)
        throw ParseError("element " + val + " outside the domain", 1, 1);
      if (!a.emplace(var, e).second)
        throw ParseError("variable '" + var + "' assigned twice in one member", 1, 1);
    }
    if (first) {
      for (const auto& [v, e] : a) t.vars.push_back(v);
      first = false;
    }
    if (a.size() != t.vars.size())
      throw ParseError("team members must share one variable set", 1, 1);
    std::vector<Element> vals;
    for (const auto& v : t.vars) {
      auto it = a.find(v);
      if (it == a.end())
        throw ParseError("team members must share one variable set", 1, 1);
      vals.push_back(it->second);
    }
    t.rows.push_back(std::move(vals));
  }
  t.normalize();
  return t;
}

void load_dependency_file(const std::string& path, Registry& reg) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dependency file '" + path + "'", 0, 0);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = strip_comment(line);
    if (body.empty()) continue;
    std::istringstream is(body);
    std::string head, name, arity_text;
    is >> head >> name >> arity_text;
    if (head != "dep")
      throw ParseError("expected 'dep NAME ARITY := SENTENCE'", lineno, 1);
    int arity = parse_int(arity_text, "an arity", lineno);
    std::string assign;
    is >> assign;
    if (assign != ":=")
      throw ParseError("expected ':=' in dependency definition", lineno, 1);
    std::string sentence_text;
    std::getline(is, sentence_text);
    ParseContext ctx;
    ctx.relations["R"] = arity;
    FormulaPtr sentence = parse_formula(sentence_text, ctx);
    reg.register_user(name, arity, sentence);
  }
}

std::vector<UFixture> parse_u_sentences(std::istream& in, const std::set<std::string>& constants) {
  std::vector<UFixture> out;
  std::string line;
  std::string last_comment;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = strip(line);
    if (stripped.empty()) continue;
    if (stripped[0] == '#') {
      last_comment = strip(stripped.substr(1));
      continue;
    }
    ParseContext ctx;
    ctx.constants = constants;
    FormulaPtr f;
    try {
      f = parse_formula(stripped, ctx);
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " [fixture line " + std::to_string(lineno) + "]",
                       e.line, e.col);
    }
    auto rels = relation_symbols(f);
    if (rels.size() != 1 || !rels.count("R"))
      throw ShapeError("fixture sentences must be over the single relation symbol R (line " +
                       std::to_string(lineno) + ")");
    UFixture fx;
    fx.sentence = validate_u_sentence(f, "R", rels.at("R"));
    fx.source = stripped;
    fx.comment = last_comment;
    last_comment.clear();
    out.push_back(std::move(fx));
  }
  return out;
}

std::vector<UFixture> load_u_sentences(const std::string& path,
                                       const std::set<std::string>& constants) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open fixture file '" + path + "'", 0, 0);
  return parse_u_sentences(in, constants);
}

std::string print_relation(const Relation& R) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < R.tuples.size(); ++i) {
    if (i) os << ",";
    os << "(";
    for (std::size_t j = 0; j < R.tuples[i].size(); ++j) {
      if (j) os << ",";
      os << R.tuples[i][j];
    }
    os << ")";
  }
  os << "}";
  return os.str();
}

}  // namespace teamlab

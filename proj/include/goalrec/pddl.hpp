#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "goalrec/error.hpp"
#include "goalrec/strips.hpp"

// Parser and grounder for the STRIPS subset of PDDL: typed objects, positive
// conjunctive preconditions and goals, add/delete effects.

namespace goalrec {

namespace pddl {

struct SExpr {
  std::string atom;  // empty for lists
  std::vector<SExpr> items;
  int line = 0;
  bool is_list = false;

  bool is(std::string_view a) const { return !is_list && atom == a; }
  bool head_is(std::string_view a) const { return is_list && !items.empty() && items[0].is(a); }
};

inline SExpr read_sexpr(std::string_view text) {
  struct Token {
    std::string text;
    int line;
  };
  std::vector<Token> tokens;
  int line = 1;
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '(' || c == ')') {
      tokens.push_back({std::string(1, c), line});
      ++i;
    } else {
      std::string sym;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
             text[i] != '(' && text[i] != ')' && text[i] != ';')
        sym.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i++]))));
      tokens.push_back({std::move(sym), line});
    }
  }

  std::size_t pos = 0;
  std::function<SExpr()> parse = [&]() -> SExpr {
    if (pos >= tokens.size()) throw ParseError("unexpected end of input", line);
    const auto& t = tokens[pos++];
    SExpr e;
    e.line = t.line;
    if (t.text == ")") throw ParseError("unexpected ')'", t.line);
    if (t.text != "(") {
      e.atom = t.text;
      return e;
    }
    e.is_list = true;
    while (true) {
      if (pos >= tokens.size()) throw ParseError("unbalanced '('", t.line);
      if (tokens[pos].text == ")") {
        ++pos;
        return e;
      }
      e.items.push_back(parse());
    }
  };
  if (tokens.empty()) throw ParseError("empty PDDL text");
  SExpr root = parse();
  if (pos != tokens.size()) throw ParseError("trailing tokens after top-level form", tokens[pos].line);
  return root;
}

struct TypedName {
  std::string name;
  std::string type;
};

inline std::vector<TypedName> parse_typed_list(const std::vector<SExpr>& items, std::size_t begin) {
  std::vector<TypedName> out;
  std::size_t pending = 0;
  for (std::size_t i = begin; i < items.size(); ++i) {
    const auto& it = items[i];
    if (it.is_list) throw ParseError("unsupported construct: either-type or nested list", it.line);
    if (it.atom == "-") {
      if (i + 1 >= items.size()) throw ParseError("dangling '-' in typed list", it.line);
      const auto& ty = items[++i];
      if (ty.is_list) throw ParseError("unsupported construct: either", ty.line);
      for (std::size_t j = out.size() - pending; j < out.size(); ++j) out[j].type = ty.atom;
      pending = 0;
    } else {
      out.push_back({it.atom, "object"});
      ++pending;
    }
  }
  return out;
}

struct Atom {
  std::string predicate;
  std::vector<std::string> terms;  // variables keep their leading '?'
  int line = 0;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<Atom> pre;
  std::vector<Atom> add;
  std::vector<Atom> del;
};

struct Domain {
  std::string name;
  std::map<std::string, std::string> type_parent;  // child -> parent
  std::vector<TypedName> constants;
  std::map<std::string, std::size_t> predicate_arity;
  std::vector<ActionSchema> actions;

  bool is_subtype(std::string t, const std::string& of) const {
    for (int guard = 0; guard < 64; ++guard) {
      if (t == of) return true;
      auto it = type_parent.find(t);
      if (it == type_parent.end()) return of == "object";
      t = it->second;
    }
    throw ParseError("cyclic type hierarchy");
  }
};

inline const std::set<std::string>& unsupported_heads() {
  static const std::set<std::string> heads = {"not",   "or",       "forall",   "exists",
                                              "imply", "when",     "=",        "increase",
                                              "decrease", "assign", "scale-up", "scale-down"};
  return heads;
}

inline Atom parse_atom(const SExpr& e) {
  if (!e.is_list || e.items.empty() || e.items[0].is_list)
    throw ParseError("expected atomic formula", e.line);
  Atom a;
  a.predicate = e.items[0].atom;
  a.line = e.line;
  for (std::size_t i = 1; i < e.items.size(); ++i) {
    if (e.items[i].is_list) throw ParseError("unsupported construct: function term", e.items[i].line);
    a.terms.push_back(e.items[i].atom);
  }
  return a;
}

// Conjunction of positive atoms.
inline std::vector<Atom> parse_conjunction(const SExpr& e, const char* where) {
  std::vector<Atom> out;
  if (!e.is_list) throw ParseError(std::string("malformed ") + where, e.line);
  if (e.items.empty()) return out;
  if (e.head_is("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      auto sub = parse_conjunction(e.items[i], where);
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  }
  if (!e.items[0].is_list && unsupported_heads().count(e.items[0].atom)) {
    const auto& h = e.items[0].atom;
    throw ParseError("unsupported construct: " +
                         (h == "not" ? std::string("negative ") + where : h + " in " + where),
                     e.line);
  }
  out.push_back(parse_atom(e));
  return out;
}

inline void parse_effect(const SExpr& e, ActionSchema& a) {
  if (!e.is_list) throw ParseError("malformed effect", e.line);
  if (e.items.empty()) return;
  if (e.head_is("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) parse_effect(e.items[i], a);
    return;
  }
  if (e.head_is("not")) {
    if (e.items.size() != 2) throw ParseError("malformed negative effect", e.line);
    a.del.push_back(parse_atom(e.items[1]));
    return;
  }
  if (!e.items[0].is_list && unsupported_heads().count(e.items[0].atom))
    throw ParseError("unsupported construct: " + e.items[0].atom + " in effect", e.line);
  a.add.push_back(parse_atom(e));
}

inline std::string keyword_of(const SExpr& section) {
  if (!section.is_list || section.items.empty() || section.items[0].is_list)
    throw ParseError("malformed section", section.line);
  return section.items[0].atom;
}

inline Domain parse_domain(std::string_view text) {
  const SExpr root = read_sexpr(text);
  if (!root.head_is("define") || root.items.size() < 2 || !root.items[1].head_is("domain"))
    throw ParseError("expected (define (domain <name>) ...)", root.line);
  Domain d;
  d.name = root.items[1].items.size() > 1 ? root.items[1].items[1].atom : "";
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const auto& sec = root.items[i];
    const auto kw = keyword_of(sec);
    if (kw == ":requirements") {
      continue;
    } else if (kw == ":types") {
      for (auto& t : parse_typed_list(sec.items, 1))
        if (t.name != "object") d.type_parent[t.name] = t.type;
    } else if (kw == ":constants") {
      auto cs = parse_typed_list(sec.items, 1);
      d.constants.insert(d.constants.end(), cs.begin(), cs.end());
    } else if (kw == ":predicates") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const auto& p = sec.items[j];
        if (!p.is_list || p.items.empty()) throw ParseError("malformed predicate", p.line);
        d.predicate_arity[p.items[0].atom] = parse_typed_list(p.items, 1).size();
      }
    } else if (kw == ":action") {
      ActionSchema a;
      if (sec.items.size() < 2 || sec.items[1].is_list) throw ParseError("action without name", sec.line);
      a.name = sec.items[1].atom;
      for (std::size_t j = 2; j + 1 < sec.items.size(); j += 2) {
        const auto& key = sec.items[j];
        const auto& val = sec.items[j + 1];
        if (key.is(":parameters")) {
          if (!val.is_list) throw ParseError("malformed :parameters", val.line);
          a.params = parse_typed_list(val.items, 0);
        } else if (key.is(":precondition")) {
          a.pre = parse_conjunction(val, "precondition");
        } else if (key.is(":effect")) {
          parse_effect(val, a);
        } else {
          throw ParseError("unsupported construct: action field " + key.atom, key.line);
        }
      }
      if ((sec.items.size() - 2) % 2 != 0) throw ParseError("odd number of action fields", sec.line);
      d.actions.push_back(std::move(a));
    } else {
      throw ParseError("unsupported construct: " + kw, sec.line);
    }
  }

  // Validate schemas against declared predicates and parameters.
  for (const auto& a : d.actions) {
    std::set<std::string> vars;
    for (const auto& p : a.params) {
      if (p.name.empty() || p.name[0] != '?') throw ParseError("parameter must start with '?': " + p.name);
      vars.insert(p.name);
    }
    auto check = [&](const Atom& at) {
      auto it = d.predicate_arity.find(at.predicate);
      if (it == d.predicate_arity.end())
        throw ParseError("undefined predicate '" + at.predicate + "' in action " + a.name, at.line);
      if (it->second != at.terms.size())
        throw ParseError("arity mismatch for '" + at.predicate + "' in action " + a.name, at.line);
      for (const auto& t : at.terms) {
        if (t[0] == '?') {
          if (!vars.count(t)) throw ParseError("undefined variable " + t + " in action " + a.name, at.line);
        } else if (std::none_of(d.constants.begin(), d.constants.end(),
                                [&](const TypedName& c) { return c.name == t; })) {
          throw ParseError("undefined constant '" + t + "' in action " + a.name, at.line);
        }
      }
    };
    for (const auto& at : a.pre) check(at);
    for (const auto& at : a.add) check(at);
    for (const auto& at : a.del) check(at);
  }
  return d;
}

struct Problem {
  std::string name;
  std::vector<TypedName> objects;
  std::vector<Atom> init;
  std::vector<Atom> goal;
};

inline Problem parse_problem(std::string_view text) {
  const SExpr root = read_sexpr(text);
  if (!root.head_is("define") || root.items.size() < 2 || !root.items[1].head_is("problem"))
    throw ParseError("expected (define (problem <name>) ...)", root.line);
  Problem p;
  p.name = root.items[1].items.size() > 1 ? root.items[1].items[1].atom : "";
  bool has_goal = false;
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const auto& sec = root.items[i];
    const auto kw = keyword_of(sec);
    if (kw == ":domain" || kw == ":requirements") continue;
    if (kw == ":objects") {
      p.objects = parse_typed_list(sec.items, 1);
    } else if (kw == ":init") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const auto& e = sec.items[j];
        if (e.head_is("not") || e.head_is("="))
          throw ParseError("unsupported construct: " + e.items[0].atom + " in init", e.line);
        p.init.push_back(parse_atom(e));
      }
    } else if (kw == ":goal") {
      has_goal = true;
      if (sec.items.size() != 2) throw ParseError("empty goal section", sec.line);
      p.goal = parse_conjunction(sec.items[1], "goal");
      if (p.goal.empty()) throw ParseError("empty goal section", sec.line);
    } else {
      throw ParseError("unsupported construct: " + kw, sec.line);
    }
  }
  if (!has_goal) throw ParseError("problem has no :goal section");
  return p;
}

}  // namespace pddl

/// Grounds a typed STRIPS domain/problem pair into a StripsProblem.
inline StripsProblem ground(const pddl::Domain& d, const pddl::Problem& prob) {
  StripsProblem out;
  std::vector<pddl::TypedName> objects = d.constants;
  for (const auto& o : prob.objects) {
    if (std::any_of(objects.begin(), objects.end(), [&](const auto& x) { return x.name == o.name; }))
      throw ParseError("duplicate object '" + o.name + "'");
    objects.push_back(o);
  }
  for (const auto& o : objects) out.objects.push_back(o.name);

  auto object_known = [&](const std::string& name) {
    return std::any_of(objects.begin(), objects.end(), [&](const auto& x) { return x.name == name; });
  };
  auto ground_fact = [&](const pddl::Atom& a) {
    auto it = d.predicate_arity.find(a.predicate);
    if (it == d.predicate_arity.end())
      throw ParseError("undefined predicate '" + a.predicate + "'", a.line);
    if (it->second != a.terms.size()) throw ParseError("arity mismatch for '" + a.predicate + "'", a.line);
    std::string sig = "(" + a.predicate;
    for (const auto& t : a.terms) {
      if (!object_known(t)) throw ParseError("undefined object '" + t + "'", a.line);
      sig += " " + t;
    }
    return out.intern_fluent(sig + ")");
  };

  for (const auto& a : prob.init) out.init.push_back(ground_fact(a));
  for (const auto& a : prob.goal) out.goal.push_back(ground_fact(a));
  normalize(out.init);
  normalize(out.goal);
  if (out.goal.empty()) throw ParseError("empty goal section");

  for (const auto& schema : d.actions) {
    out.schemas.push_back(schema.name);
    out.max_arity = std::max(out.max_arity, schema.params.size());
    std::vector<std::vector<std::string>> domains;
    for (const auto& p : schema.params) {
      std::vector<std::string> cands;
      for (const auto& o : objects)
        if (d.is_subtype(o.type, p.type)) cands.push_back(o.name);
      domains.push_back(std::move(cands));
    }

    std::vector<std::size_t> pick(schema.params.size(), 0);
    if (std::any_of(domains.begin(), domains.end(), [](const auto& v) { return v.empty(); })) continue;
    for (bool done = false; !done;) {
      std::map<std::string, std::string> binding;
      GroundAction ga;
      ga.name = schema.name;
      for (std::size_t i = 0; i < pick.size(); ++i) {
        binding[schema.params[i].name] = domains[i][pick[i]];
        ga.args.push_back(domains[i][pick[i]]);
      }
      auto inst = [&](const pddl::Atom& a) {
        std::string sig = "(" + a.predicate;
        for (const auto& t : a.terms) sig += " " + (t[0] == '?' ? binding.at(t) : t);
        return out.intern_fluent(sig + ")");
      };
      for (const auto& a : schema.pre) ga.pre.push_back(inst(a));
      for (const auto& a : schema.add) ga.add.push_back(inst(a));
      for (const auto& a : schema.del) ga.del.push_back(inst(a));
      normalize(ga.pre);
      normalize(ga.add);
      normalize(ga.del);
      // Delete-then-add semantics: a fluent both added and deleted stays true.
      FluentSet del;
      std::set_difference(ga.del.begin(), ga.del.end(), ga.add.begin(), ga.add.end(),
                          std::back_inserter(del));
      ga.del = std::move(del);
      out.add_action(std::move(ga));

      done = true;
      for (std::size_t i = pick.size(); i-- > 0;) {
        if (++pick[i] < domains[i].size()) {
          done = false;
          break;
        }
        pick[i] = 0;
      }
    }
  }
  return out;
}

/// Parses and grounds a domain/problem pair.
inline StripsProblem parse_pddl(std::string_view domain_text, std::string_view problem_text) {
  return ground(pddl::parse_domain(domain_text), pddl::parse_problem(problem_text));
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// File-based variant; parse errors carry the offending file name and line.
inline StripsProblem load_pddl(const std::string& domain_path, const std::string& problem_path) {
  pddl::Domain d;
  try {
    d = pddl::parse_domain(read_text_file(domain_path));
  } catch (const ParseError& e) {
    throw ParseError(domain_path + ": " + e.what());
  }
  pddl::Problem p;
  try {
    p = pddl::parse_problem(read_text_file(problem_path));
  } catch (const ParseError& e) {
    throw ParseError(problem_path + ": " + e.what());
  }
  try {
    return ground(d, p);
  } catch (const ParseError& e) {
    throw ParseError(problem_path + ": " + e.what());
  }
}

/// Parses "(name a b)" into the matching ground action.
inline ActionId parse_action_ref(const StripsProblem& p, std::string_view line) {
  std::string body(line);
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.pop_back();
  const auto first = body.find_first_not_of(" \t");
  if (first == std::string::npos || body[first] != '(' || body.back() != ')')
    throw ParseError("malformed action line: " + std::string(line));
  std::istringstream is(body.substr(first + 1, body.size() - first - 2));
  std::string norm = "(", tok;
  while (is >> tok) {
    if (tok.find_first_of("()") != std::string::npos)
      throw ParseError("malformed action line: " + std::string(line));
    for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    norm += (norm.size() > 1 ? " " : "") + tok;
  }
  norm += ")";
  if (norm == "()") throw ParseError("malformed action line: " + std::string(line));
  auto id = p.find_action(norm);
  if (!id) throw ParseError("unknown ground action: " + norm);
  return *id;
}

}  // namespace goalrec

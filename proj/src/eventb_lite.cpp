#include "tmkit/eventb_lite.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace tmkit::eb {

int Machine::variable_index(std::string_view name) const {
  for (size_t i = 0; i < variables.size(); i++)
    if (variables[i].name == name) return static_cast<int>(i);
  return -1;
}

const Event* Machine::find_event(std::string_view name) const {
  for (const auto& e : events)
    if (e.name == name) return &e;
  return nullptr;
}

int Machine::set_index(std::string_view name) const {
  for (size_t i = 0; i < context.sets.size(); i++)
    if (context.sets[i].name == name) return static_cast<int>(i);
  return -1;
}

std::optional<ex::Value> Machine::element_value(std::string_view name) const {
  for (size_t si = 0; si < context.sets.size(); si++) {
    const auto& els = context.sets[si].elements;
    for (size_t ei = 0; ei < els.size(); ei++)
      if (els[ei] == name)
        return ex::Value::element_v(static_cast<int>(si), static_cast<long long>(ei));
  }
  return std::nullopt;
}

std::string Machine::value_text(const ex::Value& v) const {
  using K = ex::Value::Kind;
  if (v.kind == K::integer) return std::to_string(v.num);
  if (v.kind == K::boolean) return v.num ? "true" : "false";
  if (v.set >= 0 && v.set < static_cast<int>(context.sets.size()) && v.num >= 0 &&
      v.num < static_cast<long long>(context.sets[v.set].elements.size()))
    return context.sets[v.set].elements[v.num];
  return "?";
}

bool State::operator<(const State& o) const {
  for (size_t i = 0; i < vals.size() && i < o.vals.size(); i++) {
    if (vals[i].num != o.vals[i].num) return vals[i].num < o.vals[i].num;
    if (vals[i].set != o.vals[i].set) return vals[i].set < o.vals[i].set;
  }
  return vals.size() < o.vals.size();
}

namespace {

struct MachineScope : ex::Scope {
  const Machine& m;
  const State* state = nullptr;
  const Bindings* consts = nullptr;

  MachineScope(const Machine& mm, const State* s, const Bindings* c)
      : m(mm), state(s), consts(c) {}

  std::optional<ex::Value> lookup(std::string_view name) const override {
    if (state) {
      int vi = m.variable_index(name);
      if (vi >= 0) return state->vals[vi];
    }
    if (consts) {
      auto it = consts->find(std::string(name));
      if (it != consts->end()) return ex::Value::integer_v(it->second);
    }
    return m.element_value(name);
  }

  std::optional<int> set_id(std::string_view name) const override {
    int si = m.set_index(name);
    if (si < 0) return std::nullopt;
    return si;
  }
};

// ---- .ebl parsing ---------------------------------------------------------

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// drops an optional leading `label:`; the ':' of an assignment's ':=' does
// not start a label
std::pair<std::string, std::string> split_label(const std::string& line) {
  size_t colon = line.find(':');
  if (colon == std::string::npos) return {"", line};
  if (colon + 1 < line.size() && line[colon + 1] == '=') return {"", line};
  std::string head = strip(line.substr(0, colon));
  if (head.empty()) return {"", line};
  for (char c : head)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return {"", line};
  // `n : int` style type declarations keep their colon
  std::string tail = strip(line.substr(colon + 1));
  return {head, tail};
}

struct EblParser {
  std::vector<std::string> lines;
  std::string origin;
  size_t ln = 0;
  Machine m;

  [[noreturn]] void fail(const std::string& msg, size_t at) {
    throw EbError(EbError::Code::parse,
                  origin + ":" + std::to_string(at + 1) + ": " + msg);
  }

  ex::ExprPtr parse_expr(const std::string& text, size_t at) {
    try {
      return ex::parse(text);
    } catch (const ex::ParseError& e) {
      fail(std::string("bad expression: ") + e.what(), at);
    }
  }

  static bool section_word(const std::string& w) {
    static const char* kWords[] = {"CONTEXT", "SETS", "CONSTANTS", "AXIOMS", "MACHINE",
                                   "VARIABLES", "INVARIANTS", "INIT", "EVENT",
                                   "WHEN", "THEN", "END", "STATUS"};
    for (const char* k : kWords)
      if (w == k) return true;
    return false;
  }

  std::string first_word(const std::string& line) {
    size_t sp = line.find_first_of(" \t");
    return sp == std::string::npos ? line : line.substr(0, sp);
  }

  TypedName parse_typed(const std::string& line, size_t at) {
    size_t colon = line.find(':');
    if (colon == std::string::npos) fail("expected `name : type`", at);
    TypedName t;
    t.name = strip(line.substr(0, colon));
    std::string type = strip(line.substr(colon + 1));
    if (type == "int" || type == "INT") {
      t.set = -1;
    } else {
      int si = m.set_index(type);
      if (si < 0) fail("unknown type '" + type + "'", at);
      t.set = si;
    }
    return t;
  }

  Assignment parse_assign(const std::string& raw, size_t at) {
    auto [label, line] = split_label(raw);
    size_t op = line.find(":=");
    if (op == std::string::npos) fail("expected `var := expr`", at);
    Assignment a;
    a.var = strip(line.substr(0, op));
    a.text = ex::normalize_text(line.substr(op + 2));
    a.rhs = parse_expr(a.text, at);
    return a;
  }

  NamedExpr parse_named(const std::string& raw, size_t at) {
    auto [label, line] = split_label(raw);
    NamedExpr n;
    n.label = label;
    n.text = ex::normalize_text(line);
    n.expr = parse_expr(n.text, at);
    return n;
  }

  void parse_sets() {
    while (ln < lines.size()) {
      std::string line = lines[ln];
      if (section_word(first_word(line))) return;
      ln++;
      // form: NAME = { e1, e2, ... }
      size_t eq = line.find('=');
      size_t ob = line.find('{');
      size_t cb = line.find('}');
      if (eq == std::string::npos || ob == std::string::npos || cb == std::string::npos)
        fail("expected `Name = { e1, e2 }`", ln - 1);
      EnumSet s;
      s.name = strip(line.substr(0, eq));
      std::string body = line.substr(ob + 1, cb - ob - 1);
      std::string cur;
      for (char c : body + ",") {
        if (c == ',') {
          std::string el = strip(cur);
          if (!el.empty()) s.elements.push_back(el);
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      for (size_t i = 0; i < s.elements.size(); i++)
        for (size_t j = i + 1; j < s.elements.size(); j++)
          if (s.elements[i] == s.elements[j])
            fail("set elements must be distinct", ln - 1);
      m.context.sets.push_back(std::move(s));
    }
  }

  Event parse_event() {
    std::string header = lines[ln++];
    Event ev;
    ev.name = strip(header.substr(5));
    if (ev.name.empty()) fail("EVENT needs a name", ln - 1);
    enum class Part { none, when, then } part = Part::none;
    while (ln < lines.size()) {
      std::string line = lines[ln];
      std::string word = first_word(line);
      if (word == "END") {
        ln++;
        return ev;
      }
      if (word == "EVENT") return ev;  // unterminated; next event starts
      ln++;
      if (word == "STATUS") {
        if (ln < lines.size() && strip(lines[ln]) == "ordinary") ln++;
        continue;
      }
      if (word == "WHEN") {
        part = Part::when;
        continue;
      }
      if (word == "THEN" || word == "BEGIN") {
        part = Part::then;
        continue;
      }
      if (part == Part::when) ev.guards.push_back(parse_named(line, ln - 1));
      else if (part == Part::then) ev.actions.push_back(parse_assign(line, ln - 1));
      else fail("expected WHEN, THEN, or END", ln - 1);
    }
    return ev;
  }

  Machine parse() {
    enum class Section {
      none, sets, constants, axioms, variables, invariants, init
    } section = Section::none;
    while (ln < lines.size()) {
      std::string line = lines[ln];
      std::string word = first_word(line);
      if (word == "CONTEXT") {
        m.context.name = strip(line.substr(7));
        ln++;
      } else if (word == "MACHINE") {
        m.name = strip(line.substr(7));
        ln++;
      } else if (word == "SETS") {
        ln++;
        parse_sets();
      } else if (word == "CONSTANTS") {
        section = Section::constants;
        ln++;
      } else if (word == "AXIOMS") {
        section = Section::axioms;
        ln++;
      } else if (word == "VARIABLES") {
        section = Section::variables;
        ln++;
      } else if (word == "INVARIANTS") {
        section = Section::invariants;
        ln++;
      } else if (word == "INIT") {
        section = Section::init;
        ln++;
      } else if (word == "EVENT") {
        m.events.push_back(parse_event());
      } else if (word == "END") {
        ln++;
      } else {
        switch (section) {
          case Section::constants: m.context.constants.push_back(parse_typed(line, ln)); break;
          case Section::axioms: m.context.axioms.push_back(parse_named(line, ln)); break;
          case Section::variables: m.variables.push_back(parse_typed(line, ln)); break;
          case Section::invariants: m.invariants.push_back(parse_named(line, ln)); break;
          case Section::init: m.init.push_back(parse_assign(line, ln)); break;
          default: fail("unexpected line outside any section", ln);
        }
        ln++;
      }
    }
    return std::move(m);
  }
};

// ---- static typing --------------------------------------------------------

struct Type {
  enum class Kind { integer, boolean, element } kind = Kind::integer;
  int set = -1;
  bool operator==(const Type&) const = default;
};

Type infer(const Machine& m, const ex::Expr& e) {
  using Node = ex::Expr::Node;
  auto type_err = [&](const std::string& msg) -> Type {
    throw EbError(EbError::Code::type_error, "TYPE_ERROR: " + msg);
  };
  switch (e.node) {
    case Node::literal:
      if (e.lit.kind == ex::Value::Kind::integer) return {Type::Kind::integer, -1};
      return {Type::Kind::boolean, -1};
    case Node::name: {
      int vi = m.variable_index(e.id);
      if (vi >= 0)
        return m.variables[vi].is_int() ? Type{Type::Kind::integer, -1}
                                        : Type{Type::Kind::element, m.variables[vi].set};
      for (const auto& c : m.context.constants)
        if (c.name == e.id)
          return c.is_int() ? Type{Type::Kind::integer, -1}
                            : Type{Type::Kind::element, c.set};
      if (auto el = m.element_value(e.id)) return {Type::Kind::element, el->set};
      return type_err("unknown name '" + e.id + "'");
    }
    case Node::unary: {
      Type t = infer(m, *e.lhs);
      if (e.uop == ex::UnOp::neg && t.kind != Type::Kind::integer)
        return type_err("negation needs an integer");
      if (e.uop == ex::UnOp::lnot && t.kind != Type::Kind::boolean)
        return type_err("not needs a boolean");
      return e.uop == ex::UnOp::neg ? Type{Type::Kind::integer, -1}
                                    : Type{Type::Kind::boolean, -1};
    }
    case Node::in_nat: {
      if (infer(m, *e.lhs).kind != Type::Kind::integer)
        return type_err("in NAT needs an integer");
      return {Type::Kind::boolean, -1};
    }
    case Node::in_set: {
      int si = m.set_index(e.id);
      if (si < 0) return type_err("unknown set '" + e.id + "'");
      Type t = infer(m, *e.lhs);
      if (t.kind != Type::Kind::element || t.set != si)
        return type_err("membership in " + e.id + " needs an element of it");
      return {Type::Kind::boolean, -1};
    }
    case Node::binary:
      break;
  }
  Type a = infer(m, *e.lhs);
  Type b = infer(m, *e.rhs);
  switch (e.bop) {
    case ex::BinOp::add:
    case ex::BinOp::sub:
    case ex::BinOp::mul:
    case ex::BinOp::idiv:
      if (a.kind != Type::Kind::integer || b.kind != Type::Kind::integer)
        return type_err("arithmetic needs integers");
      return {Type::Kind::integer, -1};
    case ex::BinOp::eq:
    case ex::BinOp::ne:
      if (!(a == b) || a.kind == Type::Kind::boolean)
        return type_err("equality needs two values of one type");
      return {Type::Kind::boolean, -1};
    case ex::BinOp::lt:
    case ex::BinOp::le:
    case ex::BinOp::gt:
    case ex::BinOp::ge:
      if (a.kind != Type::Kind::integer || b.kind != Type::Kind::integer)
        return type_err("ordering needs integers");
      return {Type::Kind::boolean, -1};
    case ex::BinOp::conj:
    case ex::BinOp::disj:
      if (a.kind != Type::Kind::boolean || b.kind != Type::Kind::boolean)
        return type_err("connectives need booleans");
      return {Type::Kind::boolean, -1};
  }
  return {Type::Kind::integer, -1};
}

void require_bool(const Machine& m, const NamedExpr& n, const char* where) {
  if (infer(m, *n.expr).kind != Type::Kind::boolean)
    throw EbError(EbError::Code::type_error,
                  std::string("TYPE_ERROR: ") + where + " '" + n.text + "' is not boolean");
}

void check_machine(const Machine& m) {
  for (const auto& a : m.context.axioms) require_bool(m, a, "axiom");
  for (const auto& i : m.invariants) require_bool(m, i, "invariant");
  for (const auto& v : m.variables) {
    bool assigned = false;
    for (const auto& a : m.init) assigned |= a.var == v.name;
    if (!assigned)
      throw EbError(EbError::Code::parse, "variable '" + v.name + "' has no INIT assignment");
  }
  auto check_assign = [&](const Assignment& a) {
    int vi = m.variable_index(a.var);
    if (vi < 0)
      throw EbError(EbError::Code::type_error,
                    "TYPE_ERROR: assignment to unknown variable '" + a.var + "'");
    Type t = infer(m, *a.rhs);
    Type want = m.variables[vi].is_int() ? Type{Type::Kind::integer, -1}
                                         : Type{Type::Kind::element, m.variables[vi].set};
    if (!(t == want))
      throw EbError(EbError::Code::type_error,
                    "TYPE_ERROR: assignment '" + a.var + " := " + a.text + "' has the wrong type");
  };
  for (const auto& a : m.init) check_assign(a);
  for (const auto& e : m.events) {
    for (const auto& g : e.guards) require_bool(m, g, "guard");
    for (const auto& a : e.actions) check_assign(a);
    for (size_t i = 0; i < e.actions.size(); i++)
      for (size_t j = i + 1; j < e.actions.size(); j++)
        if (e.actions[i].var == e.actions[j].var)
          throw EbError(EbError::Code::parse, "event " + e.name + " assigns '" +
                                                  e.actions[i].var + "' twice");
  }
}

void check_bindings(const Machine& m, const Bindings& consts) {
  for (const auto& c : m.context.constants) {
    if (!c.is_int()) continue;  // enum constants unsupported in bindings
    if (!consts.count(c.name))
      throw EbError(EbError::Code::unbound_constant, "UNBOUND_CONSTANT: " + c.name);
  }
  State dummy;
  MachineScope scope(m, nullptr, &consts);
  for (const auto& a : m.context.axioms) {
    if (!ex::eval(*a.expr, scope).truthy())
      throw EbError(EbError::Code::axiom_violated,
                    "axiom '" + a.text + "' fails under the given bindings");
  }
}

}  // namespace

Machine parse_ebl(const std::string& text, const std::string& origin) {
  EblParser p;
  p.origin = origin;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    raw = strip(raw);
    if (!raw.empty()) p.lines.push_back(raw);
  }
  Machine m = p.parse();
  check_machine(m);
  return m;
}

State initial_state(const Machine& m, const Bindings& consts) {
  check_bindings(m, consts);
  State s;
  s.vals.resize(m.variables.size());
  MachineScope scope(m, nullptr, &consts);
  for (const auto& a : m.init) {
    int vi = m.variable_index(a.var);
    s.vals[vi] = ex::eval(*a.rhs, scope);
  }
  return s;
}

bool event_enabled(const Machine& m, const Event& ev, const State& s, const Bindings& consts) {
  MachineScope scope(m, &s, &consts);
  try {
    for (const auto& g : ev.guards)
      if (!ex::eval(*g.expr, scope).truthy()) return false;
  } catch (const ex::EvalError& e) {
    // runtime faults (division by zero) carry the state they arose in
    throw EbError(EbError::Code::type_error, "guard fault in " + ev.name + " at " +
                                                 state_text(m, s) + ": " + e.what());
  }
  return true;
}

std::vector<std::string> enabled(const Machine& m, const State& s, const Bindings& consts) {
  std::vector<std::string> out;
  for (const auto& e : m.events)
    if (event_enabled(m, e, s, consts)) out.push_back(e.name);
  return out;
}

State fire(const Machine& m, const State& s, std::string_view event, const Bindings& consts) {
  const Event* ev = m.find_event(event);
  if (!ev)
    throw EbError(EbError::Code::not_enabled, "NOT_ENABLED: no event '" + std::string(event) + "'");
  if (!event_enabled(m, *ev, s, consts))
    throw EbError(EbError::Code::not_enabled,
                  "NOT_ENABLED: " + std::string(event) + " at " + state_text(m, s));
  MachineScope scope(m, &s, &consts);
  State next = s;  // frame rule: unassigned variables keep their value
  try {
    for (const auto& a : ev->actions)
      next.vals[m.variable_index(a.var)] = ex::eval(*a.rhs, scope);
  } catch (const ex::EvalError& e) {
    throw EbError(EbError::Code::type_error, "action fault in " + ev->name + " at " +
                                                 state_text(m, s) + ": " + e.what());
  }
  return next;
}

int StateGraph::index_of(const State& s) const {
  for (size_t i = 0; i < states.size(); i++)
    if (states[i] == s) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> StateGraph::path_from_init(int state) const {
  std::vector<std::string> path;
  for (int cur = state; cur > 0; cur = parent[cur]) path.push_back(parent_event[cur]);
  std::reverse(path.begin(), path.end());
  return path;
}

StateGraph explore(const Machine& m, const Bindings& consts, int max_states) {
  StateGraph g;
  std::map<State, int> index;
  State init = initial_state(m, consts);
  g.states.push_back(init);
  g.parent.push_back(-1);
  g.parent_event.push_back("");
  index[init] = 0;
  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    int si = frontier.front();
    frontier.pop_front();
    State s = g.states[si];
    for (const auto& ev : m.events) {
      if (!event_enabled(m, ev, s, consts)) continue;
      State next = fire(m, s, ev.name, consts);
      auto it = index.find(next);
      int ni;
      if (it == index.end()) {
        if (static_cast<int>(g.states.size()) >= max_states) {
          g.truncated = true;
          continue;
        }
        ni = static_cast<int>(g.states.size());
        g.states.push_back(next);
        g.parent.push_back(si);
        g.parent_event.push_back(ev.name);
        index[next] = ni;
        frontier.push_back(ni);
      } else {
        ni = it->second;
      }
      g.transitions.push_back({si, ni, ev.name});
    }
  }
  return g;
}

std::optional<std::string> violated_invariant(const Machine& m, const State& s,
                                              const Bindings& consts) {
  MachineScope scope(m, &s, &consts);
  for (const auto& inv : m.invariants)
    if (!ex::eval(*inv.expr, scope).truthy())
      return inv.label.empty() ? inv.text : inv.label;
  return std::nullopt;
}

bool InvariantReport::all_passed() const {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

InvariantReport check_invariants(const StateGraph& g, const Machine& m, const Bindings& consts) {
  InvariantReport report;
  for (const auto& inv : m.invariants) {
    InvariantResult r;
    r.invariant = inv.label.empty() ? inv.text : inv.label;
    for (size_t si = 0; si < g.states.size(); si++) {
      MachineScope scope(m, &g.states[si], &consts);
      if (!ex::eval(*inv.expr, scope).truthy()) {
        r.passed = false;
        r.state = static_cast<int>(si);
        r.path = g.path_from_init(r.state);
        break;
      }
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

DeadlockReport check_deadlock(const StateGraph& g, const Machine& m, const Bindings& consts) {
  if (g.truncated)
    throw EbError(EbError::Code::truncated_graph,
                  "TRUNCATED_GRAPH: deadlock check needs a complete exploration");
  DeadlockReport report;
  for (size_t si = 0; si < g.states.size(); si++)
    if (enabled(m, g.states[si], consts).empty())
      report.deadlocked.push_back(static_cast<int>(si));
  return report;
}

namespace {

struct GluingScope : ex::Scope {
  const Machine& abs;
  const Machine& conc;
  const State& abs_state;
  const State& conc_state;
  const Bindings& consts;

  GluingScope(const Machine& a, const Machine& c, const State& as, const State& cs,
              const Bindings& k)
      : abs(a), conc(c), abs_state(as), conc_state(cs), consts(k) {}

  std::optional<ex::Value> lookup(std::string_view name) const override {
    if (name.starts_with("abs_")) {
      int vi = abs.variable_index(name.substr(4));
      if (vi >= 0) return abs_state.vals[vi];
    }
    int vi = conc.variable_index(name);
    if (vi >= 0) return conc_state.vals[vi];
    auto it = consts.find(std::string(name));
    if (it != consts.end()) return ex::Value::integer_v(it->second);
    if (auto el = conc.element_value(name)) return el;
    return abs.element_value(name);
  }

  std::optional<int> set_id(std::string_view name) const override {
    int si = conc.set_index(name);
    if (si >= 0) return si;
    si = abs.set_index(name);
    if (si >= 0) return si;
    return std::nullopt;
  }
};

}  // namespace

RefinementReport check_refinement(const RefinementSpec& spec, const Bindings& consts,
                                  int max_states) {
  const Machine& abs = *spec.abstract;
  const Machine& conc = *spec.concrete;
  for (const auto& ev : conc.events)
    if (!spec.event_map.count(ev.name))
      throw EbError(EbError::Code::parse, "event_map misses concrete event " + ev.name);

  StateGraph cg = explore(conc, consts, max_states);
  StateGraph ag = explore(abs, consts, max_states);

  auto glued = [&](const State& cs, const State& as) {
    GluingScope scope(abs, conc, as, cs, consts);
    return ex::eval(*spec.gluing, scope).truthy();
  };

  RefinementReport report;
  for (size_t ci = 0; ci < cg.states.size(); ci++) {
    bool any = false;
    for (const auto& as : ag.states) any |= glued(cg.states[ci], as);
    if (!any)
      throw EbError(EbError::Code::unglued_state,
                    "UNGLUED_STATE: " + state_text(conc, cg.states[ci]));
  }

  for (const auto& tr : cg.transitions) {
    const State& s = cg.states[tr.from];
    const State& s2 = cg.states[tr.to];
    const std::string& mapped = spec.event_map.at(tr.event);
    for (const auto& as : ag.states) {
      if (!glued(s, as)) continue;
      if (mapped == "SKIP") {
        if (!glued(s2, as)) {
          report.passed = false;
          report.reason = "gluing broken by stuttering event";
        }
      } else {
        const Event* aev = abs.find_event(mapped);
        if (!aev) {
          report.passed = false;
          report.reason = "abstract event '" + mapped + "' does not exist";
        } else if (!event_enabled(abs, *aev, as, consts)) {
          report.passed = false;
          report.reason = "abstract event '" + mapped + "' not enabled";
        } else if (!glued(s2, fire(abs, as, mapped, consts))) {
          report.passed = false;
          report.reason = "abstract step lands outside the gluing";
        }
      }
      if (!report.passed) {
        report.concrete_event = tr.event;
        report.concrete_from = state_text(conc, s);
        report.concrete_to = state_text(conc, s2);
        report.abstract_state = state_text(abs, as);
        return report;
      }
    }
  }
  return report;
}

std::string state_text(const Machine& m, const State& s) {
  std::string out = "{";
  for (size_t i = 0; i < m.variables.size(); i++) {
    if (i) out += ",";
    out += m.variables[i].name + "=" + m.value_text(s.vals[i]);
  }
  return out + "}";
}

}  // namespace tmkit::eb

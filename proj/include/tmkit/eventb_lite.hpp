#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmkit/expr.hpp"

namespace tmkit::eb {

struct EbError : std::runtime_error {
  enum class Code {
    parse,
    type_error,
    not_enabled,
    unbound_constant,
    truncated_graph,
    unglued_state,
    axiom_violated,
  };
  Code code;
  EbError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct EnumSet {
  std::string name;
  std::vector<std::string> elements;  // distinct; they partition the set
};

// int when set < 0, otherwise an element of sets[set].
struct TypedName {
  std::string name;
  int set = -1;
  bool is_int() const { return set < 0; }
};

struct NamedExpr {
  std::string label;
  ex::ExprPtr expr;
  std::string text;
};

struct Assignment {
  std::string var;
  ex::ExprPtr rhs;
  std::string text;
};

struct Context {
  std::string name;
  std::vector<EnumSet> sets;
  std::vector<TypedName> constants;
  std::vector<NamedExpr> axioms;
};

// Guarded event: fires when all guards hold; its actions assign
// simultaneously (all right-hand sides read the pre-state) and distinct
// variables only. Unassigned variables are unchanged.
struct Event {
  std::string name;
  std::vector<NamedExpr> guards;
  std::vector<Assignment> actions;
};

struct Machine {
  std::string name;
  Context context;
  std::vector<TypedName> variables;
  std::vector<NamedExpr> invariants;
  std::vector<Assignment> init;
  std::vector<Event> events;

  int variable_index(std::string_view name) const;
  const Event* find_event(std::string_view name) const;
  int set_index(std::string_view name) const;
  // element name -> (set id, index); empty when unknown
  std::optional<ex::Value> element_value(std::string_view name) const;
  std::string value_text(const ex::Value& v) const;
};

// Variable valuation in machine variable order.
struct State {
  std::vector<ex::Value> vals;
  bool operator==(const State&) const = default;
  bool operator<(const State& o) const;
};

using Bindings = std::map<std::string, long long>;  // constant -> value

// Sectioned plain-text machine format: CONTEXT / SETS / CONSTANTS / AXIOMS
// / MACHINE / VARIABLES / INVARIANTS / INIT / EVENT name / WHEN / THEN /
// END, one clause per line, `label:` prefixes optional, `#` comments.
Machine parse_ebl(const std::string& text, const std::string& origin = "<memory>");

State initial_state(const Machine& m, const Bindings& consts);

// Names of the events whose conjoined guards hold in s, declaration order.
std::vector<std::string> enabled(const Machine& m, const State& s, const Bindings& consts);

bool event_enabled(const Machine& m, const Event& ev, const State& s, const Bindings& consts);

// Simultaneous assignment; requires the event to be enabled.
State fire(const Machine& m, const State& s, std::string_view event, const Bindings& consts);

struct StateGraph {
  std::vector<State> states;  // BFS discovery order; state 0 is initial
  struct Transition {
    int from;
    int to;
    std::string event;
  };
  std::vector<Transition> transitions;
  std::vector<int> parent;               // BFS tree parent, -1 for initial
  std::vector<std::string> parent_event;
  bool truncated = false;

  int index_of(const State& s) const;
  std::vector<std::string> path_from_init(int state) const;
};

// Breadth-first reachable-state graph from init; stops with the truncated
// flag once max_states states have been discovered.
StateGraph explore(const Machine& m, const Bindings& consts, int max_states = 100000);

// Label (or text) of the first invariant failing in s, if any.
std::optional<std::string> violated_invariant(const Machine& m, const State& s,
                                              const Bindings& consts);

struct InvariantResult {
  std::string invariant;
  bool passed = true;
  int state = -1;                  // counterexample state index
  std::vector<std::string> path;  // event path from init
};

struct InvariantReport {
  std::vector<InvariantResult> results;
  bool all_passed() const;
};

InvariantReport check_invariants(const StateGraph& g, const Machine& m, const Bindings& consts);

struct DeadlockReport {
  std::vector<int> deadlocked;  // state indices with no enabled event
};

DeadlockReport check_deadlock(const StateGraph& g, const Machine& m, const Bindings& consts);

// Gluing invariant references concrete variables by name and abstract
// variables with the prefix "abs_".
struct RefinementSpec {
  const Machine* abstract = nullptr;
  const Machine* concrete = nullptr;
  ex::ExprPtr gluing;
  std::string gluing_text;
  std::map<std::string, std::string> event_map;  // concrete -> abstract, "SKIP" to stutter
};

struct RefinementReport {
  bool passed = true;
  std::string reason;
  std::string concrete_event;
  std::string concrete_from, concrete_to, abstract_state;
};

// Forward simulation over the bounded exploration of both machines: every
// reachable concrete transition must be matched from every glued abstract
// state (mapped event enabled and landing glued, or stuttering for SKIP).
RefinementReport check_refinement(const RefinementSpec& spec, const Bindings& consts,
                                  int max_states = 100000);

std::string state_text(const Machine& m, const State& s);

}  // namespace tmkit::eb

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tmkit/expr.hpp"

namespace tmkit {

// The five generic operations, with transfer split into its input/output
// ports and receive kept alongside its arrive/accept decomposition.
enum class StageKind : uint8_t {
  create,
  process,
  release,
  transfer_in,
  transfer_out,
  arrive,
  accept,
  receive,
};
inline constexpr int kStageKindCount = 8;

std::string_view to_string(StageKind k);
std::optional<StageKind> stage_kind_from(std::string_view word);

// from -> to is a legal flow adjacency. Total over all kind pairs; exactly
// 13 pairs are legal, including the cross-machine transfer_out -> transfer_in.
bool adjacency_legal(StageKind from, StageKind to);

using StageId = int;
using ThimacId = int;

// Branching constraint attached to a process stage. The predicate reads the
// incoming token payload (reserved name `x`) and the model's variables; the
// token is sent on to on_true or on_false, or consumed when the branch
// target is absent.
struct GuardSpec {
  ex::ExprPtr predicate;
  std::string predicate_text;
  std::optional<StageId> on_true;
  std::optional<StageId> on_false;
};

struct Stage {
  StageId id = -1;
  StageKind kind = StageKind::create;
  ThimacId owner = -1;
  std::optional<GuardSpec> guard;  // only meaningful on process stages
};

struct Thimac {
  ThimacId id = -1;
  std::string name;
  std::optional<ThimacId> parent;
  std::vector<StageId> stages;
  std::vector<ThimacId> children;
};

// Solid arrow: conceptual movement between stages.
struct FlowArc {
  StageId from = -1;
  StageId to = -1;
};

// Dashed arrow: causal link between flow-disconnected parts. The optional
// label is a payload expression for the value the firing carries.
struct TriggerArc {
  StageId from = -1;
  StageId to = -1;
  std::string label;
};

// Named integer cell (an information thimac such as n, a, b, c, d).
struct Variable {
  std::string name;
  long long init = 0;
  bool has_default = false;
};

// Composite event declaration: a named region given as a stage set.
struct EventDecl {
  std::string id;
  std::vector<StageId> stages;
};

struct Model {
  std::vector<Thimac> thimacs;
  std::vector<Stage> stages;
  std::vector<FlowArc> flows;
  std::vector<TriggerArc> triggers;
  std::vector<Variable> variables;
  std::vector<EventDecl> declared_events;

  const Variable* find_variable(std::string_view name) const;
  const Thimac* find_root(std::string_view name) const;
  bool is_variable_thimac(ThimacId t) const;

  // Canonical dotted path of a stage: thimac names from the root, then the
  // stage kind ("calc.ten.release", "m.transfer.input").
  std::string stage_path(StageId s) const;
  std::string thimac_path(ThimacId t) const;

  std::optional<StageId> stage_of(ThimacId t, StageKind k) const;
  std::vector<StageId> flow_out(StageId s) const;
  std::vector<StageId> flow_in(StageId s) const;

  // Explicit triggers plus one arc per guard branch; the derived view used
  // for behavior extraction, connectivity, and DOT export.
  std::vector<TriggerArc> trigger_view() const;
};

enum class RuleCode : uint8_t {
  illegal_adjacency,
  cross_machine,
  not_a_forest,
  guard_not_on_process,
  receive_conflict,
  bad_stage_ref,
  duplicate_variable,
  trigger_self_loop,
  owner_mismatch,
};
std::string_view to_string(RuleCode c);

struct Finding {
  RuleCode rule;
  std::string message;
};

// Findings are data, not failures: an empty report means the model is
// well-formed.
struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const { return findings.empty(); }
};

ValidationReport validate_static(const Model& m);

struct PathError : std::runtime_error {
  enum class Code { unknown_segment, ambiguous };
  Code code;
  PathError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Resolve a dotted name path from the root scope: every segment but the
// last names a (child) thimac, the last is a stage kind ("transfer.input"
// and "transfer.output" count as two segments). Never creates anything.
StageId resolve_path(const Model& m, std::string_view dotted);

}  // namespace tmkit

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmkit/tm_core.hpp"

namespace tmkit {

// A connected subdiagram of the static model; the spatial content of an
// event. Arcs are induced: every flow/trigger arc with both endpoints in
// the stage set belongs to the region.
struct Region {
  std::vector<StageId> stages;
};

struct EventDef {
  std::string id;
  std::string name;
  Region region;
};

struct BehaviorEdge {
  enum class Cause : uint8_t { flow, trigger };
  std::string pred;
  std::string succ;
  Cause cause = Cause::flow;
  bool operator==(const BehaviorEdge&) const = default;
};

// Precedence graph over events: chronology induced by flows and forced by
// triggers.
struct BehaviorGraph {
  std::vector<std::string> nodes;
  std::vector<BehaviorEdge> edges;
  bool has_edge(const std::string& pred, const std::string& succ) const;
  std::vector<std::string> successors(const std::string& node) const;
};

enum class Granularity : uint8_t { fine, declared };

struct DynError : std::runtime_error {
  enum class Code {
    empty_declarations,
    disconnected_region,
    overlapping_regions,
    cyclic_without_start,
  };
  Code code;
  DynError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct ExtractResult {
  std::vector<EventDef> events;
  std::vector<StageId> uncovered;  // declared mode: stages no region claims
};

// fine: one event per stage in deterministic traversal order; declared:
// the model's event declarations verbatim, each checked for connectivity.
ExtractResult extract_events(const Model& m, Granularity g);

// Edge (X, Y, cause) exactly when an arc of that cause leaves region(X)
// and enters region(Y). Regions must be pairwise disjoint.
BehaviorGraph behavior_graph(const Model& m, const std::vector<EventDef>& events);

// All maximal simple paths from the sources (or from `start`), each path
// cut before revisiting a node, in lexicographic order. Without a start
// the graph must be acyclic.
std::vector<std::vector<std::string>> maximal_chains(
    const BehaviorGraph& g, std::optional<std::string> start = std::nullopt);

}  // namespace tmkit

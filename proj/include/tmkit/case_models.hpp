#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmkit/eventb_lite.hpp"
#include "tmkit/tm_dynamics.hpp"
#include "tmkit/tm_lang.hpp"
#include "tmkit/tm_sim.hpp"

namespace tmkit::cases {

struct CaseError : std::runtime_error {
  enum class Code { unknown_case, load, unmapped_event, replay_failed };
  Code code;
  CaseError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Pairing of model event ids with machine event names; IGNORE drops the
// event from projections. Total over the model's declared events.
struct ConformanceMap {
  std::map<std::string, std::string> pairs;
};

ConformanceMap parse_conformance(const std::string& text,
                                 const std::string& origin = "<memory>");

struct ScenarioEntry {
  std::string name;  // file stem, e.g. "scenario-basic"
  std::string path;
  sim::Scenario scenario;
};

// One bundled case: model and/or machine plus scenarios, monitors, and the
// cross-formalism event map. Layout on disk:
//   <dir>/<name>/{model.tm, machine.ebl, scenario-*.txt, monitors.txt,
//                 conformance.map}
struct CaseBundle {
  std::string name;
  std::optional<Model> model;
  std::vector<EventDef> events;    // declared extraction when the model declares events
  std::vector<StageId> uncovered;
  std::optional<eb::Machine> machine;
  std::vector<ScenarioEntry> scenarios;
  std::vector<sim::Monitor> monitors;
  std::optional<ConformanceMap> conformance;
};

const std::vector<std::string>& known_cases();

// Loads, parses, validates, and cross-checks one bundle; every failure is
// reported with its file context.
CaseBundle load_case(const std::string& name, const std::string& cases_dir);

// Ordered projection of a trace's events through the map, IGNORE records
// dropped. Unmapped (non "-") events raise UNMAPPED_EVENT.
std::vector<std::string> project_trace(const sim::Trace& trace, const ConformanceMap& map);

struct ConformanceReport {
  bool passed = true;
  size_t replayed = 0;
  int failed_step = -1;
  std::string failed_event;
  std::string reason;
  std::string state;
};

// Replays the projected event sequence through the machine: every event
// must be enabled when reached and every invariant must hold at every
// step (the initial state included).
ConformanceReport conformance_check(const sim::Trace& trace, const eb::Machine& machine,
                                    const ConformanceMap& map, const eb::Bindings& consts);

}  // namespace tmkit::cases

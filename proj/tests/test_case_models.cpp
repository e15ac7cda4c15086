#include <doctest.h>

#include <fstream>
#include <sstream>

#include "tmkit/case_models.hpp"

using namespace tmkit;

namespace {

const char* kDir = TMKIT_CASES_DIR;

cases::CaseBundle load(const std::string& name) { return cases::load_case(name, kDir); }

eb::Bindings bindings_for(const cases::CaseBundle& bundle, const sim::Scenario& s) {
  eb::Bindings out;
  if (!bundle.machine) return out;
  for (const auto& c : bundle.machine->context.constants) {
    auto it = s.init_vars.find(c.name);
    if (it != s.init_vars.end()) out[c.name] = it->second;
  }
  return out;
}

}  // namespace

TEST_CASE("unknown cases are refused") {
  try {
    cases::load_case("nope", kDir);
    CHECK(false);
  } catch (const cases::CaseError& e) {
    CHECK(e.code == cases::CaseError::Code::unknown_case);
  }
}

TEST_CASE("y10x loads with five declared events and no machine") {
  cases::CaseBundle b = load("y10x");
  REQUIRE(b.model.has_value());
  CHECK_FALSE(b.machine.has_value());
  REQUIRE(b.events.size() == 5);
  CHECK(b.events[0].id == "A");
  CHECK(b.events[4].id == "E");
  CHECK(b.scenarios.size() == 2);
}

TEST_CASE("trafficlight is machine-only") {
  cases::CaseBundle b = load("trafficlight");
  CHECK_FALSE(b.model.has_value());
  REQUIRE(b.machine.has_value());
  CHECK(b.machine->events.size() == 2);
}

TEST_CASE("bridge m1 bundles the one-way monitor") {
  cases::CaseBundle b = load("bridge_m1");
  bool has_one_way = false;
  for (const auto& m : b.monitors) has_one_way |= m.text == "a = 0 or c = 0";
  CHECK(has_one_way);
}

TEST_CASE("every bundled model validates and its machine explores clean") {
  for (const auto& name : cases::known_cases()) {
    cases::CaseBundle b = load(name);
    if (b.model) CHECK(validate_static(*b.model).ok());
    if (b.machine) {
      eb::Bindings consts;
      for (const auto& c : b.machine->context.constants)
        if (c.is_int()) consts[c.name] = 3;
      eb::StateGraph g = eb::explore(*b.machine, consts, 100000);
      CHECK_FALSE(g.truncated);
      CHECK(eb::check_invariants(g, *b.machine, consts).all_passed());
    }
  }
}

TEST_CASE("projection drops ignored events and keeps order") {
  cases::CaseBundle b = load("bridge_m0");
  REQUIRE(b.conformance.has_value());
  const auto& basic = b.scenarios.at(0);
  sim::RunResult r = sim::run(*b.model, b.events, basic.scenario, b.monitors);
  CHECK(r.monitors.all_passed());
  auto projected = cases::project_trace(r.trace, *b.conformance);
  CHECK(projected == std::vector<std::string>{"ML_in", "ML_in", "ML_out"});
}

TEST_CASE("an empty trace projects to nothing and replays trivially") {
  cases::CaseBundle b = load("bridge_m0");
  sim::Trace empty;
  CHECK(cases::project_trace(empty, *b.conformance).empty());
  cases::ConformanceReport r =
      cases::conformance_check(empty, *b.machine, *b.conformance, {{"d", 2}});
  CHECK(r.passed);
  CHECK(r.replayed == 0);
}

TEST_CASE("a trace of only ignored events projects to nothing") {
  cases::CaseBundle b = load("bridge_m0");
  sim::Trace t;
  t.records.push_back({1, "E1", "gate.transfer.input token=0 payload=1"});
  t.records.push_back({1, "E2", "n.release token=1 payload=1"});
  CHECK(cases::project_trace(t, *b.conformance).empty());
}

TEST_CASE("unmapped events are refused") {
  cases::ConformanceMap map;
  map.pairs["E1"] = "IGNORE";
  sim::Trace t;
  t.records.push_back({1, "E9", "x token=0 payload=1"});
  CHECK_THROWS_AS(cases::project_trace(t, map), cases::CaseError);
}

TEST_CASE("every bundled bridge scenario replays in both signal modes") {
  for (const std::string name : {"bridge_m0", "bridge_m1", "bridge_m2"}) {
    cases::CaseBundle b = load(name);
    REQUIRE(b.conformance.has_value());
    REQUIRE(b.machine.has_value());
    for (const auto& entry : b.scenarios) {
      for (bool signal : {false, true}) {
        sim::Scenario s = entry.scenario;
        s.signal_mode = signal;
        sim::RunResult r = sim::run(*b.model, b.events, s, b.monitors);
        CHECK(r.monitors.all_passed());
        cases::ConformanceReport report =
            cases::conformance_check(r.trace, *b.machine, *b.conformance, bindings_for(b, s));
        INFO(name, " ", entry.name, " signal=", signal, " ", report.reason);
        CHECK(report.passed);
      }
    }
  }
}

TEST_CASE("an adversarial map fails the replay with a step index") {
  cases::CaseBundle b = load("bridge_m0");
  cases::ConformanceMap bad = *b.conformance;
  bad.pairs["E7"] = "ML_in";  // a release replayed as an entry
  const auto& basic = b.scenarios.at(0);
  sim::RunResult r = sim::run(*b.model, b.events, basic.scenario, b.monitors);
  cases::ConformanceReport report =
      cases::conformance_check(r.trace, *b.machine, bad, {{"d", 2}});
  REQUIRE_FALSE(report.passed);
  CHECK(report.failed_event == "ML_in");
  CHECK(report.failed_step >= 0);
  CHECK(report.reason.find("REPLAY_FAILED") == 0);
}

TEST_CASE("bundled files are serialization fixed points") {
  for (const auto& name : cases::known_cases()) {
    cases::CaseBundle b = load(name);
    if (!b.model) continue;
    std::string once = serialize(*b.model).text;
    Model again = parse({once, "<round>"});
    CHECK(serialize(again).text == once);
  }
}
